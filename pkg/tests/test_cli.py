import io
import json
import tempfile
import unittest
from contextlib import redirect_stderr, redirect_stdout
from pathlib import Path

import pandas as pd

from src.cli.commands import ConfigError, build_info_report, build_parser, load_config, main
from src.core.instances import d1
from src.utils.reporting import SWEEP_COLUMNS


def run_cli(argv) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = main(argv)
    return code, out.getvalue(), err.getvalue()


def snapshot(out_dir: Path) -> dict[str, bytes]:
    return {str(p.relative_to(out_dir)): p.read_bytes() for p in sorted(out_dir.rglob("*")) if p.is_file()}


class TestInfoCommand(unittest.TestCase):
    def test_info_report(self):
        rep = build_info_report(d1(), "builtin:D1")
        self.assertAlmostEqual(rep.measures["H(X)"], 2.0, places=12)
        self.assertAlmostEqual(rep.measures["I(S;X)"], 1.0, places=12)
        self.assertAlmostEqual(rep.thresholds["log2(I(X;T|S)+1)+4"], 5.0, places=12)
        self.assertAlmostEqual(sum(rep.atoms.values()), 2.0, places=9)
        self.assertEqual(rep.alphabet_sizes, {"S": 2, "X": 4, "T": 2})

    def test_info_writes_json_only_with_out(self):
        with tempfile.TemporaryDirectory() as d:
            code, stdout, _ = run_cli(["info", "--source", "builtin:D1", "--out", d])
            self.assertEqual(code, 0)
            self.assertEqual(json.loads(stdout)["source"], "builtin:D1")
            self.assertTrue((Path(d) / "info.json").exists())
            code, _, _ = run_cli(["info", "--source", "builtin:D2"])
            self.assertEqual(code, 0)


class TestRunCommand(unittest.TestCase):
    def test_d3_design_b(self):
        with tempfile.TemporaryDirectory() as d:
            argv = ["run", "--source", "builtin:D3", "--design", "B", "--rate", "0.5", "--profile", "quick", "--out", d]
            code, stdout, _ = run_cli(argv)
            self.assertEqual(code, 0)
            self.assertIn("design=B status=ok", stdout)
            lines = (Path(d) / "sweep.csv").read_text(encoding="utf-8").splitlines()
            self.assertEqual(lines[0].split(","), SWEEP_COLUMNS)
            self.assertEqual(len(lines), 2)
            record = json.loads((Path(d) / "runs" / "run_r0.5_B.json").read_text(encoding="utf-8"))
            self.assertEqual(record["report"]["utility_p1"], 0.0)
            self.assertEqual(record["report"]["secrecy"], 0.0)

    def test_d2_design_a_sweep(self):
        with tempfile.TemporaryDirectory() as d:
            argv = ["run", "--source", "builtin:D2", "--design", "A", "--profile", "quick", "--out", d]
            for r in ("0.25", "0.5", "0.75", "1"):
                argv += ["--rate", r]
            code, _, _ = run_cli(argv)
            self.assertEqual(code, 0)
            table = pd.read_csv(Path(d) / "sweep.csv")
        self.assertEqual(table["r"].tolist(), [0.25, 0.5, 0.75, 1.0])
        utilities = table["utility_p1"].tolist()
        for prev, cur in zip(utilities, utilities[1:]):
            self.assertGreaterEqual(cur, prev - 1e-9)
        # 最後の行は H(T|S) = 1 に届く
        self.assertAlmostEqual(utilities[-1], 1.0, places=9)
        self.assertAlmostEqual(table["upper"].iloc[-1], 1.0, places=9)
        self.assertTrue(table["feasible"].all())

    def test_close_rates_get_separate_reports(self):
        with tempfile.TemporaryDirectory() as d:
            argv = ["run", "--source", "builtin:D2", "--design", "A", "--no-oracle", "--out", d]
            code, _, _ = run_cli(argv + ["--rate", "0.1234561", "--rate", "0.1234564"])
            self.assertEqual(code, 0)
            names = sorted(p.name for p in (Path(d) / "runs").iterdir())
            rows = len(pd.read_csv(Path(d) / "sweep.csv"))
        self.assertEqual(names, ["run_r0.1234561_A.json", "run_r0.1234564_A.json"])
        self.assertEqual(rows, 2)

    def test_rerun_is_byte_identical(self):
        argv = ["run", "--source", "builtin:D1", "--rate", "0.5", "--rate", "1", "--problem", "both", "--profile", "quick"]
        with tempfile.TemporaryDirectory() as d:
            self.assertEqual(run_cli(argv + ["--out", d])[0], 0)
            first = snapshot(Path(d))
            self.assertEqual(run_cli(argv + ["--out", d])[0], 0)
            second = snapshot(Path(d))
        self.assertIn("sweep.csv", first)
        self.assertEqual(first, second)

    def test_config_file_with_overrides(self):
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "exp.json"
            path.write_text(json.dumps({"source": "builtin:D2", "rates": {"max": 1.0, "steps": 3}}), encoding="utf-8")
            args = build_parser().parse_args(["run", "--config", str(path), "--seed", "5", "--no-oracle"])
            config = load_config(args)
        self.assertEqual(config.rate_values(), [0.0, 0.5, 1.0])
        self.assertEqual(config.seed, 5)
        self.assertEqual(config.oracle.seed, 5)
        self.assertFalse(config.oracle.enabled)

    def test_unnormalized_file_exits_2(self):
        with tempfile.TemporaryDirectory() as d:
            path = Path(d) / "bad.json"
            doc = {"s_alphabet": ["0"], "x_alphabet": ["0"], "t_alphabet": ["a", "b"], "pmf": [[["1/2", "3/8"]]]}
            path.write_text(json.dumps(doc), encoding="utf-8")
            code, _, err = run_cli(["run", "--source", str(path), "--out", d])
            self.assertEqual(code, 2)
            self.assertIn("1/8", err)
            self.assertFalse((Path(d) / "sweep.csv").exists())

    def test_negative_rate_exits_2(self):
        code, _, _ = run_cli(["run", "--source", "builtin:D1", "--rate=-0.5"])
        self.assertEqual(code, 2)
        args = build_parser().parse_args(["run", "--source", "builtin:D1", "--rate=-0.5"])
        with self.assertRaises(ConfigError):
            load_config(args)

    def test_missing_source(self):
        with self.assertRaises(ConfigError):
            load_config(build_parser().parse_args(["run"]))
        code, _, _ = run_cli(["info"])
        self.assertEqual(code, 2)


if __name__ == "__main__":
    unittest.main()
