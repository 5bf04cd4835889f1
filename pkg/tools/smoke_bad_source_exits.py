import sys
import tempfile
from pathlib import Path


def main() -> int:
    project_root = Path(__file__).parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))

    from src.core.orchestrator import EXIT_CONFIG, ExperimentOrchestrator
    from src.models.schemas import ExperimentConfig

    # 総和 7/8 の分布ファイルは読み込み段階で halt し、終了コード 2 になる
    text = '{"s_alphabet": ["0"], "x_alphabet": ["0", "1"], "t_alphabet": ["0"], "pmf": [[["1/2"], ["3/8"]]]}'
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "bad.json"
        path.write_text(text, encoding="utf-8")
        config = ExperimentConfig(source=str(path), rates=[0.5], designs=["B"], profile="quick")
        result = ExperimentOrchestrator(config).invoke({"run_id": "smoke"})

    if not result.get("halt"):
        raise AssertionError("expected halt=True")
    if result.get("exit_code") != EXIT_CONFIG:
        raise AssertionError(f"exit_code={result.get('exit_code')}")
    if result.get("records"):
        raise AssertionError("no run should be recorded after a parse failure")

    print("OK: bad source smoke - halted with exit code 2")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
