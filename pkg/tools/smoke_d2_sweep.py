import sys
from pathlib import Path


def main() -> int:
    project_root = Path(__file__).parent.parent
    if str(project_root) not in sys.path:
        sys.path.insert(0, str(project_root))

    from src.core.orchestrator import EXIT_OK, ExperimentOrchestrator
    from src.models.schemas import ExperimentConfig

    config = ExperimentConfig(
        source="builtin:D2",
        problem="p1",
        rates=[0.25, 0.5, 0.75, 1.0],
        designs=["A"],
        profile="quick",
    )
    result = ExperimentOrchestrator(config).invoke({"run_id": "smoke"})

    if result.get("exit_code") != EXIT_OK:
        raise AssertionError(f"exit_code={result.get('exit_code')} violations={result.get('violations')}")
    utilities = [rec.report.utility_p1 for rec in result["records"]]
    if any(b < a - 1e-9 for a, b in zip(utilities, utilities[1:])):
        raise AssertionError(f"utility not monotone: {utilities}")
    if abs(utilities[-1] - 1.0) > 1e-9:
        raise AssertionError(f"final utility != 1: {utilities[-1]}")

    print(f"OK: D2 sweep smoke - utilities={utilities}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
