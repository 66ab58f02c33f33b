from pathlib import Path

from pydantic import BaseModel

from ..services.artifacts import write_csv, write_json
from ..services.verify import CheckResult

CHECK_COLUMNS = ["name", "kind", "lhs", "rhs", "value", "tolerance", "pass"]


class CommandResult(BaseModel):
    exit_status: int = 0
    failures: list[str] = []
    files: list[Path] = []
    summary: dict = {}


def check_rows(results: list[CheckResult]) -> list[dict]:
    return [r.model_dump(by_alias=True) for r in results]


def write_report(out_dir: Path, config_hash: str, command: str, payload: dict,
                 checks: list[CheckResult], fmt: str) -> CommandResult:
    """report.json always; checks.csv too when the output format is csv."""
    failed = [r.name for r in checks if not r.passed]
    status = "failed" if failed else "passed"
    document = {"command": command, "status": status, "failures": failed,
                "checks": check_rows(checks), **payload}
    files = [write_json(out_dir / "report.json", document, config_hash)]
    if fmt == "csv" and checks:
        files.append(write_csv(out_dir / "checks.csv", CHECK_COLUMNS, check_rows(checks), config_hash))
    return CommandResult(
        exit_status=1 if failed else 0,
        failures=failed,
        files=files,
        summary={"checks": len(checks), "failed": len(failed)},
    )
