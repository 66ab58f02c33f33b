from pathlib import Path
from typing import Callable, Optional

from pydantic import BaseModel

from . import __version__
from .commands import equivalence, oracle, solve, sweep, verify
from .commands.config import ExperimentConfig, as_dict, config_hash
from .events import broadcast_event
from .commands.reporting import CommandResult
from .database import finish_run, init_db, start_run
from .errors import ConfigError, OUNeumannError
from .services.artifacts import build_bundle, compute_sha256, write_json

EXIT_PASSED = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3

COMMANDS: dict[str, Callable[[ExperimentConfig, Path, str], CommandResult]] = {
    "solve": solve.execute,
    "verify": verify.execute,
    "sweep": sweep.execute,
    "equivalence": equivalence.execute,
    "oracle": oracle.execute,
}

STATUS = {EXIT_PASSED: "passed", EXIT_FAILED: "failed", EXIT_CONFIG: "error", EXIT_SOLVER: "error"}


class RunOutcome(BaseModel):
    command: str
    exit_status: int
    config_hash: str
    out_dir: Path
    failures: list[str] = []
    files: list[Path] = []
    bundle: Optional[Path] = None
    run_id: Optional[int] = None


def _error_report(out_dir: Path, h: str, command: str, exit_status: int, error: Exception) -> CommandResult:
    failure = {"kind": type(error).__name__, "message": str(error)}
    path = write_json(out_dir / "report.json",
                      {"command": command, "status": "error", "exit_status": exit_status,
                       "failures": [failure]}, h)
    return CommandResult(exit_status=exit_status, failures=[failure["kind"]], files=[path])


def _artifact_rows(files: list[Path]) -> list[dict]:
    return [
        {"name": p.name, "path": str(p), "sha256": compute_sha256(p), "size_bytes": p.stat().st_size}
        for p in files
    ]


def _execute(config: ExperimentConfig, out_dir: Path, h: str) -> CommandResult:
    try:
        return COMMANDS[config.command](config, out_dir, h)
    except ConfigError as e:
        return _error_report(out_dir, h, config.command, EXIT_CONFIG, e)
    except (OUNeumannError, ValueError) as e:
        return _error_report(out_dir, h, config.command, EXIT_SOLVER, e)


def run(config: ExperimentConfig, ledger_url: Optional[str] = None) -> RunOutcome:
    """Execute one command; exit status 0 iff every check in the run passed."""
    out_dir = Path(config.output.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    h = config_hash(config)

    db = run_row = None
    if config.ledger:
        db = init_db(ledger_url)()
        run_row = start_run(db, config.command, h, as_dict(config), out_dir)
        broadcast_event("ledger", {"run": run_row.id, "command": config.command})

    try:
        result = _execute(config, out_dir, h)
    except Exception as e:
        # unexpected failure: close the ledger row before the traceback propagates
        result = _error_report(out_dir, h, config.command, EXIT_SOLVER, e)
        if db is not None:
            finish_run(db, run_row, "error", EXIT_SOLVER, _artifact_rows(result.files))
            db.close()
        raise

    bundle = None
    if config.bundle and result.files:
        bundle = build_bundle(out_dir, result.files)

    if db is not None:
        finish_run(db, run_row, STATUS[result.exit_status], result.exit_status, _artifact_rows(result.files), bundle)
        db.close()

    broadcast_event("run_finished", {"command": config.command, "exit_status": result.exit_status,
                                     "version": __version__})
    return RunOutcome(
        command=config.command,
        exit_status=result.exit_status,
        config_hash=h,
        out_dir=out_dir,
        failures=result.failures,
        files=result.files,
        bundle=bundle[0] if bundle else None,
        run_id=run_row.id if run_row is not None else None,
    )
