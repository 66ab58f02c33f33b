from pathlib import Path

from ..services.verify import DEFAULT_MANIFEST, run_battery
from .config import ExperimentConfig
from .reporting import CommandResult, write_report


def execute(config: ExperimentConfig, out_dir: Path, config_hash: str) -> CommandResult:
    """Run the check battery at the configured quadrature resolution."""
    manifest = {**DEFAULT_MANIFEST, "resolution": config.quadrature.resolution}
    results, manifest_hash = run_battery(manifest, workers=config.workers)

    drift = [r.value for r in results if r.kind == "ratio"]
    payload = {
        "manifest_hash": manifest_hash,
        "manifest_version": manifest["version"],
        "summary": {
            "total": len(results),
            "passed": sum(r.passed for r in results),
            "max_drift_ratio": max(drift) if drift else 0.0,
        },
    }
    return write_report(out_dir, config_hash, "verify", payload, results, config.output.format)
