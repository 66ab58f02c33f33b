from pathlib import Path

from ..services.artifacts import write_csv
from ..services.catalogue import rhs_from_spec
from ..services.cylinder import dimension_sweep
from ..services.domain import domain_from_spec
from ..services.verify import ESTIMATE_SLACK, inequality_check
from .config import ExperimentConfig
from .reporting import CommandResult, write_report

SWEEP_COLUMNS = ["n", "lambda", "r1", "r2", "r3", "w22_ratio", "cg_iterations", "wall_time_ms"]
FLATNESS_TOL = 1e-6
RATIO_FLOOR = 1e-12


def _flatness(rows, lam: float) -> list:
    checks = []
    for key in ("r1", "r2", "r3", "w22_ratio"):
        values = [getattr(r, key) for r in rows]
        spread = max(values) - min(values)
        scale = max(abs(max(values)), RATIO_FLOOR)
        checks.append(inequality_check(f"flatness:{key}:lam={lam:g}", FLATNESS_TOL, spread / scale, 0.0,
                                       spread=spread))
    return checks


def execute(config: ExperimentConfig, out_dir: Path, config_hash: str) -> CommandResult:
    """Dimension sweep over Cylinder(base, n - q) with cylindrical data."""
    base = domain_from_spec(config.domain.spec(), config.domain.dim)
    grid = config.grid.grid_spec(free_spacing=config.sweep.free_spacing)
    lambdas = config.sweep.lambdas or [config.lam]

    rows, checks = [], []
    for lam in lambdas:
        f = rhs_from_spec(config.rhs.spec(), base.dim, lam)
        entries = dimension_sweep(base, f, config.sweep.dims, lam, grid, workers=config.workers)
        rows.extend(entries)
        checks.extend(_flatness(entries, lam))
        for r in entries:
            checks.append(inequality_check(f"w22:n={r.n}:lam={lam:g}", 1.0, r.w22_ratio, ESTIMATE_SLACK))

    table = [{**r.model_dump(exclude={"lam"}), "lambda": r.lam} for r in rows]
    payload = {"domain": base.describe(), "rhs": config.rhs.spec(), "rows": table}
    result = write_report(out_dir, config_hash, "sweep", payload, checks, config.output.format)
    if config.output.format == "csv":
        result.files.append(write_csv(out_dir / "sweep.csv", SWEEP_COLUMNS, table, config_hash))
    return result
