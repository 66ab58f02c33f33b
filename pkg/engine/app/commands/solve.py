from pathlib import Path

import numpy as np

from ..services.artifacts import write_csv
from ..services.catalogue import radial_profile_from_spec, rhs_from_spec
from ..services.domain import Ball, domain_from_spec
from ..services.solver import radial_solve, solve
from ..services.verify import check_estimates, residual_check
from .config import ExperimentConfig
from .reporting import CommandResult, write_report


def execute(config: ExperimentConfig, out_dir: Path, config_hash: str) -> CommandResult:
    """Solve lambda u - L u = f once and check the a-priori ratios."""
    domain = domain_from_spec(config.domain.spec(), config.domain.dim)
    lam = config.lam

    if isinstance(domain, Ball) and domain.dim > 1:
        f = radial_profile_from_spec(config.rhs.spec())
        u, report = radial_solve(domain, f, lam, domain.dim, config.grid.radial_nodes)
        coords = u.grid.axis.nodes
    else:
        f = rhs_from_spec(config.rhs.spec(), domain.dim, lam)
        u, report = solve(domain, f, lam, config.grid.grid_spec())
        coords = u.grid.points()[..., 0].ravel() if domain.dim == 1 else None

    checks = check_estimates(report) if report.l2_f > 0 else []
    checks.append(residual_check("energy_identity", report.energy_residual, 0.0, 1e-8))

    payload = {
        "domain": domain.describe(),
        "rhs": config.rhs.spec(),
        "report": report.model_dump(),
        "solution": {
            "min": float(np.min(u.values)),
            "max": float(np.max(u.values)),
            "nodes": int(u.values.size),
        },
    }
    result = write_report(out_dir, config_hash, "solve", payload, checks, config.output.format)

    if config.output.format == "csv" and coords is not None:
        rows = [{"x": float(x), "u": float(v)} for x, v in zip(coords, u.values.ravel())]
        result.files.append(write_csv(out_dir / "solution.csv", ["x", "u"], rows, config_hash))
    return result
