from pathlib import Path

from ..services.catalogue import rhs_from_spec
from ..services.cylinder import cylinder_equivalence
from ..services.domain import domain_from_spec
from ..services.solver import GridSpec
from ..services.verify import inequality_check
from .config import ExperimentConfig
from .reporting import CommandResult, write_report

DISCREPANCY_FACTOR = 5.0


def execute(config: ExperimentConfig, out_dir: Path, config_hash: str) -> CommandResult:
    """Solve on the base, lift to base x R^d and compare with the direct solve."""
    base = domain_from_spec(config.domain.spec(), config.domain.dim)
    f = rhs_from_spec(config.rhs.spec(), base.dim, config.lam)
    grid = config.grid.grid_spec()
    direct = GridSpec(spacing=grid.spacing, truncation=grid.truncation,
                      free_spacing=config.equivalence.free_spacing)

    report = cylinder_equivalence(base, f, config.lam, config.equivalence.extra_dims, grid, direct)
    bound = DISCREPANCY_FACTOR * grid.spacing ** 2
    checks = [inequality_check("equivalence:l2", bound, report.l2_discrepancy, 0.0)]

    payload = {"domain": base.describe(), "rhs": config.rhs.spec(), "equivalence": report.model_dump()}
    return write_report(out_dir, config_hash, "equivalence", payload, checks, config.output.format)
