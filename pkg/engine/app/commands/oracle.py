from pathlib import Path
from typing import Optional

import numpy as np

from ..errors import ConfigError, UnsupportedDomain
from ..services.catalogue import radial_profile_from_spec, rhs_from_spec
from ..services.domain import Ball, ConvexDomain, domain_from_spec
from ..services.oracle import dt_halving, feynman_kac
from ..services.solver import radial_solve, solve
from ..services.verify import CheckResult, inequality_check
from .config import ExperimentConfig
from .reporting import CommandResult, write_report

REFERENCE_MAX_DIM = 2


def _radial_reference(ball: Ball, config: ExperimentConfig, x0: np.ndarray) -> Optional[float]:
    if np.any(ball.c != 0.0):
        return None
    try:
        profile = radial_profile_from_spec(config.rhs.spec())
    except ConfigError:
        return None
    u, _ = radial_solve(ball, profile, config.lam, ball.dim, config.grid.radial_nodes)
    return float(u.at(x0)[0])


def _reference(domain: ConvexDomain, f, config: ExperimentConfig, x0: np.ndarray) -> Optional[float]:
    """Deterministic solution at x0: radial solve on centred balls, tensor grid otherwise."""
    if isinstance(domain, Ball) and domain.dim > 1:
        return _radial_reference(domain, config, x0)
    if domain.dim > REFERENCE_MAX_DIM:
        return None
    try:
        u, _ = solve(domain, f, config.lam, config.grid.grid_spec())
    except UnsupportedDomain:
        return None
    return float(u.at(x0)[0])


def execute(config: ExperimentConfig, out_dir: Path, config_hash: str) -> CommandResult:
    """Feynman-Kac estimate at x0, cross-checked against the grid solver."""
    domain = domain_from_spec(config.domain.spec(), config.domain.dim)
    f = rhs_from_spec(config.rhs.spec(), domain.dim, config.lam)
    oc = config.oracle
    x0 = np.asarray(oc.x0, dtype=float) if oc.x0 is not None else domain.project(np.zeros(domain.dim))

    kwargs = dict(n_paths=oc.n_paths, t_max=oc.t_max, seed=oc.seed, antithetic=oc.antithetic,
                  workers=config.workers)
    if oc.dt_levels > 1:
        estimates = dt_halving(domain, f, config.lam, x0, oc.dt, oc.dt_levels, **kwargs)
    else:
        estimates = [feynman_kac(domain, f, config.lam, x0, dt=oc.dt, **kwargs)]
    estimate = estimates[-1]

    checks: list[CheckResult] = []
    reference = _reference(domain, f, config, x0)
    if reference is not None:
        gap = abs(estimate.value - reference)
        budget = 3.0 * estimate.std_error + estimate.bias_budget(x0)
        checks.append(inequality_check("oracle:agreement", budget, gap, 0.0, reference=reference))

    payload = {
        "domain": domain.describe(),
        "rhs": config.rhs.spec(),
        "x0": x0.tolist(),
        "estimates": [e.model_dump() for e in estimates],
        "reference": reference,
    }
    return write_report(out_dir, config_hash, "oracle", payload, checks, config.output.format)
