"""Cylindrical functions, coordinate projections and the dimension sweep.

A cylinder O x R^d carries the product measure gamma_q x gamma_d, so a
solution of the q-dimensional problem lifted along the free directions is the
solution of the (q + d)-dimensional one.
"""
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel

from ..errors import PreconditionError, UnsupportedDomain
from ..events import broadcast_event
from .domain import ConvexDomain, Cylinder
from .functions import AnalyticFunction
from .solver import GridFunction, GridSpec, SolveReport, recover_gradient, recover_hessian, solve

ORTHONORMAL_TOL = 1e-12
MAX_DIRECT_DIM = 4
SWEEP_DIMS = range(1, 7)


def check_orthonormal(directions) -> np.ndarray:
    g = np.atleast_2d(np.asarray(directions, dtype=float))
    gram = g @ g.T
    err = float(np.max(np.abs(gram - np.eye(g.shape[0]))))
    if err > ORTHONORMAL_TOL:
        raise PreconditionError(f"directions are not orthonormal (max |G G^T - I| = {err:.3e})")
    return g


def project(x, directions) -> np.ndarray:
    """Coordinates (<h_1, x>, ..., <h_q, x>)."""
    g = check_orthonormal(directions)
    return np.asarray(x, dtype=float) @ g.T


def embed(y, directions) -> np.ndarray:
    """sum_i y_i h_i; inverse of project on span(G)."""
    g = check_orthonormal(directions)
    return np.asarray(y, dtype=float) @ g


def axis_directions(q: int, n: int) -> np.ndarray:
    return np.eye(n)[:q]


@dataclass(frozen=True, eq=False)
class CylindricalFunction(AnalyticFunction):
    directions: np.ndarray = None
    profile: AnalyticFunction = None

    @property
    def ambient_dim(self) -> int:
        return self.directions.shape[1]


def cylindrical(profile: AnalyticFunction, directions, name: str = None) -> CylindricalFunction:
    """w(<l_1, x>, ..., <l_k, x>) with chain-rule derivatives."""
    g = check_orthonormal(directions)

    def value(x):
        return profile.value(np.asarray(x, dtype=float) @ g.T)

    def grad(x):
        return profile.grad(np.asarray(x, dtype=float) @ g.T) @ g

    def hess(x):
        return g.T @ profile.hess(np.asarray(x, dtype=float) @ g.T) @ g

    return CylindricalFunction(
        name=name or f"cyl({profile.name})", value=value, grad=grad, hess=hess,
        directions=g, profile=profile,
    )


@dataclass(eq=False)
class LiftedFunction:
    """u(x) = v(pi_G(x)) for a grid solution v; `clamped` counts projected
    points that fell outside the base grid and were clamped back."""
    base: GridFunction
    directions: np.ndarray
    clamped: int = 0
    _base_gradient: Optional[np.ndarray] = field(default=None, repr=False)
    _base_hessian: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def ambient_dim(self) -> int:
        return self.directions.shape[1]

    def _project(self, x) -> np.ndarray:
        y = np.atleast_2d(np.asarray(x, dtype=float)) @ self.directions.T
        self.clamped += int(np.count_nonzero(self.base.outside(y)))
        return y

    def __call__(self, x) -> np.ndarray:
        return self.base.at(self._project(x))

    def grad(self, x) -> np.ndarray:
        if self._base_gradient is None:
            self._base_gradient = recover_gradient(self.base)
        g = self.base.field_at(self._base_gradient, self._project(x), "cubic")
        return g @ self.directions

    def hess(self, x) -> np.ndarray:
        """G^T D^2 v(pi_G x) G; zero on the orthogonal complement of span(G)."""
        if self._base_hessian is None:
            self._base_hessian = recover_hessian(self.base)
        h = self.base.field_at(self._base_hessian, self._project(x), "linear")
        return self.directions.T @ h @ self.directions


def lift(v: GridFunction, directions, n: int) -> LiftedFunction:
    g = check_orthonormal(directions)
    if g.shape[1] != n:
        raise PreconditionError(f"directions live in R^{g.shape[1]}, ambient dimension is {n}")
    if g.shape[0] != v.grid.dim:
        raise PreconditionError(f"{g.shape[0]} directions for a {v.grid.dim}-dimensional base")
    return LiftedFunction(v, g)


class EquivalenceReport(BaseModel):
    base_dim: int
    extra_dims: int
    lam: float
    spacing: float
    l2_discrepancy: float
    max_discrepancy: float
    clamped: int
    norm_differences: dict[str, float]
    base: SolveReport
    direct: SolveReport


NORM_FIELDS = ("l2_u", "l2_grad", "hs_hess", "l2_f", "drift_norm", "flux_norm", "r1", "r2", "r3", "w22_ratio")


def cylinder_equivalence(base: ConvexDomain, f_base: Callable, lam: float, extra_dims: int,
                         grid: GridSpec = GridSpec(), direct_grid: Optional[GridSpec] = None) -> EquivalenceReport:
    """Solve on the base, lift, and compare with the direct solve on base x R^d."""
    q = base.dim
    n = q + extra_dims
    if n > MAX_DIRECT_DIM:
        raise UnsupportedDomain(f"direct tensor solve stops at dimension {MAX_DIRECT_DIM}, got {n}")

    v, base_report = solve(base, f_base, lam, grid)
    domain = Cylinder(base=base, extra_dims=extra_dims)
    u, direct_report = solve(domain, lambda x: f_base(np.asarray(x)[..., :q]), lam, direct_grid or grid)

    lifted = lift(v, axis_directions(q, n), n)
    points = u.grid.points().reshape(-1, n)
    diff = lifted(points).reshape(u.grid.shape) - u.values
    mass = u.grid.mass()

    return EquivalenceReport(
        base_dim=q, extra_dims=extra_dims, lam=lam, spacing=u.grid.spacing,
        l2_discrepancy=math.sqrt(math.fsum((mass * diff ** 2).ravel())),
        max_discrepancy=float(np.max(np.abs(diff))),
        clamped=lifted.clamped,
        norm_differences={
            k: abs(getattr(direct_report, k) - getattr(base_report, k)) for k in NORM_FIELDS
        },
        base=base_report, direct=direct_report,
    )


class SweepRow(BaseModel):
    n: int
    lam: float
    r1: float
    r2: float
    r3: float
    w22_ratio: float
    cg_iterations: int
    wall_time_ms: float


def _sweep_entry(base: ConvexDomain, f_base: Callable, n: int, lam: float, grid: GridSpec) -> SweepRow:
    q = base.dim
    domain = base if n == q else Cylinder(base=base, extra_dims=n - q)
    start = time.perf_counter()
    _, report = solve(domain, lambda x: f_base(np.asarray(x)[..., :q]), lam, grid)
    elapsed = (time.perf_counter() - start) * 1000.0
    row = SweepRow(n=n, lam=lam, r1=report.r1, r2=report.r2, r3=report.r3,
                   w22_ratio=report.w22_ratio, cg_iterations=report.cg_iterations,
                   wall_time_ms=elapsed)
    broadcast_event("sweep_row", row.model_dump())
    return row


def dimension_sweep(base: ConvexDomain, f_base: Callable, dims, lam: float,
                    grid: GridSpec = GridSpec(), workers: int = 1) -> list[SweepRow]:
    """Solve on Cylinder(base, n - q) for every n in dims with f(x) = f_base(x_1..x_q).

    Rows come back in the order of `dims` whatever the worker count.
    """
    dims = list(dims)
    for n in dims:
        if n not in SWEEP_DIMS or n < base.dim:
            raise UnsupportedDomain(f"sweep dimension {n} outside {SWEEP_DIMS.start}..{SWEEP_DIMS.stop - 1}")

    if workers <= 1:
        return [_sweep_entry(base, f_base, n, lam, grid) for n in dims]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: _sweep_entry(base, f_base, n, lam, grid), dims))
