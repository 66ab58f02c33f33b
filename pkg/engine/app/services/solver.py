"""Flux-form finite volumes for lambda u - L u = f with zero Neumann flux.

L u = N^{-1} div(N grad u). On a boundary-fitted tensor grid (in the domain's
rotated frame) every axis contributes a tridiagonal conductance matrix K_a
with face weights N(x_{i+1/2}) / h and a lumped mass m_a = N(x_i) V_i, where
boundary and truncation nodes own half a cell. The discrete operator

    A u = lambda u + sum_a K_a u / m_a

is self-adjoint and positive in the mass-weighted inner product, and boundary
faces carry no flux, so the Neumann condition is natural.
"""
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from pydantic import BaseModel
from scipy import interpolate, linalg

from ..errors import ConvergenceError, UnsupportedDomain
from ..events import broadcast_event
from .domain import Ball, ConvexDomain, AxisExtent
from .functions import AnalyticFunction
from .measure import DEFAULT_TRUNCATION, Quadrature, gauss_legendre_panels

CG_TOLERANCE = 1e-10
MIN_RADIAL_NODES = 32


@dataclass(frozen=True)
class GridSpec:
    spacing: float = 1.0 / 32.0
    truncation: float = DEFAULT_TRUNCATION
    free_spacing: Optional[float] = None


@dataclass(frozen=True, eq=False)
class Axis:
    nodes: np.ndarray
    mass: np.ndarray
    conductance: np.ndarray
    lo_boundary: bool
    hi_boundary: bool
    free: bool = False

    @property
    def n(self) -> int:
        return self.nodes.shape[0]

    @property
    def h(self) -> float:
        return float(self.nodes[1] - self.nodes[0])


def _pdf(t):
    return np.exp(-0.5 * np.asarray(t) ** 2) / math.sqrt(2.0 * math.pi)


def gaussian_axis(extent: AxisExtent, spacing: float) -> Axis:
    length = extent.hi - extent.lo
    n = max(3, int(round(length / spacing)) + 1)
    nodes = np.linspace(extent.lo, extent.hi, n)
    h = length / (n - 1)
    volume = np.full(n, h)
    volume[0] = volume[-1] = 0.5 * h
    mass = _pdf(nodes) * volume
    conductance = _pdf(0.5 * (nodes[1:] + nodes[:-1])) / h
    if extent.free:
        # free directions integrate to exactly one
        scale = 1.0 / math.fsum(mass)
        mass, conductance = mass * scale, conductance * scale
    return Axis(nodes, mass, conductance, extent.lo_boundary, extent.hi_boundary, extent.free)


def radial_weight(r, n_dim: int) -> np.ndarray:
    """Density of |X| for X ~ N(0, I_n)."""
    c_n = math.exp((1.0 - n_dim / 2.0) * math.log(2.0) - math.lgamma(n_dim / 2.0))
    r = np.asarray(r, dtype=float)
    return c_n * r ** (n_dim - 1) * np.exp(-0.5 * r * r)


def radial_axis(radius: float, n_r: int, n_dim: int) -> Axis:
    nodes = np.linspace(0.0, radius, n_r)
    h = radius / (n_r - 1)
    lo = np.maximum(nodes - 0.5 * h, 0.0)
    hi = np.minimum(nodes + 0.5 * h, radius)
    # cell-integrated weight stays positive at r = 0
    t, w = gauss_legendre_panels(-1.0, 1.0, 1, 4)
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    pts = mid[:, None] + half[:, None] * t[None, :]
    mass = np.sum(half[:, None] * w[None, :] * radial_weight(pts, n_dim), axis=1)
    conductance = radial_weight(0.5 * (nodes[1:] + nodes[:-1]), n_dim) / h
    return Axis(nodes, mass, conductance, False, True)


@dataclass(frozen=True, eq=False)
class TensorGrid:
    axes: tuple
    frame: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple:
        return tuple(a.n for a in self.axes)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def spacing(self) -> float:
        return min(a.h for a in self.axes)

    def frame_points(self) -> np.ndarray:
        grids = np.meshgrid(*[a.nodes for a in self.axes], indexing="ij")
        return np.stack(grids, axis=-1)

    def points(self) -> np.ndarray:
        """Physical coordinates x = R^T y, shape grid.shape + (dim,)."""
        return self.frame_points() @ self.frame

    def mass(self) -> np.ndarray:
        out = self.axes[0].mass
        for a in self.axes[1:]:
            out = np.multiply.outer(out, a.mass)
        return out


@dataclass(frozen=True, eq=False)
class RadialGrid:
    axis: Axis
    n_dim: int

    @property
    def axes(self) -> tuple:
        return (self.axis,)

    @property
    def dim(self) -> int:
        return self.n_dim

    @property
    def shape(self) -> tuple:
        return (self.axis.n,)

    @property
    def size(self) -> int:
        return self.axis.n

    @property
    def spacing(self) -> float:
        return self.axis.h

    def mass(self) -> np.ndarray:
        return self.axis.mass


Grid = Union[TensorGrid, RadialGrid]


def build_grid(domain: ConvexDomain, spec: GridSpec) -> TensorGrid:
    """Boundary-fitted uniform grid in the domain's frame."""
    axes = []
    for extent in domain.extent(spec.truncation):
        step = spec.free_spacing if (extent.free and spec.free_spacing) else spec.spacing
        axes.append(gaussian_axis(extent, step))
    return TensorGrid(tuple(axes), domain.frame())


@dataclass(eq=False)
class GridFunction:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        if self.values.size != self.grid.size:
            raise ValueError(f"{self.values.size} values for a grid of {self.grid.size} nodes")

    @property
    def dim(self) -> int:
        return self.grid.dim

    def _frame_coords(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if isinstance(self.grid, RadialGrid):
            r = np.linalg.norm(points, axis=-1)
            return np.clip(r, 0.0, self.grid.axis.nodes[-1])[:, None]
        y = points @ self.grid.frame.T
        for k, a in enumerate(self.grid.axes):
            y[:, k] = np.clip(y[:, k], a.nodes[0], a.nodes[-1])
        return y

    def outside(self, points, tol: float = 1e-12) -> np.ndarray:
        """Mask of points that `at` clamps onto the grid box."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if isinstance(self.grid, RadialGrid):
            return np.linalg.norm(points, axis=-1) > self.grid.axis.nodes[-1] + tol
        y = points @ self.grid.frame.T
        lo = np.array([a.nodes[0] for a in self.grid.axes])
        hi = np.array([a.nodes[-1] for a in self.grid.axes])
        return np.any((y < lo - tol) | (y > hi + tol), axis=-1)

    def field_at(self, values: np.ndarray, points, method: str = "cubic") -> np.ndarray:
        """Interpolate any nodal field (scalar per node, or trailing components)."""
        y = self._frame_coords(points)
        axes = [a.nodes for a in self.grid.axes]
        if len(axes) == 1:
            if method == "cubic" and axes[0].shape[0] >= 4:
                return interpolate.CubicSpline(axes[0], values, axis=0)(y[:, 0])
            flat = values.reshape(values.shape[0], -1)
            cols = [np.interp(y[:, 0], axes[0], flat[:, j]) for j in range(flat.shape[1])]
            return np.stack(cols, axis=-1).reshape((y.shape[0],) + values.shape[1:])
        if method == "cubic" and min(a.shape[0] for a in axes) < 4:
            method = "linear"
        return interpolate.RegularGridInterpolator(axes, values, method=method)(y)

    def at(self, points) -> np.ndarray:
        """Value at physical points; points outside the grid box are clamped to it."""
        return self.field_at(self.values, points, "cubic")


class SolveReport(BaseModel):
    lam: float
    dim: int
    nodes: int
    spacing: float
    l2_u: float = 0.0
    l2_grad: float = 0.0
    hs_hess: float = 0.0
    l2_f: float = 0.0
    drift_norm: float = 0.0
    flux_norm: float = 0.0
    cg_iterations: int = 0
    cg_residual: float = 0.0
    r1: float = 0.0
    r2: float = 0.0
    r3: float = 0.0
    w22_ratio: float = 0.0
    energy_residual: float = 0.0


def c_lambda(lam: float) -> float:
    """Dimension-free W^{2,2} constant 1/lambda^2 + 1/lambda + 2."""
    return 1.0 / lam ** 2 + 1.0 / lam + 2.0


def apply_operator(u_fn: AnalyticFunction, lam: float) -> Callable[[np.ndarray], np.ndarray]:
    """x -> lambda u(x) - Laplacian u(x) + <x, grad u(x)>."""

    def rhs(x):
        return lam * u_fn.value(x) - u_fn.ou(x)

    return rhs


# -- discrete operator ---------------------------------------------------------

def _along(values: np.ndarray, axis: int, vector: np.ndarray) -> np.ndarray:
    shape = [1] * values.ndim
    shape[axis] = vector.shape[0]
    return vector.reshape(shape)


def conductance_apply(grid: Grid, u: np.ndarray, axis: int) -> np.ndarray:
    """K_a u: flux_{i-1/2} - flux_{i+1/2} with flux = c_{i+1/2}(u_{i+1} - u_i)."""
    a = grid.axes[axis]
    flux = np.diff(u, axis=axis) * _along(u, axis, a.conductance)
    out = np.zeros_like(u)
    lead = [slice(None)] * u.ndim
    tail = [slice(None)] * u.ndim
    lead[axis] = slice(0, -1)
    tail[axis] = slice(1, None)
    out[tuple(lead)] -= flux
    out[tuple(tail)] += flux
    return out


def apply_discrete(grid: Grid, u: np.ndarray, lam: float) -> np.ndarray:
    """A u = lambda u + sum_a m_a^{-1} K_a u (Kronecker sum over axes)."""
    out = lam * u
    for k, a in enumerate(grid.axes):
        out = out + conductance_apply(grid, u, k) / _along(u, k, a.mass)
    return out


def mass_inner(grid: Grid, u: np.ndarray, v: np.ndarray, mass: Optional[np.ndarray] = None) -> float:
    m = grid.mass() if mass is None else mass
    return float(np.sum(m * u * v))


def dirichlet_form(grid: Grid, u: np.ndarray) -> float:
    """<u, (A - lambda) u> in the mass inner product: sum of c (Delta u)^2 over faces."""
    mass = grid.mass()
    total = 0.0
    for k in range(len(grid.axes)):
        total += mass_inner(grid, u, conductance_apply(grid, u, k) / _along(u, k, grid.axes[k].mass), mass=mass)
    return total


class LinePreconditioner:
    """Exact solve of lambda + m_0^{-1} K_0 along axis 0, one banded system per grid line."""

    def __init__(self, grid: Grid, lam: float):
        a = grid.axes[0]
        c = a.conductance
        diag = lam * a.mass
        diag[:-1] += c
        diag[1:] += c
        self.banded = np.zeros((3, a.n))
        self.banded[0, 1:] = -c
        self.banded[1] = diag
        self.banded[2, :-1] = -c
        self.mass0 = a.mass
        self.shape = grid.shape

    def __call__(self, r: np.ndarray) -> np.ndarray:
        rhs = (r * _along(r, 0, self.mass0)).reshape(self.shape[0], -1)
        z = linalg.solve_banded((1, 1), self.banded, rhs, check_finite=False)
        return z.reshape(self.shape)


def conjugate_gradient(grid: Grid, b: np.ndarray, lam: float, tol: float = CG_TOLERANCE,
                       max_iterations: Optional[int] = None):
    """Preconditioned CG in the mass inner product; returns (u, iterations, relative residual)."""
    mass = grid.mass()
    if max_iterations is None:
        max_iterations = max(1, int(50 * math.sqrt(grid.size)))

    def inner(u, v):
        return float(np.sum(mass * u * v))

    precondition = LinePreconditioner(grid, lam)
    u = np.zeros_like(b)
    b_norm = math.sqrt(inner(b, b))
    if b_norm == 0.0:
        return u, 0, 0.0

    r = b.copy()
    z = precondition(r)
    p = z.copy()
    rz = inner(r, z)
    residual = 1.0
    for k in range(1, max_iterations + 1):
        ap = apply_discrete(grid, p, lam)
        alpha = rz / inner(p, ap)
        u += alpha * p
        r -= alpha * ap
        residual = math.sqrt(inner(r, r)) / b_norm
        if residual <= tol:
            return u, k, residual
        z = precondition(r)
        rz_next = inner(r, z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    raise ConvergenceError(max_iterations, residual, tol)


# -- derivative recovery ------------------------------------------------------

def _second_difference(u: np.ndarray, h: float, axis: int) -> np.ndarray:
    v = np.moveaxis(u, axis, -1)
    out = np.empty_like(v)
    out[..., 1:-1] = (v[..., 2:] - 2.0 * v[..., 1:-1] + v[..., :-2]) / h ** 2
    if v.shape[-1] >= 4:
        out[..., 0] = (2.0 * v[..., 0] - 5.0 * v[..., 1] + 4.0 * v[..., 2] - v[..., 3]) / h ** 2
        out[..., -1] = (2.0 * v[..., -1] - 5.0 * v[..., -2] + 4.0 * v[..., -3] - v[..., -4]) / h ** 2
    else:
        out[..., 0] = out[..., 1]
        out[..., -1] = out[..., -2]
    return np.moveaxis(out, -1, axis)


def _check_degenerate(u: GridFunction):
    if min(u.grid.shape) < 3:
        raise ValueError(f"derivative recovery needs at least 3 nodes per axis, grid is {u.grid.shape}")


def frame_gradient(u: GridFunction) -> np.ndarray:
    _check_degenerate(u)
    parts = [np.gradient(u.values, a.h, axis=k, edge_order=2) for k, a in enumerate(u.grid.axes)]
    return np.stack(parts, axis=-1)


def frame_hessian(u: GridFunction) -> np.ndarray:
    _check_degenerate(u)
    axes = u.grid.axes
    d = len(axes)
    out = np.empty(u.values.shape + (d, d))
    first = [np.gradient(u.values, a.h, axis=k, edge_order=2) for k, a in enumerate(axes)]
    for i in range(d):
        out[..., i, i] = _second_difference(u.values, axes[i].h, i)
        for j in range(i + 1, d):
            mixed = np.gradient(first[i], axes[j].h, axis=j, edge_order=2)
            out[..., i, j] = out[..., j, i] = mixed
    return out


def recover_gradient(u: GridFunction) -> np.ndarray:
    """Gradient in physical coordinates, shape grid.shape + (n,).

    For radial grids the result is the radial derivative u'(r), shape (n_r, 1).
    """
    g = frame_gradient(u)
    if isinstance(u.grid, RadialGrid):
        return g
    return g @ u.grid.frame


def recover_hessian(u: GridFunction) -> np.ndarray:
    """Hessian in physical coordinates, R^T H_y R."""
    hy = frame_hessian(u)
    if isinstance(u.grid, RadialGrid):
        return hy
    frame = u.grid.frame
    return frame.T @ hy @ frame


def _radial_fields(u: GridFunction):
    """|grad u|^2, Tr[(D^2 u)^2] and <x, grad u> for a radial profile."""
    r = u.grid.axis.nodes
    du = frame_gradient(u)[:, 0]
    d2u = frame_hessian(u)[:, 0, 0]
    ratio = np.empty_like(du)
    ratio[1:] = du[1:] / r[1:]
    # u'(r)/r -> u''(0) as r -> 0
    ratio[0] = d2u[0]
    hs = d2u ** 2 + (u.grid.n_dim - 1) * ratio ** 2
    return du ** 2, hs, r * du, du


# -- norms and reports --------------------------------------------------------

def norms(u: GridFunction, domain: ConvexDomain = None, interior: Optional[Quadrature] = None,
          boundary: Optional[Quadrature] = None) -> dict:
    """L2 norms of u, |grad u|, the Hilbert-Schmidt Hessian, <x, grad u>, and the boundary flux.

    With no quadrature the grid's own mass is used; otherwise recovered fields
    are interpolated (linearly) onto the given nodes.
    """
    grid = u.grid
    if isinstance(grid, RadialGrid):
        grad2, hs, drift, du = _radial_fields(u)
        m = grid.mass()
        sigma = float(radial_weight(grid.axis.nodes[-1], grid.n_dim))
        return {
            "l2_u": math.sqrt(math.fsum((m * u.values ** 2).ravel())),
            "l2_grad": math.sqrt(math.fsum((m * grad2).ravel())),
            "hs_hess": math.sqrt(math.fsum((m * hs).ravel())),
            "drift_norm": math.sqrt(math.fsum((m * drift ** 2).ravel())),
            "flux_norm": math.sqrt(sigma) * abs(float(du[-1])),
        }

    grad_y = frame_gradient(u)
    grad2 = np.sum(grad_y ** 2, axis=-1)
    drift = np.zeros(grid.shape)
    for k, a in enumerate(grid.axes):
        drift += _along(drift, k, a.nodes) * grad_y[..., k]

    if interior is None:
        m = grid.mass()
        hs = _hessian_squares(u, grad_y)
        out = {
            "l2_u": math.sqrt(math.fsum((m * u.values ** 2).ravel())),
            "l2_grad": math.sqrt(math.fsum((m * grad2).ravel())),
            "hs_hess": math.sqrt(math.fsum((m * hs).ravel())),
            "drift_norm": math.sqrt(math.fsum((m * drift ** 2).ravel())),
        }
    else:
        hess_y = frame_hessian(u)
        x = interior.nodes
        w = interior.weights
        vals = u.at(x)
        g = u.field_at(grad_y, x, "linear")
        hq = u.field_at(hess_y, x, "linear")
        out = {
            "l2_u": math.sqrt(math.fsum(w * vals ** 2)),
            "l2_grad": math.sqrt(math.fsum(w * np.sum(g ** 2, axis=-1))),
            "hs_hess": math.sqrt(math.fsum(w * np.sum(hq ** 2, axis=(-2, -1)))),
            "drift_norm": math.sqrt(math.fsum(w * np.sum((x @ grid.frame.T) * g, axis=-1) ** 2)),
        }

    if boundary is None:
        out["flux_norm"] = math.sqrt(_face_flux_squared(grid, grad_y))
    elif boundary.size == 0:
        out["flux_norm"] = 0.0
    else:
        nu = domain.normal(boundary.nodes)
        g = u.field_at(grad_y, boundary.nodes, "linear") @ grid.frame
        out["flux_norm"] = math.sqrt(math.fsum(boundary.weights * np.sum(g * nu, axis=-1) ** 2))
    return out


def _hessian_squares(u: GridFunction, grad_y: np.ndarray) -> np.ndarray:
    """Tr[(D^2 u)^2] per node without holding the full Hessian field."""
    axes = u.grid.axes
    out = np.zeros(u.grid.shape)
    for i, a in enumerate(axes):
        out += _second_difference(u.values, a.h, i) ** 2
        for j in range(i + 1, len(axes)):
            out += 2.0 * np.gradient(grad_y[..., i], axes[j].h, axis=j, edge_order=2) ** 2
    return out


def _face_flux_squared(grid: TensorGrid, grad_y: np.ndarray) -> float:
    """sum over boundary faces of sigma-weighted <grad u, nu>^2."""
    total = []
    for k, a in enumerate(grid.axes):
        tangential = [b.mass for j, b in enumerate(grid.axes) if j != k]
        for side, flagged in ((0, a.lo_boundary), (-1, a.hi_boundary)):
            if not flagged:
                continue
            index = [slice(None)] * grid.dim
            index[k] = side
            normal_derivative = grad_y[tuple(index) + (k,)]
            weight = _pdf(a.nodes[side])
            for t in tangential:
                weight = np.multiply.outer(weight, t)
            total.append(math.fsum((weight * normal_derivative ** 2).ravel()))
    return math.fsum(total)


def estimate_ratios(report: SolveReport) -> tuple[float, float, float]:
    """(lambda^2 |u|^2, lambda |grad u|^2, |D^2 u|_HS^2 / 2), each over |f|^2."""
    if report.l2_f == 0.0:
        raise ValueError("estimate ratios need a nonzero right-hand side")
    f2 = report.l2_f ** 2
    return (
        report.lam ** 2 * report.l2_u ** 2 / f2,
        report.lam * report.l2_grad ** 2 / f2,
        report.hs_hess ** 2 / (2.0 * f2),
    )


def energy_identity(u: GridFunction, f_values: np.ndarray, lam: float) -> float:
    """lambda |u|^2 + E(u) - (f, u), relative to |f|^2, all in the discrete mass."""
    grid = u.grid
    lhs = lam * mass_inner(grid, u.values, u.values) + dirichlet_form(grid, u.values)
    rhs = mass_inner(grid, f_values, u.values)
    scale = max(mass_inner(grid, f_values, f_values), 1e-300)
    return abs(lhs - rhs) / scale


def weak_residual(u: GridFunction, f: Callable, lam: float, phi: AnalyticFunction) -> float:
    """int (lambda u phi + <grad u, grad phi>) dmu - int f phi dmu on the grid's mass."""
    grid = u.grid
    if isinstance(grid, RadialGrid):
        raise UnsupportedDomain("weak residuals are evaluated on tensor grids")
    x = grid.points()
    m = grid.mass()
    grad_u = recover_gradient(u)
    integrand = (lam * u.values * phi.value(x)
                 + np.sum(grad_u * phi.grad(x), axis=-1)
                 - f(x) * phi.value(x))
    return math.fsum((m * integrand).ravel())


def _finish(u: GridFunction, f_values: np.ndarray, lam: float, iterations: int, residual: float,
            domain: ConvexDomain = None) -> SolveReport:
    grid = u.grid
    fields = norms(u, domain)
    l2_f = math.sqrt(math.fsum((grid.mass() * f_values ** 2).ravel()))
    report = SolveReport(
        lam=lam, dim=grid.dim, nodes=grid.size, spacing=grid.spacing,
        l2_f=l2_f, cg_iterations=iterations, cg_residual=residual,
        energy_residual=energy_identity(u, f_values, lam), **fields,
    )
    if l2_f > 0.0:
        report.r1, report.r2, report.r3 = estimate_ratios(report)
        w22 = report.l2_u ** 2 + report.l2_grad ** 2 + report.hs_hess ** 2
        report.w22_ratio = w22 / (c_lambda(lam) * l2_f ** 2)
    return report


def _check_lambda(lam: float):
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")


def solve(domain: ConvexDomain, f: Callable, lam: float, grid: GridSpec = GridSpec(),
          tol: float = CG_TOLERANCE) -> tuple[GridFunction, SolveReport]:
    """Discrete weak solution of lambda u - L u = f with zero normal flux on the boundary."""
    _check_lambda(lam)
    mesh = build_grid(domain, grid)
    broadcast_event("solve_started", {"kind": domain.kind.value, "dim": domain.dim, "nodes": mesh.size, "lam": lam})

    f_values = np.broadcast_to(np.asarray(f(mesh.points()), dtype=float), mesh.shape).copy()
    values, iterations, residual = conjugate_gradient(mesh, f_values, lam, tol)
    u = GridFunction(mesh, values)
    report = _finish(u, f_values, lam, iterations, residual, domain)

    broadcast_event("solve_finished", {"iterations": iterations, "residual": residual,
                                       "r1": report.r1, "r2": report.r2, "r3": report.r3})
    return u, report


def radial_solve(ball: Ball, f_radial: Callable, lam: float, n_dim: int, n_r: int = 256,
                 tol: float = CG_TOLERANCE) -> tuple[GridFunction, SolveReport]:
    """Radial reduction on a centred ball: lambda u - u'' - ((n-1)/r - r) u' = f,
    u'(0) = 0, u'(R) = 0."""
    _check_lambda(lam)
    if n_r < MIN_RADIAL_NODES:
        raise ValueError(f"radial solve needs at least {MIN_RADIAL_NODES} nodes, got {n_r}")
    if n_dim < 1:
        raise ValueError(f"ambient dimension must be at least 1, got {n_dim}")
    if np.any(ball.c != 0.0):
        raise UnsupportedDomain("radial_solve needs a ball centred at the origin")

    mesh = RadialGrid(radial_axis(ball.r, n_r, n_dim), n_dim)
    broadcast_event("solve_started", {"kind": "radial", "dim": n_dim, "nodes": mesh.size, "lam": lam})

    f_values = np.broadcast_to(np.asarray(f_radial(mesh.axis.nodes), dtype=float), mesh.shape).copy()
    values, iterations, residual = conjugate_gradient(mesh, f_values, lam, tol)
    u = GridFunction(mesh, values)
    report = _finish(u, f_values, lam, iterations, residual)

    broadcast_event("solve_finished", {"iterations": iterations, "residual": residual,
                                       "r1": report.r1, "r2": report.r2, "r3": report.r3})
    return u, report
