"""Quadrature for the standard Gaussian measure mu on O and for the
Gaussian-weighted surface measure d(sigma) = N dH^{n-1} on the boundary.
"""
import math
from dataclasses import dataclass
from enum import Enum
from functools import reduce
from typing import Callable, Optional

import numpy as np
from scipy import special, stats

from ..errors import UnsupportedDomain
from .domain import Ball, ConvexDomain, Cylinder, HalfSpace, Slab, WholeSpace

DEFAULT_TRUNCATION = 8.0
MIN_RESOLUTION = 8
MAX_TENSOR_DIM = 4
MAX_NODES = 2_000_000


class QuadratureTarget(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"


@dataclass(frozen=True, eq=False)
class Quadrature:
    nodes: np.ndarray
    weights: np.ndarray
    target: QuadratureTarget
    std_error: Optional[float] = None

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def total(self) -> float:
        return math.fsum(self.weights)


def gaussian_density(x) -> np.ndarray:
    """N(x) = (2 pi)^{-n/2} exp(-|x|^2 / 2) over the last axis."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    return np.exp(-0.5 * np.sum(x * x, axis=-1)) / (2.0 * np.pi) ** (n / 2.0)


def gauss_hermite_1d(m: int) -> Quadrature:
    """Probabilists' Gauss-Hermite rule; exact to degree 2m - 1 against N(0, 1)."""
    if m < 1:
        raise ValueError(f"Gauss-Hermite rule needs at least one node, got {m}")
    knots, weights = special.roots_hermitenorm(m)
    weights = weights / math.sqrt(2.0 * math.pi)
    return Quadrature(knots.reshape(-1, 1), weights, QuadratureTarget.INTERIOR)


def gauss_legendre_panels(lo: float, hi: float, panels: int, order: int = 4):
    """Composite Gauss-Legendre nodes and weights on [lo, hi]."""
    knots, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * knots[None, :]).reshape(-1)
    w = (half[:, None] * weights[None, :]).reshape(-1)
    return nodes, w


def _tensor(rules: list[tuple[np.ndarray, np.ndarray]]) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian product of 1-D rules; the first rule varies slowest."""
    count = reduce(lambda acc, r: acc * r[0].shape[0], rules, 1)
    if count > MAX_NODES:
        raise UnsupportedDomain(f"tensor rule would need {count} nodes (limit {MAX_NODES})")
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    nodes = np.stack([g.reshape(-1) for g in grids], axis=-1)
    weights = reduce(lambda acc, r: np.multiply.outer(acc, r[1]).reshape(-1), rules[1:], rules[0][1])
    return nodes, weights


def _hermite_rule(m: int) -> tuple[np.ndarray, np.ndarray]:
    q = gauss_hermite_1d(m)
    return q.nodes[:, 0], q.weights


def _standard_normal_pdf(t):
    return np.exp(-0.5 * np.asarray(t) ** 2) / math.sqrt(2.0 * math.pi)


def _sphere_directions(dim: int, resolution: int, order: int):
    """Directions and weights integrating over the unit sphere S^{dim-1}."""
    if dim == 1:
        return np.array([[-1.0], [1.0]]), np.array([1.0, 1.0])
    if dim == 2:
        m = 4 * resolution
        theta = 2.0 * np.pi * np.arange(m) / m
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1), np.full(m, 2.0 * np.pi / m)
    if dim == 3:
        u, wu = gauss_legendre_panels(-1.0, 1.0, max(resolution // 2, 1), order)
        m = 4 * resolution
        phi = 2.0 * np.pi * np.arange(m) / m
        uu, pp = np.meshgrid(u, phi, indexing="ij")
        s = np.sqrt(1.0 - uu ** 2)
        dirs = np.stack([s * np.cos(pp), s * np.sin(pp), uu], axis=-1).reshape(-1, 3)
        w = np.multiply.outer(wu, np.full(m, 2.0 * np.pi / m)).reshape(-1)
        return dirs, w
    raise UnsupportedDomain(f"ball rules are implemented in dimensions 1-3, got {dim}")


def _interior_frame_rule(domain: ConvexDomain, resolution: int, truncation: float,
                         order: int, hermite_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    extent = domain.extent(truncation)[0]
    y0, w0 = gauss_legendre_panels(extent.lo, extent.hi, resolution, order)
    rules = [(y0, w0 * _standard_normal_pdf(y0))]
    rules += [_hermite_rule(hermite_nodes)] * (domain.dim - 1)
    y, w = _tensor(rules)
    return y @ domain.frame(), w


def interior_quadrature(domain: ConvexDomain, resolution: int, truncation: float = DEFAULT_TRUNCATION,
                        panel_order: int = 4, hermite_nodes: int = 20) -> Quadrature:
    """Rule for mu restricted to O.

    Bounded directions use `resolution` Gauss-Legendre panels with the density
    folded into the weights; unbounded directions use Gauss-Hermite.
    """
    if resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be at least {MIN_RESOLUTION}, got {resolution}")

    if isinstance(domain, Cylinder):
        base = interior_quadrature(domain.base, resolution, truncation, panel_order, hermite_nodes)
        free = [_hermite_rule(hermite_nodes)] * domain.extra_dims
        idx = np.arange(base.size)
        combo, w = _tensor([(idx.astype(float), base.weights)] + free)
        nodes = np.concatenate([base.nodes[combo[:, 0].astype(int)], combo[:, 1:]], axis=1)
        return Quadrature(nodes, w, QuadratureTarget.INTERIOR)

    if domain.dim > MAX_TENSOR_DIM:
        raise UnsupportedDomain(
            f"tensor rules stop at dimension {MAX_TENSOR_DIM}; use a Cylinder or monte_carlo_interior"
        )

    if isinstance(domain, WholeSpace):
        nodes, w = _tensor([_hermite_rule(hermite_nodes)] * domain.dim)
        return Quadrature(nodes, w, QuadratureTarget.INTERIOR)

    if isinstance(domain, (HalfSpace, Slab)):
        nodes, w = _interior_frame_rule(domain, resolution, truncation, panel_order, hermite_nodes)
        return Quadrature(nodes, w, QuadratureTarget.INTERIOR)

    if isinstance(domain, Ball):
        if domain.dim == 1:
            e = domain.extent(truncation)[0]
            x, w = gauss_legendre_panels(e.lo, e.hi, resolution, panel_order)
            return Quadrature(x.reshape(-1, 1), w * _standard_normal_pdf(x), QuadratureTarget.INTERIOR)
        rho, wr = gauss_legendre_panels(0.0, domain.r, resolution, panel_order)
        dirs, wd = _sphere_directions(domain.dim, resolution, panel_order)
        nodes = domain.c + rho[:, None, None] * dirs[None, :, :]
        jac = rho ** (domain.dim - 1) * wr
        nodes = nodes.reshape(-1, domain.dim)
        w = np.multiply.outer(jac, wd).reshape(-1) * gaussian_density(nodes)
        return Quadrature(nodes, w, QuadratureTarget.INTERIOR)

    raise UnsupportedDomain(f"no interior rule for {domain.kind.value}")


def boundary_quadrature(domain: ConvexDomain, resolution: int, panel_order: int = 4,
                        hermite_nodes: int = 20) -> Quadrature:
    """Rule for d(sigma) = N dH^{n-1} on the boundary of O."""
    if isinstance(domain, Cylinder):
        base = boundary_quadrature(domain.base, resolution, panel_order, hermite_nodes)
        if base.size == 0:
            return Quadrature(np.zeros((0, domain.dim)), np.zeros(0), QuadratureTarget.BOUNDARY)
        free = [_hermite_rule(hermite_nodes)] * domain.extra_dims
        idx = np.arange(base.size)
        combo, w = _tensor([(idx.astype(float), base.weights)] + free)
        nodes = np.concatenate([base.nodes[combo[:, 0].astype(int)], combo[:, 1:]], axis=1)
        return Quadrature(nodes, w, QuadratureTarget.BOUNDARY)

    if isinstance(domain, WholeSpace):
        return Quadrature(np.zeros((0, domain.dim)), np.zeros(0), QuadratureTarget.BOUNDARY)

    if isinstance(domain, (HalfSpace, Slab)):
        if domain.dim > MAX_TENSOR_DIM:
            raise UnsupportedDomain(f"tensor rules stop at dimension {MAX_TENSOR_DIM}")
        sheets = [domain.b] if isinstance(domain, HalfSpace) else [-domain.b, domain.b]
        tangential = [_hermite_rule(hermite_nodes)] * (domain.dim - 1)
        all_nodes, all_w = [], []
        for level in sheets:
            rules = [(np.array([level]), np.array([_standard_normal_pdf(level)]))] + tangential
            y, w = _tensor(rules)
            all_nodes.append(y @ domain.frame())
            all_w.append(w)
        return Quadrature(np.concatenate(all_nodes), np.concatenate(all_w), QuadratureTarget.BOUNDARY)

    if isinstance(domain, Ball):
        dirs, wd = _sphere_directions(domain.dim, resolution, panel_order)
        nodes = domain.c + domain.r * dirs
        w = domain.r ** (domain.dim - 1) * wd * gaussian_density(nodes)
        return Quadrature(nodes, w, QuadratureTarget.BOUNDARY)

    raise UnsupportedDomain(f"no boundary rule for {domain.kind.value}")


def monte_carlo_interior(domain: ConvexDomain, n_samples: int, seed: int = 0) -> Quadrature:
    """Rejection sampling from N(0, I); every accepted node carries weight 1/n_samples.

    std_error is the binomial standard error of the estimated mass of O.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_samples, domain.dim))
    keep = np.asarray(domain.contains(x), dtype=bool)
    p = keep.mean()
    return Quadrature(
        nodes=x[keep],
        weights=np.full(int(keep.sum()), 1.0 / n_samples),
        target=QuadratureTarget.INTERIOR,
        std_error=math.sqrt(p * (1.0 - p) / n_samples),
    )


def integrate(q: Quadrature, fn: Callable[[np.ndarray], np.ndarray]) -> float:
    """sum_i w_i fn(x_i) with exactly rounded summation."""
    if q.size == 0:
        return 0.0
    values = np.broadcast_to(np.asarray(fn(q.nodes), dtype=float), q.weights.shape)
    return math.fsum(q.weights * values)


def gaussian_mass(domain: ConvexDomain) -> float:
    """Closed-form gamma(O) for the supported kinds."""
    if isinstance(domain, WholeSpace):
        return 1.0
    if isinstance(domain, Cylinder):
        return gaussian_mass(domain.base)
    if isinstance(domain, HalfSpace):
        return float(special.ndtr(domain.b))
    if isinstance(domain, Slab):
        return float(special.ndtr(domain.b) - special.ndtr(-domain.b))
    if isinstance(domain, Ball):
        if domain.dim == 1:
            c = domain.c[0]
            return float(special.ndtr(c + domain.r) - special.ndtr(c - domain.r))
        shift = float(domain.c @ domain.c)
        if shift == 0.0:
            return float(stats.chi2.cdf(domain.r ** 2, domain.dim))
        return float(stats.ncx2.cdf(domain.r ** 2, domain.dim, shift))
    raise UnsupportedDomain(f"no closed-form mass for {domain.kind.value}")


def boundary_mass(domain: ConvexDomain) -> float:
    """Closed-form sigma(boundary of O) for the supported kinds."""
    if isinstance(domain, WholeSpace):
        return 0.0
    if isinstance(domain, Cylinder):
        return boundary_mass(domain.base)
    if isinstance(domain, HalfSpace):
        return float(_standard_normal_pdf(domain.b))
    if isinstance(domain, Slab):
        return float(2.0 * _standard_normal_pdf(domain.b))
    if isinstance(domain, Ball):
        if domain.dim == 1:
            c = domain.c[0]
            return float(_standard_normal_pdf(c - domain.r) + _standard_normal_pdf(c + domain.r))
        if float(domain.c @ domain.c) == 0.0:
            n, r = domain.dim, domain.r
            area = 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0) * r ** (n - 1)
            return area * math.exp(-0.5 * r * r) / (2.0 * math.pi) ** (n / 2.0)
    raise UnsupportedDomain(f"no closed-form surface mass for {domain.kind.value}")
