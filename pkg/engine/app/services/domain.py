"""Open convex sets O = {x : g(x) < 0} with analytic defining functions.

Every method accepts a single point of shape (n,) or a batch of shape (m, n)
and returns values with the batch shape preserved.
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from ..errors import ConfigError, DegenerateGradient, DimensionMismatch, NotOnBoundary, UnsupportedDomain

BOUNDARY_TOL = 1e-10
GRADIENT_FLOOR = 1e-8


class DomainKind(str, Enum):
    HALF_SPACE = "half_space"
    BALL = "ball"
    SLAB = "slab"
    CYLINDER = "cylinder"
    WHOLE_SPACE = "whole_space"


@dataclass(frozen=True)
class AxisExtent:
    """One axis of the rotated frame, clipped to the truncation box [-T, T]."""
    lo: float
    hi: float
    lo_boundary: bool
    hi_boundary: bool
    free: bool = False


def householder_frame(a: np.ndarray) -> np.ndarray:
    """Symmetric orthogonal R with R @ e1 = a, so (R @ x)[0] = <a, x>."""
    n = a.shape[0]
    e1 = np.zeros(n)
    e1[0] = 1.0
    v = e1 - a
    vv = float(v @ v)
    if vv < 1e-28:
        return np.eye(n)
    return np.eye(n) - 2.0 * np.outer(v, v) / vv


def _unit(a, name: str = "a") -> np.ndarray:
    a = np.asarray(a, dtype=float).reshape(-1)
    norm = float(np.linalg.norm(a))
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"{name} must be a unit vector, |{name}| = {norm}")
    return a / norm


def _clip(lo: float, hi: float, truncation: float) -> AxisExtent:
    lo_boundary = lo > -truncation
    hi_boundary = hi < truncation
    lo_c, hi_c = max(lo, -truncation), min(hi, truncation)
    if hi_c <= lo_c:
        raise UnsupportedDomain(f"domain misses the truncation box [-{truncation}, {truncation}]")
    return AxisExtent(lo_c, hi_c, lo_boundary, hi_boundary)


@dataclass(frozen=True, eq=False)
class ConvexDomain(ABC):
    dim: int = 0

    kind: DomainKind = field(init=False, default=None)

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise DimensionMismatch(self.dim, x.shape[-1] if x.ndim else 0)
        return x

    @abstractmethod
    def g(self, x) -> np.ndarray: ...

    @abstractmethod
    def grad_g(self, x) -> np.ndarray: ...

    @abstractmethod
    def hess_g(self, x) -> np.ndarray: ...

    @abstractmethod
    def project(self, x) -> np.ndarray: ...

    @abstractmethod
    def frame(self) -> np.ndarray:
        """Orthogonal matrix R; frame coordinates are y = R @ x."""

    @abstractmethod
    def extent(self, truncation: float) -> list[AxisExtent]:
        """Per-axis extents in frame coordinates for tensor grids and rules."""

    @abstractmethod
    def describe(self) -> dict: ...

    def contains(self, x) -> np.ndarray:
        return self.g(x) < 0.0

    def normal(self, x, tol: float = BOUNDARY_TOL) -> np.ndarray:
        x = self._check(x)
        gx = np.atleast_1d(self.g(x))
        worst = float(np.max(np.abs(gx)))
        if worst > tol:
            raise NotOnBoundary(worst, tol)
        grad = self.grad_g(x)
        size = np.linalg.norm(grad, axis=-1, keepdims=True)
        if float(np.min(size)) < GRADIENT_FLOOR:
            raise DegenerateGradient(f"|grad g| = {float(np.min(size)):.3e} on the boundary")
        return grad / size


@dataclass(frozen=True, eq=False)
class HalfSpace(ConvexDomain):
    a: np.ndarray = None
    b: float = 0.0

    def __post_init__(self):
        a = _unit(self.a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "dim", a.shape[0])
        object.__setattr__(self, "kind", DomainKind.HALF_SPACE)

    def g(self, x):
        return self._check(x) @ self.a - self.b

    def grad_g(self, x):
        x = self._check(x)
        return np.broadcast_to(self.a, x.shape).copy()

    def hess_g(self, x):
        x = self._check(x)
        return np.zeros(x.shape + (self.dim,))

    def project(self, x):
        x = self._check(x)
        excess = np.maximum(x @ self.a - self.b, 0.0)
        return x - excess[..., None] * self.a

    def frame(self):
        return householder_frame(self.a)

    def extent(self, truncation):
        first = _clip(-np.inf, self.b, truncation)
        free = AxisExtent(-truncation, truncation, False, False, free=True)
        return [first] + [free] * (self.dim - 1)

    def describe(self):
        return {"kind": self.kind.value, "a": self.a.tolist(), "b": float(self.b)}


@dataclass(frozen=True, eq=False)
class Ball(ConvexDomain):
    c: np.ndarray = None
    r: float = 1.0

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float).reshape(-1)
        if not self.r > 0:
            raise ValueError(f"ball radius must be positive, got {self.r}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "dim", c.shape[0])
        object.__setattr__(self, "kind", DomainKind.BALL)

    def g(self, x):
        d = self._check(x) - self.c
        return np.sum(d * d, axis=-1) - self.r ** 2

    def grad_g(self, x):
        return 2.0 * (self._check(x) - self.c)

    def hess_g(self, x):
        x = self._check(x)
        return np.broadcast_to(2.0 * np.eye(self.dim), x.shape + (self.dim,)).copy()

    def project(self, x):
        x = self._check(x)
        d = x - self.c
        dist = np.linalg.norm(d, axis=-1, keepdims=True)
        scale = np.where(dist > self.r, self.r / np.where(dist > 0, dist, 1.0), 1.0)
        return self.c + d * scale

    def frame(self):
        return np.eye(self.dim)

    def extent(self, truncation):
        if self.dim != 1:
            raise UnsupportedDomain(
                f"tensor grids cover balls in R^1 only; use radial_solve for the ball in R^{self.dim}"
            )
        return [_clip(self.c[0] - self.r, self.c[0] + self.r, truncation)]

    def describe(self):
        return {"kind": self.kind.value, "c": self.c.tolist(), "r": float(self.r)}


@dataclass(frozen=True, eq=False)
class Slab(ConvexDomain):
    """|<a, x>| < b, written as g = <a, x>^2 - b^2 so g stays smooth."""
    a: np.ndarray = None
    b: float = 1.0

    def __post_init__(self):
        a = _unit(self.a)
        if not self.b > 0:
            raise ValueError(f"slab half-width must be positive, got {self.b}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "dim", a.shape[0])
        object.__setattr__(self, "kind", DomainKind.SLAB)

    def g(self, x):
        s = self._check(x) @ self.a
        return s * s - self.b ** 2

    def grad_g(self, x):
        s = self._check(x) @ self.a
        return 2.0 * s[..., None] * self.a

    def hess_g(self, x):
        x = self._check(x)
        return np.broadcast_to(2.0 * np.outer(self.a, self.a), x.shape + (self.dim,)).copy()

    def project(self, x):
        x = self._check(x)
        s = x @ self.a
        return x + (np.clip(s, -self.b, self.b) - s)[..., None] * self.a

    def frame(self):
        return householder_frame(self.a)

    def extent(self, truncation):
        first = _clip(-self.b, self.b, truncation)
        free = AxisExtent(-truncation, truncation, False, False, free=True)
        return [first] + [free] * (self.dim - 1)

    def describe(self):
        return {"kind": self.kind.value, "a": self.a.tolist(), "b": float(self.b)}


@dataclass(frozen=True, eq=False)
class Cylinder(ConvexDomain):
    """base x R^d; g depends on the first q = base.dim coordinates only."""
    base: ConvexDomain = None
    extra_dims: int = 1

    def __post_init__(self):
        if self.extra_dims < 1:
            raise ValueError(f"a cylinder needs at least one free direction, got {self.extra_dims}")
        object.__setattr__(self, "dim", self.base.dim + self.extra_dims)
        object.__setattr__(self, "kind", DomainKind.CYLINDER)

    @property
    def q(self) -> int:
        return self.base.dim

    def g(self, x):
        return self.base.g(self._check(x)[..., : self.q])

    def grad_g(self, x):
        x = self._check(x)
        out = np.zeros(x.shape)
        out[..., : self.q] = self.base.grad_g(x[..., : self.q])
        return out

    def hess_g(self, x):
        x = self._check(x)
        out = np.zeros(x.shape + (self.dim,))
        out[..., : self.q, : self.q] = self.base.hess_g(x[..., : self.q])
        return out

    def project(self, x):
        x = self._check(x)
        out = np.array(x, dtype=float, copy=True)
        out[..., : self.q] = self.base.project(x[..., : self.q])
        return out

    def frame(self):
        out = np.eye(self.dim)
        out[: self.q, : self.q] = self.base.frame()
        return out

    def extent(self, truncation):
        free = AxisExtent(-truncation, truncation, False, False, free=True)
        return self.base.extent(truncation) + [free] * self.extra_dims

    def describe(self):
        return {"kind": self.kind.value, "base": self.base.describe(), "extra_dims": self.extra_dims}


@dataclass(frozen=True, eq=False)
class WholeSpace(ConvexDomain):
    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be at least 1, got {self.dim}")
        object.__setattr__(self, "kind", DomainKind.WHOLE_SPACE)

    def g(self, x):
        x = self._check(x)
        return -np.ones(x.shape[:-1]) if x.ndim > 1 else np.float64(-1.0)

    def grad_g(self, x):
        return np.zeros(self._check(x).shape)

    def hess_g(self, x):
        x = self._check(x)
        return np.zeros(x.shape + (self.dim,))

    def project(self, x):
        return np.array(self._check(x), dtype=float, copy=True)

    def frame(self):
        return np.eye(self.dim)

    def extent(self, truncation):
        return [AxisExtent(-truncation, truncation, False, False, free=True)] * self.dim

    def describe(self):
        return {"kind": self.kind.value, "dim": self.dim}


def g_eval(domain: ConvexDomain, x) -> np.ndarray:
    return domain.g(x)


def grad_g(domain: ConvexDomain, x) -> np.ndarray:
    return domain.grad_g(x)


def hess_g(domain: ConvexDomain, x) -> np.ndarray:
    return domain.hess_g(x)


def normal(domain: ConvexDomain, x_boundary, tol: float = BOUNDARY_TOL) -> np.ndarray:
    return domain.normal(x_boundary, tol)


def project_to_closure(domain: ConvexDomain, x) -> np.ndarray:
    return domain.project(x)


def axis_vector(n: int, k: int = 0) -> np.ndarray:
    e = np.zeros(n)
    e[k] = 1.0
    return e


def domain_from_spec(spec: dict, dim: Optional[int] = None) -> ConvexDomain:
    """Build a domain from its config table, e.g. {"kind": "slab", "a": [1, 0], "b": 1}.

    Unknown kinds raise UnsupportedDomain; malformed parameters raise ConfigError.
    """
    try:
        kind = DomainKind(spec["kind"])
    except (KeyError, ValueError):
        raise UnsupportedDomain(f"unknown domain kind {spec.get('kind')!r}")
    try:
        return _build_domain(kind, spec, dim)
    except (UnsupportedDomain, ConfigError):
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid {kind.value} parameters {spec!r}: {e}") from e


def _build_domain(kind: DomainKind, spec: dict, dim: Optional[int]) -> ConvexDomain:
    if kind == DomainKind.HALF_SPACE:
        return HalfSpace(a=spec.get("a") or axis_vector(dim or 1), b=float(spec.get("b", 0.0)))
    if kind == DomainKind.SLAB:
        return Slab(a=spec.get("a") or axis_vector(dim or 1), b=float(spec.get("b", 1.0)))
    if kind == DomainKind.BALL:
        return Ball(c=spec.get("c") or np.zeros(dim or 1), r=float(spec.get("r", 1.0)))
    if kind == DomainKind.WHOLE_SPACE:
        return WholeSpace(dim=int(spec.get("dim", dim or 1)))
    base = spec.get("base")
    if not base:
        raise UnsupportedDomain("a cylinder needs a [domain.base] table")
    return Cylinder(base=domain_from_spec(base), extra_dims=int(spec.get("extra_dims", 1)))
