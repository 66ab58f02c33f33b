"""Smooth test functions with hand-coded derivatives.

Derivatives are load-bearing for Hessian norms and the boundary lemma, so
nothing here is differentiated numerically. All callables take points of
shape (n,) or (m, n).
"""
from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class AnalyticFunction:
    name: str
    value: Field
    grad: Field
    hess: Field

    def __call__(self, x):
        return self.value(x)

    def laplacian(self, x) -> np.ndarray:
        return np.trace(self.hess(x), axis1=-2, axis2=-1)

    def drift(self, x) -> np.ndarray:
        """<x, grad u(x)>"""
        x = np.asarray(x, dtype=float)
        return np.sum(x * self.grad(x), axis=-1)

    def ou(self, x) -> np.ndarray:
        """L u = Laplacian u - <x, grad u>."""
        return self.laplacian(x) - self.drift(x)

    def scaled(self, c: float, name: str = None) -> "AnalyticFunction":
        return AnalyticFunction(
            name=name or f"{c:g}*{self.name}",
            value=lambda x: c * self.value(x),
            grad=lambda x: c * self.grad(x),
            hess=lambda x: c * self.hess(x),
        )


def _batch(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def constant(c: float = 1.0) -> AnalyticFunction:
    return AnalyticFunction(
        name=f"const({c:g})",
        value=lambda x: np.full(_batch(x).shape[:-1], float(c)),
        grad=lambda x: np.zeros(_batch(x).shape),
        hess=lambda x: np.zeros(_batch(x).shape + (_batch(x).shape[-1],)),
    )


def ridge_polynomial(coefficients, direction, name: str = None) -> AnalyticFunction:
    """p(<a, x>) for a polynomial p given by ascending coefficients."""
    p = Polynomial(coefficients)
    dp, d2p = p.deriv(1), p.deriv(2)
    a = np.asarray(direction, dtype=float)

    def value(x):
        return p(_batch(x) @ a)

    def grad(x):
        return dp(_batch(x) @ a)[..., None] * a

    def hess(x):
        return d2p(_batch(x) @ a)[..., None, None] * np.outer(a, a)

    return AnalyticFunction(name or f"poly{list(coefficients)}", value, grad, hess)


def radial_polynomial(coefficients, center, name: str = None) -> AnalyticFunction:
    """p(|x - c|^2): a function of the squared radius s.

    grad = 2 p'(s) (x - c),  hess = 2 p'(s) I + 4 p''(s) (x - c)(x - c)^T
    """
    p = Polynomial(coefficients)
    dp, d2p = p.deriv(1), p.deriv(2)
    c = np.asarray(center, dtype=float)

    def value(x):
        d = _batch(x) - c
        return p(np.sum(d * d, axis=-1))

    def grad(x):
        d = _batch(x) - c
        return 2.0 * dp(np.sum(d * d, axis=-1))[..., None] * d

    def hess(x):
        d = _batch(x) - c
        s = np.sum(d * d, axis=-1)
        eye = np.eye(c.shape[0])
        return (2.0 * dp(s)[..., None, None] * eye
                + 4.0 * d2p(s)[..., None, None] * d[..., :, None] * d[..., None, :])

    return AnalyticFunction(name or f"radial{list(coefficients)}", value, grad, hess)


def gaussian_bump(center, width: float, amplitude: float = 1.0) -> AnalyticFunction:
    """A exp(-|x - c|^2 / (2 w^2))."""
    c = np.asarray(center, dtype=float)
    w2 = float(width) ** 2

    def value(x):
        d = _batch(x) - c
        return amplitude * np.exp(-np.sum(d * d, axis=-1) / (2.0 * w2))

    def grad(x):
        d = _batch(x) - c
        return -value(x)[..., None] * d / w2

    def hess(x):
        d = _batch(x) - c
        v = value(x)[..., None, None]
        return v * (d[..., :, None] * d[..., None, :] / w2 ** 2 - np.eye(c.shape[0]) / w2)

    return AnalyticFunction(f"bump(c={c.tolist()},w={width:g})", value, grad, hess)


def ridge_exponential(rate: float, direction, amplitude: float = 1.0) -> AnalyticFunction:
    """A exp(k <a, x>), the extremal family of the Gaussian log-Sobolev inequality."""
    a = np.asarray(direction, dtype=float)

    def value(x):
        return amplitude * np.exp(rate * (_batch(x) @ a))

    def grad(x):
        return rate * value(x)[..., None] * a

    def hess(x):
        return rate ** 2 * value(x)[..., None, None] * np.outer(a, a)

    return AnalyticFunction(f"exp({rate:g}<a,x>)", value, grad, hess)


def disk_saddle() -> AnalyticFunction:
    """u = (x^2 - y^2)(2 - x^2 - y^2) on R^2; zero normal derivative on the unit circle."""

    def parts(x):
        x = _batch(x)
        q = x[..., 0] ** 2 - x[..., 1] ** 2
        s = x[..., 0] ** 2 + x[..., 1] ** 2
        dq = np.stack([2.0 * x[..., 0], -2.0 * x[..., 1]], axis=-1)
        ds = 2.0 * x
        return q, s, dq, ds

    def value(x):
        q, s, _, _ = parts(x)
        return q * (2.0 - s)

    def grad(x):
        q, s, dq, ds = parts(x)
        return (2.0 - s)[..., None] * dq - q[..., None] * ds

    def hess(x):
        q, s, dq, ds = parts(x)
        d2q = np.diag([2.0, -2.0])
        outer = dq[..., :, None] * ds[..., None, :]
        return ((2.0 - s)[..., None, None] * d2q
                - outer - np.swapaxes(outer, -1, -2)
                - 2.0 * q[..., None, None] * np.eye(2))

    return AnalyticFunction("disk_saddle", value, grad, hess)


def product(u: AnalyticFunction, v: AnalyticFunction) -> AnalyticFunction:
    """u v with the product rule; used for polynomial-times-bump test functions."""

    def value(x):
        return u.value(x) * v.value(x)

    def grad(x):
        return u.grad(x) * v.value(x)[..., None] + v.grad(x) * u.value(x)[..., None]

    def hess(x):
        gu, gv = u.grad(x), v.grad(x)
        cross = gu[..., :, None] * gv[..., None, :]
        return (u.hess(x) * v.value(x)[..., None, None]
                + v.hess(x) * u.value(x)[..., None, None]
                + cross + np.swapaxes(cross, -1, -2))

    return AnalyticFunction(f"{u.name}*{v.name}", value, grad, hess)
