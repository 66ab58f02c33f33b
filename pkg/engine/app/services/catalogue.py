"""Named analytic functions for configs and the check battery.

A spec is a small table such as {"name": "poly", "coefficients": [0, -3, 0, 1]}.
Every entry carries hand-coded derivatives; there is no expression parser.
"""
import functools
from typing import Callable

import numpy as np
from numpy.polynomial import Polynomial

from ..errors import ConfigError
from . import functions
from .cylinder import cylindrical
from .domain import axis_vector
from .functions import AnalyticFunction
from .solver import apply_operator


def _config_errors(build):
    """Missing or malformed entries surface as ConfigError naming the spec."""
    @functools.wraps(build)
    def wrapper(spec, *args, **kwargs):
        try:
            return build(spec, *args, **kwargs)
        except ConfigError:
            raise
        except (KeyError, IndexError, TypeError, ValueError) as e:
            detail = f"missing key {e}" if isinstance(e, KeyError) else str(e)
            raise ConfigError(f"invalid function spec {spec!r}: {detail}") from e
    return wrapper


def _direction(spec: dict, dim: int) -> np.ndarray:
    a = spec.get("direction")
    if a is None:
        return axis_vector(dim, int(spec.get("axis", 0)))
    a = np.asarray(a, dtype=float)
    if a.shape != (dim,):
        raise ConfigError(f"direction {a.tolist()} does not live in R^{dim}")
    return a / np.linalg.norm(a)


@_config_errors
def function_from_spec(spec: dict, dim: int) -> AnalyticFunction:
    name = spec.get("name")
    if name == "constant":
        return functions.constant(float(spec.get("value", 1.0)))
    if name == "poly":
        return functions.ridge_polynomial(spec["coefficients"], _direction(spec, dim))
    if name == "coordinate":
        return functions.ridge_polynomial([0.0, 1.0], _direction(spec, dim), name=f"x{int(spec.get('axis', 0)) + 1}")
    if name == "radial":
        return functions.radial_polynomial(spec["coefficients"], spec.get("center") or np.zeros(dim))
    if name == "bump":
        return functions.gaussian_bump(
            spec.get("center") or np.zeros(dim), float(spec.get("width", 1.0)), float(spec.get("amplitude", 1.0))
        )
    if name == "exp":
        return functions.ridge_exponential(
            float(spec.get("rate", 1.0)), _direction(spec, dim), float(spec.get("amplitude", 1.0))
        )
    if name == "disk_saddle":
        if dim != 2:
            raise ConfigError("disk_saddle lives in R^2")
        return functions.disk_saddle()
    if name == "shifted":
        # c + s * inner, keeps log-Sobolev inputs positive
        inner = function_from_spec(spec["inner"], dim)
        scale, offset = float(spec.get("scale", 1.0)), float(spec.get("offset", 0.0))
        return _affine(inner, scale, offset)
    if name == "product":
        factors = [function_from_spec(s, dim) for s in spec["factors"]]
        out = factors[0]
        for other in factors[1:]:
            out = functions.product(out, other)
        return out
    if name == "cylindrical":
        directions = np.atleast_2d(np.asarray(spec["directions"], dtype=float))
        if directions.shape[1] != dim:
            raise ConfigError(f"cylindrical directions live in R^{directions.shape[1]}, not R^{dim}")
        profile = function_from_spec(spec["profile"], directions.shape[0])
        return cylindrical(profile, directions)
    raise ConfigError(f"unknown function {name!r}")


def _affine(inner: AnalyticFunction, scale: float, offset: float) -> AnalyticFunction:
    return AnalyticFunction(
        name=f"{offset:g}+{scale:g}*{inner.name}",
        value=lambda x: offset + scale * inner.value(x),
        grad=lambda x: scale * inner.grad(x),
        hess=lambda x: scale * inner.hess(x),
    )


@_config_errors
def rhs_from_spec(spec: dict, dim: int, lam: float) -> Callable[[np.ndarray], np.ndarray]:
    """Right-hand side f; {"name": "manufactured", "solution": {...}} yields lambda u - L u."""
    if spec.get("name") == "manufactured":
        return apply_operator(function_from_spec(spec["solution"], dim), lam)
    return function_from_spec(spec, dim).value


@_config_errors
def radial_profile_from_spec(spec: dict) -> Callable[[np.ndarray], np.ndarray]:
    """r -> f(r) for radial solves; "radial" coefficients are in s = r^2."""
    name = spec.get("name")
    if name == "constant":
        value = float(spec.get("value", 1.0))
        return lambda r: np.full(np.shape(r), value)
    if name == "radial":
        if np.any(np.asarray(spec.get("center") or 0.0, dtype=float) != 0.0):
            raise ConfigError("radial profiles are centred at the origin")
        p = Polynomial(spec["coefficients"])
        return lambda r: p(np.asarray(r, dtype=float) ** 2)
    raise ConfigError(f"{name!r} is not a radial profile")
