"""Quadrature checks of the Gaussian integration-by-parts identities and the
inequalities behind the W^{2,2} estimates, independent of the solver, plus a
versioned battery that runs them together with the solver's a-priori ratios.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..errors import PreconditionError
from ..events import broadcast_event
from .artifacts import content_hash
from .catalogue import function_from_spec, radial_profile_from_spec, rhs_from_spec
from .domain import Ball, ConvexDomain, domain_from_spec
from .functions import AnalyticFunction
from .measure import Quadrature, QuadratureTarget, boundary_quadrature, interior_quadrature
from .solver import GridSpec, SolveReport, radial_solve, solve

RESIDUAL_TOL = 1e-6
INEQUALITY_TOL = 1e-8
NEUMANN_TOL = 1e-10
ESTIMATE_SLACK = 0.05
DRIFT_RATIO_CEILING = 10.0


class CheckResult(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    name: str
    kind: str
    lhs: float
    rhs: float
    value: float
    tolerance: float
    passed: bool = Field(alias="pass")
    details: dict[str, float] = {}


def residual_check(name: str, lhs: float, rhs: float, tolerance: float, **details) -> CheckResult:
    value = lhs - rhs
    return CheckResult(name=name, kind="residual", lhs=lhs, rhs=rhs, value=value,
                       tolerance=tolerance, passed=abs(value) <= tolerance, details=details)


def inequality_check(name: str, lhs: float, rhs: float, tolerance: float, **details) -> CheckResult:
    """Holds when lhs >= rhs; value is the slack lhs - rhs."""
    value = lhs - rhs
    return CheckResult(name=name, kind="inequality", lhs=lhs, rhs=rhs, value=value,
                       tolerance=tolerance, passed=value >= -tolerance, details=details)


def _sum(q: Quadrature, values) -> float:
    if q.size == 0:
        return 0.0
    return math.fsum(q.weights * np.broadcast_to(values, q.weights.shape))


def _normals(domain: ConvexDomain, boundary: Quadrature) -> np.ndarray:
    if boundary.target != QuadratureTarget.BOUNDARY:
        raise ValueError("expected a boundary quadrature")
    if boundary.size == 0:
        return np.zeros((0, domain.dim))
    return domain.normal(boundary.nodes)


def _interior_nodes(interior: Quadrature) -> np.ndarray:
    if interior.target != QuadratureTarget.INTERIOR:
        raise ValueError("expected an interior quadrature")
    return interior.nodes


def check_ibp(domain: ConvexDomain, phi: AnalyticFunction, psi: AnalyticFunction, k: int,
              interior: Quadrature, boundary: Quadrature, tolerance: float = RESIDUAL_TOL,
              name: str = "ibp") -> CheckResult:
    """int D_k phi psi + int phi D_k psi = int x_k phi psi + int nu_k phi psi dsigma."""
    if not 0 <= k < domain.dim:
        raise ValueError(f"axis {k} outside R^{domain.dim}")
    x = _interior_nodes(interior)
    nu = _normals(domain, boundary)
    fx, gx = phi.value(x), psi.value(x)
    lhs = _sum(interior, phi.grad(x)[:, k] * gx + fx * psi.grad(x)[:, k])
    moment = _sum(interior, x[:, k] * fx * gx)
    flux = 0.0
    if boundary.size:
        xb = boundary.nodes
        flux = _sum(boundary, nu[:, k] * phi.value(xb) * psi.value(xb))
    return residual_check(name, lhs, moment + flux, tolerance, moment=moment, boundary=flux)


def check_green(domain: ConvexDomain, phi: AnalyticFunction, psi: AnalyticFunction,
                interior: Quadrature, boundary: Quadrature, tolerance: float = RESIDUAL_TOL,
                name: str = "green") -> CheckResult:
    """int L phi psi + int <grad phi, grad psi> = int <grad phi, nu> psi dsigma."""
    x = _interior_nodes(interior)
    nu = _normals(domain, boundary)
    generator = _sum(interior, phi.ou(x) * psi.value(x))
    dirichlet = _sum(interior, np.sum(phi.grad(x) * psi.grad(x), axis=-1))
    flux = 0.0
    if boundary.size:
        xb = boundary.nodes
        flux = _sum(boundary, np.sum(phi.grad(xb) * nu, axis=-1) * psi.value(xb))
    return residual_check(name, generator + dirichlet, flux, tolerance,
                          generator=generator, dirichlet=dirichlet, boundary=flux)


def check_logsob(domain: ConvexDomain, f: AnalyticFunction, interior: Quadrature, constant: float = 2.0,
                 normalize: bool = True, tolerance: float = INEQUALITY_TOL,
                 name: str = "logsob") -> CheckResult:
    """constant int |grad f|^2 + |f|^2 log |f|^2 >= int f^2 log f^2.

    With normalize the measure is mu restricted to O and rescaled to mass one.
    The unnormalized, constant-one evaluation is always recorded in details.
    """
    x = _interior_nodes(interior)
    fx = f.value(x)
    if np.any(fx <= 0.0):
        raise PreconditionError(f"log-Sobolev input {f.name} is not positive at every node")
    grad2 = np.sum(f.grad(x) ** 2, axis=-1)
    f2 = fx * fx
    f2logf2 = f2 * np.log(f2)

    def sides(scale: float, c: float):
        energy = _sum(interior, grad2) / scale
        norm2 = _sum(interior, f2) / scale
        entropy = _sum(interior, f2logf2) / scale
        return c * energy + norm2 * math.log(norm2), entropy

    mass = interior.total
    lhs, rhs = sides(mass if normalize else 1.0, constant)
    literal_lhs, literal_rhs = sides(1.0, 1.0)
    return inequality_check(name, lhs, rhs, tolerance, mass=mass,
                            literal_slack=literal_lhs - literal_rhs,
                            literal_pass=float(literal_lhs - literal_rhs >= -tolerance))


def check_convexity_lemma(domain: ConvexDomain, u: AnalyticFunction, boundary: Quadrature,
                          tolerance: float = INEQUALITY_TOL, neumann_tol: float = NEUMANN_TOL,
                          name: str = "convexity") -> CheckResult:
    """<D^2 u grad u, nu> <= 0 on the boundary for u with zero normal derivative."""
    if boundary.size == 0:
        raise PreconditionError(f"{domain.kind.value} has no boundary nodes")
    xb = boundary.nodes
    nu = _normals(domain, boundary)
    grad = u.grad(xb)
    normal_derivative = float(np.max(np.abs(np.sum(grad * nu, axis=-1))))
    if normal_derivative > neumann_tol:
        raise PreconditionError(f"{u.name} has normal derivative {normal_derivative:.3e} on the boundary")
    expression = np.sum(np.einsum("...ij,...j->...i", u.hess(xb), grad) * nu, axis=-1)
    worst = float(np.max(expression))
    return inequality_check(name, 0.0, worst, tolerance, normal_derivative=normal_derivative,
                            nodes=float(boundary.size))


def _w22_squared(f: AnalyticFunction, interior: Quadrature) -> float:
    x = interior.nodes
    return _sum(interior, f.value(x) ** 2 + np.sum(f.grad(x) ** 2, axis=-1)
                + np.sum(f.hess(x) ** 2, axis=(-2, -1)))


def check_drift_continuity(domain: ConvexDomain, f: AnalyticFunction, interior: Quadrature,
                           name: str = "drift") -> CheckResult:
    """Ratio |<x, grad f>|_{L^2} / |f|_{W^{2,2}}; passes when finite."""
    x = _interior_nodes(interior)
    drift = math.sqrt(_sum(interior, f.drift(x) ** 2))
    w22 = math.sqrt(_w22_squared(f, interior))
    ratio = drift / w22 if w22 > 0.0 else 0.0
    return CheckResult(name=name, kind="ratio", lhs=drift, rhs=w22, value=ratio,
                       tolerance=DRIFT_RATIO_CEILING, passed=bool(math.isfinite(ratio)))


def check_weak_form(domain: ConvexDomain, u: AnalyticFunction, lam: float, phi: AnalyticFunction,
                    interior: Quadrature, boundary: Quadrature, tolerance: float = RESIDUAL_TOL,
                    name: str = "weak_form") -> CheckResult:
    """int (lam u phi + <grad u, grad phi>) = int (lam u - L u) phi + int <grad u, nu> phi dsigma."""
    x = _interior_nodes(interior)
    nu = _normals(domain, boundary)
    ux, px = u.value(x), phi.value(x)
    bilinear = _sum(interior, lam * ux * px + np.sum(u.grad(x) * phi.grad(x), axis=-1))
    source = _sum(interior, (lam * ux - u.ou(x)) * px)
    flux = 0.0
    if boundary.size:
        xb = boundary.nodes
        flux = _sum(boundary, np.sum(u.grad(xb) * nu, axis=-1) * phi.value(xb))
    return residual_check(name, bilinear, source + flux, tolerance, source=source, boundary=flux)


def check_domain_membership(domain: ConvexDomain, u: AnalyticFunction, interior: Quadrature,
                            boundary: Quadrature, tolerance: float = NEUMANN_TOL,
                            name: str = "membership") -> CheckResult:
    """u in W^{2,2}, <x, grad u> in L^2 and zero normal derivative at the boundary nodes."""
    x = _interior_nodes(interior)
    w22 = math.sqrt(_w22_squared(u, interior))
    drift = math.sqrt(_sum(interior, u.drift(x) ** 2))
    normal_derivative = 0.0
    if boundary.size:
        nu = _normals(domain, boundary)
        normal_derivative = float(np.max(np.abs(np.sum(u.grad(boundary.nodes) * nu, axis=-1))))
    passed = math.isfinite(w22) and math.isfinite(drift) and normal_derivative <= tolerance
    return CheckResult(name=name, kind="residual", lhs=normal_derivative, rhs=0.0, value=normal_derivative,
                       tolerance=tolerance, passed=passed, details={"w22": w22, "drift": drift})


def check_estimates(report: SolveReport, label: str = "", slack: float = ESTIMATE_SLACK) -> list[CheckResult]:
    """r1, r2, r3 and the W^{2,2} ratio are each at most 1 (plus slack)."""
    suffix = f":{label}" if label else ""
    out = []
    for key in ("r1", "r2", "r3", "w22_ratio"):
        ratio = getattr(report, key)
        out.append(inequality_check(f"estimate:{key}{suffix}", 1.0, ratio, slack,
                                    lam=report.lam, cg_residual=report.cg_residual))
    return out


# -- battery ------------------------------------------------------------------

HALF_LINE = {"kind": "half_space", "a": [1.0], "b": 0.0}
UNIT_SLAB = {"kind": "slab", "a": [1.0], "b": 1.0}
UNIT_DISK = {"kind": "ball", "c": [0.0, 0.0], "r": 1.0}
DIAGONAL = [0.7071067811865476, 0.7071067811865476]
CUBIC = {"name": "poly", "coefficients": [0.0, -3.0, 0.0, 1.0]}
ONE = {"name": "constant", "value": 1.0}
GRID_2D = {"spacing": 0.0625, "free_spacing": 0.25}

DEFAULT_MANIFEST = {
    "version": 1,
    "resolution": 64,
    "lambdas": [0.1, 1.0, 10.0],
    "grid": {"spacing": 0.015625},
    "identities": [
        {"check": "ibp", "domain": HALF_LINE, "phi": ONE, "psi": ONE, "k": 0, "tolerance": 1e-10},
        {"check": "ibp", "domain": {"kind": "whole_space", "dim": 1},
         "phi": {"name": "coordinate"}, "psi": ONE, "k": 0},
        {"check": "ibp", "domain": UNIT_DISK, "phi": {"name": "coordinate", "axis": 0},
         "psi": {"name": "coordinate", "axis": 1}, "k": 0},
        {"check": "ibp", "domain": {"kind": "slab", "a": DIAGONAL, "b": 1.0},
         "phi": {"name": "bump", "center": [0.3, -0.2], "width": 0.7},
         "psi": {"name": "poly", "coefficients": [1.0, 0.0, 1.0], "axis": 1}, "k": 1},
        {"check": "green", "domain": HALF_LINE, "phi": ONE, "psi": {"name": "poly", "coefficients": [1.0, 2.0, 3.0]}},
        {"check": "green", "domain": UNIT_SLAB, "phi": CUBIC, "psi": {"name": "coordinate"}},
        {"check": "green", "domain": HALF_LINE, "phi": {"name": "poly", "coefficients": [0.0, 0.0, 1.0]}, "psi": ONE},
        {"check": "green", "domain": UNIT_DISK, "phi": {"name": "disk_saddle"},
         "psi": {"name": "bump", "center": [0.2, 0.1], "width": 0.5}},
        {"check": "logsob", "domain": HALF_LINE, "f": ONE},
        {"check": "logsob", "domain": {"kind": "whole_space", "dim": 1}, "f": {"name": "exp", "rate": 0.5}},
        {"check": "logsob", "domain": {"kind": "ball", "c": [0.0], "r": 1.0},
         "f": {"name": "shifted", "inner": {"name": "coordinate"}, "offset": 1.0, "scale": 0.5}},
        {"check": "logsob", "domain": {"kind": "slab", "a": [1.0, 0.0], "b": 1.0},
         "f": {"name": "shifted", "inner": {"name": "bump", "center": [0.5, 0.0], "width": 0.8},
               "offset": 1.0, "scale": 0.5}},
        {"check": "convexity", "domain": UNIT_DISK, "u": {"name": "disk_saddle"}},
        {"check": "convexity", "domain": {"kind": "slab", "a": [1.0, 0.0], "b": 1.0}, "u": CUBIC},
        {"check": "convexity", "domain": UNIT_DISK, "u": {"name": "radial", "coefficients": [0.0, -0.5, 0.25]}},
        {"check": "drift", "domain": HALF_LINE, "f": ONE},
        {"check": "drift", "domain": HALF_LINE, "f": {"name": "poly", "coefficients": [0.0, 0.0, 1.0]}},
        {"check": "drift", "domain": {"kind": "slab", "a": [1.0, 0.0], "b": 1.0}, "f": CUBIC},
        {"check": "drift", "domain": UNIT_DISK, "f": {"name": "bump", "center": [0.0, 0.5], "width": 0.6}},
        {"check": "weak_form", "domain": UNIT_SLAB, "u": CUBIC, "lam": 1.0,
         "phi": {"name": "product", "factors": [{"name": "coordinate"}, {"name": "bump", "center": [0.2], "width": 0.5}]}},
        {"check": "weak_form", "domain": UNIT_DISK, "u": {"name": "disk_saddle"}, "lam": 1.0,
         "phi": {"name": "coordinate", "axis": 0}},
        {"check": "membership", "domain": UNIT_DISK, "u": {"name": "disk_saddle"}},
        {"check": "membership", "domain": UNIT_SLAB, "u": CUBIC},
    ],
    "estimates": [
        {"label": "half_line:one", "domain": HALF_LINE, "rhs": ONE},
        {"label": "slab:cubic", "domain": UNIT_SLAB, "rhs": {"name": "manufactured", "solution": CUBIC}},
        {"label": "half_line:square", "domain": HALF_LINE, "rhs": {"name": "poly", "coefficients": [0.0, 0.0, 1.0]}},
        {"label": "interval:bump", "domain": {"kind": "ball", "c": [0.2], "r": 1.5},
         "rhs": {"name": "bump", "center": [0.5], "width": 0.5}},
        {"label": "slab:quartic", "domain": UNIT_SLAB, "rhs": {"name": "poly", "coefficients": [1.0, 0.0, -2.0, 0.0, 1.0]}},
        {"label": "disk:radial", "radial": {"n_dim": 2, "r": 1.0, "n_r": 256},
         "rhs": {"name": "radial", "coefficients": [2.0, -5.5, 1.25]}},
        {"label": "slab_cylinder:odd", "domain": {"kind": "cylinder", "base": UNIT_SLAB, "extra_dims": 1},
         "rhs": {"name": "poly", "coefficients": [0.0, 1.0, 0.0, 1.0]}, "grid": GRID_2D},
        {"label": "rotated_half_plane:bump", "domain": {"kind": "half_space", "a": DIAGONAL, "b": 0.5},
         "rhs": {"name": "cylindrical", "directions": [DIAGONAL],
                 "profile": {"name": "bump", "center": [0.0], "width": 0.7}}, "grid": GRID_2D},
    ],
}


def _quadratures(domain: ConvexDomain, resolution: int) -> tuple[Quadrature, Quadrature]:
    return interior_quadrature(domain, resolution), boundary_quadrature(domain, resolution)


def _identity_case(case: dict, resolution: int) -> list[CheckResult]:
    domain = domain_from_spec(case["domain"])
    n = domain.dim
    interior, boundary = _quadratures(domain, int(case.get("resolution", resolution)))
    check = case["check"]
    fn = {key: function_from_spec(case[key], n) for key in ("phi", "psi", "f", "u") if key in case}
    label = f"{check}:{domain.kind.value}{n}d:" + ",".join(f.name for f in fn.values())
    tol = {"tolerance": case["tolerance"]} if "tolerance" in case else {}

    if check == "ibp":
        return [check_ibp(domain, fn["phi"], fn["psi"], int(case["k"]), interior, boundary, name=label, **tol)]
    if check == "green":
        return [check_green(domain, fn["phi"], fn["psi"], interior, boundary, name=label, **tol)]
    if check == "logsob":
        return [check_logsob(domain, fn["f"], interior, name=label, **tol)]
    if check == "convexity":
        return [check_convexity_lemma(domain, fn["u"], boundary, name=label, **tol)]
    if check == "drift":
        return [check_drift_continuity(domain, fn["f"], interior, name=label)]
    if check == "weak_form":
        return [check_weak_form(domain, fn["u"], float(case["lam"]), fn["phi"], interior, boundary,
                                name=label, **tol)]
    if check == "membership":
        return [check_domain_membership(domain, fn["u"], interior, boundary, name=label, **tol)]
    raise ValueError(f"unknown check {check!r}")


def _estimate_case(case: dict, lam: float, grid: dict) -> list[CheckResult]:
    if "radial" in case:
        radial = case["radial"]
        n = int(radial["n_dim"])
        ball = Ball(c=np.zeros(n), r=float(radial["r"]))
        _, report = radial_solve(ball, radial_profile_from_spec(case["rhs"]), lam, n, int(radial["n_r"]))
    else:
        domain = domain_from_spec(case["domain"])
        f = rhs_from_spec(case["rhs"], domain.dim, lam)
        _, report = solve(domain, f, lam, GridSpec(**case.get("grid", grid)))
    return check_estimates(report, label=f"{case['label']}:lam={lam:g}")


def battery_tasks(manifest: dict) -> list:
    resolution = int(manifest["resolution"])
    tasks = [lambda c=case: _identity_case(c, resolution) for case in manifest["identities"]]
    for case in manifest["estimates"]:
        for lam in manifest["lambdas"]:
            tasks.append(lambda c=case, l=float(lam): _estimate_case(c, l, manifest["grid"]))
    return tasks


def run_battery(manifest: Optional[dict] = None, workers: int = 1) -> tuple[list[CheckResult], str]:
    """Run every identity and estimate case; results keep manifest order."""
    manifest = manifest or DEFAULT_MANIFEST
    tasks = battery_tasks(manifest)

    if workers <= 1:
        groups = [task() for task in tasks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            groups = list(pool.map(lambda task: task(), tasks))

    results = [result for group in groups for result in group]
    for result in results:
        broadcast_event("check_finished", {"name": result.name, "value": result.value, "pass": result.passed})
    return results, content_hash(manifest)


def failures(results: list[CheckResult]) -> list[str]:
    return [r.name for r in results if not r.passed]
