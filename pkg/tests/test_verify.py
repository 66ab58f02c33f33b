import math

import pytest

from app.errors import PreconditionError
from app.services.catalogue import function_from_spec
from app.services.domain import Ball, HalfSpace, Slab, WholeSpace
from app.services.functions import constant, disk_saddle, radial_polynomial, ridge_polynomial
from app.services.measure import boundary_quadrature, interior_quadrature
from app.services.solver import SolveReport
from app.services.verify import (
    DEFAULT_MANIFEST,
    CheckResult,
    check_convexity_lemma,
    check_domain_membership,
    check_drift_continuity,
    check_estimates,
    check_green,
    check_ibp,
    check_logsob,
    check_weak_form,
    failures,
    inequality_check,
    residual_check,
    run_battery,
)

N0 = 1.0 / math.sqrt(2.0 * math.pi)
HALF_LINE = HalfSpace(a=[1.0], b=0.0)
UNIT_SLAB = Slab(a=[1.0], b=1.0)
UNIT_DISK = Ball(c=[0.0, 0.0], r=1.0)
CUBIC = ridge_polynomial([0.0, -3.0, 0.0, 1.0], [1.0])
SQUARE = ridge_polynomial([0.0, 0.0, 1.0], [1.0])
X = ridge_polynomial([0.0, 1.0], [1.0])


def rules(domain, resolution=64):
    return interior_quadrature(domain, resolution), boundary_quadrature(domain, resolution)


def test_result_builders():
    assert residual_check("r", 1.0, 1.0 + 1e-7, 1e-6).passed
    assert not residual_check("r", 1.0, 1.1, 1e-6).passed
    slack = inequality_check("i", 2.0, 1.0, 1e-8)
    assert slack.passed and slack.value == 1.0
    assert not inequality_check("i", 1.0, 1.1, 1e-8).passed
    assert inequality_check("i", 1.0, 1.0 + 1e-9, 1e-8).passed


def test_result_serializes_pass_flag():
    result = residual_check("r", 1.0, 1.0, 1e-6, boundary=0.5)
    dumped = result.model_dump(by_alias=True)
    assert dumped["pass"] is True and "passed" not in dumped
    assert CheckResult.model_validate(dumped).passed
    assert failures([result, residual_check("bad", 0.0, 1.0, 1e-6)]) == ["bad"]


def test_ibp_on_the_half_line():
    result = check_ibp(HALF_LINE, constant(1.0), constant(1.0), 0, *rules(HALF_LINE))
    assert result.passed
    assert result.details["moment"] == pytest.approx(-N0, abs=1e-10)
    assert result.details["boundary"] == pytest.approx(N0, abs=1e-12)


def test_ibp_on_the_whole_line_is_the_variance():
    line = WholeSpace(dim=1)
    result = check_ibp(line, X, constant(1.0), 0, *rules(line))
    assert result.lhs == pytest.approx(1.0, abs=1e-12)
    assert result.rhs == pytest.approx(1.0, abs=1e-12)
    assert result.details["boundary"] == 0.0


def test_ibp_on_the_disk():
    x1 = function_from_spec({"name": "coordinate", "axis": 0}, 2)
    x2 = function_from_spec({"name": "coordinate", "axis": 1}, 2)
    result = check_ibp(UNIT_DISK, x1, x2, 0, *rules(UNIT_DISK, 256), tolerance=1e-7)
    assert result.passed


def test_ibp_rejects_bad_axis():
    with pytest.raises(ValueError):
        check_ibp(HALF_LINE, X, X, 1, *rules(HALF_LINE))


@pytest.mark.parametrize("domain, phi, psi", [
    (HALF_LINE, constant(2.0), SQUARE),
    (UNIT_SLAB, CUBIC, X),
    (HALF_LINE, SQUARE, constant(1.0)),
    (UNIT_DISK, disk_saddle(), radial_polynomial([1.0, 0.5], [0.2, 0.0])),
])
def test_green(domain, phi, psi):
    result = check_green(domain, phi, psi, *rules(domain), tolerance=1e-7)
    assert result.passed


def test_green_constant_terms_vanish():
    result = check_green(UNIT_SLAB, constant(3.0), X, *rules(UNIT_SLAB))
    assert result.details == {"generator": 0.0, "dirichlet": 0.0, "boundary": 0.0}


def test_green_asymmetry_is_the_boundary_difference():
    interior, boundary = rules(UNIT_SLAB)
    forward = check_green(UNIT_SLAB, SQUARE, X, interior, boundary)
    backward = check_green(UNIT_SLAB, X, SQUARE, interior, boundary)
    assert forward.details["dirichlet"] == pytest.approx(backward.details["dirichlet"], abs=1e-14)
    generator_gap = forward.details["generator"] - backward.details["generator"]
    boundary_gap = forward.details["boundary"] - backward.details["boundary"]
    assert abs(generator_gap - boundary_gap) <= 1e-10


def test_logsob_constant_is_tight_and_literal_form_fails():
    interior, _ = rules(HALF_LINE)
    result = check_logsob(HALF_LINE, constant(1.0), interior)
    assert result.passed
    assert abs(result.value) < 1e-12
    # unnormalized with constant one: 0 + 0.5 log 0.5 against 0
    assert result.details["literal_slack"] == pytest.approx(0.5 * math.log(0.5), rel=1e-9)
    assert result.details["literal_pass"] == 0.0


def test_logsob_extremal_family_is_tight():
    line = WholeSpace(dim=1)
    f = function_from_spec({"name": "exp", "rate": 0.5}, 1)
    result = check_logsob(line, f, rules(line)[0])
    assert result.passed
    assert abs(result.value) < 1e-8


def test_logsob_on_the_interval():
    interval = Ball(c=[0.0], r=1.0)
    f = function_from_spec({"name": "shifted", "inner": {"name": "coordinate"}, "offset": 1.0, "scale": 0.5}, 1)
    result = check_logsob(interval, f, rules(interval)[0])
    assert result.passed and result.value > 0.0


def test_logsob_needs_positive_input():
    with pytest.raises(PreconditionError):
        check_logsob(UNIT_SLAB, X, rules(UNIT_SLAB)[0])


@pytest.mark.parametrize("domain, u", [
    (UNIT_DISK, disk_saddle()),
    (Slab(a=[1.0, 0.0], b=1.0), ridge_polynomial([0.0, -3.0, 0.0, 1.0], [1.0, 0.0])),
    (UNIT_DISK, radial_polynomial([0.0, -0.5, 0.25], [0.0, 0.0])),
])
def test_convexity_lemma(domain, u):
    result = check_convexity_lemma(domain, u, boundary_quadrature(domain, 64))
    assert result.passed
    assert result.rhs <= 1e-8


def test_convexity_lemma_preconditions():
    with pytest.raises(PreconditionError):
        check_convexity_lemma(UNIT_SLAB, SQUARE, boundary_quadrature(UNIT_SLAB, 64))
    line = WholeSpace(dim=1)
    with pytest.raises(PreconditionError):
        check_convexity_lemma(line, SQUARE, boundary_quadrature(line, 16))


def test_drift_continuity():
    interior, _ = rules(HALF_LINE)
    assert check_drift_continuity(HALF_LINE, constant(1.0), interior).value == 0.0
    result = check_drift_continuity(HALF_LINE, SQUARE, interior)
    assert result.kind == "ratio" and result.passed
    assert result.lhs ** 2 == pytest.approx(6.0, rel=1e-9)
    assert result.value == pytest.approx(math.sqrt(12.0 / 11.0), rel=1e-9)


def test_weak_form_and_membership():
    interior, boundary = rules(UNIT_SLAB)
    phi = function_from_spec(
        {"name": "product", "factors": [{"name": "coordinate"}, {"name": "bump", "center": [0.2], "width": 0.5}]}, 1)
    assert check_weak_form(UNIT_SLAB, CUBIC, 1.0, phi, interior, boundary).passed
    assert check_domain_membership(UNIT_SLAB, CUBIC, interior, boundary).passed
    outside = check_domain_membership(UNIT_SLAB, SQUARE, interior, boundary)
    assert not outside.passed
    assert outside.value == pytest.approx(2.0)


def test_check_estimates():
    report = SolveReport(lam=1.0, dim=1, nodes=3, spacing=0.5, r1=1.02, r2=1.2, r3=0.4, w22_ratio=0.9)
    results = check_estimates(report, label="demo")
    assert [r.name for r in results] == ["estimate:r1:demo", "estimate:r2:demo", "estimate:r3:demo",
                                         "estimate:w22_ratio:demo"]
    assert [r.passed for r in results] == [True, False, True, True]


SMALL_MANIFEST = {
    "version": 1,
    "resolution": 32,
    "lambdas": [1.0, 10.0],
    "grid": {"spacing": 0.03125},
    "identities": DEFAULT_MANIFEST["identities"][:3],
    "estimates": DEFAULT_MANIFEST["estimates"][:2],
}


def test_battery_is_ordered_and_deterministic(recorded_events):
    serial, h1 = run_battery(SMALL_MANIFEST)
    threaded, h2 = run_battery(SMALL_MANIFEST, workers=4)
    assert h1 == h2
    assert [r.name for r in serial] == [r.name for r in threaded]
    assert [r.value for r in serial] == [r.value for r in threaded]
    assert len(serial) == 3 + 2 * 2 * 4
    assert not failures(serial)
    assert sum(e["type"] == "check_finished" for e in recorded_events) == 2 * len(serial)


def test_manifest_hash_tracks_content():
    _, h1 = run_battery({**SMALL_MANIFEST, "estimates": []})
    _, h2 = run_battery({**SMALL_MANIFEST, "estimates": [], "version": 2})
    assert h1 != h2


def test_default_battery_passes():
    results, _ = run_battery(workers=4)
    assert failures(results) == []
    drift = [r.value for r in results if r.kind == "ratio"]
    assert max(drift) < 10.0
