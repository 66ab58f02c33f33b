import numpy as np
import pytest

from app.errors import (
    ConfigError,
    DegenerateGradient,
    DimensionMismatch,
    NotOnBoundary,
    OUNeumannError,
    PreconditionError,
    UnsupportedDomain,
)
from app.services.domain import (
    Ball,
    Cylinder,
    HalfSpace,
    Slab,
    WholeSpace,
    domain_from_spec,
    g_eval,
    grad_g,
    hess_g,
    householder_frame,
    normal,
    project_to_closure,
)

E1 = [1.0, 0.0]
DIAGONAL = [2 ** -0.5, 2 ** -0.5]


@pytest.mark.parametrize("domain, x, expected", [
    (Ball(c=[0.0, 0.0], r=1.0), [0.0, 0.0], -1.0),
    (HalfSpace(a=E1, b=0.0), [2.0, 0.0], 2.0),
    (Slab(a=E1, b=1.0), [1.0, 5.0], 0.0),
    (WholeSpace(dim=3), [4.0, 5.0, 6.0], -1.0),
    (Cylinder(base=Ball(c=[0.0], r=1.0), extra_dims=2), [0.5, 9.0, -9.0], -0.75),
])
def test_g_eval(domain, x, expected):
    assert float(g_eval(domain, np.array(x))) == pytest.approx(expected)


def test_g_eval_batches():
    ball = Ball(c=[0.0, 0.0], r=1.0)
    x = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    assert np.allclose(g_eval(ball, x), [-1.0, 0.0, 3.0])


@pytest.mark.parametrize("domain", [
    Ball(c=[0.0, 0.0], r=1.0), HalfSpace(a=E1, b=0.0), Slab(a=E1, b=1.0), WholeSpace(dim=2),
])
def test_dimension_mismatch(domain):
    with pytest.raises(DimensionMismatch):
        g_eval(domain, np.zeros(3))


def test_gradients_and_hessians():
    ball = Ball(c=[0.0, 0.0], r=1.0)
    assert np.allclose(grad_g(ball, np.array([1.0, 0.0])), [2.0, 0.0])
    assert np.allclose(hess_g(ball, np.array([0.3, -0.1])), 2.0 * np.eye(2))

    half = HalfSpace(a=E1, b=0.0)
    assert np.allclose(hess_g(half, np.array([5.0, 1.0])), 0.0)

    slab = Slab(a=E1, b=1.0)
    assert np.allclose(grad_g(slab, np.array([0.5, 3.0])), [1.0, 0.0])
    assert np.allclose(hess_g(slab, np.array([0.5, 3.0])), np.diag([2.0, 0.0]))


@pytest.mark.parametrize("domain", [
    Ball(c=[0.2, -0.1], r=1.3),
    HalfSpace(a=DIAGONAL, b=0.4),
    Slab(a=DIAGONAL, b=0.7),
    Cylinder(base=Ball(c=[0.1, 0.0], r=1.0), extra_dims=1),
])
def test_derivatives_match_finite_differences(domain):
    rng = np.random.default_rng(3)
    h = 1e-5
    for x in rng.normal(size=(5, domain.dim)):
        eye = np.eye(domain.dim)
        fd_grad = np.array([(domain.g(x + h * e) - domain.g(x - h * e)) / (2 * h) for e in eye])
        fd_hess = np.array([(domain.grad_g(x + h * e) - domain.grad_g(x - h * e)) / (2 * h) for e in eye])
        assert np.allclose(fd_grad, domain.grad_g(x), rtol=1e-5, atol=1e-7)
        assert np.allclose(fd_hess, domain.hess_g(x), rtol=1e-5, atol=1e-7)


@pytest.mark.parametrize("domain, x, expected", [
    (Ball(c=[0.0, 0.0], r=1.0), [0.0, 1.0], [0.0, 1.0]),
    (HalfSpace(a=E1, b=0.0), [0.0, 7.0], [1.0, 0.0]),
    (HalfSpace(a=E1, b=0.0), [0.0, -3.0], [1.0, 0.0]),
    (Slab(a=E1, b=1.0), [-1.0, 2.0], [-1.0, 0.0]),
])
def test_normal(domain, x, expected):
    assert np.allclose(normal(domain, np.array(x)), expected)


def test_normal_errors():
    ball = Ball(c=[0.0, 0.0], r=1.0)
    with pytest.raises(NotOnBoundary):
        normal(ball, np.array([0.5, 0.0]))
    with pytest.raises(DegenerateGradient):
        normal(WholeSpace(dim=2), np.array([0.0, 0.0]), tol=2.0)


@pytest.mark.parametrize("domain, x, expected", [
    (Ball(c=[0.0, 0.0], r=1.0), [2.0, 0.0], [1.0, 0.0]),
    (HalfSpace(a=E1, b=0.0), [3.0, 7.0], [0.0, 7.0]),
    (Slab(a=E1, b=1.0), [-4.0, 2.0], [-1.0, 2.0]),
    (Cylinder(base=Ball(c=[0.0], r=1.0), extra_dims=1), [3.0, 5.0], [1.0, 5.0]),
    (WholeSpace(dim=2), [3.0, 5.0], [3.0, 5.0]),
])
def test_project_to_closure(domain, x, expected):
    assert np.allclose(project_to_closure(domain, np.array(x)), expected)


@pytest.mark.parametrize("domain", [
    Ball(c=[0.3, 0.0], r=0.8),
    HalfSpace(a=DIAGONAL, b=-0.2),
    Slab(a=DIAGONAL, b=0.5),
])
def test_projection_properties(domain):
    rng = np.random.default_rng(11)
    x = 3.0 * rng.normal(size=(200, 2))
    y = 3.0 * rng.normal(size=(200, 2))
    px, py = domain.project(x), domain.project(y)

    # contraction and idempotence
    assert np.all(np.linalg.norm(px - py, axis=1) <= np.linalg.norm(x - y, axis=1) + 1e-12)
    assert np.allclose(domain.project(px), px)

    # inside points are untouched
    inside = domain.g(x) <= 0
    assert np.allclose(px[inside], x[inside])

    # x - P(x) is along the normal at P(x)
    outside = ~inside
    nu = domain.normal(px[outside], tol=1e-9)
    d = x[outside] - px[outside]
    cross = d[:, 0] * nu[:, 1] - d[:, 1] * nu[:, 0]
    assert np.max(np.abs(cross)) < 1e-8
    assert np.all(np.sum(d * nu, axis=1) > 0)


def test_householder_frame_maps_first_axis():
    a = np.array([0.6, 0.0, 0.8])
    r = householder_frame(a)
    assert np.allclose(r @ r.T, np.eye(3))
    assert np.allclose(r @ a, [1.0, 0.0, 0.0])


def test_extent_in_the_defining_direction():
    slab = Slab(a=E1, b=1.0)
    first, free = slab.extent(8.0)
    assert (first.lo, first.hi, first.lo_boundary, first.hi_boundary) == (-1.0, 1.0, True, True)
    assert free.free and not free.lo_boundary

    half = HalfSpace(a=[1.0], b=0.0)
    (e,) = half.extent(8.0)
    assert (e.lo, e.hi, e.lo_boundary, e.hi_boundary) == (-8.0, 0.0, False, True)


def test_ball_tensor_grid_only_in_one_dimension():
    Ball(c=[0.0], r=1.0).extent(8.0)
    with pytest.raises(UnsupportedDomain):
        Ball(c=[0.0, 0.0], r=1.0).extent(8.0)


def test_domain_from_spec():
    cyl = domain_from_spec({"kind": "cylinder", "base": {"kind": "slab", "a": [1.0], "b": 1.0}, "extra_dims": 2})
    assert isinstance(cyl, Cylinder)
    assert cyl.dim == 3 and cyl.q == 1
    assert domain_from_spec({"kind": "whole_space"}, dim=4).dim == 4
    with pytest.raises(UnsupportedDomain):
        domain_from_spec({"kind": "torus"})
    with pytest.raises(UnsupportedDomain):
        domain_from_spec({"kind": "cylinder"})


@pytest.mark.parametrize("spec", [
    {"kind": "half_space", "a": [2.0]},
    {"kind": "slab", "a": [1.0], "b": -1.0},
    {"kind": "ball", "c": [0.0, 0.0], "r": -1.0},
    {"kind": "ball", "c": [0.0], "r": "wide"},
    {"kind": "whole_space", "dim": None},
    {"kind": "cylinder", "base": {"kind": "ball", "r": 0.0}},
])
def test_malformed_specs_are_config_errors(spec):
    with pytest.raises(ConfigError):
        domain_from_spec(spec)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        HalfSpace(a=[1.0, 1.0], b=0.0)
    with pytest.raises(ValueError):
        Ball(c=[0.0], r=0.0)
    with pytest.raises(ValueError):
        Slab(a=[1.0], b=-1.0)


@pytest.mark.parametrize("error", [
    DimensionMismatch(2, 3),
    NotOnBoundary(0.5, 1e-10),
    DegenerateGradient("flat"),
    UnsupportedDomain("torus"),
    PreconditionError("not orthonormal"),
    ConfigError("bad table"),
])
def test_errors_share_the_package_base(error):
    assert isinstance(error, OUNeumannError)
    assert isinstance(error, ValueError)
    with pytest.raises(OUNeumannError):
        raise error
