import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tale.errors import InvalidParameter
from tale.metrics import (MODEL_NAMES, curvature_norm, curvature_operator_norm, make_model, ricci_norm,
                          riemann_at, riemann_fd, symmetry_residual)


@pytest.fixture(scope="module")
def schw():
    return make_model("schwarzschild", n=4, m=1.0)


@pytest.fixture(scope="module")
def tn():
    return make_model("taub_nut", m=1.0)


def test_registry_builds_every_model():
    for name in MODEL_NAMES:
        M = make_model(name)
        assert M.describe()["name"] == M.name


def test_unknown_model_is_a_config_error():
    with pytest.raises(InvalidParameter):
        make_model("kerr")
    with pytest.raises(InvalidParameter):
        make_model("schwarzschild", n=3)


def test_flat_models_have_zero_curvature():
    for name in ("euclidean", "screw", "flat_torus"):
        M = make_model(name)
        x = M.radial_point(3.0) + 0.1
        assert curvature_norm(M, x) == 0.0
        assert ricci_norm(M, x) == 0.0


@pytest.mark.parametrize("r", [3.0, 7.5, 40.0])
def test_schwarzschild_norm_matches_kretschmann(schw, r):
    # |Rm|^2 = 48 m^2 / r^6 for n = 4, written out independently of the model class
    expected = math.sqrt(48.0) / r**3
    assert curvature_norm(schw, schw.radial_point(r)) == pytest.approx(expected, rel=1e-10)
    assert schw.kretschmann_closed_form(r) == pytest.approx(48.0 / r**6, rel=1e-14)


def test_analytic_and_finite_difference_curvature_agree(tn):
    x = np.array([3.0, -2.0, 4.0, 1.0])
    Ra, Rf = riemann_at(tn, x), riemann_fd(tn, x)
    assert np.max(np.abs(Ra - Rf)) <= 1e-5 * np.max(np.abs(Ra))


def test_riemann_symmetries(tn, schw):
    for M, x in ((tn, np.array([2.0, 1.0, -3.0, 0.5])), (schw, np.array([0.3, 4.0, 1.0, -2.0]))):
        R = riemann_at(M, x)
        assert symmetry_residual(R) <= 1e-10


def test_operator_norm_is_bounded_by_tensor_norm(tn):
    x = np.array([5.0, 1.0, 2.0, 0.0])
    assert 0 < curvature_operator_norm(tn, x) <= curvature_norm(tn, x) * (1 + 1e-12)


@given(st.floats(-25, 25), st.floats(-25, 25), st.floats(-25, 25), st.floats(0, 25))
def test_multi_taub_nut_is_ricci_flat(x, y, z, tau):
    M = make_model("multi_taub_nut", m=1.0, centers=(-5.0, 5.0))
    p = np.array([x, y, z, tau])
    if M.domain_margin(p) < 1.0:
        return
    assert ricci_norm(M, p) <= 1e-6


@given(st.floats(5, 100), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_schwarzschild_is_ricci_flat(r, a, b):
    M = make_model("schwarzschild", n=4, m=1.0)
    p = np.array([1.0, r * math.sin(a) * math.cos(b), r * math.sin(a) * math.sin(b), r * math.cos(a)])
    assert ricci_norm(M, p) <= 1e-6


def test_higher_dimensional_schwarzschild_decays_faster():
    M = make_model("schwarzschild", n=5, m=1.0)
    r1, r2 = 10.0, 20.0
    ratio = curvature_norm(M, M.radial_point(r1)) / curvature_norm(M, M.radial_point(r2))
    assert ratio == pytest.approx(2.0**4, rel=1e-8)
