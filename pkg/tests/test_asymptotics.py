import math

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st
from scipy import integrate

from tale.asymptotics import (DecayProfile, bump, cone_distance, decay_exponent_prediction, decay_fit,
                              fit_decay_samples, gronwall_oracle, hardy_check, jacobi_compare, power_profile,
                              random_bumps, shifted_jacobi_compare, tangent_cone_probe)
from tale.errors import (CurvatureUnderflow, HypothesisViolated, IntegralDiverges, InvalidParameter,
                         SupportViolation)
from tale.metrics import make_model


def test_profile_integrals_against_quadrature():
    K = power_profile(1.5)
    # K0(t) = int_t^inf K(s)/s ds, K1(t) = int_t^inf K(s)/s^2 ds
    for t in (0.5, 2.0, 10.0):
        k0, _ = integrate.quad(lambda s: s**-2.5, t, math.inf)
        k1, _ = integrate.quad(lambda s: s**-3.5, t, math.inf)
        assert K.K0(t) == pytest.approx(k0, rel=1e-8)
        assert K.K1(t) == pytest.approx(k1, rel=1e-8)


@given(st.sampled_from(["power", "shifted_power", "log"]), st.floats(1.2, 3.0), st.floats(0.1, 100.0))
def test_k1_is_bounded_by_k0_over_t(form, p, t):
    K = DecayProfile(form, 1.0, p)
    assert K.K1(t) <= K.K0(t) / t * (1 + 1e-9)


def test_k0_derivative():
    K = DecayProfile("log", 1.0, 2.0)
    t, h = 5.0, 1e-4
    d = (K.K0(t + h) - K.K0(t - h)) / (2 * h)
    assert d == pytest.approx(-K.K(t) / t, rel=1e-6)


def test_non_integrable_profile():
    with pytest.raises(IntegralDiverges):
        DecayProfile("power", 1.0, 0.0).K0(1.0)


def test_jacobi_constant_matches_direct_quadrature():
    K = DecayProfile("shifted_power", 1.0, 0.5)
    env, _ = integrate.quad(lambda t: t * (1 + t) ** -0.5 / (1 + t) ** 2, 0, math.inf, limit=500)
    res = jacobi_compare(K, 1.0)
    assert res["C1"] == pytest.approx(math.exp(env), rel=1e-6)
    assert res["passes"]


def test_both_jacobi_comparisons_for_inverse_root():
    K = power_profile(0.5)
    assert jacobi_compare(K)["passes"]
    s = shifted_jacobi_compare(K)
    assert s["passes"]
    assert s["C"] == pytest.approx(math.exp(4 * K.K0(0.5)))


def test_gronwall_on_a_closed_form_solution():
    # k = 1/(24 s): kappa = 1/24; x = 1 - 1/(60 t) satisfies both hypotheses
    t = np.geomspace(1, 1e4, 400)
    x = 1 - 1 / (60 * t)
    res = gronwall_oracle(t, x, lambda s: 1 / (24 * s), dx=1 / (60 * t**2))
    assert res["kappa"] == pytest.approx(1 / 24)
    assert res["C"] == pytest.approx(2 * math.exp(5 / 24 / (1 - 5 / 24)))
    assert res["observed_sup"] == pytest.approx(x[-1] / x[0], rel=1e-12)
    assert res["passes"]


def test_gronwall_rejects_large_kappa():
    t = np.geomspace(1, 100, 50)
    with pytest.raises(HypothesisViolated):
        gronwall_oracle(t, np.ones_like(t), lambda s: 1.0)


def test_decay_fit_recovers_a_power_law():
    r = np.geomspace(10, 1000, 30)
    fit = fit_decay_samples(r, 7 * r**-2.5)
    assert fit["slope"] == pytest.approx(-2.5, abs=1e-12)


def test_decay_fit_needs_samples_and_curvature():
    with pytest.raises(InvalidParameter):
        decay_fit(make_model("schwarzschild"), (10, 100), samples=5)
    with pytest.raises(CurvatureUnderflow):
        decay_fit(make_model("screw"), (10, 100))


def test_schwarzschild_slope_is_one_minus_n():
    for n in (4, 5):
        fit = decay_fit(make_model("schwarzschild", n=n, m=1.0), (10.0, 200.0))
        assert fit.slope == pytest.approx(-(n - 1), abs=0.05)


def test_taub_nut_slope_is_the_predicted_exponent():
    assert decay_exponent_prediction(3, 4) == 3
    fit = decay_fit(make_model("taub_nut", m=1.0), (20.0, 400.0))
    assert fit.slope == pytest.approx(-3, abs=0.15)


def test_cone_distance_rational_rotation():
    # theta = 1/3: the k = 1 deck image rotates by 2 pi / 3, so the pair at that angle is one unit apart
    d, k = cone_distance(1 / 3, 100.0, 2 * math.pi / 3)
    assert (d, k) == (pytest.approx(1.0), 1)
    assert cone_distance(1 / 3, 100.0, 0.0)[0] == 0.0


@given(st.floats(0, 2 * math.pi), st.floats(1, 100))
def test_cone_distance_never_exceeds_the_plane_chord(w, r):
    d, _ = cone_distance((math.sqrt(5) - 1) / 2, r, w)
    assert d <= 2 * r * abs(math.sin(w / 2)) + 1e-9


def test_golden_cone_grows_like_sqrt_r():
    probe = tangent_cone_probe((math.sqrt(5) - 1) / 2, [1e2, 1e3, 1e4], seed=1)
    assert probe["max_ratio_sqrt_r"] <= 10
    assert all(row["ratio_r"] < 0.2 for row in probe["rows"])


def test_hardy_ratio_matches_exact_integrals():
    t = sympy.symbols("t")
    phi = ((t - 1) * (3 - t)) ** 3
    for delta in (0, 1, 2):
        num = sympy.integrate(phi**2 * t**delta, (t, 1, 3))
        den = sympy.integrate(sympy.diff(phi, t) ** 2 * t ** (delta + 2), (t, 1, 3))
        tt, p, dp = bump(1.0, 3.0)
        res = hardy_check(tt, p, delta, 0.0, dp)
        assert res["ratio"] == pytest.approx(float(num / den), rel=1e-8)
        assert res["passes"]


@given(st.integers(0, 10_000))
def test_hardy_on_random_bumps(seed):
    for delta in (0, 1, 2):
        for t, p, dp in random_bumps(3, seed):
            assert hardy_check(t, p, delta, 0.0, dp)["ratio"] <= 4 / (delta + 1) ** 2


def test_hardy_scale_invariance():
    t, p, dp = bump(2.0, 5.0)
    a = hardy_check(t, p, 1, 0.0, dp)["ratio"]
    b = hardy_check(t, 3 * p, 1, 0.0, 3 * dp)["ratio"]
    assert a == pytest.approx(b, rel=1e-12)


def test_hardy_support_checks():
    t = np.linspace(1, 2, 101)
    with pytest.raises(SupportViolation):
        hardy_check(t, np.ones_like(t), 0.0)
    with pytest.raises(InvalidParameter):
        hardy_check(t, np.zeros_like(t), -1)
