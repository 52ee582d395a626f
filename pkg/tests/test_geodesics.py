import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from tale.geodesics import (integrate_geodesic, log_map, norm, orthonormal_frame, radial_ray_to,
                            ray_length_to)
from tale.metrics import make_model


def test_flat_geodesic_is_a_straight_line():
    M = make_model("euclidean", n=3)
    p, v = np.array([1.0, 2.0, 3.0]), np.array([0.5, -1.0, 2.0])
    path = integrate_geodesic(M, p, v, 2.0)
    assert np.allclose(path.end, p + 2 * v)


@given(st.lists(st.floats(-5, 5), min_size=3, max_size=3), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_flat_log_map_is_the_chord(p, q):
    M = make_model("euclidean", n=3)
    sol = log_map(M, p, q, starts=1)
    assert np.allclose(sol.v, np.subtract(q, p), atol=1e-9)


def test_curved_geodesic_keeps_unit_speed():
    M = make_model("taub_nut", m=1.0)
    p = np.array([6.0, 2.0, 1.0, 0.0])
    E = orthonormal_frame(M, p)
    v = E @ np.array([0.3, 0.5, -0.2, 0.7])
    v /= norm(M, p, v)
    path = integrate_geodesic(M, p, v, 5.0)
    assert path.speed_drift <= 1e-8


def test_orthonormal_frame():
    M = make_model("schwarzschild", n=4, m=1.0)
    x = np.array([0.2, 5.0, 1.0, 2.0])
    E = orthonormal_frame(M, x)
    assert np.allclose(E.T @ M.metric(x) @ E, np.eye(4), atol=1e-12)


def test_schwarzschild_ray_length_matches_quadrature():
    # the radial ray has ds = dr / sqrt(f) with f = 1 - 2m / r
    M = make_model("schwarzschild", n=4, m=1.0)
    exact, _ = integrate.quad(lambda r: 1 / math.sqrt(1 - 2 / r), 5.0, 40.0)
    assert ray_length_to(M, 5.0, 40.0) == pytest.approx(exact, rel=1e-8)


def test_radial_ray_ends_at_the_requested_radius():
    M = make_model("taub_nut", m=1.0)
    c = radial_ray_to(M, 20.0, 60.0, n_samples=12, spacing="log")
    assert M.radius_of(c.points[0]) == pytest.approx(20.0)
    assert M.radius_of(c.points[-1]) == pytest.approx(60.0, rel=1e-7)
    assert np.all(np.diff(c.t) > 0)
    # transported frame stays orthonormal
    E = c.frames[-1]
    assert np.allclose(E.T @ M.metric(c.points[-1]) @ E, np.eye(4), atol=1e-7)
