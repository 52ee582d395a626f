import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tale.errors import NoDeckGroup, RadiusTooLarge
from tale.holonomy import LoopSearchConfig, find_loops, loop_from_deck, matrix_deviation, power_loop_norms, rotation_angle_norm
from tale.metrics import make_model


def _rot(w):
    c, s = math.cos(w), math.sin(w)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def test_rotation_norm_of_plane_rotations():
    assert rotation_angle_norm(np.eye(3)) == 0.0
    assert rotation_angle_norm(_rot(0.3)) == pytest.approx(0.3)
    assert rotation_angle_norm(_rot(2 * math.pi - 0.3)) == pytest.approx(0.3)
    assert matrix_deviation(_rot(math.pi)) == pytest.approx(2.0)


@given(st.sampled_from([Fraction(1, 2), Fraction(1, 3), Fraction(2, 5)]), st.floats(1.0, 50.0),
       st.integers(-20, 20).filter(bool))
def test_screw_loop_is_the_chord_to_the_deck_image(theta, r, k):
    M = make_model("screw", theta=theta)
    q = M.radial_point(r)
    lp = loop_from_deck(M, q, (k,))
    chord = np.linalg.norm(M.deck.apply((k,), q) - q)
    assert lp.length == pytest.approx(chord, rel=1e-12, abs=1e-12)
    w = 2 * math.pi * float((k * theta) % 1)
    assert lp.rot_norm == pytest.approx(min(w, 2 * math.pi - w), abs=1e-10)
    # the rotation bound with constant pi / 2
    assert lp.rot_norm <= math.pi / (2 * r) * lp.length + 1e-12


def test_quarter_constant_fails_on_the_screw():
    M = make_model("screw", theta=Fraction(1, 3))
    lp = loop_from_deck(M, M.radial_point(2.0), (1,))
    assert lp.rot_norm > math.pi / (4 * 2.0) * lp.length


def test_flat_torus_loops_are_lattice_vectors():
    M = make_model("flat_torus", a=2, lattice=[[2.0, 0.0], [0.0, 3.0]])
    loops = find_loops(M, M.radial_point(10.0), 4.5).loops
    brute = sorted(math.hypot(2 * i, 3 * j) for i in range(-3, 4) for j in range(-3, 4)
                   if (i, j) != (0, 0) and math.hypot(2 * i, 3 * j) < 4.5)
    assert np.allclose(sorted(lp.length for lp in loops), brute)
    assert all(lp.rot_norm == 0 for lp in loops)


def test_deck_and_shooting_find_the_same_loops():
    M = make_model("screw", theta=Fraction(1, 4))
    q = M.radial_point(1.0)
    a = {lp.word for lp in find_loops(M, q, 3.0).loops}
    dense = LoopSearchConfig(directions=400)
    b = {lp.word for lp in find_loops(M, q, 3.0, strategy="shooting", config=dense).loops}
    assert a == b


def test_taub_nut_fibre_loop():
    M = make_model("taub_nut", m=1.0)
    q = np.array([30.0, 1.0, 2.0, 0.0])
    lp = loop_from_deck(M, q, (1,))
    # the fibre orbit is a closed geodesic only asymptotically; the loop is never longer than the orbit
    assert lp.length <= M.fibre_orbit_length(q) * (1 + 1e-9)
    assert lp.length == pytest.approx(M.fibre_orbit_length(q), rel=1e-2)
    assert lp.rot_norm < 0.1


def test_power_norms_fold_the_angle():
    M = make_model("screw", theta=Fraction(2, 5))
    for k, norm_k, folded in power_loop_norms(M, M.radial_point(3.0), (1,), range(1, 8)):
        assert norm_k == pytest.approx(folded, abs=1e-10)


def test_loops_need_a_deck_group():
    with pytest.raises(NoDeckGroup):
        find_loops(make_model("euclidean"), np.zeros(3), 1.0)


def test_radius_must_stay_in_the_domain():
    with pytest.raises(RadiusTooLarge):
        find_loops(make_model("schwarzschild"), make_model("schwarzschild").radial_point(3.0), 50.0)
