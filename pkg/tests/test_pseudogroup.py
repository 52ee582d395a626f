import math
from fractions import Fraction

import numpy as np
import pytest

from tale.errors import NoDeckGroup
from tale.geodesics import radial_ray_to
from tale.metrics import make_model
from tale.pseudogroup import build_pseudo_group, length_step_check, rotation_step_check, slide
from tale.topology import torus_at_infinity


def test_screw_pseudo_group_products():
    M = make_model("screw", theta=Fraction(1, 2))
    G = build_pseudo_group(M, M.radial_point(0.5), 3.5)
    assert G.product((1,), (2,)) == (3,)
    assert G.product((3,), (2,)) is None  # length 5 leaves the pseudo-group
    assert G.inverse((2,)) == (-2,)
    assert G.commutator((1,), (1,)) == (0,)
    rep = G.abelian_report()
    assert rep["product_bound_holds"]


def test_flat_sliding_is_exact():
    M = make_model("screw", theta=Fraction(1, 3))
    tr = slide(M, [(1,), (3,)], radial_ray_to(M, 2.0, 30.0, n_samples=80, spacing="log"))
    for i, (k,) in enumerate(tr.words):
        exact = [M.loop_length(k, r) for r in tr.radii]
        assert np.allclose(tr.lengths[i], exact, atol=1e-9)
        assert np.ptp(tr.rot_norms[i]) <= 1e-12
    # the k = 3 loop is a pure translation
    assert np.allclose(tr.lengths[1], 3.0)


def test_taub_nut_sliding_steps():
    M = make_model("taub_nut", m=1.0)
    tr = slide(M, [(1,)], radial_ray_to(M, 20.0, 80.0, n_samples=20, spacing="log"), with_curvature=True)
    assert length_step_check(tr)["passes"]
    assert rotation_step_check(tr)["passes"]
    # loop lengths increase towards 8 pi m
    assert np.all(np.diff(tr.lengths[0]) > 0)
    assert tr.lengths[0, -1] < 8 * math.pi


def test_sliding_needs_a_deck_group():
    M = make_model("euclidean")
    with pytest.raises(NoDeckGroup):
        slide(M, [(1,)], radial_ray_to(M, 1.0, 2.0, n_samples=3))


def test_trace_rows():
    M = make_model("screw", theta=Fraction(1, 2))
    tr = slide(M, [(2,)], radial_ray_to(M, 1.0, 2.0, n_samples=4))
    rows = tr.to_rows()
    assert len(rows) == 4 and set(rows[0]) == {"word", "t", "radius", "length", "rot_norm", "deviation"}


def test_torus_at_infinity_of_a_flat_torus():
    M = make_model("flat_torus", a=2, lattice=[[2.0, 0.0], [0.0, 2.0]])
    tr = slide(M, [(1, 0), (0, 1)], radial_ray_to(M, 5.0, 50.0, n_samples=10))
    tor = torus_at_infinity(tr)
    assert np.allclose(tor.lengths, [2.0, 2.0]) and tor.angles[(0, 1)] == pytest.approx(math.pi / 2)
    assert np.allclose(tor.gram, np.diag([4.0, 4.0]), atol=1e-12)
    assert len(tor.G_infinity) == 8


def test_torus_at_infinity_of_the_screw():
    M = make_model("screw", theta=Fraction(1, 2))
    tr = slide(M, [(2,)], radial_ray_to(M, 2.0, 50.0, n_samples=60, spacing="log"))
    assert torus_at_infinity(tr).lengths == [pytest.approx(2.0)]
