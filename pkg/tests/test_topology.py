import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tale.errors import (ConfigError, InconsistentInvariants, InfiniteOrder, InvalidParameter, MissingEta,
                         NotConverged, UnknownEndType)
from tale.topology import (TABLES, EndDescriptor, ale_eta_from_equality, alf_a, alf_d, classify_boundary,
                           enumerate_G, eta_lambda, fit_limit, group_closure, hitchin_thorpe, kronheimer,
                           monodromy_class, torus_from_gram)


def test_taub_nut_descriptor():
    rep = hitchin_thorpe(EndDescriptor("ALF-cyclic", chi=1, tau=0, euler_number=-1))
    assert rep.eta == Fraction(-2, 3) and rep.lam == 0
    assert rep.slack == 0 and rep.equality
    assert rep.to_dict()["boundary"] == "S³"


@pytest.mark.parametrize("k", range(0, 6))
def test_alf_a_equality(k):
    assert hitchin_thorpe(EndDescriptor("ALF-cyclic", **alf_a(k))).slack == 0


@pytest.mark.parametrize("k", range(2, 7))
def test_alf_d_equality(k):
    assert hitchin_thorpe(EndDescriptor("ALF-dihedral", **alf_d(k))).slack == 0


def test_flat_alf_end():
    d = EndDescriptor("ALF-cyclic", **alf_a(-1))
    assert (d.chi, d.tau, d.euler_number) == (0, 0, 0)
    assert classify_boundary(d) == "S²×S¹"


def test_schwarzschild_slack():
    assert hitchin_thorpe(EndDescriptor("ALF-cyclic", chi=2, tau=0, euler_number=0)).slack == 4


def test_alg_eta_table():
    got = [eta_lambda(EndDescriptor("ALG", chi=0, tau=0, monodromy=g))[0] for g in ("1", "Z2", "Z3", "Z4", "Z6")]
    assert got == [0, 0, Fraction(-2, 3), -1, Fraction(-4, 3)]


def test_ale_eta_helper():
    # Kronheimer A_k spaces realise equality for the helper's eta
    for k in range(1, 6):
        d = kronheimer(k)
        eta = ale_eta_from_equality(d["chi"], d["tau"], d["gamma_order"])
        rep = hitchin_thorpe(EndDescriptor("ALE", eta_ale=eta, **d))
        assert rep.slack == 0
    assert ale_eta_from_equality(1, 0, 1) == 0
    with pytest.raises(MissingEta):
        hitchin_thorpe(EndDescriptor("ALE", chi=1, tau=0, gamma_order=2))


@given(st.integers(-30, 30).filter(bool))
def test_cyclic_eta_is_orientation_odd(e):
    a = eta_lambda(EndDescriptor("ALF-cyclic", chi=1, tau=0, euler_number=e))[0]
    b = eta_lambda(EndDescriptor("ALF-cyclic", chi=1, tau=0, euler_number=-e))[0]
    assert a == -b


@given(st.integers(1, 20), st.integers(-20, 20), st.integers(1, 12), st.fractions(-5, 5, max_denominator=12))
def test_slack_symmetry(chi, tau, order, eta):
    a = hitchin_thorpe(EndDescriptor("ALE", chi=chi, tau=tau, gamma_order=order, eta_ale=eta)).slack
    b = hitchin_thorpe(EndDescriptor("ALE", chi=chi, tau=-tau, gamma_order=order, eta_ale=-eta)).slack
    assert a == b


def test_descriptor_validation():
    with pytest.raises(UnknownEndType):
        EndDescriptor("ALX", chi=1, tau=0)
    with pytest.raises(InconsistentInvariants):
        EndDescriptor("ALF-cyclic", chi=1, tau=0)
    with pytest.raises(InconsistentInvariants):
        EndDescriptor("ALG", chi=1, tau=0, monodromy="Z5")
    with pytest.raises(ConfigError):
        EndDescriptor.from_dict({"end_type": "ALE", "chi": 1})
    d = EndDescriptor("ALE", chi=3, tau=-2, gamma_order=3, eta_ale="1/2")
    assert EndDescriptor.from_dict(d.to_dict()) == d


def test_boundary_labels():
    assert classify_boundary(EndDescriptor("ALF-cyclic", chi=3, tau=-2, euler_number=-3)) == "S³/ℤ_3"
    assert classify_boundary(EndDescriptor("ALF-dihedral", chi=3, tau=-2, euler_number=0)) == "S²×S¹/±"
    assert classify_boundary(EndDescriptor("ALG", chi=3, tau=-2, monodromy="Z3")) == "mapping torus of L₃"


def test_monodromy_orders():
    for g, order in zip(("1", "Z2", "Z3", "Z4", "Z6"), (1, 2, 3, 4, 6)):
        L = TABLES["monodromy"][g]["matrix"]
        assert monodromy_class(L)["order"] == order
        assert np.array_equal(np.linalg.matrix_power(np.array(L), order), np.eye(2, dtype=int))
    with pytest.raises(InfiniteOrder):
        monodromy_class([[1, 1], [0, 1]])
    with pytest.raises(InvalidParameter):
        monodromy_class([[1, 0], [0, 2]])


def _brute_G(A, bound):
    """Integer W with A W A^-1 orthogonal, searched over a box."""
    n = A.shape[0]
    Ai = np.linalg.inv(A)
    out = []
    for entries in itertools.product(range(-bound, bound + 1), repeat=n * n):
        W = np.array(entries, dtype=float).reshape(n, n)
        O = A @ W @ Ai
        if np.allclose(O.T @ O, np.eye(n), atol=1e-9):
            out.append(W)
    return out


@pytest.mark.parametrize("A, order", [(np.eye(2), 8), (np.array([[1.0, 0.5], [0.0, math.sqrt(3) / 2]]), 12),
                                      (np.array([[1.0, 0.3], [0.0, 1.7]]), 2)])
def test_G_matches_brute_force(A, order):
    G = enumerate_G(A)
    assert len(G) == order
    assert len(_brute_G(A, 3)) == order
    assert group_closure(G)
    assert any(np.array_equal(W, np.eye(2)) for W in G) and any(np.array_equal(W, -np.eye(2)) for W in G)


def test_G_of_the_cube():
    assert len(enumerate_G(np.eye(3))) == 48


def test_gram_of_a_flat_torus():
    A, G = torus_from_gram([[4.0, 0.0], [0.0, 4.0]])
    assert np.allclose(A.T @ A, np.diag([4.0, 4.0]))
    assert len(G) == 8
    with pytest.raises(NotConverged):
        torus_from_gram([[1.0, 2.0], [2.0, 1.0]])


def test_fit_limit():
    t = np.geomspace(10, 1000, 40)
    assert fit_limit(t, 3 - 2 / t + 5 / t**2, 1e-9)["limit"] == pytest.approx(3.0, abs=1e-9)
    with pytest.raises(NotConverged):
        fit_limit(t, np.log(t), 1e-3)
