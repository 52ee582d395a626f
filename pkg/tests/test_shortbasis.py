import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tale.errors import AxiomViolation, DegenerateSet, OutOfRange
from tale.exact import QSqrt, parse_exact
from tale.shortbasis import (basis_from_labels, generalized_count_bound, generalized_short_bases, lattice_subset,
                             perturbed_lattice_subset, project_step, radius_schedule, represent,
                             rho1_for_rho_bar, standard_short_basis, verify_basis_properties)

HEX = [(1, 0), ("1/2", "sqrt(3)/2")]


def _subset(gens, rho_bar=2.5, theta=0):
    n = len(gens[0])
    rho = Fraction(rho1_for_rho_bar(rho_bar, n, float(theta))).limit_denominator(1000)
    return lattice_subset(gens, rho, theta=theta)


def test_exact_scalars():
    x = parse_exact("sqrt(3)/2")
    assert isinstance(x, QSqrt)
    assert x * x == Fraction(3, 4)
    assert parse_exact(2) == Fraction(2)
    assert str(parse_exact("1-sqrt(3)")) == "1-sqrt(3)"


def test_schedule_ends_at_rho_bar():
    rho_sq, rho_bar_sq = radius_schedule(rho1_for_rho_bar(2.5, 2, 0.01), 0.01, 2, 2, exact=False)
    assert math.sqrt(rho_bar_sq) == pytest.approx(2.5)


def test_z2_upper_slab():
    B = standard_short_basis(_subset([(1, 0), (0, 1)]))
    assert B.labels == [(1, 0), (1, 1)]
    assert B.lambda_sq == 2
    assert verify_basis_properties(B)["passes"]


def test_z2_lower_slab():
    B = standard_short_basis(_subset([(1, 0), (0, 1)]), slab="lower")
    assert B.lambda_sq == 1


def test_hexagonal_lambda_is_two_over_root_three():
    for slab in ("upper", "lower"):
        B = standard_short_basis(_subset(HEX), slab=slab)
        assert B.lambda_sq == Fraction(4, 3)


def test_project_step_slabs():
    T = _subset([(1, 0), (0, 1)])
    k, z, _ = project_step(T, (1, 0), (3, 2))
    assert (k, z) == (2, (1, 2))
    k, z, _ = project_step(T, (1, 0), (3, 2), slab="lower")
    assert (k, z) == (3, (0, 2))


def test_generalized_bases_of_z2():
    bases = generalized_short_bases(_subset([(1, 0), (0, 1)]))
    assert len(bases) == 16
    assert len(bases) <= generalized_count_bound(2, 0.0)
    assert len({tuple(b) for b in bases}) == 16


def test_injected_basis_that_is_not_normal():
    T = lattice_subset([(1, 0), ("2*sqrt(2)", 1)], Fraction(rho1_for_rho_bar(2.5, 2, 0)).limit_denominator(1000))
    B = basis_from_labels(T, [(1, 0), (0, 1)])
    assert B.lambda_sq == 9
    props = verify_basis_properties(B)
    assert props["lambda_normal"] is False
    assert props["lambda_witness"] == 2


def _points(V, R, box=12):
    out = []
    for l in itertools.product(range(-box, box + 1), repeat=len(V)):
        p = np.array(l) @ V
        if np.linalg.norm(p) <= R:
            out.append(tuple(np.round(p, 9) + 0.0))
    return out


def test_unique_representation_by_brute_force():
    gens = [(1, 0), (1, 3)]
    B = standard_short_basis(_subset(gens))
    R = math.sqrt(float(B.rho_bar_sq))
    lattice = _points(np.array(gens, dtype=float), R)
    words = _points(np.array([[float(x) for x in v] for v in B.vectors]), R)
    # the basis words hit every lattice point inside the radius exactly once
    assert len(words) == len(set(words)) and set(words) == set(lattice) and len(lattice) > 1
    for c in [(1, 0), (0, 1), (-2, 1)]:
        if B.subset.norm2(c) <= B.rho_bar_sq:
            l = represent(B, c)
            assert tuple(np.array(B.labels).T @ np.array(l)) == c


def test_represent_outside_radius():
    B = standard_short_basis(_subset([(1, 0), (0, 1)]))
    with pytest.raises(OutOfRange):
        represent(B, (50, 0))


@settings(max_examples=6)
@given(st.lists(st.integers(-3, 3), min_size=4, max_size=4))
def test_random_integer_lattices(entries):
    a, b, c, d = entries
    det = a * d - b * c
    if det == 0 or np.linalg.cond(np.array([[a, b], [c, d]], dtype=float)) > 20:
        return
    B = standard_short_basis(_subset([(a, b), (c, d)]))
    props = verify_basis_properties(B)
    assert props["lambda_normal"] and props["unique_representation"]
    assert props["structure_lower_triangular"]
    # a full-rank basis of the lattice changes labels unimodularly
    if B.m == 2:
        assert abs(round(np.linalg.det(np.array(B.labels, dtype=float)))) == 1


def test_dimension_three_lattice():
    B = standard_short_basis(_subset([(1, 0, 0), (0, 2, 0), (1, 1, 3)], rho_bar=2.0))
    assert verify_basis_properties(B)["passes"]


@pytest.mark.parametrize("seed", range(5))
def test_perturbed_subsets_pass(seed):
    T = perturbed_lattice_subset([(1.0, 0.0), (0.3, 1.1)], 1 / 200, rho1_for_rho_bar(3.0, 2, 1 / 200), seed)
    assert T.axiom_report.passes
    assert verify_basis_properties(standard_short_basis(T))["passes"]


def test_adversarial_perturbation_breaks_the_axioms():
    with pytest.raises(AxiomViolation):
        perturbed_lattice_subset([(1.0, 0.0), (0.3, 1.1)], 1 / 200, rho1_for_rho_bar(3.0, 2, 1 / 200), 0,
                                 adversarial=True)


def test_exact_radius_must_be_rational():
    with pytest.raises(DegenerateSet):
        lattice_subset([(1, 0), (0, 1)], "sqrt(2)")
