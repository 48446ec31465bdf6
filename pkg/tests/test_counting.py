import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from clchain import bruteforce
from clchain.counting import (
    aut_count,
    hom_count,
    inj_count_with_quotient,
    inj_ratio_qpzp,
    linked_subgroup_count,
    subgroup_count,
    sur_count,
)
from clchain.errors import BruteForceBoundExceeded
from clchain.grouptype import TRIVIAL, GroupType, WindowSpec, downset, make_type, partitions, surjects_onto

T = make_type
SMALL = [GroupType(lam) for n in range(4) for lam in partitions(n)]


def test_hom_examples():
    assert hom_count(2, T([1]), T([1])) == 2
    assert hom_count(2, T([2, 1]), T([1])) == 4
    assert hom_count(5, TRIVIAL, T([3, 2])) == 1


def test_aut_examples():
    assert aut_count(2, T([1, 1])) == 6
    assert aut_count(2, T([2, 1])) == 8
    assert aut_count(3, TRIVIAL) == 1
    # GL_3(F_2)
    assert aut_count(2, T([1, 1, 1])) == 168


def test_sur_examples():
    for p in (2, 3, 5):
        assert sur_count(p, T([1, 1]), T([1])) == p * p - 1
        assert sur_count(p, T([4, 2]), TRIVIAL) == 1
    # every surjection Z/4 x Z/2 -> (Z/2)^2 factors through (Z/2)^2: |GL_2(F_2)| = 6
    assert sur_count(2, T([2, 1]), T([1, 1])) == 6
    assert bruteforce.brute_sur_count(2, T([2, 1]), T([1, 1])) == 6


@pytest.mark.parametrize("p", [2, 3])
def test_hom_symmetric_on_window(p):
    states = WindowSpec(p, 6).states
    for A, B in itertools.product(states, repeat=2):
        assert hom_count(p, A, B) == hom_count(p, B, A)


@pytest.mark.parametrize("p", [2, 3])
def test_hom_decomposes_over_subgroups(p):
    for A, B in itertools.product(SMALL, repeat=2):
        assert hom_count(p, A, B) == sum(subgroup_count(p, B, C) * sur_count(p, A, C) for C in downset(B))


@pytest.mark.parametrize("p", [2, 3])
def test_sur_positive_iff_quotient(p):
    states = WindowSpec(p, 5).states
    for A, B in itertools.product(states, repeat=2):
        assert (sur_count(p, A, B) > 0) == surjects_onto(A, B)


@pytest.mark.parametrize("p", [2, 3])
def test_subgroup_counts_match_enumeration(p):
    for G in [GroupType(lam) for n in range(5) for lam in partitions(n)]:
        brute = bruteforce.brute_subgroup_type_counts(p, G)
        assert {C: subgroup_count(p, G, C) for C in downset(G)} == {C: brute.get(C, 0) for C in downset(G)}


@given(st.sampled_from(SMALL), st.sampled_from(SMALL), st.sampled_from([2, 3]))
@settings(max_examples=40, deadline=None)
def test_formula_counts_match_brute_force(A, B, p):
    assert hom_count(p, A, B) == bruteforce.brute_hom_count(p, A, B)
    assert sur_count(p, A, B) == bruteforce.brute_sur_count(p, A, B)
    assert aut_count(p, A) == bruteforce.brute_aut_count(p, A)


def test_inj_with_quotient_examples():
    (rec,) = inj_count_with_quotient(2, TRIVIAL, T([1]))
    assert rec.quotient == T([1]) and rec.count == 1
    (rec,) = inj_count_with_quotient(2, T([1]), T([1, 1]))
    assert rec.quotient == T([1]) and rec.count == 3
    G = T([2, 1])
    (rec,) = inj_count_with_quotient(3, G, G)
    assert rec.quotient == TRIVIAL and rec.count == aut_count(3, G)


@pytest.mark.parametrize("p", [2, 3])
def test_inj_totals_equal_sur_of_dual(p):
    # injections B -> G are dual to surjections G -> B, so the totals agree
    for B, G in itertools.product(SMALL, repeat=2):
        total = sum(r.count for r in inj_count_with_quotient(p, B, G))
        assert total == sur_count(p, G, B)


def test_inj_with_quotient_bound():
    with pytest.raises(BruteForceBoundExceeded):
        inj_count_with_quotient(2, T([1]), T([5, 4]), bound_exp=8)


def test_inj_ratio_examples():
    assert inj_ratio_qpzp(2, 1, 1) == Fraction(1, 2)
    assert inj_ratio_qpzp(3, 1, 1) == Fraction(2, 3)
    assert inj_ratio_qpzp(3, 2, 1) == 0
    assert inj_ratio_qpzp(7, 0, 4) == 1


@given(st.integers(0, 4), st.integers(0, 8), st.sampled_from([2, 3, 5]))
def test_inj_ratio_monotone_in_k(r, k, p):
    a, b = inj_ratio_qpzp(p, r, k), inj_ratio_qpzp(p, r, k + 1)
    assert 0 <= a <= b <= 1
    assert 1 - inj_ratio_qpzp(p, r, k + 30) < Fraction(1, 2**20)


@pytest.mark.parametrize("p", [2, 3])
def test_inj_ratio_matches_brute_force(p):
    for F in SMALL:
        if F.rank > 2:
            continue
        for k in range(4):
            inj, total = bruteforce.brute_inj_ratio(p, F, k)
            assert Fraction(inj, total) == inj_ratio_qpzp(p, F.rank, k)


def test_linked_subgroup_examples():
    assert linked_subgroup_count(2, TRIVIAL, T([2, 1])) == 1
    assert linked_subgroup_count(2, TRIVIAL, TRIVIAL) == 1
    # the diagonal and the whole of Z/2 x Z/2
    assert linked_subgroup_count(2, T([1]), T([1])) == 2


def test_linked_subgroup_bound():
    with pytest.raises(BruteForceBoundExceeded):
        linked_subgroup_count(2, T([3, 2]), T([2, 2]), bound_exp=8)
