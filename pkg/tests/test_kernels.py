"""Exact kernels: frozen small rows, fast-vs-brute agreement and mass accounting."""

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from clchain.errors import WindowMismatch
from clchain.grouptype import TRIVIAL, GroupType, ModuleType, WindowSpec, make_type, partitions
from clchain.kernels import (
    apply_kernel,
    chain_power,
    character_kernel_type,
    d_kernel,
    delta0_expectation,
    delta0_kernel,
    delta0_power_exact,
    delta0_quotient_form,
    delta0_quotient_row,
    delta0_row,
    delta0_small,
    dk_core,
    dk_from_base_kernel,
    dstar_kernel,
    quotient_by_element_type,
    valuation_classes,
)
from clchain.measures import mu0_measure, mu0_unnormalized, point_mass
from clchain.counting import sur_count, aut_count

T = make_type
F_ = Fraction


def small_types(max_exp):
    return [GroupType(lam) for n in range(max_exp + 1) for lam in partitions(n)]


class TestCharacterKernel:
    def test_cyclic_of_order_four(self):
        assert delta0_row(2, T([2])) == {TRIVIAL: F_(1, 2), T([1]): F_(1, 4), T([2]): F_(1, 4)}

    def test_elementary_rank_two(self):
        assert delta0_row(2, T([1, 1])) == {T([1]): F_(3, 4), T([1, 1]): F_(1, 4)}

    def test_trivial_group(self):
        assert delta0_row(5, TRIVIAL) == {TRIVIAL: 1}

    def test_quotient_form(self):
        expected = {T([1]): F_(1, 2), T([2]): F_(1, 4), T([1, 1]): F_(1, 8), T([2, 1]): F_(1, 8)}
        assert delta0_quotient_row(2, T([2, 1])) == expected
        assert delta0_quotient_form(2, T([2, 1])).probs == expected

    def test_valuation_classes_partition_the_group(self):
        for p in (2, 3):
            for F in small_types(4):
                assert sum(w for _, w in valuation_classes(p, F)) == F.order(p)

    def test_class_helpers(self):
        assert character_kernel_type(T([2, 1]), (0, 0)) == T([1])
        assert quotient_by_element_type(2, T([2, 1]), [2, 0]) == T([1, 1])


@given(st.sampled_from(small_types(5)), st.sampled_from([2, 3]))
@settings(max_examples=30, deadline=None)
def test_fast_route_matches_brute_force(F, p):
    if F.order_exp > (5 if p == 2 else 3):
        return
    assert delta0_row(p, F) == delta0_small(p, F).probs
    assert delta0_quotient_row(p, F) == delta0_quotient_form(p, F).probs


def test_dstar_kernel_keys_are_rank_one_modules():
    row = dstar_kernel(3, T([1]))
    assert row.probs == {ModuleType(TRIVIAL, 1): F_(2, 3), ModuleType(T([1]), 1): F_(1, 3)}
    assert row.total() == 1


class TestQuotientStep:
    def test_from_free_module_is_geometric(self):
        w = WindowSpec(2, 4)
        row = d_kernel(ModuleType(TRIVIAL, 1), w)
        assert row.probs == {T([v]) if v else TRIVIAL: F_(1, 2 ** (v + 1)) for v in range(5)}
        assert row.tail == F_(1, 32)

    def test_requires_free_rank_one(self):
        with pytest.raises(ValueError):
            d_kernel(ModuleType(TRIVIAL, 2), WindowSpec(2, 3))

    def test_window_smaller_than_torsion_is_all_tail(self):
        row = d_kernel(ModuleType(T([2, 1]), 1), WindowSpec(2, 2))
        assert row.probs == {} and row.tail == 1

    @pytest.mark.parametrize("p", [2, 3])
    def test_dk_with_one_copy_is_the_quotient_step(self, p):
        w = WindowSpec(p, 5 if p == 2 else 4)
        for B in small_types(2):
            a = dk_from_base_kernel(p, B, 1, w)
            b = d_kernel(ModuleType(B, 1), w)
            assert a.probs == b.probs and a.tail == b.tail


class TestOneStep:
    def test_cyclic_of_order_p_to_trivial(self):
        row = delta0_kernel(2, T([1]), WindowSpec(2, 4))
        assert row.probs[TRIVIAL] == F_(1, 4)
        assert row.tail == F_(3, 64)

    @pytest.mark.parametrize("p,m", [(2, 6), (3, 4)])
    def test_rows_are_stochastic_with_positive_self_loop(self, p, m):
        w = WindowSpec(p, m)
        for G in w.states:
            row = delta0_kernel(p, G, w)
            assert row.total() == 1
            assert all(x > 0 for x in row.probs.values())
            assert row.probs[G] > 0

    def test_window_required_and_prime_checked(self):
        with pytest.raises(ValueError):
            delta0_kernel(2, TRIVIAL)
        with pytest.raises(WindowMismatch):
            delta0_kernel(2, TRIVIAL, WindowSpec(3, 2))

    @pytest.mark.parametrize("p", [2, 3])
    def test_detailed_balance_spot(self, p):
        w = WindowSpec(p, 4)
        for G in w.states:
            for H, x in delta0_kernel(p, G, w).probs.items():
                y = delta0_kernel(p, H, w).probs.get(G, 0)
                assert mu0_unnormalized(p, G) * x == mu0_unnormalized(p, H) * y

    def test_stationarity_deficit_is_small_and_nonnegative(self):
        w = WindowSpec(2, 10)
        mu = mu0_measure(w)
        pushed = apply_kernel(mu)
        for H in WindowSpec(2, 3).states:
            gap = mu.get(H) - pushed.get(H)
            assert 0 <= gap < F_(1, 10**2) * mu.get(H)

    def test_expectation_of_constant_encloses_one(self):
        iv = delta0_expectation(2, T([1, 1]), lambda G: 1, lambda r: 1, horizon=6)
        assert iv.lo <= 1 <= iv.hi

    def test_expectation_of_moment(self):
        # E[#Sur(X, Z/p)] is finite; the enclosure narrows as the horizon grows
        f = lambda G: sur_count(2, G, T([1]))  # noqa: E731
        bound = lambda r: 2**r  # noqa: E731
        a = delta0_expectation(2, T([1]), f, bound, horizon=6)
        b = delta0_expectation(2, T([1]), f, bound, horizon=14)
        assert a.lo <= b.lo <= b.hi <= a.hi
        assert b.width < a.width


class TestPowers:
    def test_apply_conserves_probability(self):
        w = WindowSpec(3, 5)
        nu = chain_power(point_mass(w, T([1])), 3)
        assert nu.total() + nu.tail == 1

    def test_power_one_is_one_step(self):
        w = WindowSpec(2, 5)
        for G in small_types(2):
            a, b = delta0_power_exact(2, G, 1, w), delta0_kernel(2, G, w)
            assert a.probs == b.probs

    def test_power_zero_is_identity(self):
        w = WindowSpec(2, 3)
        assert delta0_power_exact(2, T([2]), 0, w).probs == {T([2]): 1}

    @pytest.mark.parametrize("G", [TRIVIAL, T([1]), T([1, 1])])
    def test_truncated_chain_brackets_exact_power(self, G):
        w = WindowSpec(2, 6)
        exact = delta0_power_exact(2, G, 2, w)
        chain = chain_power(point_mass(w, G), 2)
        for H in w.states:
            lo = chain.get(H)
            assert lo <= exact.probs.get(H, 0) <= lo + chain.tail

    def test_from_trivial_matches_generic_route(self):
        w = WindowSpec(3, 4)
        gen = {}
        for B, x in {TRIVIAL: F_(1)}.items():
            for H, y in dk_from_base_kernel(3, B, 2, w).probs.items():
                gen[H] = gen.get(H, 0) + x * y
        assert delta0_power_exact(3, TRIVIAL, 2, w).probs == gen

    def test_dk_core_increases_to_moment(self):
        w = WindowSpec(2, 5)
        B = T([1])
        prev = dk_core(2, B, 1, w)
        for k in range(2, 8):
            cur = dk_core(2, B, k, w)
            for G in w.states:
                assert prev.get(G) <= cur.get(G) <= F_(sur_count(2, G, B), aut_count(2, G))
            prev = cur
