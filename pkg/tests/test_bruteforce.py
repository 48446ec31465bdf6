"""The explicit-group enumerator that backs every oracle."""

import numpy as np
import pytest

from clchain import bruteforce
from clchain.errors import BruteForceBoundExceeded
from clchain.grouptype import TRIVIAL, make_type

T = make_type


def test_group_elements_and_orders():
    g = bruteforce.group(2, T([2, 1]))
    assert len(g.elements()) == 8
    assert len(g.torsion(1)) == 4
    assert max(g.element_order_exp(x) for x in g.decode(g.elements())) == 2


def test_subgroup_and_quotient_types():
    g = bruteforce.group(3, T([2]))
    sub = g.torsion(1)
    assert g.subgroup_type(sub) == T([1])
    assert g.quotient_type(sub) == T([1])


def test_trivial_group_is_handled():
    g = bruteforce.group(2, TRIVIAL)
    assert len(g.elements()) == 1
    assert g.quotient_type(g.elements()) == TRIVIAL


@pytest.mark.parametrize("p,G,expected", [(2, T([1, 1]), 5), (3, T([1, 1]), 6), (2, T([2, 1]), 8)])
def test_subgroup_totals(p, G, expected):
    assert len(bruteforce.all_subgroups(p, G)) == expected
    assert sum(bruteforce.brute_subgroup_type_counts(p, G).values()) == expected


def test_injection_quotients():
    assert bruteforce.brute_inj_with_quotient(2, T([1]), T([2])) == {T([1]): 1}
    assert bruteforce.brute_inj_with_quotient(2, T([1]), T([1, 1])) == {T([1]): 3}


def test_inj_ratio_pairs():
    assert bruteforce.brute_inj_ratio(2, T([1]), 1) == (1, 2)


def test_bound_is_enforced():
    with pytest.raises(BruteForceBoundExceeded):
        bruteforce.check_bound(2, 9, 8)
    bruteforce.check_bound(2, 8, 8)
    with pytest.raises(BruteForceBoundExceeded):
        bruteforce.brute_linked_subgroups(2, T([3, 2]), T([2, 2]), bound_exp=8)


def test_closure_generates_cyclic_subgroup():
    g = bruteforce.group(5, T([2]))
    gen = g.encode(np.array([[5]]))
    assert len(g.closure(gen)) == 5
