"""Exact counts of maps between finite abelian p-groups.

All results are Python integers (or Fractions for ratios) and are memoized
per ``(p, types...)``.  ``lru_cache`` gives idempotent concurrent fills.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from . import bruteforce
from .grouptype import GroupType, conjugate, downset, surjects_onto


@dataclass(frozen=True)
class SubgroupTypeCount:
    """Raw number of injections sub -> ambient whose image has the given cotype."""

    ambient: GroupType
    sub: GroupType
    quotient: GroupType
    count: int


@lru_cache(maxsize=None)
def hom_count(p: int, A: GroupType, B: GroupType) -> int:
    return p ** sum(min(a, b) for a in A.parts for b in B.parts)


@lru_cache(maxsize=None)
def aut_count(p: int, A: GroupType) -> int:
    """|Aut(A)| = p^(sum conj^2) * prod over distinct parts prod_{j<=m}(1 - p^-j).

    Evaluated in integers: p^(sum conj^2 - sum m(m+1)/2) * prod (p^j - 1).
    """
    conj = conjugate(A).parts
    exp = sum(c * c for c in conj)
    out = 1
    for mult in A.multiplicities().values():
        exp -= mult * (mult + 1) // 2
        for j in range(1, mult + 1):
            out *= p**j - 1
    return out * p**exp


def gaussian_binomial(p: int, n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    num = den = 1
    for i in range(k):
        num *= p ** (n - i) - 1
        den *= p ** (i + 1) - 1
    return num // den


@lru_cache(maxsize=None)
def subgroup_count(p: int, ambient: GroupType, sub: GroupType) -> int:
    """Number of subgroups of ``ambient`` isomorphic to ``sub`` (Birkhoff's product)."""
    if not surjects_onto(ambient, sub):
        return 0
    lam = conjugate(ambient).parts
    mu = conjugate(sub).parts
    n = len(lam)
    lam_c = list(lam) + [0]
    mu_c = list(mu) + [0] * (n + 1 - len(mu))
    out = 1
    for i in range(n):
        out *= p ** (mu_c[i + 1] * (lam_c[i] - mu_c[i]))
        out *= gaussian_binomial(p, lam_c[i] - mu_c[i + 1], mu_c[i] - mu_c[i + 1])
    return out


@lru_cache(maxsize=None)
def sur_count(p: int, A: GroupType, B: GroupType) -> int:
    """#Sur(A,B) from Hom(A,B) = sum over subgroups S of B of #Sur(A,S)."""
    if not surjects_onto(A, B):
        return 0
    total = hom_count(p, A, B)
    for C in downset(B):
        if C != B:
            total -= subgroup_count(p, B, C) * sur_count(p, A, C)
    return total


def inj_count_with_quotient(
    p: int, B: GroupType, G: GroupType, bound_exp: int | None = None
) -> list[SubgroupTypeCount]:
    """Injections B -> G grouped by cotype, by explicit enumeration inside G."""
    counts = _inj_with_quotient(p, B, G, bruteforce.DEFAULT_BOUND_EXP if bound_exp is None else bound_exp)
    return [SubgroupTypeCount(G, B, q, n) for q, n in counts]


@lru_cache(maxsize=None)
def _inj_with_quotient(p: int, B: GroupType, G: GroupType, bound_exp: int) -> tuple[tuple[GroupType, int], ...]:
    if not surjects_onto(G, B):
        bruteforce.check_bound(p, G.order_exp, bound_exp)
        return ()
    counts = bruteforce.brute_inj_with_quotient(p, B, G, bound_exp)
    return tuple(sorted(counts.items()))


@lru_cache(maxsize=None)
def inj_ratio_qpzp(p: int, r: int, k: int) -> Fraction:
    """P(uniform hom from a rank-r group to (Q_p/Z_p)^k is injective)."""
    out = Fraction(1)
    for j in range(r):
        out *= 1 - Fraction(p**j, p**k)
    return out


def linked_subgroup_count(p: int, F1: GroupType, F2: GroupType, bound_exp: int | None = None) -> int:
    return _linked(p, F1, F2, bruteforce.DEFAULT_BOUND_EXP if bound_exp is None else bound_exp)


@lru_cache(maxsize=None)
def _linked(p: int, F1: GroupType, F2: GroupType, bound_exp: int) -> int:
    return bruteforce.brute_linked_subgroups(p, F1, F2, bound_exp)
