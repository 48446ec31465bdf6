"""Exact one-step transition kernels of the chain and their powers.

Two routes exist for the random-character step on a finite group F:

* brute force (:func:`delta0_small`, :func:`delta0_quotient_form`) walks all
  |F| characters or elements of an explicit group;
* the fast route groups elements by their coordinate valuations.  Scaling a
  coordinate by a unit and permuting equal-exponent coordinates are
  automorphisms, so the output type only depends on that valuation pattern.

Kernel rows only materialize targets inside the window; the rest of the
mass is carried as an exact tail.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Callable

import numpy as np

from . import bruteforce
from .counting import aut_count, inj_count_with_quotient, inj_ratio_qpzp
from .errors import WindowMismatch
from .grouptype import TRIVIAL, GroupType, ModuleType, WindowSpec, conjugate, make_type
from .measures import IntervalScalar, WindowMeasure, finite_product, fraction_str
from .snf import snf_valuations


@dataclass
class KernelRow:
    source: GroupType | ModuleType
    window: WindowSpec
    probs: dict
    tail: Fraction = Fraction(0)

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0)) + self.tail

    def as_measure(self) -> WindowMeasure:
        return WindowMeasure(self.window, dict(self.probs), self.tail)

    def to_json(self) -> dict:
        doc = {"source": str(self.source)}
        doc.update(
            {
                "p": self.window.p,
                "max_order_exp": self.window.max_order_exp,
                "entries": {str(k): fraction_str(v) for k, v in sorted(self.probs.items(), key=_target_key)},
                "tail": fraction_str(self.tail),
            }
        )
        return doc


def _target_key(item):
    t = item[0]
    return t.torsion.sort_key if isinstance(t, ModuleType) else t.sort_key


# ---------------------------------------------------------------- valuation classes


@lru_cache(maxsize=None)
def valuation_classes(p: int, F: GroupType) -> tuple[tuple[tuple[int, ...], int], ...]:
    """Elements of F grouped by coordinate valuations, as (valuations, count).

    Valuation ``parts[i]`` stands for a zero coordinate.  Within a block of
    equal parts the valuations are sorted, so the classes are orbits of
    the diagonal-unit and block-permutation automorphisms.
    """
    blocks = []
    for lam, c in sorted(F.multiplicities().items(), reverse=True):
        options = []
        for combo in itertools.combinations_with_replacement(range(lam + 1), c):
            weight = factorial(c)
            for j in set(combo):
                n = combo.count(j)
                weight //= factorial(n)
                per = p ** (lam - j) - p ** (lam - j - 1) if j < lam else 1
                weight *= per**n
            options.append((combo, weight))
        blocks.append(options)
    out = []
    for pick in itertools.product(*blocks):
        vals = tuple(v for combo, _ in pick for v in combo)
        w = 1
        for _, weight in pick:
            w *= weight
        out.append((vals, w))
    return tuple(out)


def class_element(p: int, F: GroupType, vals: tuple[int, ...]) -> list[int]:
    return [p**v if v < lam else 0 for v, lam in zip(vals, F.parts)]


def character_kernel_type(F: GroupType, vals: tuple[int, ...]) -> GroupType:
    """Type of the kernel of the character x -> sum a_i x_i / p^{parts_i}, v(a_i) = vals_i.

    Uses |ker[p^j]| = |F[p^j]| / |image of F[p^j]|; the image is cyclic of
    order p^{max_i max(0, min(parts_i, j) - vals_i)}.
    """
    if F.is_trivial():
        return TRIVIAL
    logs = [0]
    for j in range(1, F.exponent + 1):
        torsion = sum(min(lam, j) for lam in F.parts)
        image = max(max(0, min(lam, j) - v) for lam, v in zip(F.parts, vals))
        logs.append(torsion - image)
    conj = [logs[j] - logs[j - 1] for j in range(1, len(logs))]
    return conjugate(GroupType(tuple(x for x in conj if x)))


def quotient_by_element_type(p: int, F: GroupType, f: list[int]) -> GroupType:
    """Type of F/<f> from the Smith form of [diag(p^parts) | f]."""
    if F.is_trivial():
        return TRIVIAL
    r = F.rank
    M = [[p**F.parts[i] if j == i else 0 for j in range(r)] + [f[i]] for i in range(r)]
    res = snf_valuations(M, p, F.order_exp + 1)
    return make_type(res.valuations)


@lru_cache(maxsize=None)
def _delta0_fast(p: int, F: GroupType) -> tuple[tuple[GroupType, Fraction], ...]:
    size = F.order(p)
    out: dict[GroupType, Fraction] = {}
    for vals, w in valuation_classes(p, F):
        K = character_kernel_type(F, vals)
        out[K] = out.get(K, Fraction(0)) + Fraction(w, size)
    return tuple(sorted(out.items()))


def delta0_row(p: int, F: GroupType) -> dict[GroupType, Fraction]:
    """Kernel type of a uniform character of F (fast valuation-class route)."""
    return dict(_delta0_fast(p, F))


@lru_cache(maxsize=None)
def _delta0_quotient_fast(p: int, F: GroupType) -> tuple[tuple[GroupType, Fraction], ...]:
    size = F.order(p)
    out: dict[GroupType, Fraction] = {}
    for vals, w in valuation_classes(p, F):
        Q = quotient_by_element_type(p, F, class_element(p, F, vals))
        out[Q] = out.get(Q, Fraction(0)) + Fraction(w, size)
    return tuple(sorted(out.items()))


def delta0_quotient_row(p: int, F: GroupType) -> dict[GroupType, Fraction]:
    """Type of F/<f> for uniform f (fast valuation-class route)."""
    return dict(_delta0_quotient_fast(p, F))


# ---------------------------------------------------------------- brute-force routes


def delta0_small(p: int, F: GroupType, bound_exp: int | None = None) -> KernelRow:
    """Kernel type of every character of an explicit copy of F, tallied."""
    bruteforce.check_bound(p, F.order_exp, bound_exp)
    w = WindowSpec(p, F.order_exp)
    if F.is_trivial():
        return KernelRow(F, w, {TRIVIAL: Fraction(1)})
    G = bruteforce.group(p, F)
    elems = G.elements()
    e = F.exponent
    scale = np.array([p ** (e - lam) for lam in F.parts], dtype=np.int64)
    size = F.order(p)
    out: dict[GroupType, Fraction] = {}
    # characters are indexed by elements a via x -> sum a_i x_i / p^{parts_i}
    for a in elems:
        mask = (elems @ (a * scale)) % p**e == 0
        K = G.subgroup_type(np.nonzero(mask)[0])
        out[K] = out.get(K, Fraction(0)) + Fraction(1, size)
    return KernelRow(F, w, out)


def delta0_quotient_form(p: int, F: GroupType, bound_exp: int | None = None) -> KernelRow:
    """Type of F/<f> for every element f of an explicit copy of F, tallied."""
    bruteforce.check_bound(p, F.order_exp, bound_exp)
    w = WindowSpec(p, F.order_exp)
    if F.is_trivial():
        return KernelRow(F, w, {TRIVIAL: Fraction(1)})
    G = bruteforce.group(p, F)
    size = F.order(p)
    out: dict[GroupType, Fraction] = {}
    for f in G.elements():
        Q = G.quotient_type(G.closure(f))
        out[Q] = out.get(Q, Fraction(0)) + Fraction(1, size)
    return KernelRow(F, w, out)


# ---------------------------------------------------------------- d*, d and their composite


def dstar_kernel(p: int, G: GroupType) -> KernelRow:
    """Z_p-extension by a uniform class: torsion is the kernel of a uniform character."""
    w = WindowSpec(p, G.order_exp)
    return KernelRow(G, w, {ModuleType(K, 1): x for K, x in _delta0_fast(p, G)})


def geometric_tail(p: int, V: int) -> Fraction:
    """P(v > V) for the Haar valuation law (1 - 1/p) p^-v; all mass when V < 0."""
    return Fraction(1) if V < 0 else Fraction(1, p ** (V + 1))


@lru_cache(maxsize=None)
def _quotient_free_part(p: int, K: GroupType, vals: tuple[int, ...], v: int) -> GroupType:
    # coker [[diag(p^K), k], [0, p^v]]; every divisor divides p^{|K| + v}
    r = K.rank
    k = class_element(p, K, vals)
    M = [[p**K.parts[i] if j == i else 0 for j in range(r)] + [k[i]] for i in range(r)]
    M.append([0] * r + [p**v])
    res = snf_valuations(M, p, K.order_exp + v + 1)
    return make_type(res.valuations)


@lru_cache(maxsize=None)
def _d_row(p: int, K: GroupType, m: int) -> tuple[tuple[tuple[GroupType, Fraction], ...], Fraction]:
    size = K.order(p)
    V = m - K.order_exp
    out: dict[GroupType, Fraction] = {}
    for v in range(V + 1):
        pv = Fraction(p - 1, p ** (v + 1))
        for vals, w in valuation_classes(p, K):
            Q = _quotient_free_part(p, K, vals, v)
            out[Q] = out.get(Q, Fraction(0)) + pv * Fraction(w, size)
    return tuple(sorted(out.items())), geometric_tail(p, V)


def d_kernel(H: ModuleType, w: WindowSpec) -> KernelRow:
    """Quotient of K + Z_p by a Haar element (k, p^v u); the unit u is absorbed."""
    if H.free_rank != 1:
        raise ValueError("d_kernel needs a module of free rank 1")
    probs, tail = _d_row(w.p, H.torsion, w.max_order_exp)
    return KernelRow(H, w, dict(probs), tail)


@lru_cache(maxsize=None)
def _delta0_kernel(p: int, G: GroupType, m: int):
    out: dict[GroupType, Fraction] = {}
    tail = Fraction(0)
    for K, x in _delta0_fast(p, G):
        probs, t = _d_row(p, K, m)
        for Q, y in probs:
            out[Q] = out.get(Q, Fraction(0)) + x * y
        tail += x * t
    return tuple(sorted(out.items())), tail


def delta0_kernel(p: int, G: GroupType, w: WindowSpec | None = None) -> KernelRow:
    """One step of the chain from G, restricted to window ``w``."""
    if w is None:
        raise ValueError("a window is required")
    if w.p != p:
        raise WindowMismatch("window prime differs from p")
    probs, tail = _delta0_kernel(p, G, w.max_order_exp)
    return KernelRow(G, w, dict(probs), tail)


def delta0_expectation(
    p: int,
    G: GroupType,
    func: Callable[[GroupType], int | Fraction],
    rank_bound: Callable[[int], Fraction | int],
    horizon: int,
):
    """Certified enclosure of E[func(one step from G)] for non-negative ``func``.

    Targets of order <= p^horizon are summed exactly.  The rest is bounded by
    rank_bound(r) >= func on groups of rank <= r; a step from torsion K
    lands on rank <= rank(K) + 1.
    """
    lo = Fraction(0)
    slack = Fraction(0)
    for K, x in _delta0_fast(p, G):
        probs, t = _d_row(p, K, horizon)
        for Q, y in probs:
            lo += x * y * func(Q)
        if t:
            slack += x * t * Fraction(rank_bound(K.rank + 1))
    return IntervalScalar(lo, lo + slack)


# ---------------------------------------------------------------- d^k from B + Z_p^k


def dk_core(p: int, B: GroupType, k: int, w: WindowSpec, bound_exp: int | None = None) -> WindowMeasure:
    """G -> sum over injections B -> G of inj_ratio(rank of cokernel, k) / #Aut(G).

    This is the law of d^k applied to B + Z_p^k with the factor c_0/c_k
    removed; it increases with k towards Sur(G,B)/Aut(G).
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    entries: dict[GroupType, Fraction] = {}
    for G in w.states:
        if G.order_exp < B.order_exp:
            continue
        acc = Fraction(0)
        for rec in inj_count_with_quotient(p, B, G, bound_exp):
            acc += rec.count * inj_ratio_qpzp(p, rec.quotient.rank, k)
        if acc:
            entries[G] = acc / aut_count(p, G)
    return WindowMeasure(w, entries, None)


def dk_from_base_kernel(p: int, B: GroupType, k: int, w: WindowSpec, bound_exp: int | None = None) -> KernelRow:
    """Law of d^k(B + Z_p^k) on the window; the tail is the exact leftover mass."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scale = finite_product(p, k)
    core = dk_core(p, B, k, w, bound_exp)
    probs = {G: scale * x for G, x in core.entries.items()}
    return KernelRow(ModuleType(B, k), w, probs, 1 - sum(probs.values(), Fraction(0)))


def iterate_delta0(p: int, G: GroupType, k: int) -> dict[GroupType, Fraction]:
    """Law of the kernel of a uniform map G -> (Q_p/Z_p)^k (k-fold character kernel)."""
    dist = {G: Fraction(1)}
    for _ in range(k):
        nxt: dict[GroupType, Fraction] = {}
        for F, x in dist.items():
            for K, y in _delta0_fast(p, F):
                nxt[K] = nxt.get(K, Fraction(0)) + x * y
        dist = nxt
    return dist


def delta0_power_exact(p: int, G: GroupType, k: int, w: WindowSpec, bound_exp: int | None = None) -> KernelRow:
    """k steps of the chain in one shot: d^k applied to (k-fold kernel) + Z_p^k.

    Unlike :func:`chain_power` this has no truncation leakage: mass that leaves
    the window and comes back is accounted for.
    """
    if k == 0:
        return KernelRow(G, w, {G: Fraction(1)} if G in w else {}, Fraction(0) if G in w else Fraction(1))
    if G.is_trivial():
        return _power_from_trivial(p, k, w)
    probs: dict[GroupType, Fraction] = {}
    for B, x in iterate_delta0(p, G, k).items():
        row = dk_from_base_kernel(p, B, k, w, bound_exp)
        for H, y in row.probs.items():
            probs[H] = probs.get(H, Fraction(0)) + x * y
    return KernelRow(G, w, probs, 1 - sum(probs.values(), Fraction(0)))


def _power_from_trivial(p: int, k: int, w: WindowSpec) -> KernelRow:
    # cokernel of a k x k Haar matrix; injections from 0 are trivial to count
    scale = finite_product(p, k)
    probs = {G: scale * inj_ratio_qpzp(p, G.rank, k) / aut_count(p, G) for G in w.states}
    probs = {G: x for G, x in probs.items() if x}
    return KernelRow(TRIVIAL, w, probs, 1 - sum(probs.values(), Fraction(0)))


# ---------------------------------------------------------------- pushforward


def apply_kernel(nu: WindowMeasure, step: Callable[[GroupType], KernelRow] | None = None) -> WindowMeasure:
    """Exact pushforward of nu; tail = nu.tail + sum |nu(G)| row(G).tail."""
    w = nu.window
    if step is None:
        step = lambda G: delta0_kernel(w.p, G, w)  # noqa: E731
    out: dict[GroupType, Fraction] = {}
    tail = Fraction(0) if nu.tail is None else nu.tail
    for G, x in nu.entries.items():
        row = step(G)
        if row.window != w:
            raise WindowMismatch("kernel row window differs from the measure window")
        for H, y in row.probs.items():
            out[H] = out.get(H, Fraction(0)) + x * y
        tail += abs(x) * row.tail
    return WindowMeasure(w, {H: y for H, y in out.items() if y}, None if nu.tail is None else tail)


def chain_power(nu: WindowMeasure, N: int, step: Callable[[GroupType], KernelRow] | None = None) -> WindowMeasure:
    for _ in range(N):
        nu = apply_kernel(nu, step)
    return nu
