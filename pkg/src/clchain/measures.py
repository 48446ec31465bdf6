"""Exact-rational measures on a window of group types.

Every measure is stored with the normalizing constant c_0 removed, so the
Cohen-Lenstra weight of G is simply 1/#Aut(G).  Constants such as c_0 are
only ever used through certified :class:`IntervalScalar` enclosures.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .counting import aut_count, sur_count
from .errors import WindowMismatch
from .grouptype import GroupType, ModuleType, WindowSpec, parse_type


@dataclass(frozen=True)
class IntervalScalar:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError("interval with lo > hi")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __mul__(self, other):
        if isinstance(other, IntervalScalar):
            prods = [a * b for a in (self.lo, self.hi) for b in (other.lo, other.hi)]
            return IntervalScalar(min(prods), max(prods))
        other = Fraction(other)
        a, b = self.lo * other, self.hi * other
        return IntervalScalar(min(a, b), max(a, b))

    __rmul__ = __mul__

    def __truediv__(self, other: "IntervalScalar") -> "IntervalScalar":
        if other.lo <= 0 <= other.hi:
            raise ZeroDivisionError("interval divisor contains 0")
        return self * IntervalScalar(1 / other.hi, 1 / other.lo)

    def reciprocal(self) -> "IntervalScalar":
        return IntervalScalar(Fraction(1), Fraction(1)) / self

    def to_json(self) -> list[str]:
        return [fraction_str(self.lo), fraction_str(self.hi)]

    def __repr__(self) -> str:
        return f"IntervalScalar(lower={float(self.lo)!r}, upper={float(self.hi)!r})"


def c_constant(p: int, k: int, terms: int) -> IntervalScalar:
    """Enclosure of prod_{i > k} (1 - p^-i) from its first ``terms`` factors."""
    if k < 0 or terms < 1:
        raise ValueError("need k >= 0 and terms >= 1")
    partial = Fraction(1)
    for i in range(k + 1, k + terms + 1):
        partial *= 1 - Fraction(1, p**i)
    # prod (1 - x_i) >= 1 - sum x_i, and sum_{i > k+terms} p^-i = p^-(k+terms)/(p-1)
    rest = Fraction(1, p ** (k + terms) * (p - 1))
    return IntervalScalar(partial * (1 - rest), partial)


def finite_product(p: int, k: int) -> Fraction:
    """prod_{i=1}^{k} (1 - p^-i), which is exactly c_0/c_k."""
    out = Fraction(1)
    for i in range(1, k + 1):
        out *= 1 - Fraction(1, p**i)
    return out


@lru_cache(maxsize=None)
def mu0_unnormalized(p: int, G: GroupType) -> Fraction:
    return Fraction(1, aut_count(p, G))


def mu_k_unnormalized(p: int, H: ModuleType) -> Fraction:
    t = H.torsion
    return Fraction(1, t.order(p) ** H.free_rank * aut_count(p, t))


def fraction_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def parse_fraction(text: str) -> Fraction:
    return Fraction(text)


@dataclass
class WindowMeasure:
    """Finitely supported measure on window states.

    ``tail`` is the total absolute mass not represented by ``entries``; None
    means unknown (for instance a moment measure, which has infinite support).
    """

    window: WindowSpec
    entries: dict[GroupType, Fraction] = field(default_factory=dict)
    tail: Fraction | None = Fraction(0)

    def __post_init__(self):
        for G in self.entries:
            if G not in self.window:
                raise WindowMismatch(f"{G} lies outside window m={self.window.max_order_exp}")

    @property
    def p(self) -> int:
        return self.window.p

    def get(self, G: GroupType) -> Fraction:
        return self.entries.get(G, Fraction(0))

    def total(self) -> Fraction:
        return sum(self.entries.values(), Fraction(0))

    def l1(self) -> Fraction:
        return sum((abs(x) for x in self.entries.values()), Fraction(0))

    def scaled(self, c) -> "WindowMeasure":
        c = Fraction(c)
        tail = None if self.tail is None else abs(c) * self.tail
        return WindowMeasure(self.window, {G: c * x for G, x in self.entries.items() if x}, tail)

    def __add__(self, other: "WindowMeasure") -> "WindowMeasure":
        check_same_window(self, other)
        out = dict(self.entries)
        for G, x in other.entries.items():
            out[G] = out.get(G, Fraction(0)) + x
        tail = None if self.tail is None or other.tail is None else self.tail + other.tail
        return WindowMeasure(self.window, {G: x for G, x in out.items() if x}, tail)

    def __sub__(self, other: "WindowMeasure") -> "WindowMeasure":
        return self + other.scaled(-1)

    def restrict(self, window: WindowSpec) -> "WindowMeasure":
        if window.p != self.p or window.max_order_exp > self.window.max_order_exp:
            raise WindowMismatch("can only restrict to a smaller window at the same prime")
        kept = {G: x for G, x in self.entries.items() if G in window}
        dropped = sum((abs(x) for G, x in self.entries.items() if G not in window), Fraction(0))
        tail = None if self.tail is None else self.tail + dropped
        return WindowMeasure(window, kept, tail)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "max_order_exp": self.window.max_order_exp,
            "entries": {str(G): fraction_str(x) for G, x in sorted(self.entries.items())},
            "tail": None if self.tail is None else fraction_str(self.tail),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def from_json(cls, doc: dict) -> "WindowMeasure":
        w = WindowSpec(int(doc["p"]), int(doc["max_order_exp"]))
        entries = {parse_type(k): parse_fraction(v) for k, v in doc["entries"].items()}
        tail = None if doc.get("tail") is None else parse_fraction(doc["tail"])
        return cls(w, entries, tail)


def check_same_window(a: WindowMeasure, b: WindowMeasure) -> None:
    if a.window != b.window:
        raise WindowMismatch(f"windows differ: {a.window} vs {b.window}")


def point_mass(w: WindowSpec, G: GroupType, mass=1) -> WindowMeasure:
    return WindowMeasure(w, {G: Fraction(mass)}, Fraction(0))


def mu0_measure(w: WindowSpec) -> WindowMeasure:
    """c_0-stripped Cohen-Lenstra measure restricted to the window (tail unknown)."""
    return WindowMeasure(w, {G: mu0_unnormalized(w.p, G) for G in w.states}, None)


def moment_measure(F: GroupType, w: WindowSpec) -> WindowMeasure:
    """G -> #Sur(G,F)/#Aut(G) on the window; tail unknown."""
    p = w.p
    entries = {}
    for G in w.states:
        s = sur_count(p, G, F)
        if s:
            entries[G] = Fraction(s, aut_count(p, G))
    return WindowMeasure(w, entries, None)


def inner_product(a: WindowMeasure, b: WindowMeasure) -> Fraction:
    """sum a(G) b(G) #Aut(G): the weighted pairing with c_0 removed from both sides."""
    check_same_window(a, b)
    p = a.p
    return sum(
        (x * b.entries[G] * aut_count(p, G) for G, x in a.entries.items() if G in b.entries),
        Fraction(0),
    )


def l1_distance(a: WindowMeasure, b: WindowMeasure) -> Fraction:
    check_same_window(a, b)
    keys = set(a.entries) | set(b.entries)
    return sum((abs(a.get(G) - b.get(G)) for G in keys), Fraction(0))


def tail_gap(a: WindowMeasure, b: WindowMeasure) -> Fraction | None:
    """|tail_a - tail_b|, reported beside l1_distance; None when either is unknown."""
    if a.tail is None or b.tail is None:
        return None
    return abs(a.tail - b.tail)


def tv_distance(a: WindowMeasure, b: WindowMeasure) -> Fraction:
    return l1_distance(a, b) / 2
