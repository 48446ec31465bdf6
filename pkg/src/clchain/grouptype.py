"""Isomorphism types of finite abelian p-groups and rank-k Z_p-modules.

A finite abelian p-group is ``Z/p^l1 + ... + Z/p^lr`` and is recorded by the
partition ``(l1 >= ... >= lr >= 1)``.  The prime is carried separately (by a
:class:`WindowSpec` or as a function argument) so that one ``GroupType`` can be
read at any prime.

Canonical order is graded by total exponent, then lexicographically
descending on the parts.  It is a linear extension of the quotient order.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache, total_ordering
from typing import Iterable, Iterator

from .errors import InvalidPartition


@total_ordering
@dataclass(frozen=True, eq=True)
class GroupType:
    parts: tuple[int, ...] = ()

    def __post_init__(self):
        parts = tuple(self.parts)
        if any(x < 1 for x in parts) or any(a < b for a, b in zip(parts, parts[1:])):
            raise InvalidPartition(f"not a canonical partition: {parts!r}")
        object.__setattr__(self, "parts", parts)

    @property
    def order_exp(self) -> int:
        return sum(self.parts)

    @property
    def rank(self) -> int:
        return len(self.parts)

    @property
    def exponent(self) -> int:
        """Largest part; the group is killed by p**exponent."""
        return self.parts[0] if self.parts else 0

    def is_trivial(self) -> bool:
        return not self.parts

    def order(self, p: int) -> int:
        return p ** self.order_exp

    @cached_property
    def sort_key(self) -> tuple:
        return (self.order_exp, tuple(-x for x in self.parts))

    def __lt__(self, other: "GroupType") -> bool:
        if not isinstance(other, GroupType):
            return NotImplemented
        return self.sort_key < other.sort_key

    def __str__(self) -> str:
        return ",".join(map(str, self.parts)) if self.parts else "0"

    def __repr__(self) -> str:
        return f"GroupType({str(self)})"

    def padded(self, length: int) -> tuple[int, ...]:
        return self.parts + (0,) * (length - len(self.parts))

    def multiplicities(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for x in self.parts:
            out[x] = out.get(x, 0) + 1
        return out


TRIVIAL = GroupType(())


def make_type(parts: Iterable[int]) -> GroupType:
    """Canonicalize an arbitrary list of exponents; zeros are dropped."""
    parts = list(parts)
    if any(x < 0 for x in parts):
        raise InvalidPartition(f"negative part in {parts!r}")
    return GroupType(tuple(sorted((x for x in parts if x), reverse=True)))


def parse_type(text: str) -> GroupType:
    """Parse ``"2,1"``; ``"0"`` and ``""`` give the trivial group."""
    text = text.strip()
    if text in ("", "0"):
        return TRIVIAL
    try:
        parts = [int(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise InvalidPartition(f"cannot parse group type {text!r}") from exc
    return make_type(parts)


def conjugate(t: GroupType) -> GroupType:
    if not t.parts:
        return TRIVIAL
    return GroupType(tuple(sum(1 for x in t.parts if x > j) for j in range(t.parts[0])))


def surjects_onto(src: GroupType, dst: GroupType) -> bool:
    """True iff ``dst`` is a quotient of ``src`` (componentwise <= after padding)."""
    if dst.rank > src.rank:
        return False
    return all(d <= s for d, s in zip(dst.parts, src.parts))


@dataclass(frozen=True)
class ModuleType:
    """Finitely generated Z_p-module: torsion part plus free rank."""

    torsion: GroupType
    free_rank: int = 0

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("free rank must be non-negative")

    def __str__(self) -> str:
        return f"{self.torsion}+Zp^{self.free_rank}" if self.free_rank else str(self.torsion)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


def partitions(n: int, largest: int | None = None) -> Iterator[tuple[int, ...]]:
    """Partitions of n in lexicographically descending order."""
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _window_states(m: int) -> tuple[GroupType, ...]:
    return tuple(GroupType(lam) for n in range(m + 1) for lam in partitions(n))


@dataclass(frozen=True)
class WindowSpec:
    """Truncated state space {G : |G| <= p^max_order_exp}."""

    p: int
    max_order_exp: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if self.max_order_exp < 0:
            raise ValueError("max_order_exp must be >= 0")

    @property
    def states(self) -> tuple[GroupType, ...]:
        return _window_states(self.max_order_exp)

    def __contains__(self, t: GroupType) -> bool:
        return t.order_exp <= self.max_order_exp

    def index(self) -> dict[GroupType, int]:
        return {t: i for i, t in enumerate(self.states)}


def enumerate_window(w: WindowSpec) -> list[GroupType]:
    return list(w.states)


def _sub_partitions(bound: tuple[int, ...], cap: int) -> Iterator[tuple[int, ...]]:
    if not bound:
        yield ()
        return
    top = min(cap, bound[0])
    yield ()
    for first in range(1, top + 1):
        for rest in _sub_partitions(bound[1:], first):
            yield (first,) + rest


@lru_cache(maxsize=None)
def _downset(parts: tuple[int, ...]) -> tuple[GroupType, ...]:
    cap = parts[0] if parts else 0
    return tuple(sorted(GroupType(mu) for mu in _sub_partitions(parts, cap)))


def downset(F: GroupType) -> list[GroupType]:
    """All quotient types of F (equivalently all subgroup types), canonical order."""
    return list(_downset(F.parts))
