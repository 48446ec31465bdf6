"""Explicit finite abelian p-groups for brute-force oracles.

Elements of ``Z/p^l1 + ... + Z/p^lr`` are coordinate rows of an integer
array; a subgroup is the sorted array of its element codes (mixed radix).
Nothing here uses a counting formula: homomorphisms, subgroups and quotient
types are found by enumeration.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .errors import BruteForceBoundExceeded
from .grouptype import GroupType, conjugate, make_type

DEFAULT_BOUND_EXP = 8


def check_bound(p: int, order_exp: int, bound_exp: int | None) -> None:
    bound_exp = DEFAULT_BOUND_EXP if bound_exp is None else bound_exp
    if order_exp > bound_exp:
        raise BruteForceBoundExceeded(
            f"group of order {p}^{order_exp} exceeds brute-force bound {p}^{bound_exp}"
        )


class AbelianPGroup:
    def __init__(self, p: int, t: GroupType):
        self.p = p
        self.type = t
        self.rank = t.rank
        self.mods = np.array([p**x for x in t.parts], dtype=np.int64)
        self.size = p**t.order_exp
        # mixed-radix weights: code = sum coords[i] * radix[i]
        radix = np.ones(self.rank, dtype=np.int64)
        for i in range(self.rank - 2, -1, -1):
            radix[i] = radix[i + 1] * self.mods[i + 1]
        self.radix = radix

    def encode(self, coords: np.ndarray) -> np.ndarray:
        if self.rank == 0:
            return np.zeros(coords.shape[:-1], dtype=np.int64)
        return coords @ self.radix

    def decode(self, codes: np.ndarray) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        return (codes[..., None] // self.radix) % self.mods

    def elements(self) -> np.ndarray:
        return self.decode(np.arange(self.size, dtype=np.int64)).reshape(self.size, self.rank)

    def torsion(self, e: int) -> np.ndarray:
        """Coordinates of every element killed by p**e."""
        axes = []
        for lam in self.type.parts:
            step = self.p ** (lam - min(lam, e))
            axes.append(np.arange(0, self.p**lam, step, dtype=np.int64))
        if not axes:
            return np.zeros((1, 0), dtype=np.int64)
        grid = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in grid], axis=1)

    def add(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return (a + b) % self.mods

    def element_order_exp(self, x: np.ndarray) -> int:
        e = 0
        y = np.array(x, dtype=np.int64) % self.mods
        while y.any():
            y = (y * self.p) % self.mods
            e += 1
        return e

    def closure(self, gens: np.ndarray, base: np.ndarray | None = None) -> np.ndarray:
        """Sorted codes of the subgroup generated by ``base`` codes and ``gens`` coords."""
        if self.rank == 0:
            return np.zeros(1, dtype=np.int64)
        elems = np.zeros((1, self.rank), dtype=np.int64) if base is None else self.decode(base)
        for g in np.atleast_2d(gens):
            o = self.p ** self.element_order_exp(g)
            mult = (np.arange(o, dtype=np.int64)[:, None] * g) % self.mods
            elems = (elems[:, None, :] + mult[None, :, :]).reshape(-1, self.rank) % self.mods
            elems = self.decode(np.unique(self.encode(elems))).reshape(-1, self.rank)
        return np.unique(self.encode(elems))

    def subgroup_type(self, codes: np.ndarray) -> GroupType:
        """Type of a subgroup from the sizes of its p^j-torsion layers."""
        if self.rank == 0:
            return GroupType(())
        elems = self.decode(codes).reshape(-1, self.rank)
        logs = [0]
        j = 0
        while logs[-1] < _log(self.p, len(codes)):
            j += 1
            killed = ((elems * self.p**j) % self.mods == 0).all(axis=1).sum()
            logs.append(_log(self.p, int(killed)))
        conj = [logs[i + 1] - logs[i] for i in range(len(logs) - 1)]
        return conjugate(GroupType(tuple(x for x in conj if x)))

    def quotient_type(self, codes: np.ndarray) -> GroupType:
        """Type of G/S from |p^j (G/S)| = |p^j G| |S| / |p^j G cap S| / |S|."""
        if self.rank == 0:
            return GroupType(())
        elems = self.decode(codes).reshape(-1, self.rank)
        s_log = _log(self.p, len(codes))
        sizes = []
        j = 0
        while True:
            pjg_log = sum(max(lam - j, 0) for lam in self.type.parts)
            steps = np.array([self.p ** min(j, lam) for lam in self.type.parts], dtype=np.int64)
            inter = int((elems % steps == 0).all(axis=1).sum()) if self.rank else len(codes)
            q_log = pjg_log + s_log - _log(self.p, inter) - s_log
            sizes.append(q_log)
            if q_log == 0:
                break
            j += 1
        conj = [sizes[i] - sizes[i + 1] for i in range(len(sizes) - 1)]
        return conjugate(GroupType(tuple(x for x in conj if x)))


def _log(p: int, n: int) -> int:
    e = 0
    while n > 1:
        if n % p:
            raise ValueError(f"{n} is not a power of {p}")
        n //= p
        e += 1
    return e


@lru_cache(maxsize=None)
def group(p: int, t: GroupType) -> AbelianPGroup:
    return AbelianPGroup(p, t)


def iter_homs(p: int, A: GroupType, B: GroupType):
    """Yield generator-image tuples (rank(A) x rank(B) arrays) of every hom A -> B.

    Every tuple in B^rank(A) is tried and kept iff p^{a_i} b_i = 0.
    """
    GB = group(p, B)
    allb = GB.elements()
    ok = [allb[((allb * p**a) % GB.mods == 0).all(axis=1)] for a in A.parts]
    if A.rank == 0:
        yield np.zeros((0, B.rank), dtype=np.int64)
        return
    # filtering over the full product is the brute-force definition; the
    # per-coordinate prefilter above is the same test applied early.
    for combo in itertools.product(*ok):
        yield np.array(combo, dtype=np.int64).reshape(A.rank, B.rank)


def brute_hom_count(p: int, A: GroupType, B: GroupType) -> int:
    GB = group(p, B)
    allb = GB.elements()
    n = 1
    for a in A.parts:
        n *= int(((allb * p**a) % GB.mods == 0).all(axis=1).sum())
    return n


def brute_sur_count(p: int, A: GroupType, B: GroupType) -> int:
    GB = group(p, B)
    count = 0
    for imgs in iter_homs(p, A, B):
        if len(GB.closure(imgs)) == GB.size:
            count += 1
    return count


def brute_aut_count(p: int, A: GroupType) -> int:
    return brute_sur_count(p, A, A)


def brute_injections(p: int, B: GroupType, G: GroupType, bound_exp: int | None = None):
    """Yield (image-subgroup codes) for every injection B -> G."""
    check_bound(p, G.order_exp, bound_exp)
    GG = group(p, G)
    cands = [GG.torsion(b) for b in B.parts]
    target = p**B.order_exp
    if B.rank == 0:
        yield np.zeros(1, dtype=np.int64)
        return
    for combo in itertools.product(*cands):
        gens = np.array(combo, dtype=np.int64).reshape(B.rank, G.rank)
        sub = GG.closure(gens)
        if len(sub) == target:
            yield sub


def brute_inj_with_quotient(p: int, B: GroupType, G: GroupType, bound_exp: int | None = None) -> dict[GroupType, int]:
    GG = group(p, G)
    out: dict[GroupType, int] = {}
    for sub in brute_injections(p, B, G, bound_exp):
        q = GG.quotient_type(sub)
        out[q] = out.get(q, 0) + 1
    return out


def all_subgroups(p: int, G: GroupType) -> list[np.ndarray]:
    """Every subgroup of G as sorted code arrays, built up through index-p steps."""
    GG = group(p, G)
    coords = GG.elements()
    pcodes = GG.encode((coords * p) % GG.mods) if GG.rank else np.zeros(1, dtype=np.int64)
    zero = np.zeros(1, dtype=np.int64)
    seen = {zero.tobytes()}
    out = [zero]
    frontier = [zero]
    while frontier:
        nxt = []
        for S in frontier:
            inS = np.zeros(GG.size, dtype=bool)
            inS[S] = True
            cand = np.nonzero(inS[pcodes] & ~inS)[0]
            covered = inS.copy()
            Sc = coords[S]
            for g in cand:
                if covered[g]:
                    continue
                mult = (np.arange(p, dtype=np.int64)[:, None] * coords[g]) % GG.mods
                child = np.unique(GG.encode((Sc[:, None, :] + mult[None]).reshape(-1, GG.rank) % GG.mods))
                covered[child] = True
                key = child.tobytes()
                if key not in seen:
                    seen.add(key)
                    out.append(child)
                    nxt.append(child)
        frontier = nxt
    return out


def brute_subgroup_type_counts(p: int, G: GroupType) -> dict[GroupType, int]:
    GG = group(p, G)
    out: dict[GroupType, int] = {}
    for S in all_subgroups(p, G):
        t = GG.subgroup_type(S)
        out[t] = out.get(t, 0) + 1
    return out


def brute_linked_subgroups(p: int, F1: GroupType, F2: GroupType, bound_exp: int | None = None) -> int:
    """Subgroups of F1 x F2 whose projections to both factors are onto."""
    check_bound(p, F1.order_exp + F2.order_exp, bound_exp)
    prod = make_type(F1.parts + F2.parts)
    GG = group(p, prod)
    # coordinates of prod are sorted parts; locate each factor's coordinates
    order = sorted(range(F1.rank + F2.rank), key=lambda i: -(F1.parts + F2.parts)[i])
    pos = {orig: k for k, orig in enumerate(order)}
    idx1 = [pos[i] for i in range(F1.rank)]
    idx2 = [pos[F1.rank + i] for i in range(F2.rank)]
    coords = GG.elements()
    n1, n2 = p**F1.order_exp, p**F2.order_exp
    count = 0
    for S in all_subgroups(p, prod):
        if len(S) < max(n1, n2):
            continue
        el = coords[S]
        im1 = {tuple(r) for r in el[:, idx1]}
        if len(im1) != n1:
            continue
        im2 = {tuple(r) for r in el[:, idx2]}
        if len(im2) == n2:
            count += 1
    return count


def brute_inj_ratio(p: int, F: GroupType, k: int) -> tuple[int, int]:
    """(#Inj(F, (Q_p/Z_p)^k), |F|^k) by enumerating homs into (p^-e Z/Z)^k."""
    e = F.exponent
    target = make_type([e] * k)
    GT = group(p, target)
    GF = group(p, F)
    nonzero = GF.elements()[1:]
    cands = [GT.torsion(a) for a in F.parts]
    inj = total = 0
    if F.rank == 0:
        return 1, 1
    for combo in itertools.product(*cands):
        imgs = np.array(combo, dtype=np.int64).reshape(F.rank, k)
        total += 1
        vals = (nonzero @ imgs) % GT.mods if k else np.zeros((len(nonzero), 0), dtype=np.int64)
        if k and (vals != 0).any(axis=1).all():
            inj += 1
    return inj, total
