"""Smith normal form over Z/p^N with a certification flag.

Pivoting always picks an entry of minimal p-adic valuation, scales it to an
exact power of p and clears its row and column.  The valuations are those of
the Z_p Smith form as long as every one of them is below N; a block that is
entirely 0 mod p^N leaves its valuations unresolved (reported as N).
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import Unresolved
from .grouptype import GroupType, ModuleType, make_type


@dataclass(frozen=True)
class SnfResult:
    valuations: tuple[int, ...]
    certified: bool
    precision: int


def valuation(x: int, p: int, cap: int) -> int:
    if x == 0:
        return cap
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def _reduce(M, p: int, N: int, track_cols: bool):
    q = p**N
    A = [[int(x) % q for x in row] for row in M]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    V = [[int(i == j) for j in range(cols)] for i in range(cols)] if track_cols else None
    vals: list[int] = []
    certified = True
    for s in range(min(rows, cols)):
        best = None
        for i in range(s, rows):
            Ai = A[i]
            for j in range(s, cols):
                x = Ai[j]
                if x:
                    v = valuation(x, p, N)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            vals.extend([N] * (min(rows, cols) - s))
            certified = False
            break
        v, i, j = best
        if i != s:
            A[s], A[i] = A[i], A[s]
        if j != s:
            for row in A:
                row[s], row[j] = row[j], row[s]
            if V is not None:
                for row in V:
                    row[s], row[j] = row[j], row[s]
        pv = p**v
        unit = A[s][s] // pv
        inv = pow(unit, -1, q)
        As = [(x * inv) % q for x in A[s]]
        A[s] = As
        for i in range(s + 1, rows):
            f = A[i][s] // pv
            if f:
                Ai = A[i]
                for c in range(s, cols):
                    Ai[c] = (Ai[c] - f * As[c]) % q
        for c in range(s + 1, cols):
            f = As[c] // pv
            if f:
                As[c] = 0
                if V is not None:
                    for row in V:
                        row[c] = (row[c] - f * row[s]) % q
        vals.append(v)
    return vals, certified, V


def snf_valuations(M, p: int, N: int) -> SnfResult:
    """Elementary-divisor valuations of M (a list of rows) over Z_p, read mod p^N."""
    vals, certified, _ = _reduce(M, p, N, track_cols=False)
    return SnfResult(tuple(sorted(vals)), certified, N)


def snf_with_column_transform(M, p: int, N: int):
    """Return (valuations in pivot order, certified, V) with M V = U^-1 D for some unimodular U.

    Column j of the reduced matrix carries valuation ``vals[j]``.
    """
    return _reduce(M, p, N, track_cols=True)


def cokernel_type(M, p: int, N: int) -> GroupType | ModuleType:
    """Cokernel of M : Z_p^cols -> Z_p^rows; a ModuleType when rows > cols."""
    rows = len(M)
    cols = len(M[0]) if rows else 0
    if cols > rows:
        raise ValueError("cokernel_type needs a square or tall matrix")
    res = snf_valuations(M, p, N)
    if not res.certified:
        raise Unresolved(f"elementary divisors not resolved at precision p^{N}")
    torsion = make_type(res.valuations)
    if rows > cols:
        return ModuleType(torsion, rows - cols)
    return torsion
