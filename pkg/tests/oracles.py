"""Independent oracles used only by the tests."""

from functools import lru_cache

from sympy import ZZ, Matrix
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import invariant_factors


@lru_cache(maxsize=None)
def partition_count(n: int) -> int:
    """Euler's pentagonal-number recurrence."""
    if n < 0:
        return 0
    if n == 0:
        return 1
    total = 0
    k = 1
    while True:
        g1 = k * (3 * k - 1) // 2
        g2 = k * (3 * k + 1) // 2
        if g1 > n:
            break
        sign = 1 if k % 2 else -1
        total += sign * (partition_count(n - g1) + partition_count(n - g2))
        k += 1
    return total


def p_adic_valuation(x: int, p: int) -> int:
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def integer_cokernel_valuations(rows: list[list[int]], p: int) -> list[int]:
    """p-parts of the integer invariant factors of a nonsingular square matrix."""
    dm = DomainMatrix.from_Matrix(Matrix(rows)).convert_to(ZZ)
    factors = invariant_factors(dm)
    return sorted(p_adic_valuation(abs(int(f)), p) for f in factors)
