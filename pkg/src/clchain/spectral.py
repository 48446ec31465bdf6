"""Moment-basis spectral theory of the chain.

The random-character operator is upper triangular on the quotient downset
of any F, with diagonal 1/|F'|.  Its triangular eigenvectors e_F, pushed
through the moment map, are eigenmeasures E_F of the chain with eigenvalue
1/|F|.  All linear algebra here is rational; floats appear only in
diagnostics (angles, decay ratios).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .counting import aut_count, linked_subgroup_count, sur_count
from .grouptype import GroupType, WindowSpec, downset, partitions
from .kernels import (
    chain_power,
    delta0_expectation,
    delta0_kernel,
    delta0_power_exact,
    delta0_quotient_form,
    delta0_quotient_row,
)
from .measures import IntervalScalar, WindowMeasure, c_constant, inner_product, moment_measure


@dataclass
class DownsetMatrix:
    F: GroupType
    basis: list[GroupType]
    entries: list[list[Fraction]]

    def is_upper_triangular(self) -> bool:
        n = len(self.basis)
        return all(self.entries[i][j] == 0 for i in range(n) for j in range(i))

    def apply(self, coeffs: dict[GroupType, Fraction]) -> dict[GroupType, Fraction]:
        out = {}
        for i, Fi in enumerate(self.basis):
            s = sum((self.entries[i][j] * coeffs.get(Fj, 0) for j, Fj in enumerate(self.basis)), Fraction(0))
            if s:
                out[Fi] = s
        return out


@dataclass
class EigenVector:
    F: GroupType
    coeffs: dict[GroupType, Fraction]
    eigenvalue: Fraction


def delta0_downset_matrix(p: int, F: GroupType, fast: bool = False, bound_exp: int | None = None) -> DownsetMatrix:
    """Column F' is the law of F'/<f> for uniform f, written in the downset basis of F."""
    basis = downset(F)
    index = {G: i for i, G in enumerate(basis)}
    n = len(basis)
    entries = [[Fraction(0)] * n for _ in range(n)]
    for j, Fj in enumerate(basis):
        col = delta0_quotient_row(p, Fj) if fast else delta0_quotient_form(p, Fj, bound_exp).probs
        for Q, x in col.items():
            entries[index[Q]][j] = x
    return DownsetMatrix(F, basis, entries)


def e_vector(p: int, F: GroupType, fast: bool = False, bound_exp: int | None = None) -> EigenVector:
    """Triangular eigenvector with leading coefficient 1 at F, by back-substitution."""
    M = delta0_downset_matrix(p, F, fast, bound_exp)
    lam = Fraction(1, F.order(p))
    n = len(M.basis)
    x = [Fraction(0)] * n
    x[n - 1] = Fraction(1)
    for i in range(n - 2, -1, -1):
        pivot = M.entries[i][i] - lam
        # strict quotients are strictly smaller, so pivot = 1/|F_i| - 1/|F| > 0
        s = sum((M.entries[i][j] * x[j] for j in range(i + 1, n)), Fraction(0))
        x[i] = -s / pivot
    return EigenVector(F, {G: c for G, c in zip(M.basis, x) if c}, lam)


def eigen_residual(p: int, ev: EigenVector, fast: bool = False) -> dict[GroupType, Fraction]:
    """(M - eigenvalue) e, exactly; empty when e is an eigenvector."""
    M = delta0_downset_matrix(p, ev.F, fast)
    image = M.apply(ev.coeffs)
    out = {}
    for G in M.basis:
        r = image.get(G, Fraction(0)) - ev.eigenvalue * ev.coeffs.get(G, Fraction(0))
        if r:
            out[G] = r
    return out


def E_measure(p: int, F: GroupType, w: WindowSpec, fast: bool = False) -> WindowMeasure:
    ev = e_vector(p, F, fast)
    out = WindowMeasure(w, {}, None)
    for Fp, c in ev.coeffs.items():
        out = out + moment_measure(Fp, w).scaled(c)
    return out


@dataclass
class EigenMeasureCheck:
    F: GroupType
    eigenvalue: Fraction
    intervals: dict[GroupType, IntervalScalar]
    l1_bound: Fraction
    contains_zero: bool


def eigenmeasure_check(p: int, F: GroupType, w: WindowSpec, extra_horizon: int = 10, fast: bool = True) -> EigenMeasureCheck:
    """Enclose (Delta_0 E_F - E_F/|F|)(G') on the window.

    By reversibility #Aut(G') (Delta_0 nu)(G') = E[#Aut * nu at one step from G'],
    and #Aut * E_F = sum_F' e_F(F') #Sur(., F'), a finite signed sum of
    non-negative functions, each enclosed by :func:`delta0_expectation`.
    """
    ev = e_vector(p, F, fast)
    EF = E_measure(p, F, w, fast)
    intervals = {}
    bound = Fraction(0)
    ok = True
    for Gp in w.states:
        horizon = Gp.order_exp + extra_horizon
        lo = hi = Fraction(0)
        for Fp, c in ev.coeffs.items():
            iv = delta0_expectation(
                p, Gp, lambda H, Fp=Fp: sur_count(p, H, Fp), _sur_rank_bound(p, Fp), horizon
            )
            a, b = c * iv.lo, c * iv.hi
            lo += min(a, b)
            hi += max(a, b)
        scale = Fraction(1, aut_count(p, Gp))
        target = ev.eigenvalue * EF.get(Gp)
        iv = IntervalScalar(lo * scale - target, hi * scale - target)
        intervals[Gp] = iv
        ok = ok and (0 in iv)
        bound += max(abs(iv.lo), abs(iv.hi))
    return EigenMeasureCheck(F, ev.eigenvalue, intervals, bound, ok)


def _sur_rank_bound(p: int, F: GroupType):
    size = F.order(p)

    def bound(r: int) -> int:
        # #Sur(G,F) <= #Hom(G,F) <= |F|^rank(G), and vanishes when rank(G) < rank(F)
        return 0 if r < F.rank else size**r

    return bound


def spectrum_table(p: int, max_exp: int, fast: bool = True) -> list[dict]:
    """One row per F with |F| <= p^max_exp: eigenvalue and exact solve residual."""
    rows = []
    for n in range(max_exp + 1):
        for lam in partitions(n):
            F = GroupType(lam)
            ev = e_vector(p, F, fast)
            res = eigen_residual(p, ev, fast)
            rows.append({"F": F, "eigenvalue": ev.eigenvalue, "residual": sum(map(abs, res.values()), Fraction(0))})
    return rows


def eigenvalue_multiplicities(rows: list[dict]) -> dict[Fraction, int]:
    out: dict[Fraction, int] = {}
    for r in rows:
        out[r["eigenvalue"]] = out.get(r["eigenvalue"], 0) + 1
    return out


# ---------------------------------------------------------------- curious formula and Gram


@dataclass
class CuriousReport:
    F1: GroupType
    F2: GroupType
    lhs_partial: Fraction
    lhs_times_c0: IntervalScalar
    rhs: Fraction
    subgroup_oracle: int | None
    partials: list[Fraction] = field(default_factory=list)

    @property
    def monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.partials, self.partials[1:]))

    @property
    def relative_gap(self) -> Fraction:
        """Upper bound on |c_0 * LHS - RHS| / RHS from the interval ends."""
        return max(abs(self.rhs - self.lhs_times_c0.lo), abs(self.lhs_times_c0.hi - self.rhs)) / self.rhs


def curious_rhs(p: int, F1: GroupType, F2: GroupType) -> Fraction:
    common = set(downset(F1)) & set(downset(F2))
    return sum(
        (Fraction(sur_count(p, F1, G) * sur_count(p, F2, G), aut_count(p, G)) for G in common),
        Fraction(0),
    )


def curious_partials(p: int, F1: GroupType, F2: GroupType, m: int) -> list[Fraction]:
    """Cumulative LHS sums over windows 0..m."""
    out = []
    acc = Fraction(0)
    for n in range(m + 1):
        for lam in partitions(n):
            G = GroupType(lam)
            s1 = sur_count(p, G, F1)
            if s1:
                acc += Fraction(s1 * sur_count(p, G, F2), aut_count(p, G))
        out.append(acc)
    return out


def curious_check(p: int, F1: GroupType, F2: GroupType, w: WindowSpec, oracle: bool = True, c0_terms: int = 60) -> CuriousReport:
    partials = curious_partials(p, F1, F2, w.max_order_exp)
    c0 = c_constant(p, 0, c0_terms)
    lhs = partials[-1]
    rhs = curious_rhs(p, F1, F2)
    count = linked_subgroup_count(p, F1, F2) if oracle else None
    return CuriousReport(F1, F2, lhs, c0 * lhs, rhs, count, partials)


@dataclass
class GramReport:
    types: list[GroupType]
    window_gram: list[list[IntervalScalar]]
    exact_gram: list[list[Fraction]]

    def max_relative_gap(self) -> float:
        worst = 0.0
        for row_w, row_e in zip(self.window_gram, self.exact_gram):
            for iv, x in zip(row_w, row_e):
                worst = max(worst, float(max(abs(x - iv.lo), abs(iv.hi - x)) / x))
        return worst

    def symmetric(self) -> bool:
        n = len(self.types)
        return all(self.exact_gram[i][j] == self.exact_gram[j][i] for i in range(n) for j in range(n))


def fourier_gram(p: int, Fs: list[GroupType], w: WindowSpec, c0_terms: int = 60) -> GramReport:
    """Gram matrix of the moment images: c_0-weighted window sums vs the exact finite sums."""
    c0 = c_constant(p, 0, c0_terms)
    n = len(Fs)
    win = [[None] * n for _ in range(n)]
    exact = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            ip = inner_product(moment_measure(Fs[i], w), moment_measure(Fs[j], w))
            win[i][j] = win[j][i] = c0 * ip
            exact[i][j] = exact[j][i] = curious_rhs(p, Fs[i], Fs[j])
    return GramReport(list(Fs), win, exact)


# ---------------------------------------------------------------- leading term and decay


def e_expansion(p: int, nu: dict[GroupType, Fraction], fast: bool = True) -> dict[GroupType, Fraction]:
    """Coefficients a_F with nu = sum a_F e_F (peel off the largest support point first)."""
    rest = {G: Fraction(x) for G, x in nu.items() if x}
    out = {}
    while rest:
        F = max(rest)
        a = rest[F]
        out[F] = a
        for G, c in e_vector(p, F, fast).coeffs.items():
            rest[G] = rest.get(G, Fraction(0)) - a * c
            if rest[G] == 0:
                del rest[G]
    return out


@dataclass
class LeadingTermReport:
    nu: dict[GroupType, Fraction]
    T: int
    coefficients: dict[GroupType, Fraction]
    steps: list[int]
    angles: list[float]
    chain_angles: list[float]

    @property
    def shrinking(self) -> bool:
        return all(b <= a for a, b in zip(self.angles, self.angles[1:]))


def _weighted_angle(p: int, x: WindowMeasure, y: WindowMeasure) -> float:
    xy = float(inner_product(x, y))
    xx = float(inner_product(x, x))
    yy = float(inner_product(y, y))
    if xx == 0 or yy == 0:
        return math.pi / 2
    return math.acos(max(-1.0, min(1.0, xy / math.sqrt(xx * yy))))


def leading_term(p: int, nu: dict[GroupType, Fraction], steps: list[int], w: WindowSpec) -> LeadingTermReport:
    """Compare Delta_0^N nu with sum_{|F| = T} a_F E_F on the window.

    ``angles`` use the leakage-free d^N route; ``chain_angles`` use the
    window-truncated chain power and so carry truncation error.
    """
    coeffs = e_expansion(p, nu)
    T = min(F.order(p) for F in coeffs)
    predicted = WindowMeasure(w, {}, None)
    for F, a in coeffs.items():
        if F.order(p) == T:
            predicted = predicted + E_measure(p, F, w, fast=True).scaled(a)
    angles, chain_angles = [], []
    start = WindowMeasure(w, {G: Fraction(x) for G, x in nu.items() if x}, Fraction(0))
    current = start
    done = 0
    for N in steps:
        exact = WindowMeasure(w, {}, Fraction(0))
        for G, x in nu.items():
            exact = exact + delta0_power_exact(p, G, N, w).as_measure().scaled(x)
        angles.append(_weighted_angle(p, exact, predicted))
        current = chain_power(current, N - done)
        done = N
        chain_angles.append(_weighted_angle(p, current, predicted))
    return LeadingTermReport(dict(nu), T, coeffs, list(steps), angles, chain_angles)


@dataclass
class ConvergenceReport:
    p: int
    source: GroupType
    steps: list[int]
    tv: list[IntervalScalar]
    ratios: list[float]

    @property
    def fitted_ratio(self) -> float:
        """Least-squares slope of log TV against k over the second half of the run."""
        ks = np.array(self.steps, dtype=float)
        ys = np.log([float((iv.lo + iv.hi) / 2) for iv in self.tv])
        half = len(ks) // 2
        slope = np.polyfit(ks[half:], ys[half:], 1)[0]
        return float(math.exp(slope))


def tv_to_stationary(p: int, row_probs: dict[GroupType, Fraction], w: WindowSpec, c0: IntervalScalar) -> IntervalScalar:
    """Enclosure of (1/2) sum_window |P(G) - c_0/#Aut(G)| with c_0 in an interval."""
    lo = hi = Fraction(0)
    for G in w.states:
        x = row_probs.get(G, Fraction(0))
        inv = Fraction(1, aut_count(p, G))
        a, b = x - c0.hi * inv, x - c0.lo * inv
        hi += max(abs(a), abs(b))
        lo += 0 if a <= 0 <= b else min(abs(a), abs(b))
    return IntervalScalar(lo / 2, hi / 2)


def convergence(p: int, source: GroupType, w: WindowSpec, max_steps: int, c0_terms: int = 80) -> ConvergenceReport:
    """TV(Delta_0^k delta_source, c_0/#Aut on the window) for k = 1..max_steps, exact route."""
    c0 = c_constant(p, 0, c0_terms)
    steps = list(range(1, max_steps + 1))
    tv = [tv_to_stationary(p, delta0_power_exact(p, source, k, w).probs, w, c0) for k in steps]
    mids = [float((iv.lo + iv.hi) / 2) for iv in tv]
    ratios = [b / a for a, b in zip(mids, mids[1:])]
    return ConvergenceReport(p, source, steps, tv, ratios)


@dataclass
class GapEstimate:
    ratios: list[float]
    top_eigenvalue: float
    estimate: float


def spectral_gap_estimate(w: WindowSpec, N: int, seed: int = 0) -> GapEstimate:
    """Power iteration on the symmetrized truncated chain, deflating the top direction.

    With weights a = 1/#Aut, S = A^{1/2} P A^{-1/2} is symmetric by detailed
    balance; its top eigenvector approximates sqrt(a).
    """
    p = w.p
    states = w.states
    idx = {G: i for i, G in enumerate(states)}
    n = len(states)
    P = np.zeros((n, n))
    for G in states:
        for H, x in delta0_kernel(p, G, w).probs.items():
            P[idx[G], idx[H]] = float(x)
    sq = np.sqrt([1.0 / aut_count(p, G) for G in states])
    S = (sq[:, None] * P) / sq[None, :]
    S = (S + S.T) / 2
    top = sq / np.linalg.norm(sq)
    for _ in range(200):
        nxt = S @ top
        top_val = float(np.linalg.norm(nxt))
        top = nxt / top_val
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n)
    x -= (x @ top) * top
    x /= np.linalg.norm(x)
    ratios = []
    for _ in range(N):
        y = S @ x
        y -= (y @ top) * top
        r = float(np.linalg.norm(y))
        ratios.append(r)
        x = y / r
    return GapEstimate(ratios, top_val, ratios[-1])
