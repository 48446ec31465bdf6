"""Verification routines shared by the CLI and the acceptance suite.

Each routine returns :class:`CheckResult` records whose ``details`` are JSON
ready (rationals as "num/den" strings).
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction

from . import bruteforce
from .counting import (
    aut_count,
    hom_count,
    inj_ratio_qpzp,
    subgroup_count,
    sur_count,
)
from .grouptype import TRIVIAL, GroupType, ModuleType, WindowSpec, downset, parse_type, partitions
from .kernels import (
    chain_power,
    d_kernel,
    delta0_expectation,
    delta0_kernel,
    delta0_power_exact,
    delta0_quotient_form,
    delta0_quotient_row,
    delta0_row,
    delta0_small,
    dk_core,
    dstar_kernel,
)
from .measures import c_constant, fraction_str, l1_distance, moment_measure, mu_k_unnormalized, point_mass
from .randmat import ExperimentSpec, run_experiment
from .spectral import (
    convergence,
    curious_check,
    eigenvalue_multiplicities,
    spectrum_table,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}"


def types_up_to(n: int) -> list[GroupType]:
    return [GroupType(lam) for k in range(n + 1) for lam in partitions(k)]


def _timed(fn):
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------- reversibility


@_timed
def check_detailed_balance(p: int, m: int) -> CheckResult:
    """(1/Aut G) P(G -> G') = (1/Aut G') P(G' -> G) for every ordered pair in the window."""
    w = WindowSpec(p, m)
    rows = {G: delta0_kernel(p, G, w) for G in w.states}
    failures = []
    pairs = 0
    for G, H in itertools.product(w.states, repeat=2):
        pairs += 1
        lhs = Fraction(rows[G].probs.get(H, 0), aut_count(p, G))
        rhs = Fraction(rows[H].probs.get(G, 0), aut_count(p, H))
        if lhs != rhs:
            failures.append([str(G), str(H), fraction_str(lhs - rhs)])
    stochastic = all(r.total() == 1 for r in rows.values())
    positive_diag = all(rows[G].probs.get(G, 0) > 0 for G in w.states)
    return CheckResult(
        f"detailed balance p={p} m={m}",
        not failures and stochastic,
        {"pairs": pairs, "failures": failures[:10], "rows_stochastic": stochastic, "self_loops_positive": positive_diag},
    )


@_timed
def check_two_level_balance(p: int, m: int) -> CheckResult:
    """(1/Aut G) P_d*(G -> K+Z_p) = (p/(p-1)) mu_1(K+Z_p) P_d(K+Z_p -> G)."""
    w = WindowSpec(p, m)
    ratio = Fraction(p, p - 1)
    failures = []
    checked = 0
    for G in w.states:
        up = dstar_kernel(p, G).probs
        for K in downset(G):
            H = ModuleType(K, 1)
            lhs = Fraction(up.get(H, 0), aut_count(p, G))
            rhs = ratio * mu_k_unnormalized(p, H) * d_kernel(H, w).probs.get(G, 0)
            checked += 1
            if lhs != rhs:
                failures.append([str(G), str(K), fraction_str(lhs - rhs)])
    return CheckResult(f"d*/d adjointness p={p} m={m}", not failures, {"pairs": checked, "failures": failures[:10]})


# ---------------------------------------------------------------- duality


@_timed
def check_duality(p: int, max_exp: int) -> CheckResult:
    """Kernel of a uniform character and quotient by a uniform element agree, by brute force."""
    failures = []
    for F in types_up_to(max_exp):
        a = delta0_small(p, F, bound_exp=max(max_exp, bruteforce.DEFAULT_BOUND_EXP)).probs
        b = delta0_quotient_form(p, F, bound_exp=max(max_exp, bruteforce.DEFAULT_BOUND_EXP)).probs
        fast_ok = delta0_row(p, F) == a and delta0_quotient_row(p, F) == b
        if a != b or not fast_ok:
            failures.append(str(F))
    return CheckResult(
        f"character/element duality p={p} |F|<=p^{max_exp}",
        not failures,
        {"types": len(types_up_to(max_exp)), "failures": failures},
    )


# ---------------------------------------------------------------- moment basis


def _sur_rank_bound(p: int, F: GroupType):
    size = F.order(p)
    return lambda r: 0 if r < F.rank else size**r


@_timed
def check_basis(p: int, m: int, max_F_exp: int = 3, rel_width: float = 1e-6, start_extra: int = 10) -> CheckResult:
    """Enclosure of #Aut(G') (Delta_0 Moment[F])(G') contains sum_Q P(F/<f> = Q) #Sur(G',Q).

    The horizon grows until the enclosure width is at most rel_width of its value.
    """
    w = WindowSpec(p, m)
    failures = []
    widest = 0.0
    max_extra = 0
    checked = 0
    for F in types_up_to(max_F_exp):
        quot = delta0_quotient_row(p, F)
        for Gp in w.states:
            rhs = sum((x * sur_count(p, Gp, Q) for Q, x in quot.items()), Fraction(0))
            extra = start_extra
            while True:
                iv = delta0_expectation(p, Gp, lambda H, F=F: sur_count(p, H, F), _sur_rank_bound(p, F), Gp.order_exp + extra)
                scale = max(abs(iv.lo), Fraction(1, 10**30))
                if iv.width <= Fraction(rel_width) * scale or extra > 200:
                    break
                extra += 5
            checked += 1
            max_extra = max(max_extra, extra)
            rel = float(iv.width / scale)
            widest = max(widest, rel)
            if rhs not in iv or rel > rel_width:
                failures.append([str(F), str(Gp), fraction_str(rhs), [float(iv.lo), float(iv.hi)]])
    return CheckResult(
        f"moment basis image p={p} m={m} |F|<=p^{max_F_exp}",
        not failures,
        {"cases": checked, "max_relative_width": widest, "max_extra_horizon": max_extra, "failures": failures[:10]},
    )


# ---------------------------------------------------------------- eigen system


@_timed
def check_eigen(p: int, max_exp: int) -> CheckResult:
    rows = spectrum_table(p, max_exp, fast=False)
    exact = all(r["residual"] == 0 for r in rows)
    mult = eigenvalue_multiplicities(rows)
    expected = {Fraction(1, p**n): sum(1 for _ in partitions(n)) for n in range(max_exp + 1)}
    return CheckResult(
        f"eigenvectors p={p} |F|<=p^{max_exp}",
        exact and mult == expected,
        {
            "solves": len(rows),
            "all_residuals_zero": exact,
            "multiplicities": {fraction_str(k): v for k, v in sorted(mult.items(), reverse=True)},
        },
    )


# ---------------------------------------------------------------- curious formula and moments


@_timed
def check_curious(p: int, max_exp: int = 3, m: int | None = None, tol: float = 1e-3) -> CheckResult:
    """RHS equals the linked-subgroup count; with m given, c_0 * LHS partial is within tol of RHS."""
    Fs = types_up_to(max_exp)
    failures = []
    worst = 0.0
    cases = 0
    w = WindowSpec(p, m if m is not None else 0)
    for F1, F2 in itertools.combinations_with_replacement(Fs, 2):
        rep = curious_check(p, F1, F2, w)
        cases += 1
        ok = rep.rhs.denominator == 1 and rep.rhs == rep.subgroup_oracle
        if m is not None:
            gap = float(rep.relative_gap)
            worst = max(worst, gap)
            ok = ok and rep.monotone and gap <= tol and rep.lhs_times_c0.lo <= rep.rhs
        if not ok:
            failures.append([str(F1), str(F2), fraction_str(rep.rhs), rep.subgroup_oracle])
    label = f"curious formula p={p} |F|<=p^{max_exp}" + (f" m={m}" if m is not None else " (exact side)")
    details = {"pairs": cases, "failures": failures}
    if m is not None:
        details["max_relative_gap"] = worst
    return CheckResult(label, not failures, details)


@_timed
def check_moments(p: int, m: int, Bs: list[GroupType], tol: float = 1e-3) -> CheckResult:
    c0 = c_constant(p, 0, 60)
    out = {}
    ok = True
    for B in Bs:
        partials = []
        acc = Fraction(0)
        for n in range(m + 1):
            for lam in partitions(n):
                G = GroupType(lam)
                s = sur_count(p, G, B)
                if s:
                    acc += Fraction(s, aut_count(p, G))
            partials.append(acc)
        iv = c0 * acc
        monotone = all(a <= b for a, b in zip(partials, partials[1:]))
        good = monotone and iv.lo >= 1 - Fraction(tol) and iv.hi <= 1
        ok = ok and good
        out[str(B)] = {"interval": [float(iv.lo), float(iv.hi)], "gap": float(1 - iv.lo), "monotone": monotone}
    return CheckResult(f"moments are one p={p} m={m}", ok, out)


# ---------------------------------------------------------------- composability


@_timed
def check_two_step_exact(p: int, source: GroupType, m: int) -> CheckResult:
    """chain_power(2) equals a separate double sum over window rows, and sits under the exact law."""
    w = WindowSpec(p, m)
    chain = chain_power(point_mass(w, source), 2)
    hand: dict[GroupType, Fraction] = {}
    first = delta0_kernel(p, source, w)
    hand_tail = first.tail
    for G1, x in first.probs.items():
        row = delta0_kernel(p, G1, w)
        hand_tail += x * row.tail
        for G2, y in row.probs.items():
            hand[G2] = hand.get(G2, Fraction(0)) + x * y
    equal = chain.entries == {k: v for k, v in hand.items() if v} and chain.tail == hand_tail
    exact = delta0_power_exact(p, source, 2, w)
    sandwich = all(
        chain.get(G) <= exact.probs.get(G, 0) <= chain.get(G) + chain.tail for G in w.states
    )
    return CheckResult(
        f"two-step composition p={p} source={source} m={m}",
        equal and sandwich,
        {
            "chain_equals_double_sum": equal,
            "exact_within_chain_tail": sandwich,
            "chain_tail": fraction_str(chain.tail),
            "exact_tail": fraction_str(exact.tail),
        },
    )


@_timed
def check_composability_simulation(p: int, source: GroupType, samples: int, seed: int) -> CheckResult:
    spec = ExperimentSpec("composability", p=p, samples=samples, seed=seed, source=str(source))
    res = run_experiment(spec)
    return CheckResult(
        f"border(2,2) and border(1,1) twice vs exact two-step law p={p} source={source}",
        res.passed,
        res.to_json(),
    )


# ---------------------------------------------------------------- simulation vs exact


@_timed
def check_one_step_simulation(p: int, source: GroupType, samples: int, seed: int) -> CheckResult:
    spec = ExperimentSpec("delta0", p=p, samples=samples, seed=seed, source=str(source))
    res = run_experiment(spec)
    return CheckResult(f"bordered matrix vs exact row p={p} source={source}", res.passed, res.to_json())


# ---------------------------------------------------------------- convergence and limit lemma


@_timed
def check_convergence(p: int, m: int, steps: int, tol: float = 0.05, source: GroupType = TRIVIAL) -> CheckResult:
    rep = convergence(p, source, WindowSpec(p, m), steps)
    ratio = rep.fitted_ratio
    ok = abs(ratio - 1 / p) <= tol
    return CheckResult(
        f"TV decay ratio p={p} m={m} k<={steps}",
        ok,
        {
            "fitted_ratio": ratio,
            "target": 1 / p,
            "tv": [[float(iv.lo), float(iv.hi)] for iv in rep.tv],
            "ratios": rep.ratios,
        },
    )


@_timed
def check_limit_lemma(p: int, B: GroupType, m: int, k_max: int, tol: float = 1e-2) -> CheckResult:
    w = WindowSpec(p, m)
    target = moment_measure(B, w)
    prev = None
    monotone = True
    dists = []
    for k in range(1, k_max + 1):
        core = dk_core(p, B, k, w)
        if prev is not None:
            monotone = monotone and all(core.get(G) >= prev.get(G) for G in w.states)
        monotone = monotone and all(core.get(G) <= target.get(G) for G in w.states)
        dists.append(float(l1_distance(core, target)))
        prev = core
    return CheckResult(
        f"d^k limit p={p} B={B} m={m} k<={k_max}",
        monotone and dists[-1] <= tol,
        {"monotone": monotone, "l1_by_k": dists},
    )


# ---------------------------------------------------------------- counting oracle


@_timed
def check_counting_oracle(p: int, max_exp: int = 3) -> CheckResult:
    Ts = types_up_to(max_exp)
    failures = []
    for A in Ts:
        if aut_count(p, A) != bruteforce.brute_aut_count(p, A):
            failures.append(["aut", str(A)])
        sub_brute = bruteforce.brute_subgroup_type_counts(p, A)
        for C in downset(A):
            if subgroup_count(p, A, C) != sub_brute.get(C, 0):
                failures.append(["subgroups", str(A), str(C)])
        for B in Ts:
            if hom_count(p, A, B) != bruteforce.brute_hom_count(p, A, B):
                failures.append(["hom", str(A), str(B)])
            if sur_count(p, A, B) != bruteforce.brute_sur_count(p, A, B):
                failures.append(["sur", str(A), str(B)])
    return CheckResult(f"hom/aut/sur oracle p={p} |A|,|B|<=p^{max_exp}", not failures, {"types": len(Ts), "failures": failures})


@_timed
def check_inj_ratio_oracle(p: int, max_exp: int = 3, max_rank: int = 2, max_k: int = 3) -> CheckResult:
    failures = []
    cases = 0
    for F in types_up_to(max_exp):
        if F.rank > max_rank:
            continue
        for k in range(0, max_k + 1):
            inj, total = bruteforce.brute_inj_ratio(p, F, k)
            cases += 1
            if Fraction(inj, total) != inj_ratio_qpzp(p, F.rank, k):
                failures.append([str(F), k, f"{inj}/{total}"])
    return CheckResult(f"injection ratio oracle p={p} rank<={max_rank} k<={max_k}", not failures, {"cases": cases, "failures": failures})


def parse_types(text: str) -> list[GroupType]:
    """Semicolon-separated list of types, e.g. "0;1;2;1,1"."""
    return [parse_type(tok) for tok in text.split(";")]
