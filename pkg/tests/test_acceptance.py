"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Lines are written with output capture disabled so they appear in a plain
``pytest`` run.  Runtime targets are reported next to the measured time; they
are targets for a desktop machine and are not asserted.
"""

import time
from functools import partial

import pytest

from clchain.checks import (
    check_basis,
    check_composability_simulation,
    check_convergence,
    check_counting_oracle,
    check_curious,
    check_detailed_balance,
    check_duality,
    check_eigen,
    check_inj_ratio_oracle,
    check_limit_lemma,
    check_moments,
    check_one_step_simulation,
    check_two_level_balance,
    check_two_step_exact,
)
from clchain.grouptype import TRIVIAL, make_type

SAMPLES = 100_000


@pytest.fixture
def report(capsys):
    """Run zero-argument check callables, print one line for the criterion, return the overall verdict."""

    def _report(number: int, title: str, target_seconds: float, checks):
        t = time.perf_counter()
        results = [run() for run in checks]
        elapsed = time.perf_counter() - t
        ok = all(r.passed for r in results)
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({elapsed:.1f}s, target {target_seconds:.0f}s)")
            for r in results:
                print(f"    {r.line()}")
                if not r.passed:
                    print(f"      {r.details}")
        return ok

    return _report


def test_criterion_01_detailed_balance(report):
    checks = [
        partial(fn, p, m)
        for p, m in [(2, 6), (3, 5)]
        for fn in (check_detailed_balance, check_two_level_balance)
    ]
    assert report(1, "exact detailed balance", 120, checks)


def test_criterion_02_duality(report):
    assert report(2, "character-kernel and element-quotient laws agree, |F| <= p^4", 60, [partial(check_duality, p, 4) for p in (2, 3)])


def test_criterion_03_moment_basis(report):
    checks = [partial(check_basis, p, 8, 3, rel_width=1e-6) for p in (2, 3)]
    assert report(3, "one step of a moment measure, m = 8, width <= 1e-6 relative", 300, checks)


def test_criterion_04_eigen_system(report):
    assert report(4, "triangular eigenvectors and spectrum multiplicities, |F| <= p^4", 60, [partial(check_eigen, p, 4) for p in (2, 3)])


def test_criterion_05_curious_formula(report):
    checks = [partial(check_curious, 2, 3, m=16, tol=1e-3), partial(check_curious, 3, 3, m=None)]
    assert report(5, "pairing of moments: exact side p = 2, 3 and window sum m = 16 at p = 2", 300, checks)


def test_criterion_06_moments_are_one(report):
    Bs = [TRIVIAL, make_type([1]), make_type([2]), make_type([1, 1])]
    assert report(6, "c0 * window sums of #Sur(G,B)/#Aut(G) in [1 - 1e-3, 1], m = 16", 60, [partial(check_moments, 2, 16, Bs, 1e-3)])


def test_criterion_07_one_step_simulation(report):
    sources = [TRIVIAL, make_type([1]), make_type([2, 1])]
    checks = [partial(check_one_step_simulation, 2, G, SAMPLES, seed=7) for G in sources]
    assert report(7, "bordered random matrices vs exact one-step rows, 1e5 samples", 120, checks)


def test_criterion_08_composability(report):
    checks = [
        partial(check_two_step_exact, 2, TRIVIAL, 6),
        partial(check_two_step_exact, 2, make_type([1]), 6),
        partial(check_two_step_exact, 3, make_type([1]), 5),
        partial(check_composability_simulation, 2, make_type([1]), SAMPLES, seed=8),
    ]
    assert report(8, "two-step law: exact composition and border(2,2) simulation, 1e5 samples", 180, checks)


def test_criterion_09_convergence(report):
    checks = [partial(check_convergence, p, 10, 15, tol=0.05) for p in (2, 3)]
    assert report(9, "TV decay ratio within 0.05 of 1/p, m = 10, k <= 15", 120, checks)


def test_criterion_10_limit_lemma(report):
    assert report(10, "d^k from B + Z_p^k increases to Moment[(1)], L1 <= 1e-2 at k = 10", 60, [partial(check_limit_lemma, 2, make_type([1]), 6, 10, 1e-2)])


def test_criterion_11_counting_oracles(report):
    checks = [
        partial(fn, p, 3)
        for p in (2, 3)
        for fn in (check_counting_oracle, check_inj_ratio_oracle)
    ]
    assert report(11, "closed-form counts equal brute-force counts", 120, checks)
