"""Acceptance suite: one test per certified guarantee, at full sweep sizes.

Each test drives the corresponding claim runner from ``ratiobandits.certify``
at its pinned tolerance (zero tolerance for the exact-rational claims) and
prints a one-line verdict.  Expected total runtime is well under five
minutes on a laptop; the two claims with pinned runtime budgets assert them.
"""

from __future__ import annotations

import time

from ratiobandits.certify import (
    claim_budget_halving,
    claim_counterexample,
    claim_curve_oracle,
    claim_gittins_sandwich,
    claim_greedy_constant,
    claim_greedy_dominates_persistent,
    claim_horizon_sandwich,
    claim_ratio_policy_laws,
    claim_restart,
    claim_segment_bound,
    claim_simulation_fidelity,
    claim_switch_scale,
)

SEED = 0


def _verdict(number: int, title: str, rows) -> None:
    failures = [r for r in rows if not r.passed]
    status = "PASS" if not failures else "FAIL"
    print(f"[acceptance {number:>2}] {title}: {status} ({len(rows)} checks)")
    for row in failures[:10]:
        print(f"    FAIL {row.claim} | {row.instance} | lhs={row.lhs} rhs={row.rhs}")
    assert not failures, f"criterion {number} failed on {len(failures)} checks"


def test_01_no_exact_index_counterexample():
    started = time.perf_counter()
    rows = claim_counterexample()
    elapsed = time.perf_counter() - started
    _verdict(1, "no-exact-index counterexample, exact fractions", rows)
    assert elapsed < 1.0, f"counterexample took {elapsed:.3f}s, budget is 1s"


def test_02_curve_oracle_equivalence():
    started = time.perf_counter()
    rows = claim_curve_oracle(SEED, count=200)
    elapsed = time.perf_counter() - started
    _verdict(2, "profit curves equal enumeration envelopes (200 instances)", rows)
    assert elapsed < 60.0, f"curve sweep took {elapsed:.1f}s, budget is 60s"


def test_03_segment_bound():
    _verdict(3, "corner count at most twice the sub-DAG size", claim_segment_bound(SEED, count=200))


def test_04_greedy_constant():
    _verdict(4, "greedy earns at least 0.22 of the budgeted optimum", claim_greedy_constant(SEED, count=100))


def test_05_budget_halving():
    _verdict(5, "half budget keeps at least 0.17 of the optimum", claim_budget_halving(SEED, count=100))


def test_06_greedy_dominates_persistent():
    _verdict(6, "greedy dominates persistent; coupled prefix property", claim_greedy_dominates_persistent(SEED, count=100))


def test_07_gittins_ratio_sandwich():
    _verdict(7, "gittins index sandwiched by the ratio index", claim_gittins_sandwich(SEED, count=100))


def test_08_finite_horizon_sandwich():
    _verdict(8, "horizon optimum sandwiched by budgeted optima", claim_horizon_sandwich(SEED, count=100))


def test_09_switch_and_scale_lower_bounds():
    _verdict(9, "switch/scale strategies clear their constants", claim_switch_scale(SEED, count=100))


def test_10_restart_property():
    _verdict(10, "forced exploration prefixes never hurt the optimum", claim_restart(SEED, count=60))


def test_11_ratio_policy_structural_laws():
    _verdict(11, "ratio policies: cost at most 1 and index ordering", claim_ratio_policy_laws(SEED, count=200))


def test_12_simulation_fidelity():
    _verdict(12, "Monte Carlo matches exact values; worker independence", claim_simulation_fidelity(SEED, trials=20000))
