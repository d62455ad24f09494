#!/usr/bin/env python3
"""Exact head-to-head of every strategy against the oracle optima.

For a chosen instance (default: the two posterior arms of the
no-exact-index scenario at depth 3), prints and saves per-budget tables:
budgeted profit of the budgeted strategies against B*(h), and horizon
reward of the horizon strategies against F*(h).  All values are exact
(rational) and evaluated by exhaustive traversal, no sampling.

Usage:
    python3 scripts/benchmark_strategies.py [--hmax 6] [--out strategy_bench.csv]
    python3 scripts/benchmark_strategies.py --arms a.json b.json c.json
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from ratiobandits.arms import beta_bernoulli_arm, load_arm
from ratiobandits.oracle import exact_policy_value, optimal_budgeted_value, optimal_finite_horizon_value
from ratiobandits.policies import (
    ExploitBest,
    GittinsGreedy,
    GittinsScale,
    GittinsSwitch,
    GreedyRatio,
    Persistent,
    RatioScale,
    RatioSwitch,
)


def run(arms, hmax: int):
    rows = []
    scale, gscale = RatioScale(arms), GittinsScale(arms)
    for h in range(1, hmax + 1):
        bstar = optimal_budgeted_value(arms, h)
        budgeted = {
            "greedy_ratio": GreedyRatio(arms, h),
            "persistent": Persistent(arms, h),
            "gittins_greedy": GittinsGreedy(arms, h),
            "exploit_best": ExploitBest(arms),
        }
        for name, strategy in budgeted.items():
            value = exact_policy_value(strategy, arms, h, "budgeted")
            rows.append(("budgeted", h, name, float(value), float(bstar), float(value / bstar)))
        fstar = optimal_finite_horizon_value(arms, h)
        horizon = {
            "ratio_switch": RatioSwitch(arms, h),
            "gittins_switch": GittinsSwitch(arms, h),
            "ratio_scale": scale,
            "gittins_scale": gscale,
        }
        for name, strategy in horizon.items():
            value = exact_policy_value(strategy, arms, h, "horizon")
            rows.append(("horizon", h, name, float(value), float(fstar), float(value / fstar)))
    return rows


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--hmax", type=int, default=6)
    parser.add_argument("--arms", nargs="*", default=None, help="arm spec files (default: built-in scenario arms)")
    parser.add_argument("--out", default="strategy_bench.csv")
    args = parser.parse_args()

    if args.arms:
        arms = [load_arm(path) for path in args.arms]
    else:
        arms = [beta_bernoulli_arm(5, 4, 3), beta_bernoulli_arm(28, 19, 3)]

    rows = run(arms, args.hmax)
    with open(args.out, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["mode", "h", "strategy", "value", "optimum", "ratio"])
        writer.writerows(rows)
    print(f"{'mode':<9} {'h':>2} {'strategy':<15} {'value':>10} {'optimum':>10} {'ratio':>8}")
    for mode, h, name, value, optimum, ratio in rows:
        print(f"{mode:<9} {h:>2} {name:<15} {value:>10.6f} {optimum:>10.6f} {ratio:>8.4f}")
    print(f"\nwrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
