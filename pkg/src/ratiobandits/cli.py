"""Command-line interface.

Subcommands: ``validate`` (invariant report for an arm file), ``index``
(ratio index, profit-curve corners, and ratio policy of an arm), ``gittins``
(Gittins indices), ``simulate`` (seeded Monte Carlo runs from a config
file, CSV out), and ``certify`` (the full claim suite against the
brute-force oracles).

Exit codes: 0 success, 1 certification/validation failure, 2 input error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .arms import ArmDag, ArmSpecError, arm_from_obj, format_rational, load_arm, parse_rational, validate
from .certify import ALL_CLAIMS, ClaimRow, run_claims, validate_instance_arms
from .curves import compute_all_curves, extract_ratio_policy
from .evaluator import DiscountSequence, discounted_value, simulate
from .gittins import GittinsQuery, gittins_index, gittins_indices_all
from .policies import STRATEGY_KINDS, StrategyConfig, make_strategy


def _fmt_number(value: object, mode: str) -> object:
    """Exact mode emits "num/den" strings; float mode 17 significant digits."""
    if isinstance(value, Fraction):
        return format_rational(value) if mode == "exact" else f"{float(value):.17g}"
    if isinstance(value, float):
        return f"{value:.17g}"
    return value


# ---------------------------------------------------------------------------
# Experiment configs


@dataclass
class ExperimentConfig:
    arms: list[ArmDag]
    mode: str
    h: int | None
    lam: DiscountSequence | None
    eval_horizon: int | None
    strategies: list[StrategyConfig]
    trials: int
    seed: int
    numeric_mode: str
    out: str | None


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(), parse_float=str)
    except OSError as exc:
        raise ArmSpecError(f"{path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise ArmSpecError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ArmSpecError(f"{path}: config must be an object")

    arms = _config_arms(raw, path)
    mode = raw.get("mode", "budgeted")
    if mode not in ("budgeted", "horizon", "discounted"):
        raise ArmSpecError(f"{path}: mode must be budgeted, horizon, or discounted")
    h = raw.get("h")
    if h is not None and (not isinstance(h, int) or h < 0):
        raise ArmSpecError(f"{path}: h must be a nonnegative integer")
    lam = None
    eval_horizon = raw.get("eval_horizon")
    if mode == "discounted":
        lam = _config_lambda(raw.get("lambda"), path)
        if eval_horizon is None:
            eval_horizon = 64
        if not isinstance(eval_horizon, int) or eval_horizon < 1:
            raise ArmSpecError(f"{path}: eval_horizon must be a positive integer")
    elif h is None:
        raise ArmSpecError(f"{path}: mode {mode!r} needs h")

    raw_strategies = raw.get("strategies")
    if not isinstance(raw_strategies, list) or not raw_strategies:
        raise ArmSpecError(f"{path}: field 'strategies' must be a nonempty list")
    strategies = []
    for i, item in enumerate(raw_strategies):
        if isinstance(item, str):
            item = {"kind": item}
        if not isinstance(item, dict) or "kind" not in item:
            raise ArmSpecError(f"{path}: strategies[{i}] must be a kind string or an object with 'kind'")
        if item["kind"] not in STRATEGY_KINDS:
            raise ArmSpecError(f"{path}: strategies[{i}].kind {item['kind']!r} unknown; options: {', '.join(STRATEGY_KINDS)}")
        strategies.append(StrategyConfig(item["kind"], item.get("h"), item.get("tolerance", 1e-9)))

    trials = raw.get("trials", 1000)
    if not isinstance(trials, int) or trials < 1:
        raise ArmSpecError(f"{path}: trials must be a positive integer")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ArmSpecError(f"{path}: seed must be an integer")
    numeric_mode = raw.get("numeric_mode", "exact")
    if numeric_mode not in ("exact", "float"):
        raise ArmSpecError(f"{path}: numeric_mode must be exact or float")
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ArmSpecError(f"{path}: out must be a path string")
    return ExperimentConfig(arms, mode, h, lam, eval_horizon, strategies, trials, seed, numeric_mode, out)


def _config_arms(raw: dict, path: Path) -> list[ArmDag]:
    raw_arms = raw.get("arms")
    if not isinstance(raw_arms, list) or not raw_arms:
        raise ArmSpecError(f"{path}: field 'arms' must be a nonempty list")
    arms = []
    for i, item in enumerate(raw_arms):
        if isinstance(item, dict) and "file" in item:
            arms.append(load_arm((path.parent / item["file"]) if not Path(item["file"]).is_absolute() else item["file"]))
        else:
            arms.append(arm_from_obj(item, f"{path}: arms[{i}]"))
    return arms


def _config_lambda(raw: object, path: Path) -> DiscountSequence:
    if not isinstance(raw, dict) or "kind" not in raw:
        raise ArmSpecError(f"{path}: discounted mode needs a 'lambda' object with 'kind'")
    kind = raw["kind"]
    try:
        if kind == "geometric":
            return DiscountSequence.geometric(parse_rational(raw.get("theta"), f"{path}: lambda.theta"))
        if kind == "horizon":
            return DiscountSequence.horizon(raw.get("h"))
        if kind == "explicit":
            values = raw.get("values")
            if not isinstance(values, list):
                raise ArmSpecError(f"{path}: lambda.values must be a list")
            return DiscountSequence.explicit([parse_rational(v, f"{path}: lambda.values[{i}]") for i, v in enumerate(values)])
    except ValueError as exc:
        raise ArmSpecError(f"{path}: lambda: {exc}") from None
    raise ArmSpecError(f"{path}: lambda.kind must be geometric, horizon, or explicit")


# ---------------------------------------------------------------------------
# Subcommands


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate(load_arm(args.arm))
    if report.ok:
        print("ok")
        return 0
    for violation in report.violations:
        print(violation)
    return 1


def cmd_index(args: argparse.Namespace) -> int:
    arm = load_arm(args.arm)
    report = validate(arm)
    if not report.ok:
        print(report, file=sys.stderr)
        return 1
    curves = compute_all_curves(arm, args.h)
    root_curve = curves[arm.root]
    policy = extract_ratio_policy(arm, curves, arm.root)
    out = {
        "arm": str(args.arm),
        "h": args.h,
        "ratio_index": _fmt_number(root_curve.ratio_index, args.mode),
        "corners": [
            {
                "cost": _fmt_number(c.cost, args.mode),
                "profit": _fmt_number(c.profit, args.mode),
                "allocations": {k: _fmt_number(v, args.mode) for k, v in sorted(c.allocations.items())},
            }
            for c in root_curve.corners
        ],
        "policy": {state: label.value for state, label in sorted(policy.labels.items())},
    }
    if args.gittins:
        if args.h < 2:
            print("--gittins needs h >= 2 (theta = 1 - 1/h must lie in (0, 1))", file=sys.stderr)
            return 2
        out["theta"] = 1 - 1 / args.h
        out["gittins_index"] = _fmt_number(gittins_index(GittinsQuery(arm, arm.root, 1 - 1 / args.h)), args.mode)
    print(json.dumps(out, indent=2))
    return 0


def cmd_gittins(args: argparse.Namespace) -> int:
    arm = load_arm(args.arm)
    if args.state is not None and args.state not in arm.by_id:
        print(f"state {args.state!r} is not a node of {args.arm}", file=sys.stderr)
        return 2
    try:
        if args.state is not None:
            indices = {args.state: gittins_index(GittinsQuery(arm, args.state, args.theta, args.tolerance))}
        else:
            indices = gittins_indices_all(arm, args.theta, args.tolerance)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    print(json.dumps({"theta": args.theta, "indices": {k: _fmt_number(v, "float") for k, v in sorted(indices.items())}}, indent=2))
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.trials is not None:
        config.trials = args.trials
    problems = validate_instance_arms(config.arms)
    if problems:
        for line in problems:
            print(line, file=sys.stderr)
        return 2

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["strategy", "mode", "h", "trials", "seed", "mean", "stderr", "seconds"])
    for strategy_config in config.strategies:
        default_h = config.h if config.mode != "discounted" else config.eval_horizon
        strategy = make_strategy(strategy_config, config.arms, default_h)
        started = time.perf_counter()
        if config.mode == "discounted":
            assert config.lam is not None and config.eval_horizon is not None
            report = discounted_value(
                strategy, config.arms, config.lam, config.eval_horizon, config.trials, config.seed, workers=args.workers
            )
            h_column = config.eval_horizon
        else:
            assert config.h is not None
            report = simulate(strategy, config.arms, config.mode, config.h, config.trials, config.seed, workers=args.workers)
            h_column = config.h
        seconds = 0.0 if args.no_timing else time.perf_counter() - started
        writer.writerow(
            [
                strategy.name,
                config.mode,
                h_column,
                config.trials,
                config.seed,
                f"{report.mean:.17g}",
                f"{report.stderr:.17g}",
                f"{seconds:.3f}",
            ]
        )
    text = buffer.getvalue()
    destination = args.out or config.out
    if destination:
        Path(destination).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_certify(args: argparse.Namespace) -> int:
    seed = args.seed if args.seed is not None else 0
    if args.config:
        config = load_config(args.config)
        problems = validate_instance_arms(config.arms)
        if problems:
            print("validation failure before certification:")
            for line in problems:
                print(f"  {line}")
            return 2
        seed = args.seed if args.seed is not None else config.seed
    if args.claims:
        unknown = [c for c in args.claims if c not in ALL_CLAIMS]
        if unknown:
            print(f"unknown claims: {', '.join(unknown)}; options: {', '.join(ALL_CLAIMS)}", file=sys.stderr)
            return 2
    rows = run_claims(seed=seed, quick=args.quick, only=args.claims or None)
    failed = _print_claim_table(rows)
    if args.out:
        with open(args.out, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["claim", "instance", "lhs", "rhs", "passed"])
            for row in rows:
                writer.writerow([row.claim, row.instance, row.lhs, row.rhs, row.passed])
    return 1 if failed else 0


def _print_claim_table(rows: list[ClaimRow]) -> int:
    claims: dict[str, list[ClaimRow]] = {}
    for row in rows:
        claims.setdefault(row.claim, []).append(row)
    width = max(len(name) for name in claims)
    failed_total = 0
    for name, group in claims.items():
        failures = [r for r in group if not r.passed]
        failed_total += len(failures)
        status = "PASS" if not failures else "FAIL"
        print(f"{name:<{width}}  checks={len(group):<5} failed={len(failures):<3} {status}")
        for row in failures[:20]:
            print(f"  FAIL {row.instance}: lhs={row.lhs} rhs={row.rhs}")
    return failed_total


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="ratiobandits", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="check an arm file's invariants")
    p_validate.add_argument("arm")
    p_validate.set_defaults(fn=cmd_validate)

    p_index = sub.add_parser("index", help="ratio index, profit curve, and ratio policy of an arm")
    p_index.add_argument("arm")
    p_index.add_argument("--h", type=int, required=True, help="exploration budget")
    p_index.add_argument("--gittins", action="store_true", help="also print the Gittins index at theta = 1 - 1/h")
    p_index.add_argument("--mode", choices=("exact", "float"), default="exact")
    p_index.set_defaults(fn=cmd_index)

    p_gittins = sub.add_parser("gittins", help="Gittins indices of an arm's states")
    p_gittins.add_argument("arm")
    p_gittins.add_argument("--theta", type=float, required=True)
    p_gittins.add_argument("--tolerance", type=float, default=1e-9)
    p_gittins.add_argument("--state", default=None)
    p_gittins.set_defaults(fn=cmd_gittins)

    p_sim = sub.add_parser("simulate", help="seeded Monte Carlo runs from a config file (CSV out)")
    p_sim.add_argument("config")
    p_sim.add_argument("--out", default=None)
    p_sim.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_sim.add_argument("--trials", type=int, default=None, help="override the config trial count")
    p_sim.add_argument("--workers", type=int, default=1)
    p_sim.add_argument("--no-timing", action="store_true", help="write 0.000 in the seconds column for reproducible output")
    p_sim.set_defaults(fn=cmd_simulate)

    p_cert = sub.add_parser("certify", help="run the oracle-backed claim suite")
    p_cert.add_argument("--config", default=None, help="optional config whose arms are validated first")
    p_cert.add_argument("--seed", type=int, default=None)
    p_cert.add_argument("--quick", action="store_true", help="smaller sweeps for a fast smoke run")
    p_cert.add_argument("--claims", nargs="*", default=None, help="run only the named claims")
    p_cert.add_argument("--out", default=None, help="write all granular check rows as CSV")
    p_cert.add_argument("--workers", type=int, default=1, help="accepted for interface uniformity; claims run sequentially")
    p_cert.set_defaults(fn=cmd_certify)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ArmSpecError as exc:
        print(str(exc), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
