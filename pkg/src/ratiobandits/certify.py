"""Certification suite: every guarantee the toolkit makes, checked against oracles.

Each claim runner replays a deterministic sweep of desk-scale instances and
returns granular check rows; a row compares an exact (or tolerance-pinned)
left-hand side against its bound.  The CLI aggregates rows per claim, and
the acceptance tests assert directly on them.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .arms import ArmDag, beta_bernoulli_arm, format_rational, validate
from .curves import PolicyLabel, compute_all_curves, extract_ratio_policy
from .evaluator import sample_outcome_tape, run_budgeted_episode_on_tape, simulate
from .generators import random_arm, random_instance
from .gittins import GittinsQuery, gittins_index
from .oracle import (
    budgeted_action_values,
    enumerate_policies,
    envelope_curve,
    exact_policy_value,
    optimal_budgeted_value,
    optimal_finite_horizon_value,
    restart_property_check,
)
from .policies import (
    Action,
    GittinsGreedy,
    GittinsScale,
    GittinsSwitch,
    GreedyRatio,
    Persistent,
    RatioScale,
    RatioSwitch,
)

GREEDY_CONSTANT = Fraction(22, 100)
HALVING_CONSTANT = Fraction(17, 100)
GITTINS_GREEDY_CONSTANT = Fraction(3, 1000)
RATIO_SWITCH_CONSTANT = Fraction(187, 10000)
GITTINS_SWITCH_CONSTANT = Fraction(25, 100000)
SANDWICH_TOLERANCE = 1e-6


@dataclass(frozen=True)
class ClaimRow:
    claim: str
    instance: str
    lhs: str
    rhs: str
    passed: bool


def _row(claim: str, instance: str, lhs: object, rhs: object, passed: bool) -> ClaimRow:
    def fmt(x: object) -> str:
        if isinstance(x, Fraction):
            return format_rational(x)
        if isinstance(x, float):
            return f"{x:.12g}"
        return str(x)

    return ClaimRow(claim, instance, fmt(lhs), fmt(rhs), passed)


def counterexample_arms() -> list[ArmDag]:
    return [beta_bernoulli_arm(5, 4, 1), beta_bernoulli_arm(28, 19, 1), beta_bernoulli_arm(28, 19, 1)]


def sweep_curve_arms(seed: int, count: int) -> list[tuple[str, ArmDag, int]]:
    """Single-arm instances for the curve-vs-oracle sweep (depth <= 3, branching <= 3)."""
    out = []
    for k in range(count):
        rng = random.Random(f"{seed}:curve:{k}")
        arm = random_arm(rng, max_depth=3, policy_budget=1500)
        out.append((f"curve-{k}", arm, rng.randint(1, 5)))
    return out


def sweep_value_instances(seed: int, count: int) -> list[tuple[str, list[ArmDag]]]:
    """Multi-arm instances for the policy-value sweep; the first two are the
    no-exact-index counterexample pairs/triples."""
    a, b, c = counterexample_arms()
    out: list[tuple[str, list[ArmDag]]] = [("ab", [a, b]), ("abc", [a, b, c])]
    for k in range(count):
        rng = random.Random(f"{seed}:value:{k}")
        out.append((f"value-{k}", random_instance(rng)))
    return out


def claim_counterexample() -> list[ClaimRow]:
    """No single per-arm score can order the first exploration in both scenarios."""
    claim = "no-exact-index-counterexample"
    a, b, c = counterexample_arms()
    rows: list[ClaimRow] = []

    value_ab = optimal_budgeted_value([a, b], 1)
    expected_ab = Fraction(5, 9) * Fraction(6, 10) + Fraction(4, 9) * Fraction(28, 47)
    rows.append(_row(claim, "arms{A,B} h=1 optimum", value_ab, expected_ab, value_ab == expected_ab))
    actions_ab = budgeted_action_values([a, b], 1)
    best_ab = actions_ab[Action.explore(0)]
    rows.append(
        _row(
            claim,
            "arms{A,B} explore(A) strictly best",
            best_ab,
            max(v for k, v in actions_ab.items() if k != Action.explore(0)),
            all(v < best_ab for k, v in actions_ab.items() if k != Action.explore(0)),
        )
    )

    value_abc = optimal_budgeted_value([a, b, c], 1)
    expected_abc = Fraction(28, 47) * Fraction(29, 48) + Fraction(19, 47) * Fraction(28, 47)
    rows.append(_row(claim, "arms{A,B,C} h=1 optimum", value_abc, expected_abc, value_abc == expected_abc))
    actions_abc = budgeted_action_values([a, b, c], 1)
    best_abc = max(actions_abc.values())
    rows.append(
        _row(
            claim,
            "arms{A,B,C} explore(B) optimal",
            actions_abc[Action.explore(1)],
            best_abc,
            actions_abc[Action.explore(1)] == best_abc and actions_abc[Action.explore(0)] < best_abc,
        )
    )

    for name, value, decimal in (
        ("exploit-B-now 4 places", Fraction(28, 47), 0.5957),
        ("explore-A 4 places", expected_ab, 0.5981),
        ("explore-B-with-twin 4 places", expected_abc, 0.6008),
    ):
        rows.append(_row(claim, name, round(float(value), 4), decimal, round(float(value), 4) == decimal))
    return rows


def claim_curve_oracle(seed: int, count: int = 200) -> list[ClaimRow]:
    """Computed profit curves equal the envelope of enumerated policies, corner for corner."""
    claim = "curve-vs-oracle"
    rows = []
    for name, arm, h in sweep_curve_arms(seed, count):
        curves = compute_all_curves(arm, h)
        ok = True
        for node in arm.nodes:
            expected = envelope_curve(enumerate_policies(arm, node.id, h), h).corner_points()
            if curves[node.id].corner_points() != expected:
                ok = False
                rows.append(
                    _row(
                        claim,
                        f"{name} h={h} state={node.id}",
                        str(curves[node.id].corner_points()),
                        str(expected),
                        False,
                    )
                )
        if ok:
            rows.append(_row(claim, f"{name} h={h} ({len(arm.nodes)} states)", "corners", "oracle corners", True))
    return rows


def claim_segment_bound(seed: int, count: int = 200) -> list[ClaimRow]:
    """Every profit curve has at most twice as many corners as its sub-DAG has states."""
    claim = "segment-bound"
    rows = []
    for name, arm, h in sweep_curve_arms(seed, count):
        curves = compute_all_curves(arm, h)
        worst = max((len(curves[n.id].corners), 2 * arm.subdag_size(n.id), n.id) for n in arm.nodes)
        rows.append(_row(claim, f"{name} h={h} state={worst[2]}", worst[0], worst[1], worst[0] <= worst[1]))
    return rows


def claim_greedy_constant(seed: int, count: int = 100) -> list[ClaimRow]:
    """Greedy earns at least 0.22 of the optimum; the Gittins variant clears its chained constant."""
    claim = "greedy-approximation"
    rows = []
    for name, arms in sweep_value_instances(seed, count):
        for h in (1, 2, 3, 4):
            optimum = optimal_budgeted_value(arms, h)
            greedy = exact_policy_value(GreedyRatio(arms, h), arms, h, "budgeted")
            rows.append(_row(claim, f"{name} h={h} greedy", greedy, GREEDY_CONSTANT * optimum, greedy >= GREEDY_CONSTANT * optimum))
            gittins = exact_policy_value(GittinsGreedy(arms, h), arms, h, "budgeted")
            rows.append(
                _row(
                    claim,
                    f"{name} h={h} gittins-greedy",
                    gittins,
                    GITTINS_GREEDY_CONSTANT * optimum,
                    gittins >= GITTINS_GREEDY_CONSTANT * optimum,
                )
            )
    return rows


def claim_budget_halving(seed: int, count: int = 100) -> list[ClaimRow]:
    """Halving the budget keeps at least 0.17 of the optimum."""
    claim = "budget-halving"
    rows = []
    for name, arms in sweep_value_instances(seed, count):
        for h in (1, 2, 3, 4):
            full = optimal_budgeted_value(arms, h)
            half = optimal_budgeted_value(arms, h // 2)
            rows.append(_row(claim, f"{name} h={h}", half, HALVING_CONSTANT * full, half >= HALVING_CONSTANT * full))
    return rows


def claim_greedy_dominates_persistent(seed: int, count: int = 100, tapes: int = 10) -> list[ClaimRow]:
    """Greedy's exact value dominates persistent's, and under a shared outcome
    tape persistent's exploration sequence is a prefix of greedy's."""
    claim = "greedy-dominates-persistent"
    rows = []
    for name, arms in sweep_value_instances(seed, count):
        for h in (1, 2, 3):
            greedy = GreedyRatio(arms, h)
            persistent = Persistent(arms, h)
            g = exact_policy_value(greedy, arms, h, "budgeted")
            p = exact_policy_value(persistent, arms, h, "budgeted")
            rows.append(_row(claim, f"{name} h={h} value", g, p, g >= p))
            prefix_ok = True
            for rep in range(tapes):
                tape = sample_outcome_tape(arms, random.Random(f"{seed}:{name}:{h}:{rep}"))
                _, greedy_seq = run_budgeted_episode_on_tape(greedy, arms, h, tape)
                _, persistent_seq = run_budgeted_episode_on_tape(persistent, arms, h, tape)
                if persistent_seq != greedy_seq[: len(persistent_seq)]:
                    prefix_ok = False
            rows.append(_row(claim, f"{name} h={h} prefix({tapes} tapes)", "prefix", "holds", prefix_ok))
    return rows


def claim_gittins_sandwich(seed: int, count: int = 100) -> list[ClaimRow]:
    """r(u,h)(1-1/h)^h <= rho(u, 1-1/h) <= 18 r(u,h) at every state."""
    claim = "gittins-ratio-sandwich"
    rows = []
    seen: set[object] = set()
    arms: list[ArmDag] = []
    for _name, instance in sweep_value_instances(seed, count):
        for arm in instance:
            key = id(arm)
            if key not in seen:
                seen.add(key)
                arms.append(arm)
    for k, arm in enumerate(arms):
        for h in (2, 3, 4, 5):
            theta = 1 - 1 / h
            curves = compute_all_curves(arm, h)
            worst_low = None
            worst_high = None
            ok = True
            for node in arm.nodes:
                r = float(curves[node.id].ratio_index)
                rho = gittins_index(GittinsQuery(arm, node.id, theta))
                low = r * (1 - 1 / h) ** h
                if rho < low - SANDWICH_TOLERANCE or rho > 18 * r + SANDWICH_TOLERANCE:
                    ok = False
                if worst_low is None or rho - low < worst_low[0]:
                    worst_low = (rho - low, node.id)
                if worst_high is None or 18 * r - rho < worst_high[0]:
                    worst_high = (18 * r - rho, node.id)
            assert worst_low is not None and worst_high is not None
            rows.append(
                _row(
                    claim,
                    f"arm-{k} h={h} (slack low {worst_low[0]:.3g} @ {worst_low[1]}, high {worst_high[0]:.3g})",
                    "sandwich",
                    "holds",
                    ok,
                )
            )
    return rows


def claim_horizon_sandwich(seed: int, count: int = 100) -> list[ClaimRow]:
    """ceil(h/2) * B*(floor(h/2)) <= F*(h) <= h * B*(h), exactly."""
    claim = "horizon-sandwich"
    rows = []
    for name, arms in sweep_value_instances(seed, count):
        for h in (1, 2, 3, 4, 5, 6):
            fstar = optimal_finite_horizon_value(arms, h)
            lower = Fraction((h + 1) // 2) * optimal_budgeted_value(arms, h // 2)
            upper = Fraction(h) * optimal_budgeted_value(arms, h)
            rows.append(_row(claim, f"{name} h={h}", fstar, f"[{format_rational(lower)}, {format_rational(upper)}]", lower <= fstar <= upper))
    return rows


def claim_switch_scale(seed: int, count: int = 100) -> list[ClaimRow]:
    """Switch strategies and the first-h-step prefix of the scale strategies
    clear their constants against the horizon optimum; minima are recorded."""
    claim = "switch-scale-lower-bound"
    rows = []
    minima: dict[str, float] = {}
    for name, arms in sweep_value_instances(seed, count):
        scale = RatioScale(arms)
        gscale = GittinsScale(arms)
        for h in (1, 2, 3, 4, 5, 6):
            fstar = optimal_finite_horizon_value(arms, h)
            if fstar == 0:
                continue
            checks = (
                ("ratio_switch", exact_policy_value(RatioSwitch(arms, h), arms, h, "horizon"), RATIO_SWITCH_CONSTANT),
                ("ratio_scale", exact_policy_value(scale, arms, h, "horizon"), RATIO_SWITCH_CONSTANT),
                ("gittins_switch", exact_policy_value(GittinsSwitch(arms, h), arms, h, "horizon"), GITTINS_SWITCH_CONSTANT),
                ("gittins_scale", exact_policy_value(gscale, arms, h, "horizon"), GITTINS_SWITCH_CONSTANT),
            )
            for label, value, constant in checks:
                ratio = float(value / fstar)
                if label not in minima or ratio < minima[label]:
                    minima[label] = ratio
                rows.append(_row(claim, f"{name} h={h} {label}", value, constant * fstar, value >= constant * fstar))
    for label, ratio in sorted(minima.items()):
        rows.append(_row(claim, f"measured minimum {label}", f"{ratio:.6g}", "recorded", True))
    return rows


def claim_restart(seed: int, count: int = 60, prefixes: int = 4) -> list[ClaimRow]:
    """Forced initial explorations never reduce the budgeted optimum."""
    claim = "restart-property"
    rows = []
    for k in range(count):
        rng = random.Random(f"{seed}:restart:{k}")
        arms = random_instance(rng, max_arms=2)
        h = rng.randint(1, 3)
        ok = True
        for _ in range(prefixes):
            prefix = [rng.randrange(len(arms)) for _ in range(rng.randint(0, 3))]
            if not restart_property_check(arms, h, prefix):
                ok = False
        rows.append(_row(claim, f"restart-{k} h={h}", "E[optimum after prefix]", ">= optimum", ok))
    return rows


def claim_ratio_policy_laws(seed: int, count: int = 200) -> list[ClaimRow]:
    """Extracted ratio policies cost at most 1, realize their corner exactly,
    and respect the index ordering on reachable states."""
    claim = "ratio-policy-laws"
    rows = []
    for name, arm, h in sweep_curve_arms(seed, count):
        curves = compute_all_curves(arm, h)
        ok = True
        detail = ""
        for node in arm.nodes:
            policy = extract_ratio_policy(arm, curves, node.id)
            cost, profit = _policy_cost_profit(arm, policy, h)
            first = curves[node.id].corners[0]
            if cost > 1 or (cost, profit) != (first.cost, first.profit):
                ok = False
                detail = f"{node.id}: cost {format_rational(cost)}"
                break
            r_start = curves[node.id].ratio_index
            for state, label in policy.labels.items():
                r_state = curves[state].ratio_index
                if label is PolicyLabel.ABANDON and r_state > r_start:
                    ok = False
                    detail = f"{node.id}: abandons {state} with higher index"
                if label in (PolicyLabel.EXPLORE, PolicyLabel.EXPLOIT) and r_state < r_start:
                    ok = False
                    detail = f"{node.id}: plays {state} with lower index"
        rows.append(_row(claim, f"{name} h={h}{' ' + detail if detail else ''}", "policy laws", "hold", ok))
    return rows


def _policy_cost_profit(arm: ArmDag, policy, h: int) -> tuple[Fraction, Fraction]:
    weight = {policy.start: Fraction(1)}
    explored = exploited = profit = Fraction(0)
    for node in arm.reachable_from(policy.start):
        w = weight.get(node.id, Fraction(0))
        if w == 0:
            continue
        label = policy.labels.get(node.id)
        if label is PolicyLabel.EXPLORE:
            explored += w
            for edge in arm.out_edges(node.id):
                weight[edge.child] = weight.get(edge.child, Fraction(0)) + w * edge.prob
        elif label is PolicyLabel.EXPLOIT:
            exploited += w
            profit += w * node.zeta
    return explored / h + exploited, profit


def claim_simulation_fidelity(seed: int, trials: int = 20000) -> list[ClaimRow]:
    """Monte Carlo agrees with exact values within 4 stderr and is schedule independent."""
    claim = "simulation-fidelity"
    rows = []
    a, b, _ = counterexample_arms()
    configs = [
        ("greedy budgeted h=1", GreedyRatio([a, b], 1), [a, b], "budgeted", 1),
        ("persistent budgeted h=2", Persistent([a, b], 2), [a, b], "budgeted", 2),
        ("ratio_switch horizon h=4", RatioSwitch([a, b], 4), [a, b], "horizon", 4),
    ]
    for name, strategy, arms, mode, h in configs:
        exact = float(exact_policy_value(strategy, arms, h, mode))
        report = simulate(strategy, arms, mode, h, trials, seed)
        slack = 4 * report.stderr if report.stderr > 0 else 1e-12
        rows.append(_row(claim, f"{name} |mc-exact|<=4se", abs(report.mean - exact), slack, abs(report.mean - exact) <= slack))
        wide = simulate(strategy, arms, mode, h, trials, seed, workers=8)
        rows.append(_row(claim, f"{name} workers 1 vs 8", "report", "identical", report == wide))
    return rows


ALL_CLAIMS = {
    "no-exact-index-counterexample": lambda seed, quick: claim_counterexample(),
    "curve-vs-oracle": lambda seed, quick: claim_curve_oracle(seed, 40 if quick else 200),
    "segment-bound": lambda seed, quick: claim_segment_bound(seed, 40 if quick else 200),
    "greedy-approximation": lambda seed, quick: claim_greedy_constant(seed, 20 if quick else 100),
    "budget-halving": lambda seed, quick: claim_budget_halving(seed, 20 if quick else 100),
    "greedy-dominates-persistent": lambda seed, quick: claim_greedy_dominates_persistent(seed, 20 if quick else 100),
    "gittins-ratio-sandwich": lambda seed, quick: claim_gittins_sandwich(seed, 20 if quick else 100),
    "horizon-sandwich": lambda seed, quick: claim_horizon_sandwich(seed, 20 if quick else 100),
    "switch-scale-lower-bound": lambda seed, quick: claim_switch_scale(seed, 20 if quick else 100),
    "restart-property": lambda seed, quick: claim_restart(seed, 15 if quick else 60),
    "ratio-policy-laws": lambda seed, quick: claim_ratio_policy_laws(seed, 40 if quick else 200),
    "simulation-fidelity": lambda seed, quick: claim_simulation_fidelity(seed, 2000 if quick else 20000),
}


def run_claims(seed: int = 0, quick: bool = False, only: list[str] | None = None) -> list[ClaimRow]:
    rows: list[ClaimRow] = []
    for name, runner in ALL_CLAIMS.items():
        if only and name not in only:
            continue
        rows.extend(runner(seed, quick))
    return rows


def validate_instance_arms(arms: list[ArmDag]) -> list[str]:
    """Pre-certification guard: every arm must satisfy its invariants exactly."""
    problems = []
    for i, arm in enumerate(arms):
        report = validate(arm)
        if not report.ok:
            problems.extend(f"arm {i}: {violation}" for violation in report.violations)
    return problems
