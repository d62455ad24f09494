"""Brute-force ground truth at desk scale.

Independent of the curve machinery: deterministic single-arm policies are
enumerated outright and their upper concave envelope is built by an exact
convex-hull pass, while optimal values come from memoized dynamic programs
over the joint system state.  Everything is exact rational arithmetic, so
agreement checks against the fast implementations use zero tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

from .arms import ArmDag, SystemState, canonical_signature
from .curves import CurveCorner, PolicyLabel, ProfitCurve, SingleArmPolicy
from .policies import Action, Strategy


class OracleSizeError(RuntimeError):
    """The instance exceeds the configured brute-force bound."""


@dataclass(frozen=True)
class PolicyPoint:
    """Exact cost and profit of one deterministic single-arm policy."""

    cost: Fraction
    profit: Fraction
    policy: SingleArmPolicy


# ---------------------------------------------------------------------------
# Deterministic policy enumeration and its envelope


def enumerate_policies(
    dag: ArmDag,
    u: str,
    h: int,
    max_states: int = 20,
    max_policies: int = 2_000_000,
) -> list[PolicyPoint]:
    """All canonical label assignments over the sub-DAG of ``u``.

    States unreachable under the labels chosen so far are pinned to abandon,
    so policies differing only off-path are counted once.  Leaves never get
    an explore label.  Pseudo-policies with cost above 1 are included.
    """
    if h < 1:
        raise ValueError("h must be at least 1")
    order = dag.reachable_from(u)
    if len(order) > max_states:
        raise OracleSizeError(
            f"sub-DAG of {u!r} has {len(order)} reachable states, enumeration bound is {max_states}"
        )
    position = {node.id: i for i, node in enumerate(order)}
    parents: list[list[int]] = [[] for _ in order]
    for i, node in enumerate(order):
        for edge in dag.out_edges(node.id):
            parents[position[edge.child]].append(i)

    labels: list[PolicyLabel | None] = [None] * len(order)
    results: list[PolicyPoint] = []

    def score() -> PolicyPoint:
        weight: dict[str, Fraction] = {u: Fraction(1)}
        explored = Fraction(0)
        exploited = Fraction(0)
        profit = Fraction(0)
        for i, node in enumerate(order):
            w = weight.get(node.id, Fraction(0))
            if w == 0:
                continue
            label = labels[i]
            if label is PolicyLabel.EXPLORE:
                explored += w
                for edge in dag.out_edges(node.id):
                    weight[edge.child] = weight.get(edge.child, Fraction(0)) + w * edge.prob
            elif label is PolicyLabel.EXPLOIT:
                exploited += w
                profit += w * node.zeta
        cost = explored / h + exploited
        return PolicyPoint(cost, profit, SingleArmPolicy(u, {n.id: labels[i] for i, n in enumerate(order)}))

    def assign(i: int) -> None:
        if i == len(order):
            if len(results) >= max_policies:
                raise OracleSizeError(f"policy enumeration for {u!r} exceeds {max_policies} policies")
            results.append(score())
            return
        node = order[i]
        reachable = node.id == u or any(labels[p] is PolicyLabel.EXPLORE for p in parents[i])
        if not reachable:
            labels[i] = PolicyLabel.ABANDON
            assign(i + 1)
            labels[i] = None
            return
        options = [PolicyLabel.ABANDON, PolicyLabel.EXPLOIT]
        if dag.out_edges(node.id):
            options.append(PolicyLabel.EXPLORE)
        for label in options:
            labels[i] = label
            assign(i + 1)
            labels[i] = None

    assign(0)
    return results


def _cross(o: tuple[Fraction, Fraction], a: tuple[Fraction, Fraction], b: tuple[Fraction, Fraction]) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def envelope_curve(points: Sequence[PolicyPoint], h: int = 0, owner: str | None = None) -> ProfitCurve:
    """Upper concave envelope of the policy points over cost in [0, 1].

    Randomized mixtures of deterministic policies realize the chords, so the
    envelope is the true optimal-profit curve.  The hull is clipped at cost
    1 (exploiting immediately always costs exactly 1, so the hull reaches
    it) and the implicit (0, 0) start is not stored.
    """
    if not any(p.cost == 0 and p.profit == 0 for p in points):
        raise ValueError("policy points must include the abandon point (0, 0)")
    best: dict[Fraction, Fraction] = {}
    for p in points:
        if p.cost not in best or p.profit > best[p.cost]:
            best[p.cost] = p.profit
    hull: list[tuple[Fraction, Fraction]] = []
    for point in sorted(best.items()):
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], point) >= 0:
            hull.pop()
        hull.append(point)

    corners: list[CurveCorner] = []
    prev = hull[0]
    for vertex in hull[1:]:
        if vertex[0] < 1:
            corners.append(CurveCorner(vertex[0], vertex[1], {}))
            prev = vertex
            continue
        if vertex[0] == 1:
            corners.append(CurveCorner(vertex[0], vertex[1], {}))
        else:
            slope = (vertex[1] - prev[1]) / (vertex[0] - prev[0])
            corners.append(CurveCorner(Fraction(1), prev[1] + slope * (1 - prev[0]), {}))
        break
    start = owner if owner is not None else points[0].policy.start
    return ProfitCurve(start, h, tuple(corners))


# ---------------------------------------------------------------------------
# Optimal values by dynamic programming over joint system states


def _canonical_key_fn(arms: Sequence[ArmDag], canonicalize: bool) -> Callable[[tuple[str, ...]], object]:
    if not canonicalize:
        return lambda states: states
    groups: dict[object, list[int]] = {}
    for i, arm in enumerate(arms):
        groups.setdefault(canonical_signature(arm), []).append(i)
    twin_groups = [positions for positions in groups.values() if len(positions) > 1]
    if not twin_groups:
        return lambda states: states

    def key(states: tuple[str, ...]) -> object:
        parts: list[object] = list(states)
        for positions in twin_groups:
            ordered = sorted(states[i] for i in positions)
            for slot, value in zip(positions, ordered):
                parts[slot] = value
        return tuple(parts)

    return key


def optimal_budgeted_value(
    arms: Sequence[ArmDag],
    h: int,
    start: Sequence[str] | None = None,
    *,
    canonicalize: bool = True,
    max_memo: int = 10**6,
) -> Fraction:
    """Exact optimum of the budgeted problem: explore at most ``h`` times, then exploit once.

    Structurally identical arms share memo entries through state sorting;
    pass ``canonicalize=False`` for determinism audits.
    """
    states0 = tuple(start) if start is not None else tuple(a.root for a in arms)
    key_of = _canonical_key_fn(arms, canonicalize)
    memo: dict[object, Fraction] = {}

    def value(states: tuple[str, ...], delta: int) -> Fraction:
        key = (key_of(states), delta)
        cached = memo.get(key)
        if cached is not None:
            return cached
        if len(memo) >= max_memo:
            raise OracleSizeError(f"budgeted DP exceeds {max_memo} memo entries")
        best = max(arms[i].node(s).zeta for i, s in enumerate(states))
        if delta > 0:
            for i, s in enumerate(states):
                kids = arms[i].children(s)
                if not kids:
                    continue
                q = sum(
                    (p * value(states[:i] + (child.id,) + states[i + 1 :], delta - 1) for child, p in kids),
                    Fraction(0),
                )
                if q > best:
                    best = q
        memo[key] = best
        return best

    return value(states0, h)


def budgeted_action_values(
    arms: Sequence[ArmDag],
    h: int,
    start: Sequence[str] | None = None,
    *,
    max_memo: int = 10**6,
) -> dict[Action, Fraction]:
    """Exact value of every first action at the initial system state.

    Exploit(i) yields the arm's current payoff; Explore(i) (only offered for
    arms not yet absorbed) yields the optimal continuation.
    """
    if h < 1:
        raise ValueError("h must be at least 1 to compare first actions")
    states0 = tuple(start) if start is not None else tuple(a.root for a in arms)
    out: dict[Action, Fraction] = {}
    for i, s in enumerate(states0):
        out[Action.exploit(i)] = arms[i].node(s).zeta
        kids = arms[i].children(s)
        if kids:
            out[Action.explore(i)] = sum(
                (
                    p * optimal_budgeted_value(arms, h - 1, states0[:i] + (child.id,) + states0[i + 1 :], max_memo=max_memo)
                    for child, p in kids
                ),
                Fraction(0),
            )
    return out


def optimal_finite_horizon_value(
    arms: Sequence[ArmDag],
    h: int,
    start: Sequence[str] | None = None,
    *,
    canonicalize: bool = True,
    max_memo: int = 10**6,
) -> Fraction:
    """Exact optimum cumulative reward over exactly ``h`` plays."""
    states0 = tuple(start) if start is not None else tuple(a.root for a in arms)
    key_of = _canonical_key_fn(arms, canonicalize)
    memo: dict[object, Fraction] = {}

    def value(states: tuple[str, ...], t: int) -> Fraction:
        if t == 0:
            return Fraction(0)
        key = (key_of(states), t)
        cached = memo.get(key)
        if cached is not None:
            return cached
        if len(memo) >= max_memo:
            raise OracleSizeError(f"finite-horizon DP exceeds {max_memo} memo entries")
        best: Fraction | None = None
        for i, s in enumerate(states):
            node = arms[i].node(s)
            kids = arms[i].children(s)
            if kids:
                q = node.zeta + sum(
                    (p * value(states[:i] + (child.id,) + states[i + 1 :], t - 1) for child, p in kids),
                    Fraction(0),
                )
            else:
                q = node.zeta + value(states, t - 1)
            if best is None or q > best:
                best = q
        assert best is not None
        memo[key] = best
        return best

    return value(states0, h)


# ---------------------------------------------------------------------------
# Exact evaluation of arbitrary strategies


class _CallableStrategy(Strategy):
    def __init__(self, fn: Callable[[SystemState], Action]):
        self._fn = fn
        self.name = getattr(fn, "__name__", "callable")

    def act(self, state: SystemState, t: int, memory: object) -> tuple[Action, object]:
        return self._fn(state), memory


def _as_strategy(strategy: object) -> Strategy:
    if isinstance(strategy, Strategy):
        return strategy
    if callable(strategy):
        return _CallableStrategy(strategy)
    raise TypeError("strategy must be a Strategy or a SystemState -> Action callable")


def exact_policy_value(
    strategy: object,
    arms: Sequence[ArmDag],
    h: int,
    mode: str = "budgeted",
    start: Sequence[str] | None = None,
) -> Fraction:
    """Expected profit (budgeted) or cumulative reward (horizon) by exhaustive traversal.

    The traversal branches over every exploration outcome, threading the
    strategy's episode memory down each branch, so stateful strategies are
    evaluated exactly.
    """
    if mode == "horizon":
        return sum(exact_expected_rewards(strategy, arms, h, start), Fraction(0))
    if mode != "budgeted":
        raise ValueError(f"unknown mode {mode!r}")
    strat = _as_strategy(strategy)
    states0 = tuple(start) if start is not None else tuple(a.root for a in arms)

    def go(states: tuple[str, ...], delta: int, memory: object) -> Fraction:
        action, memory = strat.act(SystemState(states, delta), h - delta, memory)
        if action.kind == "exploit":
            return arms[action.arm].node(states[action.arm]).zeta
        if action.kind == "abandon":
            return Fraction(0)
        if delta <= 0:
            raise ValueError(f"{strat.name}: explore with no budget left")
        i = action.arm
        kids = arms[i].children(states[i])
        if not kids:
            return go(states, delta - 1, memory)
        return sum(
            (p * go(states[:i] + (child.id,) + states[i + 1 :], delta - 1, memory) for child, p in kids),
            Fraction(0),
        )

    return go(states0, h, strat.initial_memory())


def exact_expected_rewards(
    strategy: object,
    arms: Sequence[ArmDag],
    horizon: int,
    start: Sequence[str] | None = None,
) -> list[Fraction]:
    """Per-step expected reward of a strategy played for ``horizon`` steps."""
    strat = _as_strategy(strategy)
    states0 = tuple(start) if start is not None else tuple(a.root for a in arms)
    out = [Fraction(0) for _ in range(horizon)]

    def go(states: tuple[str, ...], t: int, memory: object, weight: Fraction) -> None:
        if t == horizon:
            return
        action, memory = strat.act(SystemState(states, None), t, memory)
        if action.kind == "abandon":
            raise ValueError(f"{strat.name}: abandon is not a horizon-mode action")
        i = action.arm
        node = arms[i].node(states[i])
        out[t] += weight * node.zeta
        kids = arms[i].children(states[i])
        if not kids:
            go(states, t + 1, memory, weight)
            return
        for child, p in kids:
            go(states[:i] + (child.id,) + states[i + 1 :], t + 1, memory, weight * p)

    go(states0, 0, strat.initial_memory(), Fraction(1))
    return out


def exact_discounted_value(
    strategy: object,
    arms: Sequence[ArmDag],
    weights: Sequence[Fraction],
    start: Sequence[str] | None = None,
) -> Fraction:
    """Exact discounted reward for an explicit finite weight sequence."""
    rewards = exact_expected_rewards(strategy, arms, len(weights), start)
    return sum((w * r for w, r in zip(weights, rewards)), Fraction(0))


def restart_property_check(arms: Sequence[ArmDag], h: int, prefix: Sequence[int], **dp_kwargs) -> bool:
    """Whether forced initial explorations cannot hurt the budgeted optimum.

    Runs the exploration ``prefix`` (a sequence of arm indices) from the
    initial state, then compares the expected optimum over the resulting
    states against the optimum from the original state.  True on every
    martingale instance; may be False when the martingale property is
    broken, which is used as a negative control.
    """
    roots = tuple(a.root for a in arms)

    def expected_after(states: tuple[str, ...], k: int) -> Fraction:
        if k == len(prefix):
            return optimal_budgeted_value(arms, h, states, **dp_kwargs)
        i = prefix[k]
        kids = arms[i].children(states[i])
        if not kids:
            return expected_after(states, k + 1)
        return sum(
            (p * expected_after(states[:i] + (child.id,) + states[i + 1 :], k + 1) for child, p in kids),
            Fraction(0),
        )

    return expected_after(roots, 0) >= optimal_budgeted_value(arms, h, roots, **dp_kwargs)
