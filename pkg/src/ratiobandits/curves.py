"""Exact profit curves and the ratio index.

For a single arm-state ``u`` and exploration budget ``h``, a single-arm
policy explores, exploits, or abandons at each state it reaches.  Its cost
is (expected explorations)/h + (probability of exploiting) and its profit
is the expected payoff of the exploited state.  The profit curve
``P_u(c)`` is the optimal profit over policies of cost at most ``c``: a
concave, nondecreasing, piecewise-linear function whose initial slope is
the ratio index

    r(u, h) = max over policies of profit / cost.

Curves are built bottom-up over the layered DAG.  For an internal state the
*exploration curve* merges the children's curve segments in nonincreasing
slope order on top of the fixed exploration cost 1/h; the profit curve is
then the concave envelope of that curve together with the abandon point
(0, 0) and the exploit point (1, zeta(u)).  Every corner is achieved by a
deterministic policy, recoverable from the recorded per-child budget
allocations.

All arithmetic is exact rational; corner lists have strictly increasing
costs and strictly decreasing slopes by construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Mapping

from .arms import ArmDag, ArmNode, format_rational


class CurveError(ValueError):
    """Structural failure while building or consuming curves."""


class PolicyLabel(str, Enum):
    ABANDON = "abandon"
    EXPLORE = "explore"
    EXPLOIT = "exploit"


@dataclass(frozen=True)
class SingleArmPolicy:
    """Deterministic single-arm policy as a per-state label map.

    Labels are meaningful only on states reachable under the policy from
    ``start``.  Randomized policies are never materialized: corner solutions
    are deterministic and intermediate budgets are realized as mixtures of
    neighboring corners.
    """

    start: str
    labels: Mapping[str, PolicyLabel]

    def label(self, node_id: str) -> PolicyLabel:
        return self.labels[node_id]


@dataclass(frozen=True)
class CurveCorner:
    """Endpoint of a curve segment.

    ``allocations`` maps an immediate descendant to the budget it receives
    when the corner's policy explores at the owner; it is empty for the
    exploit-immediately corner (and for leaves).  Only positive allocations
    are stored.
    """

    cost: Fraction
    profit: Fraction
    allocations: Mapping[str, Fraction] = field(default_factory=dict)


def _segment_slopes(corners: tuple[CurveCorner, ...]) -> list[Fraction]:
    slopes = []
    prev_cost, prev_profit = Fraction(0), Fraction(0)
    for corner in corners:
        slopes.append((corner.profit - prev_profit) / (corner.cost - prev_cost))
        prev_cost, prev_profit = corner.cost, corner.profit
    return slopes


@dataclass(frozen=True)
class ProfitCurve:
    """Optimal profit vs. allowed cost for one arm-state, corners only.

    The curve starts at the implicit point (0, 0) and ends with the corner
    (1, zeta(owner)); values at non-corner costs interpolate linearly and
    saturate beyond cost 1.
    """

    owner: str
    horizon: int
    corners: tuple[CurveCorner, ...]

    def value_at(self, cost: Fraction) -> Fraction:
        if cost < 0:
            raise ValueError("cost must be nonnegative")
        prev_cost, prev_profit = Fraction(0), Fraction(0)
        for corner in self.corners:
            if cost <= corner.cost:
                slope = (corner.profit - prev_profit) / (corner.cost - prev_cost)
                return prev_profit + slope * (cost - prev_cost)
            prev_cost, prev_profit = corner.cost, corner.profit
        return self.corners[-1].profit

    @property
    def ratio_index(self) -> Fraction:
        return self.corners[0].profit / self.corners[0].cost

    def slopes(self) -> list[Fraction]:
        return _segment_slopes(self.corners)

    def corner_points(self) -> list[tuple[Fraction, Fraction]]:
        return [(c.cost, c.profit) for c in self.corners]


@dataclass(frozen=True)
class ExplorationCurve:
    """Optimal profit vs. cost conditioned on exploring at the owner.

    Starts flat at (fixed_cost, 0) where fixed_cost = 1/h; corner costs
    exceed the fixed cost and segment slopes strictly decrease.  Leaves have
    no corners.
    """

    owner: str
    fixed_cost: Fraction
    corners: tuple[CurveCorner, ...]


def compute_exploration_curve(
    node: ArmNode,
    descendant_curves: Mapping[str, ProfitCurve],
    h: int,
) -> ExplorationCurve:
    """Merge the children's profit-curve segments in nonincreasing slope order.

    Each child segment enters scaled by the transition probability; equal
    slopes are merged into a single corner, whose allocations record the
    cumulative unscaled budget handed to each child.  Slope ties break by
    child id, then segment index (the merge makes the tie-break invisible in
    the curve values).
    """
    if h < 1:
        raise ValueError("h must be at least 1")
    segments: list[tuple[Fraction, str, int, Fraction, Fraction, Fraction]] = []
    children: list[tuple[str, Fraction]] = []
    for edge in node.edges:
        if edge.prob <= 0:
            continue
        children.append((edge.child, edge.prob))
        curve = descendant_curves.get(edge.child)
        if curve is None:
            raise CurveError(f"missing descendant curve for {edge.child!r} under {node.id!r}")
        prev_cost, prev_profit = Fraction(0), Fraction(0)
        for index, corner in enumerate(curve.corners):
            dcost = corner.cost - prev_cost
            dprofit = corner.profit - prev_profit
            segments.append((dprofit / dcost, edge.child, index, dcost, dprofit, edge.prob))
            prev_cost, prev_profit = corner.cost, corner.profit
    segments.sort(key=lambda s: (-s[0], s[1], s[2]))

    fixed_cost = Fraction(1, h)
    cost, profit = fixed_cost, Fraction(0)
    spent = {child: Fraction(0) for child, _ in children}
    raw: list[tuple[Fraction, Fraction, Fraction, dict[str, Fraction]]] = []
    for slope, child, _index, dcost, dprofit, prob in segments:
        cost += prob * dcost
        profit += prob * dprofit
        spent[child] += dcost
        raw.append((slope, cost, profit, {c: b for c, b in spent.items() if b > 0}))

    corners: list[CurveCorner] = []
    for i, (slope, cost, profit, alloc) in enumerate(raw):
        last_of_run = i + 1 == len(raw) or raw[i + 1][0] != slope
        if last_of_run:
            corners.append(CurveCorner(cost, profit, alloc))
    return ExplorationCurve(node.id, fixed_cost, tuple(corners))


def compute_profit_curve(u: str, x: ExplorationCurve, zeta_u: Fraction, h: int) -> ProfitCurve:
    """Concave envelope of (0,0), the exploration corners, and the exploit point (1, zeta_u).

    Picks the exploration corner maximizing profit/cost (rightmost on ties,
    which keeps slopes strictly decreasing); if even that ratio does not
    beat exploiting immediately, the curve is the single segment to
    (1, zeta_u).  Otherwise later exploration corners are retained while
    their marginal slope exceeds the slope of switching to exploitation.
    """
    if zeta_u < 0:
        raise CurveError(f"negative payoff {format_rational(zeta_u)} at {u!r}; payoffs must be nonnegative")
    exploit = CurveCorner(Fraction(1), zeta_u, {})
    best_j: int | None = None
    best_ratio: Fraction | None = None
    for j, corner in enumerate(x.corners):
        ratio = corner.profit / corner.cost
        if best_ratio is None or ratio >= best_ratio:
            best_ratio = ratio
            best_j = j
    if best_ratio is None or best_ratio <= zeta_u:
        return ProfitCurve(u, h, (exploit,))

    assert best_j is not None
    kept = [x.corners[best_j]]
    for j in range(best_j + 1, len(x.corners)):
        prev = x.corners[j - 1]
        cur = x.corners[j]
        marginal = (cur.profit - prev.profit) / (cur.cost - prev.cost)
        to_exploit = (zeta_u - prev.profit) / (1 - prev.cost)
        if marginal > to_exploit:
            kept.append(cur)
        else:
            break
    return ProfitCurve(u, h, (*kept, exploit))


def compute_all_curves(dag: ArmDag, h: int) -> dict[str, ProfitCurve]:
    """Profit curve of every state, deepest layer first.

    Nodes in one layer depend only on deeper layers, so the result is
    independent of the order nodes are visited within a layer.
    """
    if h < 1:
        raise ValueError("h must be at least 1")
    curves: dict[str, ProfitCurve] = {}
    for node in sorted(dag.nodes, key=lambda n: -n.layer):
        x = compute_exploration_curve(node, curves, h)
        curves[node.id] = compute_profit_curve(node.id, x, node.zeta, h)
    return curves


def ratio_index(curve: ProfitCurve) -> Fraction:
    """Initial slope of the profit curve: the best profit-to-cost ratio."""
    return curve.ratio_index


def ratio_index_table(dag: ArmDag, h: int) -> dict[str, Fraction]:
    return {node_id: curve.ratio_index for node_id, curve in compute_all_curves(dag, h).items()}


def extract_ratio_policy(dag: ArmDag, curves: Mapping[str, ProfitCurve], u: str) -> SingleArmPolicy:
    """Deterministic policy realizing the first corner of ``curves[u]``.

    Walks the corner allocations: a child with budget 0 is abandoned, budget
    1 lands on the child's exploit corner, and any other budget must land
    exactly on one of the child's exploration corners, where the walk
    recurses.  The result's exact cost and profit equal the first corner's.
    """
    labels: dict[str, PolicyLabel] = {}

    def assign(node_id: str, label: PolicyLabel) -> None:
        previous = labels.get(node_id)
        if previous is not None and previous != label:
            raise CurveError(
                f"inconsistent ratio-policy labels at {node_id}: {previous.value} vs {label.value}"
            )
        labels[node_id] = label

    def apply_corner(node_id: str, corner: CurveCorner) -> None:
        if not corner.allocations:
            assign(node_id, PolicyLabel.EXPLOIT)
            return
        assign(node_id, PolicyLabel.EXPLORE)
        for edge in dag.out_edges(node_id):
            budget = corner.allocations.get(edge.child, Fraction(0))
            if budget == 0:
                assign(edge.child, PolicyLabel.ABANDON)
                continue
            child_curve = curves[edge.child]
            target = next((c for c in child_curve.corners if c.cost == budget), None)
            if target is None:
                raise CurveError(
                    f"allocation {format_rational(budget)} for {edge.child} does not land on a corner"
                )
            apply_corner(edge.child, target)

    if u not in curves:
        raise CurveError(f"no curve computed for {u!r}")
    apply_corner(u, curves[u].corners[0])
    return SingleArmPolicy(u, labels)
