from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ratiobandits.arms import ArmDag, ArmNode, Edge, beta_bernoulli_arm
from ratiobandits.curves import (
    CurveError,
    PolicyLabel,
    compute_all_curves,
    compute_exploration_curve,
    compute_profit_curve,
    extract_ratio_policy,
    ratio_index,
)
from ratiobandits.generators import random_arm
from ratiobandits.oracle import enumerate_policies


def corners(curve):
    return curve.corner_points()


def test_exploration_curve_fork_merges_leaf_segments(fork_arm):
    curves = compute_all_curves(fork_arm, 4)
    x = compute_exploration_curve(fork_arm.node("u"), curves, 4)
    assert x.fixed_cost == Fraction(1, 4)
    assert [(c.cost, c.profit) for c in x.corners] == [
        (Fraction(3, 4), Fraction(1, 2)),
        (Fraction(5, 4), Fraction(1, 2)),
    ]
    assert x.corners[0].allocations == {"v1": Fraction(1)}
    assert x.corners[1].allocations == {"v1": Fraction(1), "v2": Fraction(1)}


def test_exploration_curve_identical_children_merge_slopes():
    dag = ArmDag(
        (
            ArmNode("u", 0, Fraction(1, 2), (Edge("a", Fraction(1, 2)), Edge("b", Fraction(1, 2)))),
            ArmNode("a", 1, Fraction(1, 2)),
            ArmNode("b", 1, Fraction(1, 2)),
        ),
        "u",
        1,
    )
    curves = compute_all_curves(dag, 3)
    x = compute_exploration_curve(dag.node("u"), curves, 3)
    assert len(x.corners) == len(curves["a"].corners)


def test_exploration_curve_single_child_shifts_by_fixed_cost():
    dag = ArmDag(
        (
            ArmNode("u", 0, Fraction(1, 2), (Edge("a", Fraction(1)),)),
            ArmNode("a", 1, Fraction(1, 2), (Edge("b", Fraction(1, 2)), Edge("c", Fraction(1, 2)))),
            ArmNode("b", 2, Fraction(1)),
            ArmNode("c", 2, Fraction(0)),
        ),
        "u",
        2,
    )
    h = 5
    curves = compute_all_curves(dag, h)
    x = compute_exploration_curve(dag.node("u"), curves, h)
    shifted = [(c.cost + Fraction(1, h), c.profit) for c in curves["a"].corners]
    assert [(c.cost, c.profit) for c in x.corners] == shifted


def test_exploration_curve_missing_descendant_errors(fork_arm):
    with pytest.raises(CurveError, match="missing descendant curve"):
        compute_exploration_curve(fork_arm.node("u"), {}, 4)


def test_profit_curve_leaf_is_single_exploit_segment():
    curve = compute_all_curves(ArmDag((ArmNode("w", 0, Fraction(3, 7)),), "w", 0), 2)["w"]
    assert corners(curve) == [(Fraction(1), Fraction(3, 7))]
    assert ratio_index(curve) == Fraction(3, 7)


def test_profit_curve_fork_envelope(fork_arm):
    curve = compute_all_curves(fork_arm, 4)["u"]
    assert corners(curve) == [(Fraction(3, 4), Fraction(1, 2)), (Fraction(1), Fraction(1, 2))]
    assert curve.slopes() == [Fraction(2, 3), Fraction(0)]


def test_profit_curve_fork_exploits_immediately_at_h1(fork_arm):
    curve = compute_all_curves(fork_arm, 1)["u"]
    assert corners(curve) == [(Fraction(1), Fraction(1, 2))]


def test_profit_curve_rejects_negative_payoff():
    x = compute_exploration_curve(ArmNode("w", 0, Fraction(-1, 2)), {}, 2)
    with pytest.raises(CurveError, match="nonnegative"):
        compute_profit_curve("w", x, Fraction(-1, 2), 2)


def test_all_equal_payoffs_collapse_to_one_segment():
    arm = ArmDag(
        (
            ArmNode("u", 0, Fraction(2, 5), (Edge("a", Fraction(1, 3)), Edge("b", Fraction(2, 3)))),
            ArmNode("a", 1, Fraction(2, 5), (Edge("c", Fraction(1)),)),
            ArmNode("b", 1, Fraction(2, 5)),
            ArmNode("c", 2, Fraction(2, 5)),
        ),
        "u",
        2,
    )
    for node_id, curve in compute_all_curves(arm, 3).items():
        assert corners(curve) == [(Fraction(1), Fraction(2, 5))], node_id


def test_one_step_scenario_arm_exploits_immediately():
    arm = beta_bernoulli_arm(28, 19, 1)
    curve = compute_all_curves(arm, 1)[arm.root]
    assert corners(curve) == [(Fraction(1), Fraction(28, 47))]


def test_ratio_index_examples(fork_arm):
    assert compute_all_curves(fork_arm, 4)["u"].ratio_index == Fraction(2, 3)


def test_ratio_index_at_least_zeta_everywhere():
    rng = random.Random(5)
    for _ in range(20):
        arm = random_arm(rng, max_depth=2, policy_budget=400)
        for h in (1, 2, 4):
            for node_id, curve in compute_all_curves(arm, h).items():
                assert curve.ratio_index >= arm.node(node_id).zeta


def test_extract_policy_examples(fork_arm, leaf_arm):
    leaf_curves = compute_all_curves(leaf_arm, 3)
    assert extract_ratio_policy(leaf_arm, leaf_curves, "w").labels == {"w": PolicyLabel.EXPLOIT}
    curves = compute_all_curves(fork_arm, 4)
    policy = extract_ratio_policy(fork_arm, curves, "u")
    assert policy.labels == {"u": PolicyLabel.EXPLORE, "v1": PolicyLabel.EXPLOIT, "v2": PolicyLabel.ABANDON}


def _policy_cost(arm, policy, h):
    weight = {policy.start: Fraction(1)}
    explored = exploited = Fraction(0)
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
    return explored / h + exploited


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 5))
def test_curve_invariants_on_random_instances(seed, h):
    arm = random_arm(random.Random(seed), max_depth=3, policy_budget=600)
    curves = compute_all_curves(arm, h)
    for node in arm.nodes:
        curve = curves[node.id]
        costs = [c.cost for c in curve.corners]
        assert all(a < b for a, b in zip(costs, costs[1:])), "costs strictly increase"
        assert costs[-1] == 1 and curve.corners[-1].profit == node.zeta
        slopes = curve.slopes()
        assert all(a > b for a, b in zip(slopes, slopes[1:])), "slopes strictly decrease"
        profits = [c.profit for c in curve.corners]
        assert all(a <= b for a, b in zip([Fraction(0)] + profits, profits))
        assert len(curve.corners) <= 2 * arm.subdag_size(node.id)
        # per-child allocations grow along the exploration corners
        exploration = [c for c in curve.corners if c.allocations]
        for child, _ in arm.children(node.id):
            budgets = [c.allocations.get(child, Fraction(0)) for c in exploration]
            assert all(a <= b for a, b in zip(budgets, budgets[1:]))
        # extracted policy realizes the first corner within budget
        policy = extract_ratio_policy(arm, curves, node.id)
        assert _policy_cost(arm, policy, h) == curve.corners[0].cost <= 1


def test_first_corner_beats_every_enumerated_policy(fork_arm):
    for h in (1, 2, 4):
        curve = compute_all_curves(fork_arm, h)["u"]
        for point in enumerate_policies(fork_arm, "u", h):
            if point.cost > 0:
                assert curve.ratio_index >= point.profit / point.cost


def test_policy_respects_index_ordering():
    rng = random.Random(11)
    for _ in range(15):
        arm = random_arm(rng, max_depth=2, policy_budget=400)
        for h in (1, 3):
            curves = compute_all_curves(arm, h)
            for node in arm.nodes:
                policy = extract_ratio_policy(arm, curves, node.id)
                r_start = curves[node.id].ratio_index
                for state, label in policy.labels.items():
                    if label is PolicyLabel.ABANDON:
                        assert curves[state].ratio_index <= r_start
                    else:
                        assert curves[state].ratio_index >= r_start


def test_curves_independent_of_node_order():
    rng = random.Random(3)
    arm = random_arm(rng, max_depth=3, policy_budget=600)
    shuffled_nodes = list(arm.nodes)
    random.Random(8).shuffle(shuffled_nodes)
    shuffled = ArmDag(tuple(shuffled_nodes), arm.root, arm.depth_bound)
    a = compute_all_curves(arm, 3)
    b = compute_all_curves(shuffled, 3)
    assert {k: v.corner_points() for k, v in a.items()} == {k: v.corner_points() for k, v in b.items()}


def test_value_at_interpolates_and_saturates(fork_arm):
    curve = compute_all_curves(fork_arm, 4)["u"]
    assert curve.value_at(Fraction(0)) == 0
    assert curve.value_at(Fraction(3, 8)) == Fraction(1, 4)
    assert curve.value_at(Fraction(3, 4)) == Fraction(1, 2)
    assert curve.value_at(Fraction(2)) == Fraction(1, 2)
