from __future__ import annotations

import random
from fractions import Fraction

import pytest

from ratiobandits.arms import ArmDag, ArmNode, SystemState, beta_bernoulli_arm
from ratiobandits.curves import PolicyLabel, compute_all_curves, extract_ratio_policy
from ratiobandits.evaluator import run_budgeted_episode_on_tape, sample_outcome_tape
from ratiobandits.generators import random_instance
from ratiobandits.oracle import exact_policy_value, optimal_budgeted_value, optimal_finite_horizon_value
from ratiobandits.policies import (
    Action,
    ExploitBest,
    GittinsGreedy,
    GittinsScale,
    GittinsSwitch,
    GreedyRatio,
    Persistent,
    RatioScale,
    RatioSwitch,
    StrategyConfig,
    make_strategy,
)


def absorbing(payoff: Fraction, name: str = "s") -> ArmDag:
    return ArmDag((ArmNode(name, 0, payoff),), name, 1)


def test_greedy_exploits_best_payoff_at_zero_budget():
    arms = [absorbing(Fraction(1, 3), "a"), absorbing(Fraction(2, 5), "b")]
    greedy = GreedyRatio(arms, 2)
    action, _ = greedy.act(SystemState(("a", "b"), 0), 2, None)
    assert action == Action.exploit(1)


def test_greedy_breaks_ties_to_lowest_arm():
    arms = [beta_bernoulli_arm(2, 2, 1), beta_bernoulli_arm(2, 2, 1)]
    greedy = GreedyRatio(arms, 1)
    action, _ = greedy.act(SystemState((arms[0].root, arms[1].root), 1), 0, None)
    assert action == Action.explore(0)


def test_greedy_index_table_frozen_at_initial_budget(fork_arm):
    # r(fork, 4) = 2/3 but r(fork, 1) = 1/2: at one budget step left, a table
    # recomputed from the remaining budget would flip the argmax to the
    # absorbing arm, so this pins the frozen-h contract behaviorally
    arms = [fork_arm, absorbing(Fraction(3, 5), "lazy")]
    greedy = GreedyRatio(arms, 4)
    assert greedy.tables[0]["u"] == Fraction(2, 3)
    assert GreedyRatio(arms, 1).tables[0]["u"] == Fraction(1, 2)
    last_step = SystemState(("u", "lazy"), 1)
    assert greedy.act(last_step, 3, None)[0] == Action.explore(0)


def test_greedy_meets_approximation_bound_on_scenario(scenario_arms):
    a, b, _ = scenario_arms
    value = exact_policy_value(GreedyRatio([a, b], 1), [a, b], 1, "budgeted")
    assert value >= Fraction(22, 100) * optimal_budgeted_value([a, b], 1)


def test_persistent_single_arm_follows_its_ratio_policy():
    arm = beta_bernoulli_arm(1, 1, 3)
    h = 3
    persistent = Persistent([arm], h)
    curves = compute_all_curves(arm, h)
    labels = extract_ratio_policy(arm, curves, arm.root).labels
    for seed in range(20):
        tape = sample_outcome_tape([arm], random.Random(seed))
        state = arm.root
        memory = persistent.initial_memory()
        delta = h
        t = 0
        while True:
            action, memory = persistent.act(SystemState((state,), delta), t, memory)
            expected = labels[state]
            if expected is PolicyLabel.EXPLOIT:
                assert action == Action.exploit(0)
                break
            assert expected is PolicyLabel.EXPLORE and action == Action.explore(0)
            state = tape[0].get(state, state)
            delta -= 1
            t += 1
            if delta == 0:
                break


def test_persistent_dominated_by_greedy():
    rng = random.Random(71)
    for _ in range(20):
        arms = random_instance(rng)
        for h in (1, 2, 3):
            g = exact_policy_value(GreedyRatio(arms, h), arms, h, "budgeted")
            p = exact_policy_value(Persistent(arms, h), arms, h, "budgeted")
            assert g >= p


def test_persistent_exploration_prefix_of_greedy_under_coupling():
    rng = random.Random(72)
    for _ in range(15):
        arms = random_instance(rng)
        for h in (1, 2, 3, 4):
            greedy = GreedyRatio(arms, h)
            persistent = Persistent(arms, h)
            for rep in range(10):
                tape = sample_outcome_tape(arms, random.Random(rep))
                _, greedy_seq = run_budgeted_episode_on_tape(greedy, arms, h, tape)
                _, persistent_seq = run_budgeted_episode_on_tape(persistent, arms, h, tape)
                assert persistent_seq == greedy_seq[: len(persistent_seq)]


def test_gittins_greedy_on_absorbing_arms():
    arms = [absorbing(Fraction(1, 3), "a"), absorbing(Fraction(2, 5), "b")]
    strategy = GittinsGreedy(arms, 3)
    assert strategy.act(SystemState(("a", "b"), 0), 3, None)[0] == Action.exploit(1)
    action, _ = strategy.act(SystemState(("a", "b"), 2), 1, None)
    assert action == Action.explore(1)


def test_gittins_greedy_ties_to_lowest_arm():
    arms = [beta_bernoulli_arm(2, 3, 2), beta_bernoulli_arm(2, 3, 2)]
    strategy = GittinsGreedy(arms, 4)
    assert strategy.act(SystemState((arms[0].root, arms[1].root), 4), 0, None)[0] == Action.explore(0)


def test_gittins_greedy_h1_falls_back_to_myopic():
    arms = [beta_bernoulli_arm(1, 2, 1), beta_bernoulli_arm(2, 1, 1)]
    strategy = GittinsGreedy(arms, 1)
    assert strategy.tables[0][arms[0].root] == pytest.approx(1 / 3)
    assert strategy.act(SystemState((arms[0].root, arms[1].root), 1), 0, None)[0] == Action.explore(1)


def test_ratio_switch_h1_plays_best_payoff():
    arms = [absorbing(Fraction(1, 3), "a"), absorbing(Fraction(2, 5), "b")]
    switch = RatioSwitch(arms, 1)
    assert switch.act(SystemState(("a", "b"), None), 0, None)[0] == Action.explore(1)


def test_ratio_switch_h2_uses_budget1_index_then_payoff():
    lazy = absorbing(Fraction(2, 5), "s")
    learner = beta_bernoulli_arm(1, 1, 2)
    arms = [lazy, learner]
    switch = RatioSwitch(arms, 2)
    r_lazy = compute_all_curves(lazy, 1)["s"].ratio_index
    r_learner = compute_all_curves(learner, 1)[learner.root].ratio_index
    assert (r_lazy, r_learner) == (Fraction(2, 5), Fraction(1, 2))
    first, _ = switch.act(SystemState(("s", learner.root), None), 0, None)
    assert first == Action.explore(1)
    second, _ = switch.act(SystemState(("s", "2:1"), None), 1, None)
    assert second == Action.explore(1)
    second_worse, _ = switch.act(SystemState(("s", "1:2"), None), 1, None)
    assert second_worse == Action.explore(0)


def test_ratio_switch_first_phase_tie_goes_low():
    arms = [absorbing(Fraction(1, 2), "s"), beta_bernoulli_arm(1, 1, 2)]
    switch = RatioSwitch(arms, 2)
    assert switch.act(SystemState(("s", "1:1"), None), 0, None)[0] == Action.explore(0)


def test_ratio_switch_rejects_steps_past_horizon():
    arms = [absorbing(Fraction(1, 2), "s")]
    switch = RatioSwitch(arms, 2)
    with pytest.raises(ValueError, match="episode over"):
        switch.act(SystemState(("s",), None), 2, None)


def test_gittins_switch_short_horizons_play_best_payoff():
    arms = [beta_bernoulli_arm(1, 1, 2), absorbing(Fraction(3, 5), "s")]
    for h in (1, 2, 3):
        switch = GittinsSwitch(arms, h)
        for t in range(h):
            action, _ = switch.act(SystemState(("1:1", "s"), None), t, None)
            assert action == Action.explore(1)


def test_scale_block_schedule():
    arms = [absorbing(Fraction(1, 3), "a"), beta_bernoulli_arm(1, 1, 4)]
    scale = RatioScale(arms)
    # t=0 is the h=1 block: play argmax payoff (uniform arm ties at 1/2 > 1/3)
    assert scale.act(SystemState(("a", "1:1"), None), 0, None)[0] == Action.explore(1)
    # t=5 sits in the h=4 block (steps 3..6) at local step 2: its second half
    action, _ = scale.act(SystemState(("a", "1:2"), None), 5, None)
    assert action == Action.explore(0)  # payoff 1/3 in arm 1 vs 1/3 in arm 2: tie to arm 0
    inner = scale._block(2)
    assert isinstance(inner, RatioSwitch) and inner.h == 4


def test_scale_prefix_values_clear_constant():
    rng = random.Random(73)
    for _ in range(6):
        arms = random_instance(rng)
        scale = RatioScale(arms)
        gscale = GittinsScale(arms)
        for h in (1, 2, 3, 4, 5, 6):
            fstar = optimal_finite_horizon_value(arms, h)
            assert exact_policy_value(scale, arms, h, "horizon") >= Fraction(187, 10000) * fstar
            assert exact_policy_value(gscale, arms, h, "horizon") >= Fraction(1, 4000) * fstar


def test_exploit_best_examples():
    arms = [absorbing(Fraction(1, 3), "a"), absorbing(Fraction(2, 5), "b"), absorbing(Fraction(2, 5), "c")]
    strategy = ExploitBest(arms)
    assert strategy.act(SystemState(("a", "b", "c"), 3), 0, None)[0] == Action.exploit(1)
    single = ExploitBest([arms[0]])
    assert single.act(SystemState(("a",), 0), 0, None)[0] == Action.exploit(0)


def test_exploit_best_matches_greedy_at_zero_budget():
    arms = [beta_bernoulli_arm(1, 2, 1), beta_bernoulli_arm(3, 1, 1)]
    state = SystemState((arms[0].root, arms[1].root), 0)
    assert ExploitBest(arms).act(state, 1, None)[0] == GreedyRatio(arms, 1).act(state, 1, None)[0]


def test_strategies_are_deterministic():
    arms = [beta_bernoulli_arm(1, 1, 2), beta_bernoulli_arm(2, 1, 2)]
    state = SystemState((arms[0].root, arms[1].root), 2)
    for strategy in (GreedyRatio(arms, 2), Persistent(arms, 2), GittinsGreedy(arms, 2), RatioSwitch(arms, 4)):
        first, memory = strategy.act(state, 0, strategy.initial_memory())
        second, _ = strategy.act(state, 0, strategy.initial_memory())
        assert first == second


def test_make_strategy_factory():
    arms = [beta_bernoulli_arm(1, 1, 1)]
    assert make_strategy(StrategyConfig("greedy_ratio"), arms, default_h=2).name == "greedy_ratio"
    assert make_strategy(StrategyConfig("ratio_scale"), arms).name == "ratio_scale"
    with pytest.raises(ValueError, match="unknown strategy"):
        make_strategy(StrategyConfig("nope"), arms, 2)
    with pytest.raises(ValueError, match="needs a budget"):
        make_strategy(StrategyConfig("persistent"), arms)
