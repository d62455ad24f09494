"""Seeded Monte Carlo evaluation and discount-sequence weighting.

Per-trial randomness is counter-based: trial ``i`` of seed ``s`` always
draws from ``random.Random(f"{s}:{i}")``, so a simulation's result is a
pure function of (config, seed) no matter how trials are scheduled across
workers.  Exact evaluation at desk scale lives in the oracle module; this
module is the floating-point path for larger runs.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import sqrt
from typing import Callable, Sequence

from .arms import ArmDag, ArmNode, Edge, SystemState
from .policies import Strategy


@dataclass(frozen=True)
class DiscountSequence:
    """Nonincreasing weights Lambda_t with Lambda_0 = 1 and a vanishing tail.

    Geometric and fixed-horizon sequences are the two special cases used
    throughout; explicit finite lists must end at 0.
    """

    kind: str
    theta: Fraction | None = None
    h: int | None = None
    values: tuple[Fraction, ...] | None = None

    @classmethod
    def geometric(cls, theta: Fraction | float) -> "DiscountSequence":
        theta = Fraction(theta) if not isinstance(theta, Fraction) else theta
        if not 0 < theta < 1:
            raise ValueError("geometric discount needs 0 < theta < 1")
        return cls("geometric", theta=theta)

    @classmethod
    def horizon(cls, h: int) -> "DiscountSequence":
        if h < 0:
            raise ValueError("horizon must be nonnegative")
        return cls("horizon", h=h)

    @classmethod
    def explicit(cls, values: Sequence[Fraction]) -> "DiscountSequence":
        values = tuple(Fraction(v) for v in values)
        if not values or values[0] != 1:
            raise ValueError("explicit discount sequence must start at Lambda_0 = 1")
        for a, b in zip(values, values[1:]):
            if b > a:
                raise ValueError("explicit discount sequence must be nonincreasing")
        if values[-1] != 0:
            raise ValueError("explicit discount sequence must end in a 0 tail")
        return cls("explicit", values=values)

    def weight(self, t: int) -> Fraction:
        if t < 0:
            raise ValueError("t must be nonnegative")
        if self.kind == "geometric":
            assert self.theta is not None
            return self.theta**t
        if self.kind == "horizon":
            assert self.h is not None
            return Fraction(1) if t < self.h else Fraction(0)
        assert self.values is not None
        return self.values[t] if t < len(self.values) else Fraction(0)

    def tail_bound(self, eval_horizon: int, max_reward: Fraction) -> float:
        """Upper bound on the weighted reward ignored beyond ``eval_horizon``."""
        if self.kind == "geometric":
            assert self.theta is not None
            return float(self.theta**eval_horizon * max_reward / (1 - self.theta))
        if self.kind == "horizon":
            assert self.h is not None
            return float(max(0, self.h - eval_horizon) * max_reward)
        assert self.values is not None
        return float(sum(self.values[eval_horizon:], Fraction(0)) * max_reward)


@dataclass(frozen=True)
class TraceStep:
    t: int
    arm: int | None
    node_id: str | None
    next_node_id: str | None
    reward: float


@dataclass(frozen=True)
class EpisodeTrace:
    """Replayable record of one trial: same seed and config give the same trace."""

    trial: int
    steps: tuple[TraceStep, ...]
    profit: float | None


@dataclass(frozen=True)
class SimulationReport:
    mean: float
    stderr: float
    trials: int
    mode: str
    h: int
    traces: tuple[EpisodeTrace, ...] | None = None


@dataclass(frozen=True)
class DiscountedReport:
    mean: float
    stderr: float
    trials: int
    eval_horizon: int
    tail_bound: float


def reward_realization(node: ArmNode, edge: Edge | None) -> float:
    """Realized reward for one play of ``node`` given the sampled edge.

    Absorbing nodes (no edge) pay their expected payoff deterministically;
    edges with an explicit reward (the Bernoulli 1/0 of (alpha, beta) arms)
    pay it, and generic martingale edges fall back to the node payoff, so
    the expectation over edges is always exactly zeta(node).
    """
    if edge is None or edge.reward is None:
        return float(node.zeta)
    return float(edge.reward)


def _trial_rng(seed: int, trial: int) -> random.Random:
    return random.Random(f"{seed}:{trial}")


def _sample_edge(rng: random.Random, edges: Sequence[Edge]) -> Edge:
    draw = rng.random()
    acc = 0.0
    for edge in edges:
        acc += float(edge.prob)
        if draw < acc:
            return edge
    return edges[-1]


def run_budgeted_episode(
    strategy: Strategy,
    arms: Sequence[ArmDag],
    h: int,
    rng: random.Random,
    record: bool = False,
) -> tuple[float, tuple[TraceStep, ...]]:
    states = [arm.root for arm in arms]
    memory = strategy.initial_memory()
    steps: list[TraceStep] = []
    delta = h
    t = 0
    while True:
        action, memory = strategy.act(SystemState(tuple(states), delta), t, memory)
        if action.kind == "exploit":
            profit = float(arms[action.arm].node(states[action.arm]).zeta)
            if record:
                steps.append(TraceStep(t, action.arm, states[action.arm], states[action.arm], profit))
            return profit, tuple(steps)
        if action.kind == "abandon":
            if record:
                steps.append(TraceStep(t, None, None, None, 0.0))
            return 0.0, tuple(steps)
        if delta <= 0:
            raise ValueError(f"{strategy.name}: explore with no budget left")
        i = action.arm
        edges = arms[i].out_edges(states[i])
        next_id = states[i] if not edges else _sample_edge(rng, edges).child
        if record:
            steps.append(TraceStep(t, i, states[i], next_id, 0.0))
        states[i] = next_id
        delta -= 1
        t += 1


def run_horizon_episode(
    strategy: Strategy,
    arms: Sequence[ArmDag],
    horizon: int,
    rng: random.Random,
    record: bool = False,
) -> tuple[list[float], tuple[TraceStep, ...]]:
    states = [arm.root for arm in arms]
    memory = strategy.initial_memory()
    rewards: list[float] = []
    steps: list[TraceStep] = []
    for t in range(horizon):
        action, memory = strategy.act(SystemState(tuple(states), None), t, memory)
        if action.kind == "abandon":
            raise ValueError(f"{strategy.name}: abandon is not a horizon-mode action")
        i = action.arm
        node = arms[i].node(states[i])
        edges = arms[i].out_edges(states[i])
        if edges:
            edge = _sample_edge(rng, edges)
            reward = reward_realization(node, edge)
            next_id = edge.child
        else:
            reward = reward_realization(node, None)
            next_id = states[i]
        if record:
            steps.append(TraceStep(t, i, states[i], next_id, reward))
        rewards.append(reward)
        states[i] = next_id
    return rewards, tuple(steps)


def sample_outcome_tape(arms: Sequence[ArmDag], rng: random.Random) -> tuple[dict[str, str], ...]:
    """One realized child per (arm, node): a shared probability space for coupling.

    Two strategies run on the same tape see identical transitions whenever
    they explore the same arm in the same state (each state is visited at
    most once per episode, layers being strictly increasing).
    """
    tape: list[dict[str, str]] = []
    for arm in arms:
        chosen: dict[str, str] = {}
        for node in arm.nodes:
            edges = arm.out_edges(node.id)
            if edges:
                chosen[node.id] = _sample_edge(rng, edges).child
        tape.append(chosen)
    return tuple(tape)


def run_budgeted_episode_on_tape(
    strategy: Strategy,
    arms: Sequence[ArmDag],
    h: int,
    tape: Sequence[dict[str, str]],
) -> tuple[float, tuple[int, ...]]:
    """Deterministic budgeted episode on a pre-sampled tape.

    Returns the realized profit and the sequence of arms explored, in order.
    """
    states = [arm.root for arm in arms]
    memory = strategy.initial_memory()
    explored: list[int] = []
    delta = h
    t = 0
    while True:
        action, memory = strategy.act(SystemState(tuple(states), delta), t, memory)
        if action.kind == "exploit":
            return float(arms[action.arm].node(states[action.arm]).zeta), tuple(explored)
        if action.kind == "abandon":
            return 0.0, tuple(explored)
        if delta <= 0:
            raise ValueError(f"{strategy.name}: explore with no budget left")
        i = action.arm
        explored.append(i)
        states[i] = tape[i].get(states[i], states[i])
        delta -= 1
        t += 1


def _mean_stderr(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    if min(values) == max(values):
        return values[0], 0.0
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, sqrt(var / n)


def _run_trials(worker: Callable[[int], object], trials: int, workers: int) -> list:
    if workers <= 1:
        return [worker(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, range(trials)))


def simulate(
    strategy: Strategy,
    arms: Sequence[ArmDag],
    mode: str,
    h: int,
    trials: int,
    seed: int,
    workers: int = 1,
    record_traces: bool = False,
) -> SimulationReport:
    """Monte Carlo estimate of a strategy's budgeted profit or horizon reward.

    The per-trial outcome list is reduced in trial order, so the report is
    bitwise identical for any worker count.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if mode not in ("budgeted", "horizon"):
        raise ValueError(f"unknown mode {mode!r}")

    def one(trial: int) -> tuple[float, EpisodeTrace | None]:
        rng = _trial_rng(seed, trial)
        if mode == "budgeted":
            profit, steps = run_budgeted_episode(strategy, arms, h, rng, record_traces)
            trace = EpisodeTrace(trial, steps, profit) if record_traces else None
            return profit, trace
        rewards, steps = run_horizon_episode(strategy, arms, h, rng, record_traces)
        trace = EpisodeTrace(trial, steps, None) if record_traces else None
        return sum(rewards), trace

    outcomes = _run_trials(one, trials, workers)
    values = [v for v, _ in outcomes]
    mean, stderr = _mean_stderr(values)
    traces = tuple(t for _, t in outcomes) if record_traces else None
    return SimulationReport(mean, stderr, trials, mode, h, traces)


def discounted_value(
    strategy: Strategy,
    arms: Sequence[ArmDag],
    lam: DiscountSequence,
    eval_horizon: int,
    trials: int,
    seed: int,
    workers: int = 1,
) -> DiscountedReport:
    """Monte Carlo estimate of the discounted reward sum over ``eval_horizon`` steps.

    The reported tail bound covers the weight the truncation ignores.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if eval_horizon < 1:
        raise ValueError("eval_horizon must be at least 1")
    weights = [float(lam.weight(t)) for t in range(eval_horizon)]

    def one(trial: int) -> float:
        rng = _trial_rng(seed, trial)
        rewards, _ = run_horizon_episode(strategy, arms, eval_horizon, rng)
        return sum(w * r for w, r in zip(weights, rewards))

    values = _run_trials(one, trials, workers)
    mean, stderr = _mean_stderr(values)
    max_reward = max(arm.max_zeta() for arm in arms)
    return DiscountedReport(mean, stderr, trials, eval_horizon, lam.tail_bound(eval_horizon, max_reward))
