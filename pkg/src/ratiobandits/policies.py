"""Composite decision strategies over multiple arms.

Every strategy is a deterministic map from the joint system state (plus the
step counter and any per-episode memory) to an action.  Index tables are
frozen at construction from the strategy's nominal budget or horizon and
never recomputed from the remaining budget.  All argmax ties break to the
lowest arm index.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .arms import ArmDag, SystemState
from .curves import PolicyLabel, compute_all_curves, extract_ratio_policy
from .gittins import gittins_indices_all


@dataclass(frozen=True)
class Action:
    """Explore(i), Exploit(i), or Abandon.

    Exploit and Abandon terminate a budgeted episode; in horizon play any
    arm-naming action plays that arm for one step.
    """

    kind: str
    arm: int | None = None

    @classmethod
    def explore(cls, arm: int) -> "Action":
        return cls("explore", arm)

    @classmethod
    def exploit(cls, arm: int) -> "Action":
        return cls("exploit", arm)

    @classmethod
    def abandon(cls) -> "Action":
        return cls("abandon", None)


def _argmax_lowest(values: Sequence) -> int:
    best_index = 0
    best = values[0]
    for i, value in enumerate(values):
        if value > best:
            best = value
            best_index = i
    return best_index


class Strategy:
    """Base strategy: stateless unless ``initial_memory``/``act`` thread memory."""

    name = "strategy"

    def __init__(self, arms: Sequence[ArmDag]):
        self.arms = tuple(arms)

    def initial_memory(self) -> object:
        return None

    def act(self, state: SystemState, t: int, memory: object) -> tuple[Action, object]:
        raise NotImplementedError

    def _zetas(self, state: SystemState) -> list[Fraction]:
        return [arm.node(s).zeta for arm, s in zip(self.arms, state.arm_states)]

    def _exploit_best(self, state: SystemState) -> Action:
        return Action.exploit(_argmax_lowest(self._zetas(state)))


class ExploitBest(Strategy):
    """Play or exploit the arm with the highest current expected payoff."""

    name = "exploit_best"

    def act(self, state: SystemState, t: int, memory: object) -> tuple[Action, object]:
        return self._exploit_best(state), memory


class GreedyRatio(Strategy):
    """Explore the arm with the highest ratio index; exploit the best payoff at budget 0.

    The ratio-index table is computed once for the frozen initial budget
    ``h`` and consulted at every step regardless of the budget remaining.
    """

    name = "greedy_ratio"

    def __init__(self, arms: Sequence[ArmDag], h: int):
        super().__init__(arms)
        self.h = h
        self._curves = [compute_all_curves(arm, h) for arm in arms]
        self.tables: list[Mapping[str, Fraction]] = [
            {u: curve.ratio_index for u, curve in per_arm.items()} for per_arm in self._curves
        ]

    def _argmax_ratio(self, state: SystemState) -> int:
        return _argmax_lowest([table[s] for table, s in zip(self.tables, state.arm_states)])

    def act(self, state: SystemState, t: int, memory: object) -> tuple[Action, object]:
        if state.remaining_budget == 0:
            return self._exploit_best(state), memory
        return Action.explore(self._argmax_ratio(state)), memory


class Persistent(GreedyRatio):
    """Commit to the full ratio-index policy of the best arm until it exploits or abandons.

    On abandonment the commitment is recomputed from the current states.  If
    the budget runs out while the committed policy still wants to explore,
    the arm with the highest current ratio index is exploited immediately.
    Episode memory holds the committed (arm, label map) pair.
    """

    name = "persistent"

    def __init__(self, arms: Sequence[ArmDag], h: int):
        super().__init__(arms, h)
        self._label_cache: dict[tuple[int, str], Mapping[str, PolicyLabel]] = {}

    def _labels(self, arm_index: int, state_id: str) -> Mapping[str, PolicyLabel]:
        key = (arm_index, state_id)
        if key not in self._label_cache:
            policy = extract_ratio_policy(self.arms[arm_index], self._curves[arm_index], state_id)
            self._label_cache[key] = policy.labels
        return self._label_cache[key]

    def act(self, state: SystemState, t: int, memory: object) -> tuple[Action, object]:
        while True:
            if memory is None:
                if state.remaining_budget == 0:
                    return Action.exploit(self._argmax_ratio(state)), None
                i = self._argmax_ratio(state)
                memory = (i, self._labels(i, state.arm_states[i]))
            i, labels = memory
            label = labels[state.arm_states[i]]
            if label is PolicyLabel.EXPLOIT:
                return Action.exploit(i), memory
            if label is PolicyLabel.ABANDON:
                memory = None
                continue
            if state.remaining_budget == 0:
                return Action.exploit(self._argmax_ratio(state)), memory
            return Action.explore(i), memory


class GittinsGreedy(Strategy):
    """Explore the arm with the highest Gittins index at discount 1 - 1/h.

    For h = 1 the discount degenerates to 0, so the table falls back to the
    myopic limit, the current payoff itself.
    """

    name = "gittins_greedy"

    def __init__(self, arms: Sequence[ArmDag], h: int, tolerance: float = 1e-9):
        super().__init__(arms)
        self.h = h
        if h >= 2:
            theta = 1.0 - 1.0 / h
            self.tables = [gittins_indices_all(arm, theta, tolerance) for arm in arms]
        else:
            self.tables = [{n.id: float(n.zeta) for n in arm.nodes} for arm in arms]

    def act(self, state: SystemState, t: int, memory: object) -> tuple[Action, object]:
        if state.remaining_budget == 0:
            return self._exploit_best(state), memory
        scores = [table[s] for table, s in zip(self.tables, state.arm_states)]
        return Action.explore(_argmax_lowest(scores)), memory


class RatioSwitch(Strategy):
    """Ratio-index exploration for the first half of the horizon, then best payoff.

    The ratio index is computed for budget floor(h/2) and used for the first
    floor(h/2) steps; afterwards the arm with the highest current expected
    reward is played, re-evaluated every step.
    """

    name = "ratio_switch"

    def __init__(self, arms: Sequence[ArmDag], h: int):
        if h < 1:
            raise ValueError("h must be at least 1")
        super().__init__(arms)
        self.h = h
        self.half = h // 2
        self.tables: list[Mapping[str, Fraction]] | None = None
        if self.half >= 1:
            self.tables = [
                {u: curve.ratio_index for u, curve in compute_all_curves(arm, self.half).items()} for arm in arms
            ]

    def _first_phase(self, state: SystemState) -> Action:
        assert self.tables is not None
        return Action.explore(_argmax_lowest([table[s] for table, s in zip(self.tables, state.arm_states)]))

    def act(self, state: SystemState, t: int, memory: object) -> tuple[Action, object]:
        if t >= self.h:
            raise ValueError(f"{self.name}({self.h}): episode over at step {t}")
        if t < self.half:
            return self._first_phase(state), memory
        return Action.explore(_argmax_lowest(self._zetas(state))), memory


class GittinsSwitch(RatioSwitch):
    """Gittins-index exploration at discount 1 - 1/floor(h/2), then best payoff.

    For h <= 3 the half-horizon is at most 1 and the discount degenerates,
    so the whole episode plays the best current payoff.
    """

    name = "gittins_switch"

    def __init__(self, arms: Sequence[ArmDag], h: int, tolerance: float = 1e-9):
        if h < 1:
            raise ValueError("h must be at least 1")
        Strategy.__init__(self, arms)
        self.h = h
        self.half = h // 2 if h // 2 >= 2 else 0
        self.tables = None
        if self.half:
            theta = 1.0 - 1.0 / self.half
            self.tables = [gittins_indices_all(arm, theta, tolerance) for arm in arms]

    def _first_phase(self, state: SystemState) -> Action:
        assert self.tables is not None
        return Action.explore(_argmax_lowest([table[s] for table, s in zip(self.tables, state.arm_states)]))


class RatioScale(Strategy):
    """Doubling schedule of RatioSwitch blocks: block k covers steps [2^k - 1, 2^(k+1) - 1).

    Oblivious to the horizon and the discount sequence; the index in force
    depends only on the global step.
    """

    name = "ratio_scale"
    _block_cls = RatioSwitch

    def __init__(self, arms: Sequence[ArmDag]):
        super().__init__(arms)
        self._blocks: dict[int, Strategy] = {}

    def _block(self, k: int) -> Strategy:
        if k not in self._blocks:
            self._blocks[k] = self._block_cls(self.arms, 2**k)
        return self._blocks[k]

    def act(self, state: SystemState, t: int, memory: object) -> tuple[Action, object]:
        if t < 0:
            raise ValueError("step must be nonnegative")
        k = (t + 1).bit_length() - 1
        local = t - (2**k - 1)
        action, _ = self._block(k).act(state, local, None)
        return action, memory


class GittinsScale(RatioScale):
    """Doubling schedule of GittinsSwitch blocks."""

    name = "gittins_scale"
    _block_cls = GittinsSwitch


@dataclass(frozen=True)
class StrategyConfig:
    """Declarative strategy description used by experiment configs.

    ``h`` defaults to the experiment's budget or horizon; the scale
    strategies ignore it.  Gittins discounts derive from ``h`` as 1 - 1/h
    (greedy) or 1 - 1/floor(h/2) (switch).
    """

    kind: str
    h: int | None = None
    tolerance: float = 1e-9


STRATEGY_KINDS = (
    "greedy_ratio",
    "persistent",
    "gittins_greedy",
    "exploit_best",
    "ratio_switch",
    "gittins_switch",
    "ratio_scale",
    "gittins_scale",
)


def make_strategy(config: StrategyConfig, arms: Sequence[ArmDag], default_h: int | None = None) -> Strategy:
    h = config.h if config.h is not None else default_h
    kind = config.kind
    if kind not in STRATEGY_KINDS:
        raise ValueError(f"unknown strategy kind {kind!r}; expected one of {', '.join(STRATEGY_KINDS)}")
    if kind == "exploit_best":
        return ExploitBest(arms)
    if kind == "ratio_scale":
        return RatioScale(arms)
    if kind == "gittins_scale":
        return GittinsScale(arms)
    if h is None:
        raise ValueError(f"strategy {kind!r} needs a budget/horizon h")
    if kind == "greedy_ratio":
        return GreedyRatio(arms, h)
    if kind == "persistent":
        return Persistent(arms, h)
    if kind == "gittins_greedy":
        return GittinsGreedy(arms, h, config.tolerance)
    if kind == "ratio_switch":
        return RatioSwitch(arms, h)
    return GittinsSwitch(arms, h, config.tolerance)
