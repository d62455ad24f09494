"""Budgeted learning with the ratio index.

Exact profit curves and ratio indices, Gittins indices on truncated arms,
the composite policies built from them (greedy, persistent, switch, and
scale variants), and brute-force oracles that certify the toolkit's
guarantees at desk scale.
"""

from .arms import (
    ArmDag,
    ArmNode,
    ArmSpecError,
    Edge,
    Rational,
    StateGraph,
    SystemState,
    ValidationReport,
    beta_bernoulli_arm,
    canonical_signature,
    format_rational,
    layerize,
    load_arm,
    loads_arm,
    parse_rational,
    serialize_arm,
    validate,
)
from .curves import (
    CurveCorner,
    CurveError,
    ExplorationCurve,
    PolicyLabel,
    ProfitCurve,
    SingleArmPolicy,
    compute_all_curves,
    compute_exploration_curve,
    compute_profit_curve,
    extract_ratio_policy,
    ratio_index,
    ratio_index_table,
)
from .evaluator import (
    DiscountSequence,
    DiscountedReport,
    EpisodeTrace,
    SimulationReport,
    discounted_value,
    reward_realization,
    simulate,
)
from .gittins import GittinsQuery, gittins_index, gittins_index_enumerated, gittins_indices_all
from .oracle import (
    OracleSizeError,
    PolicyPoint,
    budgeted_action_values,
    enumerate_policies,
    envelope_curve,
    exact_discounted_value,
    exact_expected_rewards,
    exact_policy_value,
    optimal_budgeted_value,
    optimal_finite_horizon_value,
    restart_property_check,
)
from .policies import (
    Action,
    ExploitBest,
    GittinsGreedy,
    GittinsScale,
    GittinsSwitch,
    GreedyRatio,
    Persistent,
    RatioScale,
    RatioSwitch,
    Strategy,
    StrategyConfig,
    make_strategy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
