from __future__ import annotations

from fractions import Fraction

import pytest

from ratiobandits.arms import ArmDag, ArmNode, Edge, beta_bernoulli_arm


@pytest.fixture
def fork_arm() -> ArmDag:
    """Root paying 1/2 that resolves into a payoff-1 or payoff-0 leaf, 50/50."""
    return ArmDag(
        (
            ArmNode("u", 0, Fraction(1, 2), (Edge("v1", Fraction(1, 2)), Edge("v2", Fraction(1, 2)))),
            ArmNode("v1", 1, Fraction(1)),
            ArmNode("v2", 1, Fraction(0)),
        ),
        "u",
        1,
    )


@pytest.fixture
def leaf_arm() -> ArmDag:
    return ArmDag((ArmNode("w", 0, Fraction(7, 10)),), "w", 0)


@pytest.fixture
def scenario_arms() -> list[ArmDag]:
    """The three one-step arms of the no-exact-index scenario: A=(5,4), B=C=(28,19)."""
    return [beta_bernoulli_arm(5, 4, 1), beta_bernoulli_arm(28, 19, 1), beta_bernoulli_arm(28, 19, 1)]
