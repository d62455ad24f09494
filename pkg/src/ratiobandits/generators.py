"""Random martingale instances for sweeps and property tests.

Trees are grown top-down: child payoffs are a mean-preserving spread of the
parent payoff, scaled to stay inside [0, 1], so the martingale property
holds exactly by construction.  Generation is deterministic per rng and
sized to keep the brute-force policy enumeration cheap.
"""

from __future__ import annotations

import random
from fractions import Fraction
from math import prod

from .arms import ArmDag, ArmNode, Edge, beta_bernoulli_arm


def random_martingale_arm(
    rng: random.Random,
    max_depth: int = 3,
    max_branch: int = 3,
    policy_budget: int = 1500,
) -> ArmDag:
    """Random layered martingale tree with exact rational payoffs.

    ``policy_budget`` caps the number of canonical deterministic single-arm
    policies of the result (the cost of enumerating it), retrying the draw
    until the cap holds.
    """
    for _ in range(200):
        dag, count = _grow_tree(rng, max_depth, max_branch)
        if count <= policy_budget:
            return dag
    raise RuntimeError("could not draw an instance within the policy budget")


def _grow_tree(rng: random.Random, max_depth: int, max_branch: int) -> tuple[ArmDag, int]:
    nodes: list[ArmNode] = []
    serial = iter(range(10**6))

    def leaf_prob(layer: int) -> float:
        return (0.1, 0.35, 0.55)[layer] if layer < 3 else 1.0

    def grow(layer: int, zeta: Fraction) -> tuple[str, int]:
        node_id = f"n{next(serial)}"
        if layer >= max_depth or rng.random() < leaf_prob(layer):
            nodes.append(ArmNode(node_id, layer, zeta))
            return node_id, 2
        k = rng.randint(1, max_branch)
        weights = [rng.randint(1, 4) for _ in range(k)]
        total = sum(weights)
        probs = [Fraction(w, total) for w in weights]
        targets = [Fraction(rng.randint(0, 8), 8) for _ in range(k)]
        mean = sum((p * t for p, t in zip(probs, targets)), Fraction(0))
        scale = Fraction(1)
        for t in targets:
            drift = t - mean
            if drift > 0 and 1 - zeta < scale * drift:
                scale = (1 - zeta) / drift
            elif drift < 0 and zeta < scale * (-drift):
                scale = zeta / (-drift)
        scale *= Fraction(rng.randint(0, 4), 4)
        children = [grow(layer + 1, zeta + scale * (t - mean)) for t in targets]
        count = 2 + prod(c for _, c in children)
        edges = tuple(Edge(child_id, p) for (child_id, _), p in zip(children, probs))
        nodes.append(ArmNode(node_id, layer, zeta, edges))
        return node_id, count

    root_zeta = Fraction(rng.randint(1, 7), 8)
    root, count = grow(0, root_zeta)
    return ArmDag(tuple(nodes), root, max_depth), count


def random_beta_arm(rng: random.Random, max_depth: int = 3) -> ArmDag:
    return beta_bernoulli_arm(rng.randint(1, 6), rng.randint(1, 6), rng.randint(1, max_depth))


def random_arm(rng: random.Random, max_depth: int = 3, policy_budget: int = 1500) -> ArmDag:
    """Either a random martingale tree or a random (alpha, beta) lattice."""
    if rng.random() < 0.3:
        return random_beta_arm(rng, max_depth)
    return random_martingale_arm(rng, max_depth=max_depth, policy_budget=policy_budget)


def random_instance(rng: random.Random, max_arms: int = 3, max_depth: int = 2) -> list[ArmDag]:
    """Small multi-arm instance sized for the exact DPs (occasionally with twin arms)."""
    n = rng.randint(2, max_arms)
    arms = [random_arm(rng, max_depth=max_depth, policy_budget=400) for _ in range(n)]
    if n >= 3 and rng.random() < 0.3:
        arms[-1] = arms[-2]
    return arms
