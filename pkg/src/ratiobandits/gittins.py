"""Gittins indices on truncated layered DAGs.

The index of a state is the retirement rate at which an optimally played
geometric-discount gambler is indifferent between the arm and retiring.
With retirement rate ``lam`` the excess value of the arm satisfies

    W(u)    = max(0, zeta(u) - lam + theta * sum_v P_uv W(v))
    W(leaf) = max(0, (zeta(leaf) - lam) / (1 - theta))

(leaves are absorbing and pay zeta forever).  W is nonincreasing in ``lam``
and hits 0 exactly at the index, so bisection over [min zeta, max zeta] of
the sub-DAG converges; equivalently the index is the best ratio of
discounted reward to discounted time over stopping rules, which the exact
enumeration below uses as an independent oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .arms import ArmDag


@dataclass(frozen=True)
class GittinsQuery:
    dag: ArmDag
    state: str
    theta: float
    tolerance: float = 1e-9


def retirement_slack(dag: ArmDag, state: str, lam: float, theta: float) -> float:
    """Excess value W of playing optimally against retirement rate ``lam``."""
    order = dag.reachable_from(state)
    values: dict[str, float] = {}
    for node in reversed(order):
        edges = dag.out_edges(node.id)
        if not edges:
            values[node.id] = max(0.0, (float(node.zeta) - lam) / (1.0 - theta))
        else:
            cont = sum(float(e.prob) * values[e.child] for e in edges)
            values[node.id] = max(0.0, float(node.zeta) - lam + theta * cont)
    return values[state]


def gittins_index(query: GittinsQuery) -> float:
    """Gittins index of ``query.state``, within ``query.tolerance`` of exact."""
    if not 0.0 < query.theta < 1.0:
        raise ValueError(f"theta must be in (0, 1), got {query.theta}")
    if query.tolerance <= 0.0:
        raise ValueError("tolerance must be positive")
    sub = query.dag.reachable_from(query.state)
    lo = float(min(n.zeta for n in sub))
    hi = float(max(n.zeta for n in sub))
    if hi <= lo:
        return lo
    if retirement_slack(query.dag, query.state, lo, query.theta) <= 0.0:
        return lo
    while hi - lo > query.tolerance:
        mid = 0.5 * (lo + hi)
        if retirement_slack(query.dag, query.state, mid, query.theta) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gittins_indices_all(dag: ArmDag, theta: float, tolerance: float = 1e-9) -> dict[str, float]:
    """Index of every state of the arm."""
    return {node.id: gittins_index(GittinsQuery(dag, node.id, theta, tolerance)) for node in dag.nodes}


def gittins_index_enumerated(dag: ArmDag, state: str, theta: Fraction, max_states: int = 12) -> Fraction:
    """Exact index by enumerating deterministic stopping rules (desk-scale oracle).

    A rule labels each reachable state play/stop, the start state playing;
    descendants of stopped states are canonically stopped.  The index is the
    maximum over rules of discounted reward divided by discounted time,
    with absorbing leaves contributing geometric tails.
    """
    if not 0 < theta < 1:
        raise ValueError("theta must be in (0, 1)")
    order = dag.reachable_from(state)
    if len(order) > max_states:
        raise ValueError(f"sub-DAG of {state!r} has {len(order)} states, enumeration bound is {max_states}")
    position = {node.id: i for i, node in enumerate(order)}
    parents: list[list[int]] = [[] for _ in order]
    for i, node in enumerate(order):
        for edge in dag.out_edges(node.id):
            parents[position[edge.child]].append(i)

    plays: list[bool | None] = [None] * len(order)
    best: Fraction | None = None
    tail = 1 / (1 - theta)

    def ratio() -> Fraction:
        table: dict[str, tuple[Fraction, Fraction]] = {}
        for node in reversed(order):
            i = position[node.id]
            if not plays[i]:
                table[node.id] = (Fraction(0), Fraction(0))
                continue
            edges = dag.out_edges(node.id)
            if not edges:
                table[node.id] = (node.zeta * tail, tail)
                continue
            reward = node.zeta + theta * sum((e.prob * table[e.child][0] for e in edges), Fraction(0))
            time = 1 + theta * sum((e.prob * table[e.child][1] for e in edges), Fraction(0))
            table[node.id] = (reward, time)
        reward, time = table[state]
        return reward / time

    def assign(i: int) -> None:
        nonlocal best
        if i == len(order):
            value = ratio()
            if best is None or value > best:
                best = value
            return
        node = order[i]
        if node.id == state:
            plays[i] = True
            assign(i + 1)
            plays[i] = None
            return
        reachable = any(plays[p] for p in parents[i])
        if not reachable:
            plays[i] = False
            assign(i + 1)
            plays[i] = None
            return
        for choice in (False, True):
            plays[i] = choice
            assign(i + 1)
            plays[i] = None

    assign(0)
    assert best is not None
    return best
