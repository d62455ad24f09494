"""Layered-DAG bandit arms with exact rational payoffs.

An arm is a layered acyclic state space.  Playing the arm in state ``u``
moves it to a child ``v`` with probability ``P_uv``.  The expected payoff
``zeta`` is a martingale: ``zeta(u) == sum_v P_uv * zeta(v)``.  Leaves are
absorbing; once reached the arm pays ``zeta(leaf)`` on every further play.

Everything here is exact: payoffs and probabilities are
:class:`fractions.Fraction` values and the invariant checks use zero
tolerance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Mapping, Sequence

Rational = Fraction


class ArmSpecError(ValueError):
    """Malformed arm specification, config, or state graph."""


def parse_rational(value: object, where: str = "value") -> Fraction:
    """Parse an exact rational from ``"num/den"``, a decimal string, or an int.

    Decimal strings convert exactly (power-of-ten denominators).  Python
    floats are refused: by the time a float exists the decimal literal has
    already been rounded to binary.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise ArmSpecError(f"{where}: expected a rational, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise ArmSpecError(f"{where}: cannot parse rational {value!r}: {exc}") from None
    if isinstance(value, float):
        raise ArmSpecError(f"{where}: floats are not exact; pass a string such as \"0.3\" or \"3/10\"")
    raise ArmSpecError(f"{where}: cannot parse a rational from {type(value).__name__}")


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class Edge:
    """One transition out of a state.

    ``reward`` is the realized per-play reward when this edge fires, used by
    the horizon-mode evaluator.  ``None`` means the deterministic payoff of
    the parent state; (alpha, beta) arms put 1 on success edges and 0 on
    failure edges.
    """

    child: str
    prob: Fraction
    reward: Fraction | None = None


@dataclass(frozen=True)
class ArmNode:
    id: str
    layer: int
    zeta: Fraction
    edges: tuple[Edge, ...] = ()

    @property
    def is_leaf(self) -> bool:
        return not self.edges


@dataclass(frozen=True)
class ArmDag:
    """A layered acyclic arm-state space rooted at ``root``.

    Immutable after construction and safe to share read-only across
    concurrent workers.
    """

    nodes: tuple[ArmNode, ...]
    root: str
    depth_bound: int

    @cached_property
    def by_id(self) -> dict[str, ArmNode]:
        table: dict[str, ArmNode] = {}
        for node in self.nodes:
            if node.id in table:
                raise ArmSpecError(f"duplicate node id {node.id!r}")
            table[node.id] = node
        return table

    def node(self, node_id: str) -> ArmNode:
        return self.by_id[node_id]

    def out_edges(self, node_id: str) -> list[Edge]:
        """Positive-probability edges; zero-probability edges are dropped."""
        return [e for e in self.by_id[node_id].edges if e.prob > 0]

    def children(self, node_id: str) -> list[tuple[ArmNode, Fraction]]:
        return [(self.by_id[e.child], e.prob) for e in self.out_edges(node_id)]

    def reachable_from(self, node_id: str) -> list[ArmNode]:
        """Nodes reachable via positive-probability edges, in (layer, id) order."""
        seen = {node_id}
        stack = [node_id]
        while stack:
            current = stack.pop()
            for edge in self.out_edges(current):
                if edge.child not in seen:
                    seen.add(edge.child)
                    stack.append(edge.child)
        return sorted((self.by_id[n] for n in seen), key=lambda n: (n.layer, n.id))

    def subdag_size(self, node_id: str) -> int:
        return len(self.reachable_from(node_id))

    def max_zeta(self) -> Fraction:
        return max(n.zeta for n in self.nodes)


@dataclass(frozen=True)
class SystemState:
    """Joint state of all arms plus the remaining exploration budget.

    ``remaining_budget`` is ``None`` in horizon or discounted play, where no
    exploration budget applies.
    """

    arm_states: tuple[str, ...]
    remaining_budget: int | None


# ---------------------------------------------------------------------------
# Generators


def _ab_id(a: int, b: int) -> str:
    return f"{a}:{b}"


def beta_bernoulli_arm(alpha: int, beta: int, depth: int) -> ArmDag:
    """Posterior lattice of an (alpha, beta) Bernoulli arm, truncated at ``depth``.

    State (a, b) pays a/(a+b); a success (probability a/(a+b), reward 1)
    moves to (a+1, b) and a failure (reward 0) moves to (a, b+1).  States
    reached by different success/failure orders merge, so layer j holds
    exactly j+1 nodes.
    """
    if alpha < 1 or beta < 1:
        raise ValueError("alpha and beta must be positive integers")
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    nodes: list[ArmNode] = []
    for layer in range(depth + 1):
        for successes in range(layer + 1):
            a = alpha + successes
            b = beta + (layer - successes)
            zeta = Fraction(a, a + b)
            edges: tuple[Edge, ...] = ()
            if layer < depth:
                edges = (
                    Edge(_ab_id(a + 1, b), Fraction(a, a + b), reward=Fraction(1)),
                    Edge(_ab_id(a, b + 1), Fraction(b, a + b), reward=Fraction(0)),
                )
            nodes.append(ArmNode(_ab_id(a, b), layer, zeta, edges))
    return ArmDag(tuple(nodes), _ab_id(alpha, beta), depth)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    kind: str
    node: str
    message: str

    def __str__(self) -> str:
        return self.message


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


def validate(dag: ArmDag) -> ValidationReport:
    """Exact invariant check: layering, stochasticity, martingale, reachability.

    Violations become report entries, never exceptions; the report is empty
    iff every invariant holds exactly.
    """
    out: list[Violation] = []
    table: dict[str, ArmNode] = {}
    for node in dag.nodes:
        if node.id in table:
            out.append(Violation("structure", node.id, f"duplicate node id {node.id!r}"))
        table[node.id] = node

    if dag.root not in table:
        out.append(Violation("structure", dag.root, f"root {dag.root!r} is not a node"))
        return ValidationReport(tuple(out))

    if table[dag.root].layer != 0:
        out.append(
            Violation("layering", dag.root, f"layering violation: root {dag.root!r} is at layer {table[dag.root].layer}, expected 0")
        )

    for node in dag.nodes:
        if node.layer < 0 or node.layer > dag.depth_bound:
            out.append(
                Violation("layering", node.id, f"layering violation at node {node.id}: layer {node.layer} outside [0, {dag.depth_bound}]")
            )
        dangling = False
        for edge in node.edges:
            if edge.child not in table:
                out.append(
                    Violation("layering", node.id, f"layering violation at node {node.id}: dangling edge to {edge.child!r}")
                )
                dangling = True
                continue
            if table[edge.child].layer != node.layer + 1:
                out.append(
                    Violation(
                        "layering",
                        node.id,
                        f"layering violation at node {node.id}: edge to {edge.child} skips from layer {node.layer} to {table[edge.child].layer}",
                    )
                )
            if edge.prob < 0:
                out.append(
                    Violation("stochasticity", node.id, f"stochasticity violation at node {node.id}: negative probability {format_rational(edge.prob)}")
                )
        if node.edges and not dangling:
            total = sum((e.prob for e in node.edges), Fraction(0))
            if total != 1:
                out.append(
                    Violation("stochasticity", node.id, f"stochasticity violation at node {node.id}: edge probabilities sum to {format_rational(total)}")
                )
            else:
                mean = sum((e.prob * table[e.child].zeta for e in node.edges), Fraction(0))
                residual = node.zeta - mean
                if residual != 0:
                    out.append(
                        Violation("martingale", node.id, f"martingale violation at node {node.id}, residual {format_rational(abs(residual))}")
                    )
                if any(e.reward is not None for e in node.edges):
                    realized = sum(
                        (e.prob * (e.reward if e.reward is not None else node.zeta) for e in node.edges),
                        Fraction(0),
                    )
                    if realized != node.zeta:
                        out.append(
                            Violation(
                                "reward",
                                node.id,
                                f"reward violation at node {node.id}: expected realized reward {format_rational(realized)} differs from payoff {format_rational(node.zeta)}",
                            )
                        )

    if dag.root in table:
        reached = {n.id for n in _raw_reachable(dag, table)}
        for node in dag.nodes:
            if node.id not in reached:
                out.append(Violation("reachability", node.id, f"reachability violation: node {node.id} unreachable from root"))

    return ValidationReport(tuple(out))


def _raw_reachable(dag: ArmDag, table: dict[str, ArmNode]) -> list[ArmNode]:
    seen = {dag.root}
    stack = [dag.root]
    while stack:
        current = stack.pop()
        for edge in table[current].edges:
            if edge.prob > 0 and edge.child in table and edge.child not in seen:
                seen.add(edge.child)
                stack.append(edge.child)
    return [table[n] for n in seen]


# ---------------------------------------------------------------------------
# Unrolling general state graphs


@dataclass(frozen=True)
class StateGraph:
    """A general directed stochastic state graph (cycles allowed).

    ``transitions`` maps a state to its outgoing row; a missing or empty row
    means the state is absorbing.
    """

    payoffs: Mapping[str, Fraction]
    transitions: Mapping[str, Sequence[tuple[str, Fraction]]]
    initial: str


def layerize(graph: StateGraph, h: int) -> ArmDag:
    """Unroll ``graph`` into a layered DAG of depth ``h`` rooted at the initial state.

    Copies of a state keep its payoff, so the martingale property carries
    over exactly.  Transitions out of layer-``h`` copies are dropped
    (truncation); the output has at most ``len(payoffs) * (h + 1)`` nodes.
    """
    if h < 1:
        raise ValueError("h must be at least 1")
    if graph.initial not in graph.payoffs:
        raise ArmSpecError(f"initial state {graph.initial!r} has no payoff")
    for state, row in graph.transitions.items():
        if state not in graph.payoffs:
            raise ArmSpecError(f"transition row for unknown state {state!r}")
        total = Fraction(0)
        for target, prob in row:
            if target not in graph.payoffs:
                raise ArmSpecError(f"dangling transition {state!r} -> {target!r}")
            if prob < 0:
                raise ArmSpecError(f"negative transition probability at {state!r}")
            total += prob
        if row and total != 1:
            raise ArmSpecError(f"transition row for {state!r} sums to {format_rational(total)}, expected 1")

    def copy_id(state: str, layer: int) -> str:
        return f"{state}@{layer}"

    nodes: list[ArmNode] = []
    current = [graph.initial]
    for layer in range(h + 1):
        next_states: set[str] = set()
        for state in sorted(current):
            row = graph.transitions.get(state, ())
            edges: tuple[Edge, ...] = ()
            if layer < h and row:
                edges = tuple(Edge(copy_id(t, layer + 1), p) for t, p in row if p > 0)
                next_states.update(t for t, p in row if p > 0)
            nodes.append(ArmNode(copy_id(state, layer), layer, graph.payoffs[state], edges))
        if not next_states:
            break
        current = list(next_states)
    return ArmDag(tuple(nodes), copy_id(graph.initial, 0), h)


# ---------------------------------------------------------------------------
# Serialization (arm-spec file format)


def loads_arm(text: str, source: str = "<arm>") -> ArmDag:
    try:
        raw = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise ArmSpecError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return arm_from_obj(raw, source)


def arm_from_obj(raw: object, source: str = "<arm>") -> ArmDag:
    """Build an arm from a decoded spec object (full node list or generator shorthand)."""
    if not isinstance(raw, dict):
        raise ArmSpecError(f"{source}: top level must be an object")
    if "beta_bernoulli" in raw:
        params = raw["beta_bernoulli"]
        if not (isinstance(params, list) and len(params) == 2 and all(isinstance(x, int) for x in params)):
            raise ArmSpecError(f"{source}: field 'beta_bernoulli' must be [alpha, beta] integers")
        depth = raw.get("depth")
        if not isinstance(depth, int) or depth < 0:
            raise ArmSpecError(f"{source}: field 'depth' must be a nonnegative integer")
        try:
            return beta_bernoulli_arm(params[0], params[1], depth)
        except ValueError as exc:
            raise ArmSpecError(f"{source}: {exc}") from None
    if "nodes" not in raw:
        raise ArmSpecError(f"{source}: expected either 'nodes' or 'beta_bernoulli'")
    if "root" not in raw:
        raise ArmSpecError(f"{source}: field 'root' is required with 'nodes'")
    raw_nodes = raw["nodes"]
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise ArmSpecError(f"{source}: field 'nodes' must be a nonempty list")
    nodes: list[ArmNode] = []
    for i, item in enumerate(raw_nodes):
        where = f"{source}: nodes[{i}]"
        if not isinstance(item, dict):
            raise ArmSpecError(f"{where}: expected an object")
        for key in ("id", "layer", "zeta"):
            if key not in item:
                raise ArmSpecError(f"{where}: missing field {key!r}")
        if not isinstance(item["id"], str):
            raise ArmSpecError(f"{where}.id: expected a string")
        if not isinstance(item["layer"], int):
            raise ArmSpecError(f"{where}.layer: expected an integer")
        zeta = parse_rational(item["zeta"], f"{where}.zeta")
        edges: list[Edge] = []
        for j, raw_edge in enumerate(item.get("edges", ())):
            ewhere = f"{where}.edges[{j}]"
            if not isinstance(raw_edge, dict) or "to" not in raw_edge or "p" not in raw_edge:
                raise ArmSpecError(f"{ewhere}: expected an object with 'to' and 'p'")
            if not isinstance(raw_edge["to"], str):
                raise ArmSpecError(f"{ewhere}.to: expected a string")
            reward = None
            if "reward" in raw_edge:
                reward = parse_rational(raw_edge["reward"], f"{ewhere}.reward")
            edges.append(Edge(raw_edge["to"], parse_rational(raw_edge["p"], f"{ewhere}.p"), reward))
        nodes.append(ArmNode(item["id"], item["layer"], zeta, tuple(edges)))
    depth_bound = raw.get("depth_bound", max(n.layer for n in nodes))
    if not isinstance(depth_bound, int) or depth_bound < 0:
        raise ArmSpecError(f"{source}: field 'depth_bound' must be a nonnegative integer")
    root = raw["root"]
    if not isinstance(root, str):
        raise ArmSpecError(f"{source}: field 'root' must be a string")
    dag = ArmDag(tuple(nodes), root, depth_bound)
    try:
        dag.by_id
    except ArmSpecError as exc:
        raise ArmSpecError(f"{source}: {exc}") from None
    if root not in dag.by_id:
        raise ArmSpecError(f"{source}: root {root!r} is not among the node ids")
    return dag


def load_arm(path: str | Path) -> ArmDag:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ArmSpecError(f"{path}: {exc.strerror or exc}") from None
    return loads_arm(text, source=str(path))


def dumps_arm(dag: ArmDag) -> str:
    def edge_obj(edge: Edge) -> dict:
        obj = {"to": edge.child, "p": format_rational(edge.prob)}
        if edge.reward is not None:
            obj["reward"] = format_rational(edge.reward)
        return obj

    obj = {
        "root": dag.root,
        "depth_bound": dag.depth_bound,
        "nodes": [
            {"id": n.id, "layer": n.layer, "zeta": format_rational(n.zeta), "edges": [edge_obj(e) for e in n.edges]}
            for n in dag.nodes
        ],
    }
    return json.dumps(obj, indent=2)


def serialize_arm(dag: ArmDag, path: str | Path) -> None:
    Path(path).write_text(dumps_arm(dag) + "\n")


def canonical_signature(dag: ArmDag, include_rewards: bool = True) -> object:
    """Hashable structural fingerprint, invariant under node renaming.

    Two arms with equal signatures are behaviorally identical: same payoffs,
    transition probabilities, shape, and (unless ``include_rewards`` is off)
    realized rewards.
    """
    memo: dict[str, object] = {}

    def sig(node_id: str) -> object:
        if node_id in memo:
            return memo[node_id]
        node = dag.node(node_id)
        entries = []
        for edge in node.edges:
            if edge.prob <= 0:
                continue
            if include_rewards:
                reward_key = (0, Fraction(0)) if edge.reward is None else (1, edge.reward)
            else:
                reward_key = (0, Fraction(0))
            entries.append((edge.prob, reward_key, sig(edge.child)))
        result = (node.zeta, tuple(sorted(entries)))
        memo[node_id] = result
        return result

    return (len(dag.nodes), sig(dag.root))
