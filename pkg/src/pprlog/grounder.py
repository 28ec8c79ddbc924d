"""Proof-graph construction and bounded local grounding.

A proof state is a pair (transformed query, remaining subgoal list); the
prover expands the leftmost subgoal against rules and database facts,
labeling each edge with ground feature atoms.  ``approximate_ground``
runs the residual-push approximation of the restart walk, materializing
only the subgraph it touches; ``ground_full`` breadth-first expands the
reachable proof space up to a step horizon.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional

from .facts import FactStore
from .graph import (DB_FEATURE, GroundedGraph, RESTART_FEATURE,
                    SELF_LOOP_FEATURE)
from .parser import Clause, Program, standardize_apart
from .terms import Atom, Subst, apply, canonicalize, unify, variables_of
from .weights import FeatureVector, ParameterVector, WeightFn, edge_weight


class GroundingError(Exception):
    pass


class BudgetError(GroundingError):
    """Node budget exhausted; epsilon is too small for the budget."""


@dataclass(frozen=True)
class GroundingParams:
    alpha: float = 0.2          # restart calibration for database goals
    alpha_prime: float = 0.1    # enforced lower bound on restart probability
    epsilon: float = 1e-4       # residual threshold per unit out-degree
    max_T: int = 100            # power-iteration / full-grounding horizon
    node_budget: int = 2_000_000

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if not (0.0 < self.alpha_prime <= self.alpha):
            raise ValueError("alpha_prime must be in (0, alpha]")
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must be in (0,1)")


@dataclass(frozen=True)
class ProofNode:
    """(transformed query, remaining subgoals); empty subgoals = solution."""
    query: tuple[Atom, ...]
    subgoals: tuple[Atom, ...]

    @property
    def is_solution(self) -> bool:
        return not self.subgoals

    def answer_text(self) -> str:
        return ",".join(map(repr, self.query))

    def __repr__(self):
        return f"<{self.answer_text()} | {','.join(map(repr, self.subgoals))}>"


def make_node(query: tuple[Atom, ...], subgoals: tuple[Atom, ...]) -> ProofNode:
    """Canonicalize variables jointly so alpha-equivalent states merge."""
    renamed = canonicalize((*query, *subgoals))
    return ProofNode(renamed[:len(query)], renamed[len(query):])


def start_node(query: Atom) -> ProofNode:
    return make_node((query,), (query,))


class Prover:
    """Expands proof states over an immutable program and fact store."""

    def __init__(self, program: Program, store: FactStore):
        program.check_against_facts(store.predicates())
        self.program = program
        self.store = store

    def expand(self, node: ProofNode) -> list[tuple[ProofNode, FeatureVector]]:
        """Successors of a non-solution node, excluding the restart edge.

        One successor per applicable clause mgu on the leftmost subgoal,
        or one per database match.  Parallel edges with identical feature
        vectors are merged by summing feature values (a merged multiplicity
        of m scales each value by m).
        """
        if node.is_solution:
            raise ValueError("solution nodes have no subgoals to expand")
        goal, rest = node.subgoals[0], node.subgoals[1:]
        merged: dict[tuple, list] = {}

        def emit(child: ProofNode, phi: FeatureVector):
            key = (child, tuple(sorted(phi.items())))
            entry = merged.setdefault(key, [child, phi, 0])
            entry[2] += 1

        if goal.pred in self.store:
            for s in self.store.match(goal):
                child = make_node(apply(s, node.query), apply(s, rest))
                emit(child, {DB_FEATURE: 1.0})
        else:
            fresh = 1 + max((v.id for v in variables_of(
                (*node.query, *node.subgoals))), default=-1)
            for clause in self.program.clauses_for(goal.pred):
                c = standardize_apart(clause, fresh)
                sigma = unify(goal, c.head)
                if sigma is None:
                    continue
                child = make_node(apply(sigma, node.query),
                                  apply(sigma, (*c.body, *rest)))
                phi: FeatureVector = {}
                for feat in c.features:
                    ground = apply(sigma, feat)
                    if not ground.is_ground():
                        raise GroundingError(
                            f"non-ground feature {ground!r} when applying "
                            f"clause {clause.id} ({clause!r}) to {goal!r}")
                    phi[repr(ground)] = phi.get(repr(ground), 0.0) + 1.0
                emit(child, phi)

        out = []
        for child, phi, mult in merged.values():
            if mult > 1:
                phi = {k: v * mult for k, v in phi.items()}
            out.append((child, phi))
        return out

    def restart_features(self, node: ProofNode, alpha: float) -> FeatureVector:
        """Restart-edge features for a non-solution node.

        Database goals get defRestart = n * alpha/(1-alpha) so that with
        unit weights the normalized restart probability is exactly alpha;
        rule goals get a unit defRestart.  n = 0 yields a zero weight that
        the restart floor later replaces, making the dead end restart-only.
        """
        goal = node.subgoals[0]
        if goal.pred in self.store:
            n = self.store.binding_count(goal)
            return {RESTART_FEATURE: n * alpha / (1.0 - alpha)}
        return {RESTART_FEATURE: 1.0}


def transition_distribution(successors, restart_phi, w: ParameterVector,
                            fn: WeightFn, alpha_prime: float,
                            restart_target=None):
    """Normalized outgoing distribution over successors plus the restart.

    ``successors`` is a list of (target, phi); the restart edge goes to
    ``restart_target``.  The restart weight is raised where needed so its
    probability never falls below alpha_prime.  Returns a list of
    (target, probability, phi, is_restart) summing to 1.
    """
    raws = [edge_weight(fn, w, phi) for _, phi in successors]
    s = sum(raws)
    r0 = edge_weight(fn, w, restart_phi) if restart_phi else 0.0
    floor = alpha_prime * s / (1.0 - alpha_prime)
    r0 = max(r0, floor)
    if r0 <= 0.0 and s == 0.0:
        return [(restart_target, 1.0, dict(restart_phi), True)]
    z = s + r0
    out = [(t, g / z, phi, False) for (t, phi), g in zip(successors, raws)]
    out.append((restart_target, r0 / z, dict(restart_phi), True))
    return out


@dataclass
class PushStats:
    pushes: int = 0
    degree_sum: int = 0        # sum of |N(u)| over pushes
    nodes_discovered: int = 0
    residual_mass: float = 1.0

    def work_bound(self, alpha_prime: float, epsilon: float) -> float:
        return 1.0 / (alpha_prime * epsilon)


# An expander maps a node to its outgoing distribution:
# node -> list of (target, probability, phi, is_restart).
Expander = Callable[[Hashable], list]


def pagerank_nibble(start, expand: Expander, alpha_prime: float,
                    epsilon: float, node_budget: int = 2_000_000):
    """Residual push approximation of the restart walk from ``start``.

    Works over any lazily-expandable graph whose every node has restart
    probability >= alpha_prime.  Returns (p, r, graph, stats): the mass
    approximation p, the residual r (both keyed by graph node ids), and a
    GroundedGraph holding every edge examined by a push.

    On return, r[u] <= epsilon * |N(u)| for every discovered node, hence
    the true walk mass exceeds p[u] by at most epsilon * |N(u)|.
    """
    g = GroundedGraph()
    ids: dict = {}

    def node_id(payload) -> int:
        nid = ids.get(payload)
        if nid is None:
            if len(ids) >= node_budget:
                raise BudgetError(
                    f"node budget {node_budget} exceeded; epsilon="
                    f"{epsilon} is too small for this budget")
            nid = g.add_node(payload)
            ids[payload] = nid
        return nid

    v0 = node_id(start)
    g.start = v0
    expanded: dict[int, list] = {}   # id -> [(dst_id, prob, phi, is_restart)]
    pushed: set[int] = set()
    p: dict[int, float] = {}
    r: dict[int, float] = {v0: 1.0}
    stats = PushStats()
    stack = [v0]
    queued = {v0}

    def out_edges(u: int):
        e = expanded.get(u)
        if e is None:
            e = [(node_id(t), prob, phi, isr)
                 for t, prob, phi, isr in expand(g.nodes[u])]
            expanded[u] = e
        return e

    while stack:
        u = stack.pop()
        queued.discard(u)
        ru = r.get(u, 0.0)
        if ru <= epsilon:
            continue
        edges = out_edges(u)
        degree = len({dst for dst, *_ in edges})
        if ru <= epsilon * degree:
            continue
        # Push: absorb an alpha' fraction, spread the rest over the
        # restart-adjusted distribution (restart edge gives up alpha').
        if u not in pushed:
            pushed.add(u)
            for dst, _, phi, isr in edges:
                g.add_edge(u, dst, phi, is_restart=isr)
        stats.pushes += 1
        stats.degree_sum += degree
        p[u] = p.get(u, 0.0) + alpha_prime * ru
        r[u] = 0.0
        for dst, prob, _, isr in edges:
            share = (prob - alpha_prime) if isr else prob
            if share < -1e-12:
                raise GroundingError(
                    f"restart probability {prob} below alpha_prime="
                    f"{alpha_prime} at node {g.nodes[u]!r}")
            r[dst] = r.get(dst, 0.0) + share * ru
            if r[dst] > epsilon and dst not in queued:
                stack.append(dst)
                queued.add(dst)

    stats.nodes_discovered = g.num_nodes
    stats.residual_mass = sum(r.values())
    return p, r, g, stats


class _ProverExpander:
    """Adapts a Prover to the expander interface used by the push loop."""

    def __init__(self, prover: Prover, params: GroundingParams,
                 w: ParameterVector, fn: WeightFn, v0: ProofNode):
        self.prover = prover
        self.params = params
        self.w = w
        self.fn = fn
        self.v0 = v0

    def __call__(self, node: ProofNode):
        if node.is_solution:
            successors = [(node, {SELF_LOOP_FEATURE: 1.0})]
            restart_phi = {RESTART_FEATURE: 1.0}
        else:
            successors = self.prover.expand(node)
            restart_phi = self.prover.restart_features(node, self.params.alpha)
        return transition_distribution(successors, restart_phi, self.w,
                                       self.fn, self.params.alpha_prime,
                                       restart_target=self.v0)


def approximate_ground(query: Atom, program: Program, store: FactStore,
                       params: GroundingParams, w: ParameterVector,
                       fn: WeightFn):
    """Bounded local grounding of a query.

    Returns (graph, p, stats): the local grounding (at most
    1/(alpha_prime * epsilon) edges), the approximate walk-mass vector
    keyed by node id, and push statistics.
    """
    v0 = start_node(query)
    prover = Prover(program, store)
    expander = _ProverExpander(prover, params, w, fn, v0)
    p, r, g, stats = pagerank_nibble(v0, expander, params.alpha_prime,
                                     params.epsilon, params.node_budget)
    g.query = repr(query)
    for nid, payload in enumerate(g.nodes):
        if payload.is_solution:
            g.solutions[nid] = payload.answer_text()
    return g, p, stats


# The spec-facing name: grounding doubles as approximate inference.
pagerank_nibble_prove = approximate_ground


def ground_full(query: Atom, program: Program, store: FactStore,
                params: GroundingParams, w: ParameterVector, fn: WeightFn,
                ) -> GroundedGraph:
    """Exhaustive grounding of everything reachable within max_T steps.

    Breadth-first expansion; nodes first reached at depth max_T are kept
    as frontier nodes but not expanded.  Node depths are recorded in
    ``graph.depths`` (id -> SLD depth).
    """
    v0 = start_node(query)
    prover = Prover(program, store)
    expander = _ProverExpander(prover, params, w, fn, v0)
    g = GroundedGraph(query=repr(query))
    ids = {v0: g.add_node(v0)}
    depths = {0: 0}
    frontier = [v0]
    for depth in range(params.max_T):
        if not frontier:
            break
        nxt = []
        for node in frontier:
            u = ids[node]
            for target, prob, phi, isr in expander(node):
                nid = ids.get(target)
                if nid is None:
                    if len(ids) >= params.node_budget:
                        raise BudgetError(
                            f"node budget {params.node_budget} exceeded "
                            f"grounding {query!r}")
                    nid = g.add_node(target)
                    ids[target] = nid
                    depths[nid] = depth + 1
                    nxt.append(target)
                g.add_edge(u, nid, phi, is_restart=isr)
        frontier = nxt
    for nid, payload in enumerate(g.nodes):
        if payload.is_solution:
            g.solutions[nid] = payload.answer_text()
    g.depths = depths
    return g
