"""Grounded proof graphs: feature-labeled edges plus a numeric view.

A grounded graph is what inference and learning operate on: integer node
ids, edges carrying sparse feature vectors, a start node, and the set of
solution nodes with their answer atoms.  ``NumericGraph`` flattens a
grounded graph into CSR-style arrays so the hot loops (power iteration,
gradient propagation) can run over plain numpy buffers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .weights import FeatureVector, LINEAR_FLOOR, ParameterVector, WeightFn

RESTART_FEATURE = "defRestart"
DB_FEATURE = "db"
SELF_LOOP_FEATURE = "id(selfLoop)"


@dataclass(frozen=True)
class Edge:
    src: int
    dst: int
    phi: FeatureVector
    is_restart: bool = False


@dataclass
class GroundedGraph:
    nodes: list = field(default_factory=list)   # payloads; index == node id
    edges: list[Edge] = field(default_factory=list)
    start: int = 0
    solutions: dict[int, str] = field(default_factory=dict)  # id -> answer
    query: str = ""
    labels: dict[int, bool] = field(default_factory=dict)    # id -> is positive

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def add_node(self, payload=None) -> int:
        self.nodes.append(payload)
        return len(self.nodes) - 1

    def add_edge(self, src: int, dst: int, phi: FeatureVector,
                 is_restart: bool = False):
        self.edges.append(Edge(src, dst, dict(phi), is_restart))

    def feature_names(self) -> list[str]:
        names: dict[str, None] = {}
        for e in self.edges:
            for name in e.phi:
                names.setdefault(name)
        return list(names)


class NumericGraph:
    """CSR arrays for a grounded graph, ready for the kernels.

    Nodes with no outgoing edges (unexpanded frontier nodes of an
    approximate grounding) are given an implicit probability-1 restart to
    the start node; that edge carries no features and hence no gradient.
    """

    def __init__(self, g: GroundedGraph):
        self.graph = g
        self.n = g.num_nodes
        self.start = g.start
        self.feat_names = g.feature_names()
        self.feat_index = {name: i for i, name in enumerate(self.feat_names)}

        order = sorted(range(len(g.edges)), key=lambda i: g.edges[i].src)
        edges = [g.edges[i] for i in order]
        dangling = set(range(self.n)) - {e.src for e in edges}
        self._implicit = sorted(dangling)
        for u in self._implicit:
            edges.append(Edge(u, g.start, {}, is_restart=True))
        edges.sort(key=lambda e: e.src)
        self.edges = edges

        self.src = np.array([e.src for e in edges], dtype=np.int64)
        self.dst = np.array([e.dst for e in edges], dtype=np.int64)
        self.restart_mask = np.array([e.is_restart for e in edges], dtype=bool)
        self.implicit_mask = np.array([not e.phi and e.is_restart
                                       for e in edges], dtype=bool)

        ef_edge, ef_feat, ef_val = [], [], []
        for i, e in enumerate(edges):
            for name, val in e.phi.items():
                ef_edge.append(i)
                ef_feat.append(self.feat_index[name])
                ef_val.append(val)
        self.ef_edge = np.array(ef_edge, dtype=np.int64)
        self.ef_feat = np.array(ef_feat, dtype=np.int64)
        self.ef_val = np.array(ef_val, dtype=np.float64)

    def weight_array(self, w: ParameterVector) -> np.ndarray:
        return np.array([w[name] for name in self.feat_names], dtype=np.float64)

    def raw_weights(self, w: ParameterVector, fn: WeightFn):
        """Per-edge dot products and raw weights f(w, phi)."""
        dot = np.zeros(len(self.edges))
        if len(self.ef_edge):
            warr = self.weight_array(w)
            np.add.at(dot, self.ef_edge, warr[self.ef_feat] * self.ef_val)
        if fn.name == "linear":
            raw = np.maximum(dot, LINEAR_FLOOR)
        else:
            raw = np.exp(dot)
        raw = np.where(self.implicit_mask, 1.0, raw)
        if not np.all(np.isfinite(raw)) or np.any(raw <= 0):
            bad = int(np.argmin(np.where(np.isfinite(raw), raw, -np.inf)))
            raise ValueError(f"nonpositive or non-finite weight on edge "
                             f"{self.edges[bad].src}->{self.edges[bad].dst}")
        return dot, raw

    def probabilities(self, w: ParameterVector, fn: WeightFn,
                      alpha_prime: float):
        """Per-edge transition probabilities with the restart floor.

        Returns (prob, info) where info carries the intermediates the
        gradient needs: dot, raw, per-node normalizer Z, effective raw
        weights after clamping, and the clamp mask.
        """
        dot, raw = self.raw_weights(w, fn)
        m = len(self.edges)
        nonrestart = np.where(self.restart_mask, 0.0, raw)
        S = np.zeros(self.n)
        np.add.at(S, self.src, nonrestart)

        eff = raw.copy()
        # Raise the restart weight wherever its share would fall below
        # alpha': Pr(restart) = r/(r+S) >= alpha'  <=>  r >= a'S/(1-a').
        floor_per_node = alpha_prime * S / (1.0 - alpha_prime)
        clamped = np.zeros(m, dtype=bool)
        ridx = np.flatnonzero(self.restart_mask)
        need = floor_per_node[self.src[ridx]]
        lo = raw[ridx] < need
        eff[ridx[lo]] = need[lo]
        clamped[ridx[lo]] = True

        Z = np.zeros(self.n)
        np.add.at(Z, self.src, eff)
        prob = eff / Z[self.src]
        return prob, {"dot": dot, "raw": raw, "eff": eff, "Z": Z,
                      "clamped": clamped}


def _split_features(text: str) -> list[str]:
    """Split 'f(a,b)=1.0,g=2' on commas not inside parentheses."""
    parts, depth, cur = [], 0, []
    for ch in text:
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            depth += ch == "("
            depth -= ch == ")"
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return parts


def serialize(g: GroundedGraph) -> str:
    """One grounded-graph record, deterministically ordered.

    Format: header ``query<TAB>start<TAB>num_nodes<TAB>num_edges``, then
    ``sol`` lines (with an optional +/- label column when labels are
    known), then ``edge`` lines sorted by (src, dst).
    """
    lines = [f"{g.query}\t{g.start}\t{g.num_nodes}\t{g.num_edges}"]
    for nid in sorted(g.solutions):
        row = f"sol\t{nid}\t{g.solutions[nid]}"
        if nid in g.labels:
            row += "\t" + ("+" if g.labels[nid] else "-")
        lines.append(row)
    for e in sorted(g.edges, key=lambda e: (e.src, e.dst, e.is_restart)):
        feats = ",".join(f"{name}={val!r}" for name, val in sorted(e.phi.items()))
        lines.append(f"edge\t{e.src}\t{e.dst}\t{feats}")
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> list[GroundedGraph]:
    """Parse one or more blank-line-separated grounded-graph records."""
    graphs = []
    for block in text.split("\n\n"):
        if not block.strip():
            continue
        lines = block.strip("\n").split("\n")
        query, start, num_nodes, num_edges = lines[0].split("\t")
        g = GroundedGraph(query=query, start=int(start))
        g.nodes = [None] * int(num_nodes)
        for line in lines[1:]:
            kind, rest = line.split("\t", 1)
            if kind == "sol":
                parts = rest.split("\t")
                nid = int(parts[0])
                g.solutions[nid] = parts[1]
                if len(parts) > 2:
                    g.labels[nid] = parts[2] == "+"
            elif kind == "edge":
                s, d, feats = rest.split("\t")
                phi: FeatureVector = {}
                for item in _split_features(feats):
                    if not item:
                        continue
                    name, _, val = item.rpartition("=")
                    phi[name] = float(val)
                g.add_edge(int(s), int(d), phi,
                           is_restart=RESTART_FEATURE in phi)
        if g.num_edges != int(num_edges):
            raise ValueError(f"record for {query!r} declares {num_edges} "
                             f"edges but has {g.num_edges}")
        graphs.append(g)
    return graphs
