"""Supervised weight learning over cached local groundings.

Training data are (query, positive answers, negative answers) triples.
Each query is grounded once; the objective is a pairwise ranking loss on
the walk mass of positive vs negative solution nodes, plus L2
regularization, minimized by SGD with an epoch-decayed learning rate
(eta / epoch^2).  Gradients come from exactly differentiating the
unrolled power iteration on the fixed grounded graph.
"""

from __future__ import annotations

import random
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .graph import GroundedGraph, NumericGraph
from .grounder import GroundingParams, approximate_ground
from .kernels import grad_power_iterate_arrays
from .terms import Atom
from .weights import ParameterVector, WeightFn

_LOG_CLIP = 1e-12


class TrainingDiverged(Exception):
    pass


@dataclass(frozen=True)
class TrainingExample:
    query: Atom
    positives: tuple[str, ...]   # rendered ground answer atoms
    negatives: tuple[str, ...]


# Built-in edge features are part of the walk's calibration (restart
# mass, db fan-out, solution self-loops); training leaves them at their
# unit defaults and learns only clause and user features.
BUILTIN_FEATURES = frozenset(("db", "defRestart", "id(selfLoop)"))


@dataclass
class SgdConfig:
    mu: float = 0.001
    eta: float = 1.0
    epochs: int = 5
    threads: int = 1
    loss: str = "squared"        # "squared" hinge on the margin, or "log"
    ppr_T: int = 10              # forward iterations during learning
    fixed_features: frozenset = BUILTIN_FEATURES

    def __post_init__(self):
        if self.mu < 0 or self.eta <= 0 or self.epochs < 0 or self.threads < 1:
            raise ValueError(f"invalid SGD configuration: {self}")
        if self.loss not in ("squared", "log"):
            raise ValueError(f"unknown loss {self.loss!r}")


def pair_loss(h: float) -> tuple[float, float]:
    """Squared hinge on the score margin h = p[u+] - p[u-].

    Returns (loss, dloss/dh): h^2 with derivative 2h when the pair is
    violated (h < 0), zero otherwise.
    """
    if h < 0.0:
        return h * h, 2.0 * h
    return 0.0, 0.0


def ppr_gradient(g: GroundedGraph, w: ParameterVector, fn: WeightFn,
                 T: int = 10, alpha_prime: float = 0.1):
    """Walk mass and its gradient wrt every feature weight of the graph.

    Differentiates the T-step power iteration exactly, renormalizing each
    node's outgoing distribution and following the active branch of the
    restart floor.  Returns (v, grads, feat_names)
    with grads of shape (num_features, num_nodes).
    """
    ng = NumericGraph(g)
    prob, info = ng.probabilities(w, fn, alpha_prime)
    m = len(ng.edges)
    F = len(ng.feat_names)
    if fn.name == "linear":
        der = np.vectorize(fn.derivative)(info["dot"], info["raw"]) \
            if m else np.zeros(0)
    else:
        der = info["raw"].copy()
    # d(effective raw weight)/dw_i: a clamped restart ignores its own
    # features but tracks the floor a'S/(1-a'), so it inherits the
    # non-restart sum's derivative; implicit frontier restarts are constant.
    frozen = info["clamped"] | ng.implicit_mask
    deff = np.zeros((F, m))
    for e, f, val in zip(ng.ef_edge, ng.ef_feat, ng.ef_val):
        if not frozen[e]:
            deff[f, e] += der[e] * val
    if info["clamped"].any():
        dS = np.zeros((F, ng.n))
        keep = ~ng.restart_mask
        for i in range(F):
            np.add.at(dS[i], ng.src[keep], deff[i, keep])
        cidx = np.flatnonzero(info["clamped"])
        deff[:, cidx] = alpha_prime / (1.0 - alpha_prime) \
            * dS[:, ng.src[cidx]]
    dZ = np.zeros((F, ng.n))
    for i in range(F):
        np.add.at(dZ[i], ng.src, deff[i])
    z_src = info["Z"][ng.src]
    dprob = (deff - prob[None, :] * dZ[:, ng.src]) / z_src[None, :]
    v, grads = grad_power_iterate_arrays(ng.src, ng.dst, prob, dprob,
                                         ng.n, ng.start, T)
    return v, grads, ng.feat_names


@dataclass
class PairStats:
    total_pairs: int = 0
    used_pairs: int = 0
    missing_positives: int = 0
    missing_negatives: int = 0

    def merge(self, other: "PairStats"):
        self.total_pairs += other.total_pairs
        self.used_pairs += other.used_pairs
        self.missing_positives += other.missing_positives
        self.missing_negatives += other.missing_negatives


@dataclass
class LabeledGrounding:
    """A cached grounding with its labeled solution node ids."""
    example: TrainingExample
    graph: GroundedGraph
    pos_nodes: list[int]
    neg_nodes: list[int]
    missing_positives: int = 0
    missing_negatives: int = 0

    @property
    def usable(self) -> bool:
        return bool(self.pos_nodes and self.neg_nodes)


def label_grounding(example: TrainingExample,
                    graph: GroundedGraph) -> LabeledGrounding:
    by_answer: dict[str, list[int]] = {}
    for nid, answer in graph.solutions.items():
        by_answer.setdefault(answer, []).append(nid)
    pos, neg = [], []
    miss_p = miss_n = 0
    for a in example.positives:
        nodes = by_answer.get(a)
        if nodes:
            pos.extend(nodes)
        else:
            miss_p += 1
    for a in example.negatives:
        nodes = by_answer.get(a)
        if nodes:
            neg.extend(nodes)
        else:
            miss_n += 1
    for nid in pos:
        graph.labels[nid] = True
    for nid in neg:
        graph.labels[nid] = False
    return LabeledGrounding(example, graph, sorted(pos), sorted(neg),
                            miss_p, miss_n)


def example_gradient(lg: LabeledGrounding, w: ParameterVector, fn: WeightFn,
                     cfg: SgdConfig, alpha_prime: float = 0.1):
    """Gradient of the pairwise loss plus L2 term for one grounding.

    Returns (grad: dict feature -> float, loss, stats).  Regularization
    is applied lazily, only to features the grounding touches.
    """
    if not lg.usable:
        raise ValueError(
            f"example {lg.example.query!r} has no usable positive/negative "
            f"solution nodes in its grounding")
    v, grads, feat_names = ppr_gradient(lg.graph, w, fn, cfg.ppr_T,
                                        alpha_prime)
    coef = np.zeros(len(v))
    loss = 0.0
    stats = PairStats(
        total_pairs=(len(lg.pos_nodes) + lg.missing_positives)
        * (len(lg.neg_nodes) + lg.missing_negatives),
        used_pairs=len(lg.pos_nodes) * len(lg.neg_nodes),
        missing_positives=lg.missing_positives,
        missing_negatives=lg.missing_negatives)
    for up in lg.pos_nodes:
        for un in lg.neg_nodes:
            if cfg.loss == "squared":
                l, dh = pair_loss(v[up] - v[un])
                loss += l
                coef[up] += dh
                coef[un] -= dh
            else:
                pp = min(max(v[up], _LOG_CLIP), 1.0 - _LOG_CLIP)
                pn = min(max(v[un], _LOG_CLIP), 1.0 - _LOG_CLIP)
                loss += -np.log(pp) - np.log1p(-pn)
                coef[up] += -1.0 / pp
                coef[un] += 1.0 / (1.0 - pn)
    gvec = grads @ coef
    grad = {}
    for name, gval in zip(feat_names, gvec):
        if name in cfg.fixed_features:
            continue
        grad[name] = gval + 2.0 * cfg.mu * w[name]
        loss += cfg.mu * w[name] * w[name]
    return grad, float(loss), stats


def ground_examples(data, program, store, params: GroundingParams,
                    w: ParameterVector, fn: WeightFn):
    """Ground every training query once and attach its labels."""
    out = []
    for ex in data:
        g, _, _ = approximate_ground(ex.query, program, store, params, w, fn)
        out.append(label_grounding(ex, g))
    return out


def init_weights(groundings, seed: int) -> ParameterVector:
    """1.0 + delta with per-feature delta drawn uniformly from [0, 0.01].

    The draw is keyed on (seed, feature name) so initialization does not
    depend on the order features are first encountered.
    """
    w = ParameterVector()
    for lg in groundings:
        for name in lg.graph.feature_names():
            if name not in w:
                w[name] = 1.0 + random.Random(f"{seed}:{name}").uniform(
                    0.0, 0.01)
    return w


@dataclass
class TrainResult:
    weights: ParameterVector
    epoch_losses: list[float] = field(default_factory=list)
    skipped_examples: int = 0
    pair_stats: PairStats = field(default_factory=PairStats)


def _check_divergence(w: ParameterVector):
    for name, val in w.items():
        if abs(val) > 1e6 or not np.isfinite(val):
            raise TrainingDiverged(
                f"weight {name} diverged to {val}; lower eta or raise mu")


def train_on_groundings(groundings, cfg: SgdConfig, seed: int = 0,
                        alpha_prime: float = 0.1,
                        fn: WeightFn = None) -> TrainResult:
    """SGD over pre-grounded examples; threads > 1 runs workers that share
    the parameter vector without step-level locking (lost updates are
    tolerated), so only threads == 1 is bitwise reproducible."""
    from .weights import LINEAR
    fn = fn or LINEAR
    usable = [lg for lg in groundings if lg.usable]
    result = TrainResult(init_weights(usable, seed),
                         skipped_examples=len(groundings) - len(usable))
    w = result.weights
    rng = random.Random(seed + 1)
    lock = threading.Lock()

    def step(lg, rate):
        grad, loss, stats = example_gradient(lg, w, fn, cfg, alpha_prime)
        for name, gval in grad.items():
            w[name] = w[name] - rate * gval
        return loss, stats

    for epoch in range(1, cfg.epochs + 1):
        order = list(usable)
        rng.shuffle(order)
        rate = cfg.eta / (epoch * epoch)
        epoch_loss = 0.0
        if cfg.threads == 1:
            for lg in order:
                loss, stats = step(lg, rate)
                epoch_loss += loss
                result.pair_stats.merge(stats)
        else:
            def worker(lg):
                loss, stats = step(lg, rate)
                with lock:
                    nonlocal epoch_loss
                    epoch_loss += loss
                    result.pair_stats.merge(stats)
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                list(pool.map(worker, order))
        _check_divergence(w)
        result.epoch_losses.append(epoch_loss)
    return result


def train(data, program, store, params: GroundingParams, cfg: SgdConfig,
          seed: int = 0, fn: WeightFn = None) -> TrainResult:
    """Ground, label, and fit weights single-threaded (reproducible)."""
    from .weights import LINEAR
    fn = fn or LINEAR
    groundings = ground_examples(data, program, store, params,
                                 ParameterVector(), fn)
    one = SgdConfig(cfg.mu, cfg.eta, cfg.epochs, 1, cfg.loss, cfg.ppr_T)
    return train_on_groundings(groundings, one, seed, params.alpha_prime, fn)


def train_parallel(data, program, store, params: GroundingParams,
                   cfg: SgdConfig, seed: int = 0,
                   fn: WeightFn = None) -> TrainResult:
    """Like train, with cfg.threads workers sharing the parameter vector."""
    from .weights import LINEAR
    fn = fn or LINEAR
    groundings = ground_examples(data, program, store, params,
                                 ParameterVector(), fn)
    return train_on_groundings(groundings, cfg, seed, params.alpha_prime, fn)
