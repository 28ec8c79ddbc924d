"""Parameter vectors and edge weighting functions.

An edge's raw weight is f(w, phi) where phi is the edge's sparse feature
vector and w maps feature names to real weights (default 1.0).  Two
weighting functions are provided:

* ``linear``: sum_i w[i] * phi[i], floored at a small positive constant
  so transition probabilities stay well-defined.
* ``exp``: exp(sum_i w[i] * phi[i]).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

LINEAR_FLOOR = 1e-9

# Sparse feature vector: ground feature name -> value.
FeatureVector = dict[str, float]


class ParameterVector(dict):
    """feature name -> weight; unseen features weigh 1.0."""

    def __missing__(self, key):
        return 1.0

    def copy(self) -> "ParameterVector":
        return ParameterVector(self)


@dataclass(frozen=True)
class WeightFn:
    name: str
    value: Callable[[float], float]        # raw weight from the dot product
    derivative: Callable[[float, float], float]  # d(raw)/d(dot) given (dot, raw)


def _linear_value(dot: float) -> float:
    return dot if dot > LINEAR_FLOOR else LINEAR_FLOOR


def _linear_derivative(dot: float, raw: float) -> float:
    return 1.0 if dot > LINEAR_FLOOR else 0.0


LINEAR = WeightFn("linear", _linear_value, _linear_derivative)
EXP = WeightFn("exp", math.exp, lambda dot, raw: raw)

WEIGHT_FNS = {"linear": LINEAR, "exp": EXP}


def edge_weight(fn: WeightFn, w: ParameterVector, phi: FeatureVector) -> float:
    dot = sum(w[name] * val for name, val in phi.items())
    raw = fn.value(dot)
    if not (raw > 0.0) or not math.isfinite(raw):
        raise ValueError(f"nonpositive or non-finite edge weight {raw} "
                         f"for features {phi}")
    return raw


def save_params(w: ParameterVector) -> str:
    return "".join(f"{name}\t{float(w[name])!r}\n" for name in sorted(w))


def load_params(text: str) -> ParameterVector:
    w = ParameterVector()
    for line in text.splitlines():
        if not line.strip():
            continue
        name, _, value = line.rpartition("\t")
        w[name] = float(value)
    return w
