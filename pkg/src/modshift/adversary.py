"""Eavesdropper reconstruction and the convergence (tamper) test.

Eve adds the weighted sum of what she overhears to her model, exactly as the
server would without compensation. If the server's update has norm ``eps``, an
untampered run gives Eve an update of norm at most ``eps``; with shifts the
bound becomes ``eps * (1 + sqrt(d) |gamma|)`` for a shared gamma, or
``eps * (1 + sqrt(d) max_k |gamma_k| alpha)`` otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .fedcore import Delta, as_model_vector, check_weights, order_deltas, weighted_sum

TAMPER_SLACK = 1e-12


@dataclass
class EveState:
    w_eve: np.ndarray
    history: list = field(default_factory=list)
    tamper_flags: list = field(default_factory=list)

    @property
    def rounds(self) -> int:
        return len(self.history)


@dataclass(frozen=True)
class TamperBoundInputs:
    epsilon: float
    gamma_norms: tuple
    alpha: float = 1.0
    homogeneous: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise ConfigurationError("epsilon must be non-negative")
        if not self.alpha >= 1 - 1e-12:
            raise ConfigurationError(f"alpha must be >= 1, got {self.alpha}")
        object.__setattr__(self, "gamma_norms", tuple(float(x) for x in self.gamma_norms))


def eve_update(state: EveState, observations: Sequence[np.ndarray], weights) -> EveState:
    """Add the weighted sum of raw observations (ordered by agent id) to Eve's model."""
    weights = np.asarray(weights, dtype=float)
    check_weights(weights)
    if len(observations) != len(weights):
        raise ConfigurationError(f"{len(observations)} observations for {len(weights)} agents")
    w = state.w_eve
    obs = [np.asarray(o, dtype=float) for o in observations]
    if any(o.shape != w.shape for o in obs):
        raise ConfigurationError("observation dimension does not match Eve's model")
    w_new = w + weighted_sum(obs, weights)
    norm = float(np.linalg.norm(w_new - w))
    return EveState(w_new, state.history + [norm], list(state.tamper_flags))


def initial_state(w0) -> EveState:
    return EveState(as_model_vector(w0))


def alpha(deltas: Sequence[Delta], weights) -> float:
    """Weighted norm-sum over norm of the weighted sum; ``inf`` when updates cancel."""
    weights = np.asarray(weights, dtype=float)
    ordered = order_deltas(deltas, len(weights))
    vecs = [dl.values for dl in ordered]
    numer = sum(float(wk) * float(np.linalg.norm(v)) for wk, v in zip(weights, vecs))
    denom = float(np.linalg.norm(weighted_sum(vecs, weights)))
    if denom == 0.0:
        return math.inf
    # rounding can put a perfectly aligned ratio a hair below 1
    return max(numer / denom, 1.0)


def tamper_bound(inputs: TamperBoundInputs, d: int) -> float:
    eps = inputs.epsilon
    gmax = max(inputs.gamma_norms, default=0.0)
    root_d = math.sqrt(d)
    if inputs.homogeneous:
        return eps * (1.0 + root_d * gmax)
    if gmax == 0.0:
        return eps
    if math.isinf(inputs.alpha):
        return math.inf
    return eps * (1.0 + root_d * gmax * inputs.alpha)


def tamper_test(eve_update_norm: float, bound: float) -> bool:
    """True when Eve's update is consistent with an untampered converging run."""
    if eve_update_norm < 0 or bound < 0:
        raise ConfigurationError("norms must be non-negative")
    return bool(eve_update_norm <= bound + TAMPER_SLACK)
