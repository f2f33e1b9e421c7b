"""Modified FedAvg: local full-batch descent, round differences, weighted aggregation.

Agents send ``delta = w_local - w_global`` rather than their local model, and the
server adds the data-size weighted sum of the deltas to its model. The loss is the
squared error of a linear model, averaged over each agent's samples.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DivergenceError, ProtocolError

WEIGHT_SUM_TOL = 1e-12


def as_model_vector(values, d: int | None = None) -> np.ndarray:
    """Validate and copy ``values`` into a finite 1-D float array."""
    w = np.array(values, dtype=float)
    if w.ndim != 1:
        raise ConfigurationError(f"model vector must be 1-D, got shape {w.shape}")
    if d is not None and w.shape[0] != d:
        raise ConfigurationError(f"model vector has length {w.shape[0]}, expected {d}")
    if not np.all(np.isfinite(w)):
        raise ConfigurationError("model vector has non-finite entries")
    return w


@dataclass(frozen=True, eq=False)
class LocalDataset:
    """Samples held by one agent: an ``(m_k, d)`` feature matrix and ``m_k`` labels."""

    features: np.ndarray
    labels: np.ndarray
    agent_id: int = 0

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or y.ndim != 1:
            raise ConfigurationError("features must be 2-D and labels 1-D")
        if X.shape[0] < 1 or X.shape[0] != y.shape[0]:
            raise ConfigurationError(
                f"need m_k >= 1 with matching rows: {X.shape[0]} features, {y.shape[0]} labels"
            )
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    # Sufficient statistics of the quadratic loss; each gradient step is then O(d^2).
    @cached_property
    def gram(self) -> np.ndarray:
        return self.features.T @ self.features

    @cached_property
    def moment(self) -> np.ndarray:
        return self.features.T @ self.labels


@dataclass(frozen=True, eq=False)
class Delta:
    """Round difference sent by one agent."""

    values: np.ndarray
    agent_id: int
    round: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", as_model_vector(self.values))
        if self.round < 0:
            raise ConfigurationError("round must be >= 0")


@dataclass(frozen=True)
class TrainConfig:
    eta: float
    local_epochs: int
    rounds: int
    agent_weights: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigurationError("learning rate must be positive")
        if self.local_epochs < 1 or self.rounds < 1:
            raise ConfigurationError("local_epochs and rounds must be >= 1")
        weights = np.asarray(self.agent_weights, dtype=float)
        check_weights(weights)
        object.__setattr__(self, "agent_weights", weights)

    @classmethod
    def from_datasets(cls, datasets: Sequence[LocalDataset], eta: float, local_epochs: int, rounds: int):
        """Weights m_k / m taken from the dataset sizes."""
        sizes = np.array([ds.size for ds in sorted(datasets, key=lambda ds: ds.agent_id)], dtype=float)
        return cls(eta, local_epochs, rounds, sizes / sizes.sum())


def check_weights(weights: np.ndarray) -> None:
    if weights.ndim != 1 or weights.size == 0:
        raise ConfigurationError("agent weights must be a non-empty 1-D vector")
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise ConfigurationError("agent weights must be non-negative and sum to 1")


def _check_dims(w: np.ndarray, data: LocalDataset) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.shape != (data.dim,):
        raise ConfigurationError(f"weights of shape {w.shape} do not match data dimension {data.dim}")
    return w


def mse_loss(w, data: LocalDataset) -> float:
    """Mean of ``(w @ x_i - y_i)**2`` over the agent's samples."""
    w = _check_dims(w, data)
    residual = data.features @ w - data.labels
    return float(residual @ residual) / data.size


def mse_gradient(w, data: LocalDataset) -> np.ndarray:
    """Gradient of :func:`mse_loss`, ``(2/m_k) X^T (X w - y)``."""
    w = _check_dims(w, data)
    return (2.0 / data.size) * (data.gram @ w - data.moment)


def global_loss(w, datasets: Sequence[LocalDataset]) -> float:
    """Loss averaged over every sample of every agent."""
    if len(datasets) == 0:
        raise ConfigurationError("global loss needs at least one dataset")
    total = 0.0
    m = 0
    for ds in sorted(datasets, key=lambda ds: ds.agent_id):
        total += mse_loss(w, ds) * ds.size
        m += ds.size
    return total / m


def pool_datasets(datasets: Sequence[LocalDataset]) -> LocalDataset:
    """Stack all samples into one dataset; its mse_loss is the global loss."""
    ordered = sorted(datasets, key=lambda ds: ds.agent_id)
    return LocalDataset(
        np.concatenate([ds.features for ds in ordered]),
        np.concatenate([ds.labels for ds in ordered]),
        agent_id=-1,
    )


class QuadraticLoss:
    """Fast evaluator of :func:`mse_loss` for repeated calls on one dataset.

    Uses ``F(w) = (w - w_ls)^T (G/m) (w - w_ls) + F(w_ls)`` around the least-squares
    point, which costs O(d^2) per call and avoids cancellation between large terms.
    """

    def __init__(self, data: LocalDataset):
        self.curvature = data.gram / data.size
        self.minimizer = np.linalg.lstsq(data.features, data.labels, rcond=None)[0]
        self.floor = mse_loss(self.minimizer, data)

    def __call__(self, w) -> float:
        e = np.asarray(w, dtype=float) - self.minimizer
        return self.floor + max(float(e @ self.curvature @ e), 0.0)


def local_descent(w, data: LocalDataset, cfg: TrainConfig, round: int | None = None) -> np.ndarray:
    """Run ``cfg.local_epochs`` full-batch gradient steps from ``w``."""
    w = _check_dims(w, data).copy()
    G, b = data.gram, data.moment
    step = 2.0 * cfg.eta / data.size
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(cfg.local_epochs):
            w = w - step * (G @ w - b)
    # once non-finite, an entry stays non-finite under these affine steps
    if not np.isfinite(w).all():
        raise DivergenceError("local descent produced non-finite weights", round=round, agent_id=data.agent_id)
    return w


def compute_delta(w_local, w_global, agent_id: int, round: int = 0) -> Delta:
    w_local = np.asarray(w_local, dtype=float)
    w_global = np.asarray(w_global, dtype=float)
    if w_local.shape != w_global.shape:
        raise ConfigurationError(f"shape mismatch: {w_local.shape} vs {w_global.shape}")
    with np.errstate(over="ignore", invalid="ignore"):
        diff = w_local - w_global
    if not np.isfinite(diff).all():
        raise DivergenceError("round difference is not finite", round=round, agent_id=agent_id)
    return Delta(diff, agent_id, round)


def weighted_sum(vectors: Sequence[np.ndarray], weights: np.ndarray) -> np.ndarray:
    """Sequential sum in the given order; callers pass vectors sorted by agent id."""
    acc = np.zeros_like(np.asarray(vectors[0], dtype=float))
    for weight, v in zip(weights, vectors):
        acc += weight * v
    return acc


def order_deltas(deltas: Sequence[Delta], num_agents: int) -> list[Delta]:
    """Sort deltas by agent id and check one per agent, all from the same round."""
    ordered = sorted(deltas, key=lambda dl: dl.agent_id)
    ids = [dl.agent_id for dl in ordered]
    if ids != list(range(num_agents)):
        raise ProtocolError(f"expected one delta for each agent 0..{num_agents - 1}, got ids {ids}")
    if len({dl.round for dl in ordered}) > 1:
        raise ProtocolError("deltas come from different rounds")
    return ordered


def aggregate(w, deltas: Sequence[Delta], weights) -> np.ndarray:
    """Server update ``w + sum_k weights[k] * delta_k``, summed in ascending agent id."""
    weights = np.asarray(weights, dtype=float)
    check_weights(weights)
    ordered = order_deltas(deltas, len(weights))
    w = np.asarray(w, dtype=float)
    if any(dl.values.shape != w.shape for dl in ordered):
        raise ConfigurationError("delta dimension does not match the model")
    return w + weighted_sum([dl.values for dl in ordered], weights)
