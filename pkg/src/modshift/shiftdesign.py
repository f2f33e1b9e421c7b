"""Shift coefficient vectors and their application to outgoing deltas.

An agent transmits ``delta + (gamma @ delta) * ones`` instead of ``delta``. Any
``gamma`` whose entries sum to -1 makes ``I + ones gamma^T`` rank deficient, which
is what leaves the eavesdropper with a singular Fisher information matrix.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigurationError, ConstraintViolation, UsageError
from .fedcore import Delta

GAMMA_TOL = 1e-10
SCHEMES = ("max", "mean", "comp", "custom", "none")


@dataclass(frozen=True, eq=False)
class ShiftScheme:
    """Rule for building gamma.

    ``custom_gamma`` is either one vector shared by all agents or a ``(K, d)``
    array with one row per agent id.
    """

    kind: str = "max"
    custom_gamma: Optional[np.ndarray] = None

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in SCHEMES:
            raise ConfigurationError(f"unknown shift scheme {self.kind!r}; choose from {SCHEMES}")
        object.__setattr__(self, "kind", kind)
        if self.custom_gamma is not None:
            g = np.array(self.custom_gamma, dtype=float)
            if g.ndim not in (1, 2):
                raise ConfigurationError("custom_gamma must be a vector or a (K, d) array")
            for row in np.atleast_2d(g):
                if not validate_gamma(row):
                    raise ConstraintViolation(f"custom gamma sums to {row.sum()!r}, not -1")
            object.__setattr__(self, "custom_gamma", g)
        if kind == "custom" and self.custom_gamma is None:
            raise ConfigurationError("custom scheme needs custom_gamma")

    @property
    def active(self) -> bool:
        return self.kind != "none"

    @property
    def per_agent(self) -> bool:
        return self.kind == "custom" and self.custom_gamma.ndim == 2


@dataclass(frozen=True, eq=False)
class ShiftedDelta:
    """What an agent puts on the air: ``values = delta + shift_scalar * ones``."""

    values: np.ndarray
    shift_scalar: float
    agent_id: int
    round: int = 0

    def compensated(self) -> np.ndarray:
        """Remove the shift given the scalar from the secret channel."""
        return self.values - self.shift_scalar


def make_gamma(scheme: ShiftScheme, delta: Delta) -> np.ndarray:
    d = delta.values.shape[0]
    if d < 2:
        raise ConfigurationError("shift design needs d >= 2")
    kind = scheme.kind
    if kind == "none":
        raise UsageError("scheme 'none' has no gamma; skip the shift instead")
    gamma = np.zeros(d)
    if kind == "max":
        # argmax returns the first maximiser, so ties go to the lowest index
        gamma[int(np.argmax(np.abs(delta.values)))] = -1.0
    elif kind == "mean":
        gamma[:] = -1.0 / d
    elif kind == "comp":
        gamma[0] = -1.0
    else:
        g = scheme.custom_gamma
        if g.ndim == 2:
            if not 0 <= delta.agent_id < g.shape[0]:
                raise ConfigurationError(f"no custom gamma row for agent {delta.agent_id}")
            g = g[delta.agent_id]
        if g.shape[0] != d:
            raise ConfigurationError(f"custom gamma has length {g.shape[0]}, delta has {d}")
        gamma = g.copy()
    return gamma


def validate_gamma(gamma, tol: float = GAMMA_TOL) -> bool:
    g = np.asarray(gamma, dtype=float)
    return bool(g.ndim == 1 and np.all(np.isfinite(g)) and abs(g.sum() + 1.0) <= tol)


def apply_shift(delta: Delta, gamma) -> ShiftedDelta:
    gamma = np.asarray(gamma, dtype=float)
    if gamma.shape != delta.values.shape:
        raise ConfigurationError("gamma and delta differ in length")
    if not validate_gamma(gamma):
        raise ConstraintViolation(f"gamma sums to {gamma.sum()!r}, not -1")
    scalar = float(gamma @ delta.values)
    return ShiftedDelta(delta.values + scalar, scalar, delta.agent_id, delta.round)


def shift_matrix(gamma) -> np.ndarray:
    """The linear map ``I + ones gamma^T`` taking a delta to its shifted version."""
    gamma = np.asarray(gamma, dtype=float)
    d = gamma.shape[0]
    return np.eye(d) + np.outer(np.ones(d), gamma)


def shift_matrix_rank_deficiency(gamma, d: int | None = None) -> int:
    """``d - rank(I + ones gamma^T)``; equals 1 for every valid gamma."""
    gamma = np.asarray(gamma, dtype=float)
    if d is not None and gamma.shape[0] != d:
        raise ConfigurationError(f"gamma has length {gamma.shape[0]}, expected {d}")
    if not validate_gamma(gamma):
        raise ConstraintViolation(f"gamma sums to {gamma.sum()!r}, not -1")
    # default tolerance: largest singular value * d * machine epsilon
    return gamma.shape[0] - int(np.linalg.matrix_rank(shift_matrix(gamma)))


def free_term_hook(g_grad, tol: float = GAMMA_TOL) -> bool:
    """Check a candidate free-term gradient (w.r.t. delta) is orthogonal to ones.

    Such a term can be added to the linear shift without breaking singularity.
    Only ``g = 0`` is used by the simulator.
    """
    g = np.asarray(g_grad, dtype=float)
    return bool(np.all(np.isfinite(g)) and abs(g.sum()) <= tol)


def random_valid_gamma(rng: np.random.Generator, d: int, scale: float = 1.0) -> np.ndarray:
    """Gaussian vector projected onto the affine plane ``sum(gamma) = -1``."""
    g = scale * rng.standard_normal(d)
    g -= (g.sum() + 1.0) / d
    return g
