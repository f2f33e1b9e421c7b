"""Eavesdropper Fisher information for shifted updates.

For the observation ``y = delta + f(delta) * ones + z`` with white noise of
variance ``sigma^2 / h^2``, the FIM with respect to ``delta`` is

    J = c * (I + ones g^T + g ones^T + d * g g^T),   c = 2 h^2 / sigma^2,

where ``g`` is the gradient of ``f``. When ``g @ ones == -1`` the vector of ones
spans the null space and the spectrum is ``{0, c (d-2 times), c d |g|^2}``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, SingularBaseError
from .shiftdesign import ShiftScheme, make_gamma, shift_matrix_rank_deficiency, validate_gamma
from .fedcore import Delta

SINGULAR_REL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class FimContext:
    grad_f: np.ndarray
    h: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        g = np.array(self.grad_f, dtype=float)
        if g.ndim != 1 or g.shape[0] < 2:
            raise ConfigurationError("grad_f must be a vector with d >= 2")
        if not np.all(np.isfinite(g)):
            raise ConfigurationError("grad_f has non-finite entries")
        if not (self.h > 0 and self.sigma > 0):
            raise ConfigurationError("h and sigma must be positive")
        object.__setattr__(self, "grad_f", g)

    @property
    def d(self) -> int:
        return self.grad_f.shape[0]

    @property
    def scale(self) -> float:
        return 2.0 * self.h**2 / self.sigma**2


def build_fim(ctx: FimContext) -> np.ndarray:
    g = ctx.grad_f
    d = ctx.d
    ones = np.ones(d)
    J = np.eye(d) + np.outer(ones, g) + np.outer(g, ones) + d * np.outer(g, g)
    J *= ctx.scale
    # symmetric by construction up to rounding in the two cross terms
    return 0.5 * (J + J.T)


def closed_form_eigenvalues(ctx: FimContext) -> np.ndarray:
    """Sorted spectrum of :func:`build_fim` in the singular regime."""
    if not validate_gamma(ctx.grad_f):
        raise DomainError("closed-form spectrum requires sum(grad_f) == -1")
    c = ctx.scale
    d = ctx.d
    top = c * d * float(ctx.grad_f @ ctx.grad_f)
    return np.sort(np.concatenate([[0.0], np.full(d - 2, c), [top]]))


def numeric_eigenvalues(matrix) -> np.ndarray:
    return np.linalg.eigvalsh(np.asarray(matrix, dtype=float))


def is_singular(matrix, rel_tol: float = SINGULAR_REL_TOL) -> bool:
    """Smallest |eigenvalue| below ``rel_tol`` times the spectral radius."""
    ev = np.abs(numeric_eigenvalues(matrix))
    radius = ev.max()
    if radius == 0:
        return True
    return bool(ev.min() < rel_tol * radius)


def det_via_mdl(a: float, U, V) -> float:
    """``det(a I_d + U V^T)`` through the matrix determinant lemma.

    Only an ``m x m`` determinant is formed, with ``m`` the number of columns of
    ``U`` and ``V``.
    """
    if a == 0:
        raise SingularBaseError("diagonal base a*I is singular for a == 0")
    U = np.asarray(U, dtype=float)
    V = np.asarray(V, dtype=float)
    if U.shape != V.shape or U.ndim != 2:
        raise ConfigurationError("U and V must be matrices of equal shape")
    d, m = U.shape
    small = np.eye(m) + (V.T @ U) / a
    return float(a**d * np.linalg.det(small))


def mdl_decomposition(grad_f, lam: float = 0.0):
    """Split ``J/c - lam I`` into ``a I + U V^T`` with rank-3 factors.

    Returns ``(a, U, V)``.
    """
    g = np.asarray(grad_f, dtype=float)
    d = g.shape[0]
    ones = np.ones(d)
    root_d = np.sqrt(d)
    U = np.column_stack([g, ones, root_d * g])
    V = np.column_stack([ones, g, root_d * g])
    return 1.0 - lam, U, V


def characteristic_det(grad_f, lam: float) -> float:
    """``det(J/c - lam I)`` evaluated without a dense d x d determinant."""
    a, U, V = mdl_decomposition(grad_f, lam)
    return det_via_mdl(a, U, V)


def fim_report(scheme: ShiftScheme, d: int, h: float = 1.0, sigma: float = 1.0, delta=None) -> dict:
    """Closed-form and numeric spectra of the eavesdropper FIM for one scheme.

    ``delta`` only matters for the max scheme; it defaults to ``arange(1, d+1)``
    which puts the shift on the last coordinate.
    """
    if delta is None:
        delta = np.arange(1.0, d + 1.0)
    gamma = make_gamma(scheme, Delta(delta, agent_id=0))
    ctx = FimContext(gamma, h, sigma)
    J = build_fim(ctx)
    closed = closed_form_eigenvalues(ctx)
    numeric = numeric_eigenvalues(J)
    scale = max(abs(closed).max(), 1e-300)
    return {
        "scheme": scheme.kind,
        "d": d,
        "h": h,
        "sigma": sigma,
        "fim_scale": ctx.scale,
        "gamma": gamma.tolist(),
        "closed_form_eigenvalues": closed.tolist(),
        "numeric_eigenvalues": numeric.tolist(),
        "max_relative_error": float(np.max(np.abs(closed - numeric)) / scale),
        "singular": is_singular(J),
        "null_residual": float(np.linalg.norm(J @ np.ones(d))),
        "shift_matrix_rank_deficiency": shift_matrix_rank_deficiency(gamma),
    }
