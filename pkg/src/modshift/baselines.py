"""Noise-injection baselines: additive Gaussian or Laplace noise on each delta.

The whole noise vector (d scalars) goes to the server over the secret channel so
it can be subtracted again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import SecretLedger
from .errors import ConfigurationError
from .fedcore import Delta

KINDS = ("gaussian", "laplace")


@dataclass(frozen=True)
class InjectionConfig:
    """``beta_sq`` is the Gaussian variance; ``lam`` the Laplace scale (variance ``2 lam^2``)."""

    kind: str = "gaussian"
    beta_sq: float = 1.0
    lam: float = 1.0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in KINDS:
            raise ConfigurationError(f"unknown baseline kind {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "kind", kind)
        if kind == "gaussian" and not self.beta_sq >= 0:
            raise ConfigurationError("beta_sq must be non-negative")
        if kind == "laplace" and not self.lam >= 0:
            raise ConfigurationError("Laplace scale must be non-negative")

    @classmethod
    def gaussian(cls, beta_sq: float):
        return cls("gaussian", beta_sq=beta_sq)

    @classmethod
    def laplace(cls, lambda_sq: float):
        """Laplace noise given the squared scale, as the sweeps are quoted."""
        if lambda_sq < 0:
            raise ConfigurationError("lambda_sq must be non-negative")
        return cls("laplace", lam=math.sqrt(lambda_sq))

    @property
    def entry_variance(self) -> float:
        return self.beta_sq if self.kind == "gaussian" else 2.0 * self.lam**2

    @property
    def label(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian(beta_sq={self.beta_sq:g})"
        return f"laplace(lambda_sq={self.lam ** 2:g})"


def sample_noise(cfg: InjectionConfig, d: int, noise_stream: np.random.Generator) -> np.ndarray:
    if cfg.kind == "gaussian":
        return noise_stream.normal(0.0, math.sqrt(cfg.beta_sq), size=d)
    return noise_stream.laplace(0.0, cfg.lam, size=d)


def inject(delta: Delta, cfg: InjectionConfig, noise_stream, ledger: SecretLedger | None = None):
    """Return ``(delta + noise, noise)`` and charge d scalars to the ledger."""
    d = delta.values.shape[0]
    noise = sample_noise(cfg, d, noise_stream)
    if ledger is not None:
        ledger.record(delta.agent_id, delta.round, d)
    return delta.values + noise, noise


def bob_denoise(received, noise_vector) -> np.ndarray:
    received = np.asarray(received, dtype=float)
    noise_vector = np.asarray(noise_vector, dtype=float)
    if received.shape != noise_vector.shape:
        raise ConfigurationError("received signal and noise vector differ in length")
    return received - noise_vector
