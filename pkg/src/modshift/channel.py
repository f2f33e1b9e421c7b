"""Flat-fading AWGN links to the server and the eavesdropper, plus the secret side channel.

Each link adds real white Gaussian noise with per-entry variance ``sigma^2 / h^2``.
The side channel is ideal; only the number of scalars it carries is recorded.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, UsageError
from .shiftdesign import ShiftedDelta

RECEIVERS = ("bob", "eve")


@dataclass(frozen=True)
class ChannelParams:
    h: float = 1.0
    sigma: float = 0.0
    receiver: str = "bob"

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigurationError("channel gain h must be positive")
        if not self.sigma >= 0:
            raise ConfigurationError("noise level sigma must be non-negative")
        if self.receiver not in RECEIVERS:
            raise ConfigurationError(f"receiver must be one of {RECEIVERS}")

    @classmethod
    def from_noise_var(cls, noise_var: float, receiver: str = "bob", h: float = 1.0):
        """Parameters giving an effective per-entry variance ``noise_var``."""
        if noise_var < 0:
            raise ConfigurationError("noise variance must be non-negative")
        return cls(h=h, sigma=h * float(np.sqrt(noise_var)), receiver=receiver)

    @property
    def noise_var(self) -> float:
        return (self.sigma / self.h) ** 2


@dataclass
class SecretLedger:
    """Counts scalars sent over the secret channel, per (round, agent)."""

    counts: dict = field(default_factory=lambda: defaultdict(int))
    _by_round: dict = field(default_factory=lambda: defaultdict(int), repr=False)

    def record(self, agent_id: int, round: int, n_scalars: int) -> None:
        self.counts[(round, agent_id)] += int(n_scalars)
        self._by_round[round] += int(n_scalars)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def round_total(self, round: int) -> int:
        return self._by_round.get(round, 0)

    def agent_total(self, agent_id: int) -> int:
        return sum(v for (_, a), v in self.counts.items() if a == agent_id)


def transmit(payload, params: ChannelParams, noise_stream: np.random.Generator | None) -> np.ndarray:
    payload = np.asarray(payload, dtype=float)
    if not np.all(np.isfinite(payload)):
        raise ConfigurationError("payload has non-finite entries")
    if params.sigma == 0:
        return payload.copy()
    return payload + noise_stream.normal(0.0, params.sigma / params.h, size=payload.shape)


def eve_observe(shifted: ShiftedDelta, params: ChannelParams, noise_stream) -> np.ndarray:
    if params.receiver != "eve":
        raise UsageError("eve_observe needs eavesdropper channel parameters")
    return transmit(shifted.values, params, noise_stream)


def bob_receive_and_compensate(
    shifted: ShiftedDelta,
    shift_scalar_from_secret_channel: float,
    params: ChannelParams,
    noise_stream,
    ledger: SecretLedger | None = None,
) -> np.ndarray:
    """Server side: receive the shifted delta, then subtract the secret scalar."""
    if params.receiver != "bob":
        raise UsageError("bob_receive_and_compensate needs server channel parameters")
    received = transmit(shifted.values, params, noise_stream)
    if ledger is not None:
        ledger.record(shifted.agent_id, shifted.round, 1)
    return received - shift_scalar_from_secret_channel
