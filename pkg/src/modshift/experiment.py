"""End-to-end simulation: synthetic regression data, rounds, traces and summaries.

The default configuration is the synthetic linear regression setup: d=60,
K=100 agents with 1000 samples each, ramp ground truth ``w* = [1, ..., d]``,
label noise 0.1, effective channel noise variance 0.1, eta=0.005, R=10 and both
parties starting from the zero model.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import rng
from .adversary import TamperBoundInputs, alpha, eve_update, initial_state, tamper_bound, tamper_test
from .baselines import InjectionConfig, bob_denoise, inject
from .channel import ChannelParams, SecretLedger, bob_receive_and_compensate, eve_observe, transmit
from .errors import ConfigurationError, DivergenceError, ProtocolError
from .fedcore import (
    Delta,
    LocalDataset,
    TrainConfig,
    aggregate,
    compute_delta,
    local_descent,
    QuadraticLoss,
    pool_datasets,
)
from .shiftdesign import ShiftScheme, apply_shift, make_gamma, random_valid_gamma

logger = logging.getLogger(__name__)

TRACE_HEADER = (
    "round",
    "loss_bob",
    "loss_eve",
    "shift_vs_bob",
    "shift_vs_wstar",
    "bob_update_norm",
    "eve_update_norm",
    "tamper_bound",
    "tamper_pass",
    "alpha",
    "secret_scalars",
)

# Bob's physically simulated (shift, noise, compensate) signal must match the
# mechanism-free reference to this absolute level, scaled by the payload size.
COMPENSATION_TOL = 1e-12

# flat JSON key -> dataclass field
_KEY_ALIASES = {
    "baseline.kind": "baseline_kind",
    "baseline.beta_sq": "beta_sq",
    "baseline.lambda_sq": "lambda_sq",
}


@dataclass
class ExperimentConfig:
    d: int = 60
    K: int = 100
    m_k: int = 1000
    w_star: object = "ramp"
    label_noise_std: float = 0.1
    channel_noise_var: float = 0.1
    eta: float = 0.005
    R: int = 10
    rounds: int = 200
    scheme: str = "none"
    custom_gamma: object = None
    baseline_kind: Optional[str] = None
    beta_sq: Optional[float] = None
    lambda_sq: Optional[float] = None
    master_seed: int = 0
    heterogeneity: float = 0.0
    trace_path: Optional[str] = None
    summary_path: Optional[str] = None

    def __post_init__(self):
        if self.d < 2:
            raise ConfigurationError("d must be >= 2")
        if self.K < 1 or self.m_k < 1 or self.R < 1 or self.rounds < 1:
            raise ConfigurationError("K, m_k, R and rounds must be >= 1")
        if not self.eta > 0:
            raise ConfigurationError("eta must be positive")
        if self.label_noise_std < 0 or self.channel_noise_var < 0 or self.heterogeneity < 0:
            raise ConfigurationError("noise levels must be non-negative")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")
        self.scheme = str(self.scheme).lower()
        if self.scheme != "none" and self.baseline_kind is not None:
            raise ConfigurationError("choose one privacy mechanism: a shift scheme or a noise baseline")
        if isinstance(self.w_star, str) and self.w_star != "ramp":
            raise ConfigurationError("w_star must be 'ramp' or a vector of length d")
        if not isinstance(self.w_star, str) and len(self.w_star) != self.d:
            raise ConfigurationError("w_star vector must have length d")
        if self.scheme == "custom" and self.custom_gamma is None:
            raise ConfigurationError("scheme 'custom' needs custom_gamma")
        # fail early on bad scheme / baseline parameters
        self.shift_scheme()
        self.injection()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, value in data.items():
            name = _KEY_ALIASES.get(key, key)
            if name not in known:
                raise ConfigurationError(f"unknown config key {key!r}")
            kwargs[name] = value
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigurationError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        inverse = {v: k for k, v in _KEY_ALIASES.items()}
        out = {}
        for key, value in asdict(self).items():
            if isinstance(value, np.ndarray):
                value = value.tolist()
            out[inverse.get(key, key)] = value
        return out

    def replace(self, **changes) -> "ExperimentConfig":
        data = asdict(self)
        data.update(changes)
        return ExperimentConfig(**data)

    def w_star_vector(self) -> np.ndarray:
        if isinstance(self.w_star, str):
            return np.arange(1.0, self.d + 1.0)
        return np.asarray(self.w_star, dtype=float)

    def shift_scheme(self) -> ShiftScheme:
        gamma = self.custom_gamma
        if isinstance(gamma, str):
            if gamma != "random":
                raise ConfigurationError("custom_gamma must be a vector, a (K, d) array or 'random'")
            g_rng = rng.derive_stream(self.master_seed, rng.GAMMA)
            gamma = np.array([random_valid_gamma(g_rng, self.d) for _ in range(self.K)])
        return ShiftScheme(self.scheme, gamma)

    def injection(self) -> Optional[InjectionConfig]:
        kind = self.baseline_kind
        if kind is None:
            return None
        kind = kind.lower()
        if kind == "gaussian":
            if self.beta_sq is None:
                raise ConfigurationError("gaussian baseline needs baseline.beta_sq")
            return InjectionConfig.gaussian(self.beta_sq)
        if kind == "laplace":
            if self.lambda_sq is None:
                raise ConfigurationError("laplace baseline needs baseline.lambda_sq")
            return InjectionConfig.laplace(self.lambda_sq)
        raise ConfigurationError(f"unknown baseline kind {kind!r}")

    @property
    def mechanism(self) -> str:
        inj = self.injection()
        return inj.label if inj is not None else self.scheme


@dataclass
class RoundTrace:
    round: int
    loss_bob: float
    loss_eve: float
    shift_vs_bob: float
    shift_vs_wstar: float
    bob_update_norm: float
    eve_update_norm: float
    tamper_bound: float
    tamper_pass: bool
    alpha: float
    secret_scalars: int
    homogeneous: bool = field(default=True, repr=False)

    def row(self) -> list:
        return [getattr(self, name) for name in TRACE_HEADER]


def generate_agent_data(cfg: ExperimentConfig, agent_id: int) -> LocalDataset:
    stream = rng.derive_stream(cfg.master_seed, rng.DATA, 0, agent_id)
    X = stream.standard_normal((cfg.m_k, cfg.d))
    w = cfg.w_star_vector()
    if cfg.heterogeneity > 0:
        w = w + cfg.heterogeneity * stream.standard_normal(cfg.d)
    y = X @ w
    if cfg.label_noise_std > 0:
        y = y + stream.normal(0.0, cfg.label_noise_std, size=cfg.m_k)
    return LocalDataset(X, y, agent_id)


def generate_data(cfg: ExperimentConfig) -> list[LocalDataset]:
    """K IID Gaussian-feature regression datasets, one stream per agent."""
    return [generate_agent_data(cfg, k) for k in range(cfg.K)]


def _stream(cfg, label, n, k, params):
    return rng.derive_stream(cfg.master_seed, label, n, k) if params.sigma > 0 else None


def run_experiment(cfg: ExperimentConfig, datasets: Sequence[LocalDataset] | None = None, transcript: list | None = None):
    """Run ``cfg.rounds`` rounds and return ``(traces, summary)``.

    Bob's model update uses the compensated signal, which equals the
    mechanism-free channel output; the physically simulated shift / inject,
    channel and compensate path is computed alongside and its deviation from
    that reference is reported as ``max_compensation_residual``.

    If ``transcript`` is a list, one dict per round is appended with the models
    before and after the round and every received signal.
    """
    if datasets is None:
        datasets = generate_data(cfg)
    datasets = sorted(datasets, key=lambda ds: ds.agent_id)
    if [ds.agent_id for ds in datasets] != list(range(len(datasets))):
        raise ProtocolError("datasets must carry agent ids 0..K-1")
    d = datasets[0].dim
    w_star = cfg.w_star_vector()
    train = TrainConfig.from_datasets(datasets, cfg.eta, cfg.R, cfg.rounds)
    weights = train.agent_weights
    bob_ch = ChannelParams.from_noise_var(cfg.channel_noise_var, "bob")
    eve_ch = ChannelParams.from_noise_var(cfg.channel_noise_var, "eve")
    scheme = cfg.shift_scheme()
    injection = cfg.injection()
    ledger = SecretLedger()
    loss = QuadraticLoss(pool_datasets(datasets))

    w_bob = np.zeros(d)
    eve = initial_state(np.zeros(d))
    traces: list[RoundTrace] = []
    max_residual = 0.0

    for n in range(1, cfg.rounds + 1):
        deltas, bob_in, eve_in, gammas = [], [], [], []
        for ds in datasets:
            k = ds.agent_id
            delta = compute_delta(local_descent(w_bob, ds, train, round=n), w_bob, k, n)
            bob_ref = transmit(delta.values, bob_ch, _stream(cfg, rng.BOB, n, k, bob_ch))
            eve_stream = _stream(cfg, rng.EVE, n, k, eve_ch)
            if scheme.active:
                gamma = make_gamma(scheme, delta)
                shifted = apply_shift(delta, gamma)
                eve_obs = eve_observe(shifted, eve_ch, eve_stream)
                bob_phys = bob_receive_and_compensate(
                    shifted, shifted.shift_scalar, bob_ch, _stream(cfg, rng.BOB, n, k, bob_ch), ledger
                )
                payload = shifted.values
            elif injection is not None:
                gamma = np.zeros(d)
                perturbed, noise = inject(delta, injection, rng.derive_stream(cfg.master_seed, rng.INJECT, n, k), ledger)
                eve_obs = transmit(perturbed, eve_ch, eve_stream)
                bob_phys = bob_denoise(transmit(perturbed, bob_ch, _stream(cfg, rng.BOB, n, k, bob_ch)), noise)
                payload = perturbed
            else:
                gamma = np.zeros(d)
                eve_obs = transmit(delta.values, eve_ch, eve_stream)
                bob_phys = bob_ref
                payload = delta.values
            scale = max(1.0, float(np.max(np.abs(payload))), float(np.max(np.abs(bob_ref))))
            max_residual = max(max_residual, float(np.max(np.abs(bob_phys - bob_ref))) / scale)
            deltas.append(delta)
            bob_in.append(Delta(bob_ref, k, n))
            eve_in.append(eve_obs)
            gammas.append(gamma)

        with np.errstate(over="ignore", invalid="ignore"):
            w_next = aggregate(w_bob, bob_in, weights)
        eps = float(np.linalg.norm(w_next - w_bob))
        if not (np.isfinite(w_next).all() and math.isfinite(eps)):
            raise DivergenceError("server model is not finite", round=n)
        eve_prev = eve.w_eve
        eve = eve_update(eve, eve_in, weights)
        if transcript is not None:
            transcript.append(
                {
                    "round": n,
                    "w_bob": w_bob,
                    "w_bob_next": w_next,
                    "w_eve": eve_prev,
                    "w_eve_next": eve.w_eve,
                    "bob_received": [dl.values for dl in bob_in],
                    "eve_received": eve_in,
                    "deltas": [dl.values for dl in deltas],
                    "gammas": gammas,
                }
            )
        w_bob = w_next

        homogeneous = all(np.array_equal(gammas[0], g) for g in gammas[1:])
        a = alpha(deltas, weights)
        bound = tamper_bound(
            TamperBoundInputs(eps, [float(np.linalg.norm(g)) for g in gammas], a, homogeneous), d
        )
        passed = tamper_test(eve.history[-1], bound)
        eve.tamper_flags.append(passed)

        traces.append(
            RoundTrace(
                round=n,
                loss_bob=loss(w_bob),
                loss_eve=loss(eve.w_eve),
                shift_vs_bob=float(np.linalg.norm(eve.w_eve - w_bob)),
                shift_vs_wstar=float(np.linalg.norm(eve.w_eve - w_star)),
                bob_update_norm=eps,
                eve_update_norm=eve.history[-1],
                tamper_bound=bound,
                tamper_pass=passed,
                alpha=a,
                secret_scalars=ledger.round_total(n),
                homogeneous=homogeneous,
            )
        )

    if max_residual > COMPENSATION_TOL:
        raise ProtocolError(f"compensation at the server left a residual of {max_residual:.3e}")

    last = traces[-1]
    summary = {
        "mechanism": cfg.mechanism,
        "master_seed": cfg.master_seed,
        "rounds": cfg.rounds,
        "final_loss_bob": last.loss_bob,
        "final_loss_eve": last.loss_eve,
        "final_shift_vs_bob": last.shift_vs_bob,
        "final_shift_vs_wstar": last.shift_vs_wstar,
        "ledger_total": ledger.total,
        "tamper_pass_rate": sum(t.tamper_pass for t in traces) / len(traces),
        "homogeneous_gamma_rounds": sum(t.homogeneous for t in traces),
        "max_compensation_residual": max_residual,
        "w_bob": w_bob.tolist(),
        "w_eve": eve.w_eve.tolist(),
        "config": cfg.to_dict(),
    }
    logger.info(
        "%s seed=%d: loss bob %.4g eve %.4g, shift %.4g",
        cfg.mechanism, cfg.master_seed, last.loss_bob, last.loss_eve, last.shift_vs_bob,
    )
    return traces, summary


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def traces_to_csv(traces: Sequence[RoundTrace]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for t in traces:
        writer.writerow([_fmt(v) for v in t.row()])
    return buf.getvalue()


def write_trace(traces: Sequence[RoundTrace], path) -> None:
    Path(path).write_text(traces_to_csv(traces))


def read_trace(path) -> list[dict]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = []
    for row in rows:
        parsed = {}
        for key, value in row.items():
            parsed[key] = int(value) if key in ("round", "tamper_pass", "secret_scalars") else float(value)
        out.append(parsed)
    return out


def write_summary(summary: dict, path) -> None:
    Path(path).write_text(json.dumps(summary, indent=2, sort_keys=True, allow_nan=True) + "\n")


def mean_traces(runs: Sequence[Sequence[RoundTrace]]) -> list[dict]:
    """Per-round averages over repeats; ``tamper_pass`` becomes a pass fraction."""
    out = []
    for rows in zip(*runs):
        avg = {"round": rows[0].round}
        for name in TRACE_HEADER[1:]:
            vals = [float(getattr(r, name)) for r in rows]
            avg[name] = math.fsum(vals) / len(vals)
        out.append(avg)
    return out


def run_repeats(cfg: ExperimentConfig, repeats: int = 1):
    """Independent runs with seeds ``master_seed, master_seed + 1, ...``."""
    return [run_experiment(cfg.replace(master_seed=cfg.master_seed + i)) for i in range(repeats)]


def fig2_grid(base: ExperimentConfig) -> dict[str, ExperimentConfig]:
    """Shift (max) against Gaussian and Laplace injection at 0.1 and 1, plus no privacy."""
    plain = base.replace(scheme="none", custom_gamma=None, baseline_kind=None, beta_sq=None, lambda_sq=None)
    return {
        "max": plain.replace(scheme="max"),
        "gaussian_1": plain.replace(baseline_kind="gaussian", beta_sq=1.0),
        "laplace_1": plain.replace(baseline_kind="laplace", lambda_sq=1.0),
        "gaussian_0.1": plain.replace(baseline_kind="gaussian", beta_sq=0.1),
        "laplace_0.1": plain.replace(baseline_kind="laplace", lambda_sq=0.1),
        "none": plain,
    }


def fig3_grid(base: ExperimentConfig) -> dict[str, ExperimentConfig]:
    plain = base.replace(scheme="none", custom_gamma=None, baseline_kind=None, beta_sq=None, lambda_sq=None)
    return {
        "max": plain.replace(scheme="max"),
        "mean": plain.replace(scheme="mean"),
        "comp": plain.replace(scheme="comp"),
        "none": plain,
    }


def run_grid(grid: dict[str, ExperimentConfig], repeats: int = 1, out_dir=None) -> dict:
    """Run every grid entry for ``repeats`` seeds, sharing data across entries per seed.

    Returns ``{label: {"summaries": [...], "traces": [[RoundTrace, ...], ...]}}``.
    """
    results = {label: {"summaries": [], "traces": []} for label in grid}
    first = next(iter(grid.values()))
    for i in range(repeats):
        seed = first.master_seed + i
        datasets = generate_data(first.replace(master_seed=seed))
        for label, cfg in grid.items():
            traces, summary = run_experiment(cfg.replace(master_seed=seed), datasets)
            results[label]["summaries"].append(summary)
            results[label]["traces"].append(traces)
            if out_dir is not None:
                write_trace(traces, Path(out_dir) / f"{label}_seed{seed}.csv")
    return results


def grid_table(results: dict) -> dict:
    """Mean final metrics per grid entry."""
    table = {}
    for label, res in results.items():
        sums = res["summaries"]
        table[label] = {
            key: float(np.mean([s[key] for s in sums]))
            for key in (
                "final_loss_bob",
                "final_loss_eve",
                "final_shift_vs_bob",
                "final_shift_vs_wstar",
                "ledger_total",
                "tamper_pass_rate",
            )
        }
        table[label]["repeats"] = len(sums)
    return table
