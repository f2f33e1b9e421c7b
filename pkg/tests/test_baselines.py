import numpy as np
import pytest

from modshift.baselines import InjectionConfig, bob_denoise, inject
from modshift.channel import ChannelParams, SecretLedger, transmit
from modshift.errors import ConfigurationError
from modshift.fedcore import Delta
from modshift.rng import derive_stream


def test_zero_variance_is_identity():
    dl = Delta([1.0, -2.0, 3.0], 0)
    perturbed, noise = inject(dl, InjectionConfig.gaussian(0.0), derive_stream(0, "inject"))
    assert np.array_equal(perturbed, dl.values) and not noise.any()


def test_gaussian_variance():
    dl = Delta(np.zeros(100_000), 0)
    _, noise = inject(dl, InjectionConfig.gaussian(1.0), derive_stream(1, "inject"))
    assert noise.var() == pytest.approx(1.0, rel=0.03)
    assert abs(noise.mean()) < 4 / np.sqrt(100_000)


def test_laplace_variance():
    dl = Delta(np.zeros(100_000), 0)
    _, noise = inject(dl, InjectionConfig.laplace(1.0), derive_stream(2, "inject"))
    assert noise.var() == pytest.approx(2.0, rel=0.05)


def test_laplace_takes_squared_scale():
    cfg = InjectionConfig.laplace(0.1)
    assert cfg.lam == pytest.approx(np.sqrt(0.1))
    assert cfg.entry_variance == pytest.approx(0.2)


def test_ledger_charges_d():
    ledger = SecretLedger()
    inject(Delta(np.zeros(60), 4, 2), InjectionConfig.gaussian(1.0), derive_stream(3, "inject"), ledger)
    assert ledger.total == 60 and ledger.counts[(2, 4)] == 60


def test_denoise_noiseless_recovers_delta():
    dl = Delta([0.5, 1.5, -2.0], 0)
    perturbed, noise = inject(dl, InjectionConfig.laplace(1.0), derive_stream(4, "inject"))
    received = transmit(perturbed, ChannelParams(), None)
    assert np.allclose(bob_denoise(received, noise), dl.values, rtol=0, atol=1e-15)


def test_denoise_zero_noise_is_identity():
    assert np.array_equal(bob_denoise([1.0, 2.0], [0.0, 0.0]), [1.0, 2.0])


def test_denoise_matches_unperturbed_channel():
    dl = Delta(np.linspace(-1, 1, 8), 0)
    params = ChannelParams.from_noise_var(0.1)
    perturbed, noise = inject(dl, InjectionConfig.gaussian(1.0), derive_stream(5, "inject"))
    out = bob_denoise(transmit(perturbed, params, derive_stream(5, "bob")), noise)
    ref = transmit(dl.values, params, derive_stream(5, "bob"))
    assert np.max(np.abs(out - ref)) <= 1e-12


def test_perturbation_energy():
    """Average |noise|^2 per round is d beta^2 (Gaussian) or 2 d lambda^2 (Laplace)."""
    d, rounds = 60, 400
    for cfg, expected in ((InjectionConfig.gaussian(0.1), d * 0.1), (InjectionConfig.laplace(1.0), 2 * d)):
        energies = [
            np.sum(inject(Delta(np.zeros(d), 0, n), cfg, derive_stream(6, "inject", n))[1] ** 2)
            for n in range(rounds)
        ]
        assert np.mean(energies) == pytest.approx(expected, rel=0.05)


def test_mismatch_and_validation():
    with pytest.raises(ConfigurationError):
        bob_denoise([1.0], [1.0, 2.0])
    with pytest.raises(ConfigurationError):
        InjectionConfig("uniform")
    with pytest.raises(ConfigurationError):
        InjectionConfig.laplace(-1.0)
