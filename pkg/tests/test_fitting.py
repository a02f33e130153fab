"""Regression fits: power-law scaling and the sinusoidal loss-rate fit.

Oracle for the rate fit: a two-level cavity with prescribed rate
``Gamma(t) = A (sin(B t) + C)`` and initial population p0 has the exact
distance-to-vacuum history ``p0 * exp(-A (C t + (1 - cos(B t)) / B))``,
computed here directly from that formula.
"""
import numpy as np
import pytest

from dnmsim.dynamics import IntegrationConfig, evolve
from dnmsim.errors import FitError, ParameterError
from dnmsim.fitting import (
    DEFAULT_DECAY_BOUNDS,
    fit_decay_rate,
    fit_power_law,
)
from dnmsim.model import DecayRateModel, decay_master_equation


# ---------------------------------------------------------------------------
# power law


def test_power_law_recovers_exact_exponent():
    ns = np.array([1, 2, 3, 4, 5])
    values = 1.7 * ns**0.55
    fit = fit_power_law(ns, values)
    assert fit.k == pytest.approx(0.55, abs=1e-12)
    assert np.exp(fit.log_prefactor) == pytest.approx(1.7, abs=1e-12)
    assert fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert not fit.degenerate


def test_power_law_prefactor_scale_covariance():
    # scaling every response by c shifts only the prefactor, not the slope
    ns = np.array([1, 2, 4, 8])
    values = 2.0 * ns**0.8
    base = fit_power_law(ns, values)
    scaled = fit_power_law(ns, 3.5 * values)
    assert scaled.k == pytest.approx(base.k, abs=1e-12)
    assert scaled.log_prefactor - base.log_prefactor == pytest.approx(
        np.log(3.5), abs=1e-12
    )


def test_power_law_on_noisy_data_r_squared_below_one():
    rng = np.random.default_rng(79)
    ns = np.arange(1, 9)
    values = 2.0 * ns**0.5 * np.exp(rng.normal(scale=0.05, size=8))
    fit = fit_power_law(ns, values)
    assert 0.9 < fit.r_squared < 1.0
    assert fit.k == pytest.approx(0.5, abs=0.15)


def test_power_law_degenerate_constant_series():
    fit = fit_power_law([1, 2, 3], [4.0, 4.0, 4.0])
    assert fit.k == pytest.approx(0.0, abs=1e-12)
    assert fit.r_squared == 1.0
    assert fit.degenerate


def test_power_law_validation():
    with pytest.raises(FitError):
        fit_power_law([1, 2], [1.0, 2.0])  # too few points
    with pytest.raises(FitError):
        fit_power_law([1, 2, 3], [1.0, 0.0, 2.0])  # log of zero
    with pytest.raises(ParameterError):
        fit_power_law([0.5, 1, 2], [1.0, 2.0, 3.0])  # n below 1
    with pytest.raises(ParameterError):
        fit_power_law([2, 2, 2], [1.0, 2.0, 3.0])  # slope undefined
    with pytest.raises(ParameterError):
        fit_power_law([1, 2, 3], [1.0, 2.0])  # length mismatch


# ---------------------------------------------------------------------------
# sinusoidal loss-rate fit


def exact_distance(times, a, b, c, p0=1.0):
    """Hand-written closed form for the two-level prescribed-rate model."""
    integral = a * (c * times + (1.0 - np.cos(b * times)) / b)
    return p0 * np.exp(-integral)


def synthetic_target(a, b, c, t_max=700.0, spacing=0.1):
    times = np.arange(0.0, t_max + 0.5 * spacing, spacing)
    return times, exact_distance(times, a, b, c)


EXCITED = np.diag([0.0, 1.0]).astype(np.complex128)
FIT_CONFIG = IntegrationConfig(dt=0.01, t_max=700.0, record_every=10, steady_eps=None)


def test_rate_fit_inverts_synthetic_target():
    true = (0.05, 0.023, 0.09)
    times, target = synthetic_target(*true)
    fit = fit_decay_rate(times, target, EXCITED, FIT_CONFIG, grid_shape=(11, 81, 21))
    got = (fit.decay.A, fit.decay.B, fit.decay.C)
    for g, t in zip(got, true):
        assert g == pytest.approx(t, rel=0.05)
    assert fit.residual < 1e-6
    assert not fit.effectively_constant
    np.testing.assert_allclose(fit.model_d, target, atol=1e-3)


def test_rate_fit_closed_form_matches_integrator():
    # the two-level exact route and a numerically integrated three-level
    # run must tell the same story for a state confined to the lowest pair
    decay = DecayRateModel(0.04, 0.05, 0.5)
    times = np.arange(0.0, 100.05, 0.1)
    exact = exact_distance(times, 0.04, 0.05, 0.5)
    eq = decay_master_equation(decay, fock_dim=3)
    rho0 = np.diag([0.0, 1.0, 0.0]).astype(np.complex128)
    cfg = IntegrationConfig(dt=0.01, t_max=100.0, record_every=10, steady_eps=None)
    traj = evolve(rho0, eq, cfg, [], record_snapshots=True)
    from dnmsim.fitting import _vacuum_distance_series

    numeric = _vacuum_distance_series(traj.snapshots)
    assert numeric.shape == exact.shape
    assert np.max(np.abs(numeric - exact)) < 1e-9


def test_rate_fit_flags_constant_target():
    gamma = 0.011
    times = np.arange(0.0, 700.05, 0.1)
    target = np.exp(-gamma * times)
    fit = fit_decay_rate(times, target, EXCITED, FIT_CONFIG, grid_shape=(5, 9, 5))
    assert fit.effectively_constant
    assert fit.constant_rate == pytest.approx(gamma, rel=1e-3)
    assert fit.constant_residual < 1e-9


def test_rate_fit_never_returns_worse_than_best_seed():
    rng = np.random.default_rng(83)
    times, target = synthetic_target(0.032, 0.073, 0.41, t_max=300.0)
    target = target * np.exp(rng.normal(scale=0.01, size=target.size))
    # a deliberately coarse grid far from the optimum
    grid = (5, 5, 5)
    fit = fit_decay_rate(times, target, EXCITED,
                         IntegrationConfig(dt=0.01, t_max=300.0, record_every=10, steady_eps=None),
                         grid_shape=grid)
    axes = [np.linspace(lo, hi, s) for (lo, hi), s in zip(DEFAULT_DECAY_BOUNDS, grid)]
    best_seed = min(
        float(np.sum((exact_distance(times, a, b, c) - target) ** 2))
        for a in axes[0]
        for b in axes[1]
        for c in axes[2]
    )
    assert fit.residual <= best_seed + 1e-12
    assert fit.termination_reason in {
        "simplex_converged",
        "max_evaluations",
        "reverted_to_seed",
    }


def test_rate_fit_respects_bounds():
    times, target = synthetic_target(0.05, 0.023, 0.09, t_max=200.0)
    bounds = ((0.0, 0.5), (0.001, 0.2), (0.0, 2.0))
    fit = fit_decay_rate(
        times, target, EXCITED,
        IntegrationConfig(dt=0.01, t_max=200.0, record_every=10, steady_eps=None),
        bounds=bounds, grid_shape=(5, 9, 5),
    )
    for value, (lo, hi) in zip((fit.decay.A, fit.decay.B, fit.decay.C), bounds):
        assert lo - 1e-12 <= value <= hi + 1e-12


def test_rate_fit_validation():
    times, target = synthetic_target(0.05, 0.023, 0.09, t_max=10.0)
    cfg = IntegrationConfig(dt=0.01, t_max=10.0, record_every=10, steady_eps=None)
    with pytest.raises(ParameterError, match="t=0"):
        fit_decay_rate(times + 1.0, target, EXCITED, cfg)
    bad_times = times.copy()
    bad_times[3] += 0.01
    with pytest.raises(ParameterError, match="uniform"):
        fit_decay_rate(bad_times, target, EXCITED, cfg)
    with pytest.raises(ParameterError, match="divide"):
        fit_decay_rate(times, target, EXCITED,
                       IntegrationConfig(dt=0.03, t_max=10.0, steady_eps=None))
    with pytest.raises(ParameterError, match="bounds"):
        fit_decay_rate(times, target, EXCITED, cfg, bounds=((0.1, 0.1), (0.0, 1.0), (0.0, 1.0)))
    with pytest.raises(ParameterError, match="5x5x5"):
        fit_decay_rate(times, target, EXCITED, cfg, grid_shape=(3, 3, 3))
    with pytest.raises(ParameterError, match="1-d"):
        fit_decay_rate(times[:2], target[:2], EXCITED, cfg)


def test_rate_fit_worker_pool_matches_serial():
    times, target = synthetic_target(0.05, 0.023, 0.09, t_max=100.0)
    cfg = IntegrationConfig(dt=0.01, t_max=100.0, record_every=10, steady_eps=None)
    serial = fit_decay_rate(times, target, EXCITED, cfg, grid_shape=(5, 9, 5))
    pooled = fit_decay_rate(times, target, EXCITED, cfg, grid_shape=(5, 9, 5), workers=2)
    assert pooled.decay == serial.decay
    assert pooled.residual == serial.residual
