"""Model construction: Hamiltonian matrix elements, drive waveforms,
Lindblad right-hand side, and parameter validation.
"""
import warnings

import numpy as np
import pytest

from dnmsim.errors import ParameterError, ValidityWarning
from dnmsim.hilbert import SystemLayout, basis_state, basis_vector, build_operators
from dnmsim.model import (
    CavityDrive,
    DecayRateModel,
    ModelParams,
    QubitDrive,
    cavity_drive_amplitude,
    decay_master_equation,
    hamiltonian_at,
    hamiltonian_tc,
    lindblad_rhs,
    master_equation,
)


def two_qubit_setup(**kwargs):
    layout = SystemLayout(n_qubits=2, fock_dim=3)
    ops = build_operators(layout)
    params = ModelParams(g=0.05, **kwargs)
    return layout, ops, params


# ---------------------------------------------------------------------------
# static Hamiltonian


def test_static_hamiltonian_is_hermitian():
    _, ops, params = two_qubit_setup()
    h = hamiltonian_tc(params, ops)
    np.testing.assert_allclose(h, h.conj().T, atol=1e-14)


def test_static_hamiltonian_diagonal_energies():
    # diagonal of H0: omega_r * m + (omega_q/2) * (n_e - n_g)
    layout, ops, params = two_qubit_setup()
    h = hamiltonian_tc(params, ops)
    psi = basis_vector(layout, 2, "gg")
    assert abs(psi @ h @ psi - (2.0 * params.omega_r - params.omega_q)) < 1e-14
    psi = basis_vector(layout, 0, "eg")
    assert abs(psi @ h @ psi - 0.0) < 1e-14


def test_coupling_element_between_exchange_partners():
    # <0,e,g| H |1,g,g> = g from the sp a term
    layout, ops, params = two_qubit_setup()
    h = hamiltonian_tc(params, ops)
    bra = basis_vector(layout, 0, "eg")
    ket = basis_vector(layout, 1, "gg")
    assert abs(bra @ h @ ket - params.g) < 1e-14
    # two-photon element vanishes (excitation conserving)
    bra2 = basis_vector(layout, 2, "ee")
    assert abs(bra2 @ h @ ket) < 1e-14


def test_excitation_number_commutes_with_static_hamiltonian():
    layout, ops, params = two_qubit_setup()
    h = hamiltonian_tc(params, ops)
    n_tot = ops.n_cavity.copy()
    for sp, sm in zip(ops.sigma_plus, ops.sigma_minus):
        n_tot = n_tot + sp @ sm
    np.testing.assert_allclose(h @ n_tot, n_tot @ h, atol=1e-13)


def test_qubit_drive_commutes_with_excitation_number():
    layout, ops, _ = two_qubit_setup()
    params = ModelParams(g=0.05, drive_q=QubitDrive(amplitude=0.5, frequency=0.4))
    h = hamiltonian_at(1.3, params, ops)
    n_tot = ops.n_cavity.copy()
    for sp, sm in zip(ops.sigma_plus, ops.sigma_minus):
        n_tot = n_tot + sp @ sm
    np.testing.assert_allclose(h @ n_tot, n_tot @ h, atol=1e-13)


def test_time_dependent_hamiltonian_assembles_both_drives():
    layout, ops, _ = two_qubit_setup()
    params = ModelParams(
        g=0.05,
        drive_q=QubitDrive(amplitude=0.3, frequency=0.7),
        drive_c=CavityDrive(amplitude=0.2, frequency=0.5, waveform="sinusoid"),
    )
    t = 2.1
    h = hamiltonian_at(t, params, ops)
    want = hamiltonian_tc(params, ops)
    want = want + 0.3 * np.sin(0.7 * t) * (ops.sigma_z[0] + ops.sigma_z[1])
    want = want + 0.2 * np.sin(0.5 * t) * (ops.a + ops.a_dag)
    np.testing.assert_allclose(h, want, atol=1e-14)


# ---------------------------------------------------------------------------
# drive waveforms


def test_qubit_drive_coefficient_is_sine():
    d = QubitDrive(amplitude=0.5, frequency=2.0)
    t = np.linspace(0, 3, 7)
    np.testing.assert_allclose(d.coefficient(t), 0.5 * np.sin(2.0 * t), atol=1e-15)


def test_cavity_sinusoid_waveform():
    d = CavityDrive(amplitude=0.2, frequency=0.3, waveform="sinusoid")
    assert abs(d.coefficient(0.0)) < 1e-15
    assert abs(d.coefficient(1.0) - 0.2 * np.sin(0.3)) < 1e-15


def test_cavity_memristor_waveform_value_and_positivity():
    d = CavityDrive(amplitude=0.2, frequency=0.3, waveform="memristor")
    # at t=0: amplitude * (1 - sin(cos 0)) = amplitude * (1 - sin 1)
    assert abs(d.coefficient(0.0) - 0.2 * (1.0 - np.sin(1.0))) < 1e-15
    t = np.linspace(0, 2 * np.pi / 0.3, 500)
    vals = d.coefficient(t)
    assert np.all(vals > 0.0)
    # periodic with period 2 pi / frequency
    np.testing.assert_allclose(
        d.coefficient(t), d.coefficient(t + 2 * np.pi / 0.3), atol=1e-12
    )


def test_cavity_drive_amplitude_handles_absent_drive():
    t = np.linspace(0, 1, 5)
    np.testing.assert_array_equal(cavity_drive_amplitude(None, t), np.zeros(5))


def test_drive_validation():
    with pytest.raises(ParameterError):
        QubitDrive(amplitude=-0.1, frequency=1.0)
    with pytest.raises(ParameterError):
        CavityDrive(amplitude=0.1, frequency=1.0, waveform="triangle")


# ---------------------------------------------------------------------------
# parameters and validity warnings


def test_params_defaults():
    p = ModelParams(g=0.05)
    assert p.omega_r == 1.0 and p.omega_q == 1.0
    assert p.gamma_r == 0.005 and p.gamma_q == 0.005
    assert p.drive_q is None and p.drive_c is None


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(g=-0.1),
        dict(g=0.05, omega_r=0.0),
        dict(g=0.05, gamma_r=-1e-3),
        dict(g=0.05, gamma_q=-1e-3),
        dict(g=0.05, omega_q=-0.1),
    ],
)
def test_params_validation(kwargs):
    with pytest.raises(ParameterError):
        ModelParams(**kwargs)


def test_strong_coupling_warns():
    with pytest.warns(ValidityWarning, match="g/omega_r"):
        ModelParams(g=0.5)


def test_far_detuning_warns():
    with pytest.warns(ValidityWarning, match="omega_q/omega_r"):
        ModelParams(g=0.05, omega_q=0.2)


def test_moderate_detuning_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ModelParams(g=0.05, omega_q=0.5)  # inside the accepted window
        ModelParams(g=0.1)  # boundary coupling accepted


# ---------------------------------------------------------------------------
# master equation right-hand side


def test_rhs_is_trace_free_and_hermiticity_preserving():
    rng = np.random.default_rng(59)
    layout, ops, _ = two_qubit_setup()
    params = ModelParams(
        g=0.05,
        drive_q=QubitDrive(amplitude=0.5, frequency=0.4),
        drive_c=CavityDrive(amplitude=0.2, frequency=0.2, waveform="memristor"),
    )
    eq = master_equation(params, ops)
    r = rng.normal(size=(12, 12)) + 1j * rng.normal(size=(12, 12))
    rho = r @ r.conj().T
    rho = rho / np.trace(rho)
    out = eq.rhs(0.7, rho)
    assert abs(np.trace(out)) < 1e-14
    np.testing.assert_allclose(out, out.conj().T, atol=1e-13)


def test_rhs_matches_handwritten_lindblad_form():
    layout, ops, params = two_qubit_setup()
    rho = basis_state(layout, 1, "gg")
    t = 0.0
    h = hamiltonian_at(t, params, ops)
    want = -1j * (h @ rho - rho @ h)
    for j, rate in [(ops.a, params.gamma_r)] + [
        (sm, params.gamma_q) for sm in ops.sigma_minus
    ]:
        k = j.conj().T @ j
        want = want + rate * (j @ rho @ j.conj().T - 0.5 * (k @ rho + rho @ k))
    np.testing.assert_allclose(lindblad_rhs(t, rho, params, ops), want, atol=1e-14)


def test_photon_loss_drains_population_at_gamma_r():
    # d<N>/dt = -gamma_r <N> for the decoupled cavity with |1> occupied
    layout = SystemLayout(n_qubits=0, fock_dim=3)
    ops = build_operators(layout)
    params = ModelParams(g=0.0, gamma_r=0.01)
    eq = master_equation(params, ops)
    rho = basis_state(layout, 1, ())
    flux = np.trace(eq.rhs(0.0, rho) @ ops.n_cavity).real
    assert abs(flux + 0.01) < 1e-14


# ---------------------------------------------------------------------------
# prescribed-rate cavity equation


def test_decay_rate_model_waveform_and_validation():
    m = DecayRateModel(A=0.05, B=0.023, C=0.09)
    t = np.linspace(0, 10, 11)
    np.testing.assert_allclose(m.rate(t), 0.05 * (np.sin(0.023 * t) + 0.09), atol=1e-15)
    with pytest.raises(ParameterError):
        DecayRateModel(A=-0.1, B=0.1, C=0.0)
    with pytest.raises(ParameterError):
        DecayRateModel(A=0.1, B=-0.1, C=0.0)
    # negative offset C is allowed: the rate may dip negative
    assert DecayRateModel(A=0.1, B=0.1, C=-0.5).rate(0.0) < 0.0


def test_decay_master_equation_with_constant_rate():
    eq = decay_master_equation(0.02, fock_dim=3)
    assert eq.layout.total_dim == 3
    rho = np.diag([0.0, 1.0, 0.0]).astype(np.complex128)
    out = eq.rhs(0.0, rho)
    # population leaves |1> at rate gamma and arrives in |0>
    assert abs(out[1, 1].real + 0.02) < 1e-15
    assert abs(out[0, 0].real - 0.02) < 1e-15


def test_decay_master_equation_time_dependent_rate_enters_rhs():
    model = DecayRateModel(A=0.05, B=0.5, C=0.2)
    eq = decay_master_equation(model, fock_dim=2)
    rho = np.diag([0.0, 1.0]).astype(np.complex128)
    for t in (0.0, 1.0, 2.5):
        out = eq.rhs(t, rho)
        assert abs(out[1, 1].real + model.rate(t)) < 1e-15


def test_decay_master_equation_rejects_negative_constant():
    with pytest.raises(ParameterError):
        decay_master_equation(-0.01, fock_dim=2)
