"""Physical model: driven qubits coupled to a lossy cavity.

Units: hbar = 1 and frequencies are quoted in units of the cavity frequency
(so ``omega_r = 1.0`` is the default and times are in 1/omega_r).

The closed part is the excitation-conserving qubit-cavity Hamiltonian

    H0 = omega_r a^dag a + (omega_q/2) sum_j sz_j
         + g sum_j (sm_j a^dag + sp_j a),

optionally extended by a qubit frequency modulation
``amp_q * sin(mu_q t) * sum_j sz_j`` and a linear cavity drive
``F(t) (a + a^dag)``.  Dissipation is Lindblad-form photon loss at rate
``gamma_r`` and independent qubit decay at rate ``gamma_q``.

A reduced cavity-only equation with an externally prescribed, possibly
negative, time-dependent loss rate ``Gamma(t) = A (sin(B t) + C)`` is also
provided; it is integrated exactly as written, with no positivity fix-up.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import linalg
from .errors import ParameterError, ValidityWarning
from .hilbert import OperatorSet, SystemLayout, build_operators

__all__ = [
    "QubitDrive",
    "CavityDrive",
    "ModelParams",
    "DecayRateModel",
    "CAVITY_WAVEFORMS",
    "cavity_drive_amplitude",
    "hamiltonian_tc",
    "hamiltonian_at",
    "LinearTerm",
    "JumpTerm",
    "MasterEquation",
    "master_equation",
    "decay_master_equation",
    "lindblad_rhs",
    "lindblad_rhs_tdecay",
]

#: coupling beyond which the two-level/rotating-wave modelling is suspect
_G_REGIME = 0.1
#: relative qubit-cavity detuning beyond which a validity warning fires
_DETUNING_REGIME = 0.6

CAVITY_WAVEFORMS = ("sinusoid", "memristor")


@dataclass(frozen=True)
class QubitDrive:
    """Frequency modulation ``amplitude * sin(frequency * t)`` on every qubit's sz."""

    amplitude: float
    frequency: float

    def __post_init__(self):
        if self.amplitude < 0 or self.frequency < 0:
            raise ParameterError(
                f"qubit drive amplitude/frequency must be >= 0, got "
                f"({self.amplitude}, {self.frequency})"
            )

    def coefficient(self, t):
        """Vectorized drive coefficient multiplying sum_j sz_j."""
        return self.amplitude * np.sin(self.frequency * np.asarray(t, dtype=float))


@dataclass(frozen=True)
class CavityDrive:
    """Linear cavity drive ``F(t) (a + a^dag)``.

    ``waveform`` selects F:

    * ``"sinusoid"``  : F(t) = amplitude * sin(frequency * t)
    * ``"memristor"`` : F(t) = amplitude * (1 - sin(cos(frequency * t)))
      (strictly positive, period 2*pi/frequency)
    """

    amplitude: float
    frequency: float
    waveform: str = "sinusoid"

    def __post_init__(self):
        if self.amplitude < 0 or self.frequency < 0:
            raise ParameterError(
                f"cavity drive amplitude/frequency must be >= 0, got "
                f"({self.amplitude}, {self.frequency})"
            )
        if self.waveform not in CAVITY_WAVEFORMS:
            raise ParameterError(
                f"unknown cavity waveform {self.waveform!r}; "
                f"choose from {CAVITY_WAVEFORMS}"
            )

    def coefficient(self, t):
        """Vectorized F(t)."""
        t = np.asarray(t, dtype=float)
        if self.waveform == "sinusoid":
            return self.amplitude * np.sin(self.frequency * t)
        return self.amplitude * (1.0 - np.sin(np.cos(self.frequency * t)))


def cavity_drive_amplitude(drive: Optional[CavityDrive], t):
    """F(t) for an optional drive (0 when absent)."""
    if drive is None:
        return np.zeros_like(np.asarray(t, dtype=float))
    return drive.coefficient(t)


@dataclass(frozen=True)
class ModelParams:
    """All physical parameters of the driven dissipative model."""

    g: float
    omega_r: float = 1.0
    omega_q: float = 1.0
    gamma_r: float = 0.005
    gamma_q: float = 0.005
    drive_q: Optional[QubitDrive] = None
    drive_c: Optional[CavityDrive] = None

    def __post_init__(self):
        if self.omega_r <= 0:
            raise ParameterError(f"omega_r must be > 0, got {self.omega_r}")
        if self.g < 0:
            raise ParameterError(f"g must be >= 0, got {self.g}")
        for name in ("gamma_r", "gamma_q"):
            v = getattr(self, name)
            if v < 0:
                raise ParameterError(f"{name} must be >= 0, got {v}")
        if self.omega_q < 0:
            raise ParameterError(f"omega_q must be >= 0, got {self.omega_q}")
        if self.g / self.omega_r > _G_REGIME + 1e-12:
            warnings.warn(
                f"g/omega_r = {self.g / self.omega_r:.3g} exceeds {_G_REGIME}; "
                "the excitation-conserving coupling is unreliable this strong",
                ValidityWarning,
                stacklevel=2,
            )
        if abs(self.omega_q / self.omega_r - 1.0) >= _DETUNING_REGIME:
            warnings.warn(
                f"omega_q/omega_r = {self.omega_q / self.omega_r:.3g} is far "
                "from 1; the two-level reduction assumes near-resonant qubits",
                ValidityWarning,
                stacklevel=2,
            )


@dataclass(frozen=True)
class DecayRateModel:
    """Sinusoidal effective loss rate ``Gamma(t) = A (sin(B t) + C)``.

    ``C < 1`` makes the rate periodically negative; that is intentional and
    the equation using it is integrated without any positivity projection.
    """

    A: float
    B: float
    C: float

    def __post_init__(self):
        if self.A < 0:
            raise ParameterError(f"A must be >= 0, got {self.A}")
        if self.B < 0:
            raise ParameterError(f"B must be >= 0, got {self.B}")

    def rate(self, t):
        """Vectorized Gamma(t)."""
        return self.A * (np.sin(self.B * np.asarray(t, dtype=float)) + self.C)


def hamiltonian_tc(params: ModelParams, ops: OperatorSet) -> np.ndarray:
    """Static qubit-cavity Hamiltonian (no drives)."""
    h = params.omega_r * ops.n_cavity.copy()
    for sz in ops.sigma_z:
        h = h + 0.5 * params.omega_q * sz
    for sm, sp in zip(ops.sigma_minus, ops.sigma_plus):
        h = h + params.g * (sm @ ops.a_dag + sp @ ops.a)
    return h


def hamiltonian_at(t: float, params: ModelParams, ops: OperatorSet) -> np.ndarray:
    """Full Hamiltonian at time t, drives included."""
    h = hamiltonian_tc(params, ops)
    if params.drive_q is not None and ops.sigma_z:
        sz_sum = sum(ops.sigma_z)
        h = h + float(params.drive_q.coefficient(t)) * sz_sum
    if params.drive_c is not None:
        h = h + float(params.drive_c.coefficient(t)) * (ops.a + ops.a_dag)
    return h


@dataclass(frozen=True)
class LinearTerm:
    """A Hamiltonian term ``coefficient(t) * matrix`` (coefficient real)."""

    matrix: np.ndarray
    coefficient: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class JumpTerm:
    """One Lindblad channel: operator J and a constant or time-dependent rate.

    ``structure`` optionally names the tensor-factor locality of J so the
    integrator may apply the sandwich term without full matrix products:
    ``("cavity_lower",)`` for the photon annihilator or
    ``("qubit_lower", j)`` for the lowering operator of qubit ``j``.
    """

    operator: np.ndarray
    rate: float | Callable[[np.ndarray], np.ndarray]
    structure: tuple | None = None

    @property
    def is_static(self) -> bool:
        return not callable(self.rate)

    def rate_at(self, t):
        if self.is_static:
            return np.full_like(np.asarray(t, dtype=float), float(self.rate))
        return self.rate(t)


@dataclass(frozen=True)
class MasterEquation:
    """Lindblad generator split into static and time-modulated pieces.

    ``rhs`` is the readable reference evaluation; the integrator compiles the
    same structure into a faster representation.
    """

    h_static: np.ndarray
    h_terms: tuple
    jumps: tuple
    layout: SystemLayout

    def hamiltonian(self, t: float) -> np.ndarray:
        h = self.h_static
        for term in self.h_terms:
            h = h + float(term.coefficient(t)) * term.matrix
        return h

    def rhs(self, t: float, rho: np.ndarray) -> np.ndarray:
        """d(rho)/dt at time t: commutator plus Lindblad dissipators."""
        h = self.hamiltonian(t)
        out = -1j * (h @ rho - rho @ h)
        for jump in self.jumps:
            j = jump.operator
            k = linalg.dag(j) @ j
            gamma = float(jump.rate_at(np.asarray(t, dtype=float)))
            out = out + gamma * (
                j @ rho @ linalg.dag(j) - 0.5 * (k @ rho + rho @ k)
            )
        return out


def master_equation(params: ModelParams, ops: OperatorSet) -> MasterEquation:
    """Build the driven dissipative model on the given operator set."""
    h_terms = []
    if params.drive_q is not None and ops.sigma_z:
        sz_sum = np.zeros_like(ops.n_cavity)
        for sz in ops.sigma_z:
            sz_sum = sz_sum + sz
        h_terms.append(LinearTerm(sz_sum, params.drive_q.coefficient))
    if params.drive_c is not None:
        h_terms.append(LinearTerm(ops.a + ops.a_dag, params.drive_c.coefficient))
    jumps = [JumpTerm(ops.a, params.gamma_r, structure=("cavity_lower",))]
    jumps += [
        JumpTerm(sm, params.gamma_q, structure=("qubit_lower", j))
        for j, sm in enumerate(ops.sigma_minus)
    ]
    return MasterEquation(
        h_static=hamiltonian_tc(params, ops),
        h_terms=tuple(h_terms),
        jumps=tuple(jumps),
        layout=ops.layout,
    )


def decay_master_equation(
    decay: "DecayRateModel | float",
    fock_dim: int,
    omega_r: float = 1.0,
    dim_cap: int = 4096,
) -> MasterEquation:
    """Cavity-only equation with the prescribed loss rate.

    ``decay`` is either a :class:`DecayRateModel` (time-dependent rate,
    possibly transiently negative) or a plain non-negative constant rate.
    """
    layout = SystemLayout(n_qubits=0, fock_dim=fock_dim, dim_cap=dim_cap)
    ops = build_operators(layout)
    if isinstance(decay, DecayRateModel):
        rate = decay.rate
    else:
        rate = float(decay)
        if rate < 0.0:
            raise ParameterError(f"constant loss rate must be >= 0, got {rate}")
    return MasterEquation(
        h_static=omega_r * ops.n_cavity,
        h_terms=(),
        jumps=(JumpTerm(ops.a, rate, structure=("cavity_lower",)),),
        layout=layout,
    )


def lindblad_rhs(
    t: float, rho: np.ndarray, params: ModelParams, ops: OperatorSet
) -> np.ndarray:
    """Right-hand side of the full model at time t (reference evaluation)."""
    return master_equation(params, ops).rhs(t, rho)


def lindblad_rhs_tdecay(
    t: float,
    rho: np.ndarray,
    decay: DecayRateModel,
    fock_dim: int,
    omega_r: float = 1.0,
) -> np.ndarray:
    """Right-hand side of the cavity-only time-dependent-rate equation."""
    return decay_master_equation(decay, fock_dim, omega_r).rhs(t, rho)
