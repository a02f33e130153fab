"""State functionals: distance to the steady state, memory measure,
and the memristive input/output pair.

The memory measure integrates the positive part of the time derivative of
the trace distance between the reduced cavity state and the vacuum (the
unique steady state of the undriven lossy model).  On a sampled series this
is the sum of positive increments.

The memristive pair is built so that the exact bookkeeping identity

    O(t) = F(t) * I(t) + G(t)

holds pointwise along any trajectory of the driven model when
``alpha = gamma_r``:

* ``I = <i(a - a^dag)>`` (the cavity quadrature conjugate to the drive),
* ``O = d<N>/dt + alpha <N>`` with the flux evaluated exactly from the
  master-equation right-hand side (no finite differences),
* ``G = g sum_j <i(sp_j a - sm_j a^dag)>`` (coherent qubit-cavity exchange).

The identity follows from d<N>/dt = <i [H, N]> plus the loss term; it holds
at any Fock truncation because the truncated ladder operators still satisfy
[N, a] = -a and [N, a^dag] = a^dag exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatchError, ParameterError
from .hilbert import OperatorSet
from .model import ModelParams, cavity_drive_amplitude

__all__ = [
    "trace_distance",
    "trace_distance_to_vacuum",
    "dnm",
    "DnmResult",
    "MemristorRecord",
    "memristor_observables",
    "real_expectation",
    "exchange_operator",
    "pinch_metric",
    "loop_area",
]

#: largest imaginary part tolerated when an observable must be real
REAL_TOL = 1e-9


def real_expectation(operator: np.ndarray, rho: np.ndarray, what: str = "expectation") -> float:
    """``Tr[op rho]`` validated to be real within ``REAL_TOL``."""
    z = linalg.expectation(operator, rho)
    if abs(z.imag) > REAL_TOL:
        raise DimensionMismatchError(
            f"{what} should be real, got imaginary part {z.imag:.3e}"
        )
    return z.real


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Trace distance ``0.5 * sum |eig(rho - sigma)|`` between two states."""
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatchError(
            f"states have different shapes: {rho.shape} vs {sigma.shape}"
        )
    eigs = linalg.hermitian_eigenvalues(rho - sigma)
    return 0.5 * float(np.sum(np.abs(eigs)))


def trace_distance_to_vacuum(rho_reduced: np.ndarray) -> float:
    """Trace distance between a cavity state and the vacuum projector."""
    vac = np.zeros_like(np.asarray(rho_reduced, dtype=np.complex128))
    vac[0, 0] = 1.0
    return trace_distance(rho_reduced, vac)


@dataclass(frozen=True)
class DnmResult:
    """Summed positive variation of a trace-distance series."""

    n_d: float
    d_series: np.ndarray
    zeta_positive_mass: float  # identical to n_d: the discrete positive part
    reached_steady: bool
    times: np.ndarray | None = None


def dnm(d_series, reached_steady: bool = False, times=None) -> DnmResult:
    """Memory measure of a sampled distance series: sum of positive increments.

    A monotone non-increasing series gives exactly 0; every revival of the
    distance adds its height.  ``times`` is carried along for reporting only.
    """
    d = np.asarray(d_series, dtype=float)
    if d.ndim != 1:
        raise ParameterError(f"expected a 1-d series, got shape {d.shape}")
    if d.size < 2:
        raise ParameterError(
            f"need at least 2 samples to form increments, got {d.size}"
        )
    if np.any(d < -REAL_TOL):
        raise ParameterError("trace-distance series has negative entries")
    if times is not None:
        times = np.asarray(times, dtype=float)
        if times.shape != d.shape:
            raise ParameterError(
                f"times shape {times.shape} does not match series shape {d.shape}"
            )
    inc = np.diff(d)
    total = float(np.sum(inc[inc > 0.0])) if np.any(inc > 0.0) else 0.0
    return DnmResult(
        n_d=total,
        d_series=d,
        zeta_positive_mass=total,
        reached_steady=reached_steady,
        times=times,
    )


def exchange_operator(params: ModelParams, ops: OperatorSet) -> np.ndarray:
    """Hermitian operator whose expectation is the qubit-cavity exchange G."""
    g_op = np.zeros((ops.layout.total_dim,) * 2, dtype=np.complex128)
    for sm, sp in zip(ops.sigma_minus, ops.sigma_plus):
        g_op += 1j * (sp @ ops.a - sm @ ops.a_dag)
    return params.g * g_op


@dataclass(frozen=True)
class MemristorRecord:
    """Pointwise memristive observables; satisfies O = F*I + G when alpha=gamma_r."""

    time: float
    input_i: float
    output_o: float
    drive_f: float
    exchange_g: float
    alpha: float


def memristor_observables(
    t: float,
    rho: np.ndarray,
    rhs_value: np.ndarray,
    params: ModelParams,
    ops: OperatorSet,
    alpha: float | None = None,
) -> MemristorRecord:
    """Evaluate the input/output pair at one instant.

    ``rhs_value`` must be the master-equation right-hand side at ``(t, rho)``
    so the population flux is exact rather than finite-differenced.
    ``alpha`` defaults to the photon loss rate, the value for which the
    input-output identity closes.
    """
    if alpha is None:
        alpha = params.gamma_r
    p_op = 1j * (ops.a_dag - ops.a)
    i_val = -real_expectation(p_op, rho, "input quadrature")
    n_val = real_expectation(ops.n_cavity, rho, "cavity population")
    flux = real_expectation(ops.n_cavity, rhs_value, "population flux")
    g_val = real_expectation(exchange_operator(params, ops), rho, "exchange")
    f_val = float(cavity_drive_amplitude(params.drive_c, t))
    return MemristorRecord(
        time=float(t),
        input_i=i_val,
        output_o=flux + alpha * n_val,
        drive_f=f_val,
        exchange_g=g_val,
        alpha=float(alpha),
    )


def pinch_metric(i_series, o_series) -> float:
    """How close the (I, O) loop comes to the origin, amplitude-normalized.

    Returns ``min_t sqrt((I/max|I|)^2 + (O/max|O|)^2)``; 0 for an exactly
    pinched loop.  Degenerate all-zero series count as pinched.
    """
    i_arr = np.asarray(i_series, dtype=float)
    o_arr = np.asarray(o_series, dtype=float)
    if i_arr.shape != o_arr.shape or i_arr.ndim != 1 or i_arr.size == 0:
        raise ParameterError("pinch metric needs two equal-length 1-d series")
    i_max = np.max(np.abs(i_arr))
    o_max = np.max(np.abs(o_arr))
    i_n = i_arr / i_max if i_max > 0 else i_arr
    o_n = o_arr / o_max if o_max > 0 else o_arr
    return float(np.min(np.hypot(i_n, o_n)))


def loop_area(i_series, o_series) -> float:
    """Unsigned shoelace area of one (I, O) cycle, closing last to first."""
    i_arr = np.asarray(i_series, dtype=float)
    o_arr = np.asarray(o_series, dtype=float)
    if i_arr.shape != o_arr.shape or i_arr.ndim != 1 or i_arr.size < 3:
        raise ParameterError("loop area needs two equal-length series of >= 3 points")
    x = np.concatenate([i_arr, i_arr[:1]])
    y = np.concatenate([o_arr, o_arr[:1]])
    return 0.5 * abs(float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1])))
