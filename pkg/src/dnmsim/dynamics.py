"""Fixed-step 4th-order Runge-Kutta integration of the master equations.

The integrator is deliberately plain: a classic RK4 step on the matrix
ordinary differential equation, with time-dependent scalar coefficients
evaluated at the substep times.  After every step the state is
re-Hermitized; the trace is renormalized only when it has drifted beyond
``1e-9`` (counted), and the run aborts if it drifts beyond ``1e-4`` or
turns non-finite.

Two equivalent evaluation paths exist purely for speed:

* small systems (dimension <= 16) advance the vectorized state with a
  compiled superoperator kernel;
* larger systems stay in matrix form, applying the drift with two matrix
  products and the jump sandwiches either via their tensor-factor
  structure (cavity/qubit lowering operators) or as plain products.

Both paths are tested against the readable ``MasterEquation.rhs``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._kernels import TRACE_ABORT_TOL, TRACE_RENORM_TOL, rk4_superop_chunk
from .errors import IntegrationError, ParameterError
from .model import MasterEquation

__all__ = [
    "IntegrationConfig",
    "Recorder",
    "Trajectory",
    "evolve",
    "evolve_piecewise",
]

#: dimension at or below which the vectorized superoperator path is used
SUPEROP_MAX_DIM = 16


@dataclass(frozen=True)
class IntegrationConfig:
    """Step size and recording/early-stop policy.

    ``steady_eps``/``steady_window``: a run that records the trace distance
    to the cavity steady state (series name ``"D_S"``) may stop early once
    that distance stays below ``steady_eps`` for ``steady_window`` time
    units.  Set ``steady_eps=None`` to disable.
    """

    dt: float = 0.01
    t_max: float = 3000.0
    record_every: int = 10
    steady_eps: Optional[float] = 1e-3
    steady_window: float = 50.0

    def __post_init__(self):
        if self.dt <= 0:
            raise ParameterError(f"dt must be > 0, got {self.dt}")
        if self.t_max <= 0:
            raise ParameterError(f"t_max must be > 0, got {self.t_max}")
        if self.record_every < 1:
            raise ParameterError(
                f"record_every must be >= 1, got {self.record_every}"
            )
        if self.steady_eps is not None and self.steady_eps <= 0:
            raise ParameterError(
                f"steady_eps must be > 0 or None, got {self.steady_eps}"
            )
        if self.steady_window <= 0:
            raise ParameterError(
                f"steady_window must be > 0, got {self.steady_window}"
            )

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_max / self.dt)))


@dataclass(frozen=True)
class Recorder:
    """A named scalar observable sampled along the trajectory.

    ``fn(t, rho, rhs)`` receives the current state and, when ``needs_rhs``
    is set, the instantaneous right-hand side (else ``None``).
    """

    name: str
    fn: Callable[[float, np.ndarray, Optional[np.ndarray]], float]
    needs_rhs: bool = False


@dataclass
class Trajectory:
    """Recorded samples of one integration."""

    times: np.ndarray
    observables: dict
    snapshots: Optional[list] = None
    renormalizations: int = 0
    reached_steady: bool = False
    steps_taken: int = 0
    segment_boundaries: tuple = ()
    final_state: Optional[np.ndarray] = None

    def __getitem__(self, name: str) -> np.ndarray:
        return self.observables[name]


# ---------------------------------------------------------------------------
# compilation of a MasterEquation into fast appliers


def _superop_hamiltonian(h: np.ndarray) -> np.ndarray:
    eye = np.eye(h.shape[0], dtype=np.complex128)
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def _superop_dissipator(j: np.ndarray) -> np.ndarray:
    eye = np.eye(j.shape[0], dtype=np.complex128)
    k = j.conj().T @ j
    return (
        np.kron(j, j.conj())
        - 0.5 * (np.kron(k, eye) + np.kron(eye, k.T))
    )


class _SuperopPath:
    """Vectorized-state evaluation: L(t) = L0 + sum_q c_q(t) mods[q]."""

    def __init__(self, eq: MasterEquation):
        d = eq.layout.total_dim
        self.d = d
        l0 = _superop_hamiltonian(eq.h_static)
        mods = []
        self.coef_fns = []
        for term in eq.h_terms:
            mods.append(_superop_hamiltonian(term.matrix))
            self.coef_fns.append(term.coefficient)
        for jump in eq.jumps:
            dis = _superop_dissipator(jump.operator)
            if jump.is_static:
                l0 = l0 + float(jump.rate) * dis
            else:
                mods.append(dis)
                self.coef_fns.append(jump.rate)
        self.L0 = np.ascontiguousarray(l0)
        self.mods = (
            np.ascontiguousarray(np.stack(mods))
            if mods
            else np.zeros((0, d * d, d * d), dtype=np.complex128)
        )

    def init_state(self, rho: np.ndarray) -> np.ndarray:
        return np.ascontiguousarray(rho, dtype=np.complex128).reshape(-1).copy()

    def to_matrix(self, state: np.ndarray) -> np.ndarray:
        return state.reshape(self.d, self.d).copy()

    def advance(self, state, coefs, i0, dt, nsteps):
        return rk4_superop_chunk(state, self.L0, self.mods, coefs, i0, dt, nsteps)

    def rhs_matrix(self, state, coefs, half_idx):
        w = self.L0 @ state
        for q in range(self.mods.shape[0]):
            w = w + coefs[q, half_idx] * (self.mods[q] @ state)
        return w.reshape(self.d, self.d)


class _DensePath:
    """Matrix-form evaluation for systems too large to vectorize.

    The drift (Hamiltonian commutator plus the anticommutator halves of all
    Lindblad channels) is applied as ``G rho + rho G^dag``.  Jump sandwiches
    with known tensor-factor structure are applied as weighted block copies;
    anything else falls back to stacked matrix products.
    """

    def __init__(self, eq: MasterEquation):
        layout = eq.layout
        d = layout.total_dim
        self.d = d
        self.f = layout.fock_dim
        self.q = layout.qubit_dim
        self.n_qubits = layout.n_qubits

        g0 = -1j * eq.h_static.astype(np.complex128)
        self.drift_mods = []  # (coef_index, matrix)
        self.coef_fns = []
        for term in eq.h_terms:
            self.drift_mods.append((len(self.coef_fns), -1j * term.matrix))
            self.coef_fns.append(term.coefficient)

        self.cav_rw = None  # rate-weighted sqrt table for a rho a^dag
        self.qubit_rates = []  # (F, R, gamma) per structured qubit channel
        gen_js, gen_rates = [], []
        self.tdep = []  # (coef_index, applier)
        for jump in eq.jumps:
            j = jump.operator
            k = j.conj().T @ j
            if jump.is_static:
                rate = float(jump.rate)
                g0 = g0 - 0.5 * rate * k
                if rate == 0.0:
                    continue
                structure = getattr(jump, "structure", None)
                if structure is not None and structure[0] == "cavity_lower":
                    w = self._sqrt_table()
                    self.cav_rw = rate * w if self.cav_rw is None else self.cav_rw + rate * w
                elif structure is not None and structure[0] == "qubit_lower":
                    self.qubit_rates.append(self._qubit_shape(structure[1]) + (rate,))
                else:
                    gen_js.append(j)
                    gen_rates.append(rate)
            else:
                ci = len(self.coef_fns)
                self.coef_fns.append(jump.rate)
                self.drift_mods.append((ci, -0.5 * k))
                structure = getattr(jump, "structure", None)
                if structure is not None and structure[0] == "cavity_lower":
                    self.tdep.append((ci, self._make_cavity_applier()))
                elif structure is not None and structure[0] == "qubit_lower":
                    self.tdep.append(
                        (ci, self._make_qubit_applier(structure[1]))
                    )
                else:
                    self.tdep.append((ci, self._make_generic_applier(j)))
        self.G0 = g0
        self.G0H = g0.conj().T
        self.static_js = (
            np.stack(gen_js) if gen_js else None
        )
        self.static_jdags = (
            np.stack([m.conj().T for m in gen_js]) if gen_js else None
        )
        self.static_rates = np.array(gen_rates) if gen_rates else None

    def _sqrt_table(self) -> np.ndarray:
        r = np.sqrt(np.arange(1, self.f))
        return np.outer(r, r)

    def _qubit_shape(self, j: int):
        front = self.f * (2**j)
        rear = 2 ** (self.n_qubits - 1 - j)
        return (front, rear)

    def _make_cavity_applier(self):
        w = self._sqrt_table()
        f, q = self.f, self.q

        def apply(rho, out, c):
            r4 = rho.reshape(f, q, f, q)
            o4 = out.reshape(f, q, f, q)
            o4[:-1, :, :-1, :] += (c * w)[:, None, :, None] * r4[1:, :, 1:, :]

        return apply

    def _make_qubit_applier(self, j: int):
        front, rear = self._qubit_shape(j)

        def apply(rho, out, c):
            r6 = rho.reshape(front, 2, rear, front, 2, rear)
            o6 = out.reshape(front, 2, rear, front, 2, rear)
            o6[:, 1, :, :, 1, :] += c * r6[:, 0, :, :, 0, :]

        return apply

    def _make_generic_applier(self, j: np.ndarray):
        jd = j.conj().T

        def apply(rho, out, c):
            out += c * (j @ rho @ jd)

        return apply

    def init_state(self, rho: np.ndarray) -> np.ndarray:
        return np.array(rho, dtype=np.complex128, order="C")

    def to_matrix(self, state: np.ndarray) -> np.ndarray:
        return state.copy()

    def _rhs(self, half_idx: int, rho: np.ndarray, coefs: np.ndarray) -> np.ndarray:
        if self.drift_mods:
            g = self.G0.copy()
            for ci, mat in self.drift_mods:
                g += coefs[ci, half_idx] * mat
            gh = g.conj().T
        else:
            g, gh = self.G0, self.G0H
        out = g @ rho
        out += rho @ gh
        if self.cav_rw is not None:
            r4 = rho.reshape(self.f, self.q, self.f, self.q)
            o4 = out.reshape(self.f, self.q, self.f, self.q)
            o4[:-1, :, :-1, :] += self.cav_rw[:, None, :, None] * r4[1:, :, 1:, :]
        for front, rear, rate in self.qubit_rates:
            r6 = rho.reshape(front, 2, rear, front, 2, rear)
            o6 = out.reshape(front, 2, rear, front, 2, rear)
            o6[:, 1, :, :, 1, :] += rate * r6[:, 0, :, :, 0, :]
        if self.static_js is not None:
            sand = np.matmul(np.matmul(self.static_js, rho), self.static_jdags)
            out += np.tensordot(self.static_rates, sand, axes=(0, 0))
        for ci, apply in self.tdep:
            apply(rho, out, coefs[ci, half_idx])
        return out

    def advance(self, state, coefs, i0, dt, nsteps):
        rho = state
        renorms = 0
        half_dt = 0.5 * dt
        for s in range(nsteps):
            j = 2 * (i0 + s)
            k1 = self._rhs(j, rho, coefs)
            k2 = self._rhs(j + 1, rho + half_dt * k1, coefs)
            k3 = self._rhs(j + 1, rho + half_dt * k2, coefs)
            k4 = self._rhs(j + 2, rho + dt * k3, coefs)
            rho = rho + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
            rho = 0.5 * (rho + rho.conj().T)
            tr = np.trace(rho).real
            if not np.isfinite(tr):
                return rho, renorms, 2, i0 + s
            if abs(tr - 1.0) > TRACE_ABORT_TOL:
                return rho, renorms, 1, i0 + s
            if abs(tr - 1.0) > TRACE_RENORM_TOL:
                rho = rho / tr
                renorms += 1
        return rho, renorms, 0, i0 + nsteps - 1

    def rhs_matrix(self, state, coefs, half_idx):
        return self._rhs(half_idx, state, coefs)


def _compile_path(eq: MasterEquation, force_dense: bool):
    if not force_dense and eq.layout.total_dim <= SUPEROP_MAX_DIM:
        return _SuperopPath(eq)
    return _DensePath(eq)


def _coefficient_grid(coef_fns, t0: float, dt: float, n_steps: int) -> np.ndarray:
    if not coef_fns:
        return np.zeros((0, 1))
    t_half = t0 + 0.5 * dt * np.arange(2 * n_steps + 1)
    return np.ascontiguousarray(
        np.stack([np.asarray(fn(t_half), dtype=float) for fn in coef_fns])
    )


# ---------------------------------------------------------------------------
# the integrator


def _validate_initial_state(rho0: np.ndarray, dim: int) -> np.ndarray:
    rho0 = np.asarray(rho0, dtype=np.complex128)
    if rho0.shape != (dim, dim):
        raise ParameterError(
            f"initial state shape {rho0.shape} does not match dimension {dim}"
        )
    if np.max(np.abs(rho0 - rho0.conj().T)) > 1e-8:
        raise ParameterError("initial state is not Hermitian within 1e-8")
    if abs(np.trace(rho0).real - 1.0) > 1e-8 or abs(np.trace(rho0).imag) > 1e-8:
        raise ParameterError("initial state trace differs from 1 beyond 1e-8")
    return rho0


def _raise_abort(status: int, step: int, dt: float, t0: float):
    t = t0 + (step + 1) * dt
    if status == 2:
        raise IntegrationError(
            f"state became non-finite near t = {t:.6g} (step {step}); "
            "reduce dt or check the model parameters"
        )
    raise IntegrationError(
        f"trace drifted beyond {TRACE_ABORT_TOL:g} near t = {t:.6g} "
        f"(step {step}); the step size is too large for this generator"
    )


def evolve(
    rho0: np.ndarray,
    equation: MasterEquation,
    config: IntegrationConfig,
    recorders: Sequence[Recorder],
    *,
    t0: float = 0.0,
    record_snapshots: bool = False,
    allow_early_stop: bool = True,
    _force_dense: bool = False,
) -> Trajectory:
    """Integrate ``d(rho)/dt = equation.rhs`` and record named observables.

    Returns a :class:`Trajectory` whose sample times start at ``t0`` and
    include the initial instant and the final step.  Early stopping (see
    :class:`IntegrationConfig`) requires a recorder named ``"D_S"``.
    """
    dim = equation.layout.total_dim
    rho0 = _validate_initial_state(rho0, dim)
    path = _compile_path(equation, _force_dense)
    n_steps = config.n_steps
    coefs = _coefficient_grid(path.coef_fns, t0, config.dt, n_steps)

    names = [r.name for r in recorders]
    if len(set(names)) != len(names):
        raise ParameterError(f"duplicate recorder names: {names}")
    need_rhs = any(r.needs_rhs for r in recorders)
    # the steady watch is independent of whether stopping is permitted:
    # ``reached_steady`` reports the sustained window either way
    watch_steady = config.steady_eps is not None and "D_S" in names

    state = path.init_state(rho0)
    times = []
    series = {name: [] for name in names}
    snapshots = [] if record_snapshots else None
    renorms_total = 0
    steps_done = 0
    stopped_early = False
    run_start_t = None  # start time of the current sub-eps streak

    def record(step_index: int):
        nonlocal run_start_t, stopped_early
        t = t0 + step_index * config.dt
        rho = path.to_matrix(state)
        if not np.all(np.isfinite(rho)):
            _raise_abort(2, step_index, config.dt, t0)
        rhs_val = (
            path.rhs_matrix(state, coefs, 2 * step_index) if need_rhs else None
        )
        times.append(t)
        for rec in recorders:
            series[rec.name].append(float(rec.fn(t, rho, rhs_val)))
        if snapshots is not None:
            snapshots.append(rho)
        if watch_steady:
            d_now = series["D_S"][-1]
            if d_now < config.steady_eps:
                if run_start_t is None:
                    run_start_t = t
                elif allow_early_stop and t - run_start_t >= config.steady_window:
                    stopped_early = True
            else:
                run_start_t = None

    record(0)
    while steps_done < n_steps and not stopped_early:
        chunk = min(config.record_every, n_steps - steps_done)
        state, renorms, status, fail_step = path.advance(
            state, coefs, steps_done, config.dt, chunk
        )
        renorms_total += renorms
        if status != 0:
            _raise_abort(status, fail_step, config.dt, t0)
        steps_done += chunk
        record(steps_done)

    reached_steady = stopped_early
    if not stopped_early and watch_steady and run_start_t is not None:
        reached_steady = times[-1] - run_start_t >= config.steady_window

    return Trajectory(
        times=np.array(times),
        observables={k: np.array(v) for k, v in series.items()},
        snapshots=snapshots,
        renormalizations=renorms_total,
        reached_steady=reached_steady,
        steps_taken=steps_done,
        final_state=path.to_matrix(state),
    )


def evolve_piecewise(
    rho0: np.ndarray,
    segments: Sequence[tuple],
    config: IntegrationConfig,
    recorders: Sequence[Recorder],
    *,
    t0: float = 0.0,
    record_snapshots: bool = False,
    _force_dense: bool = False,
) -> Trajectory:
    """Integrate a schedule of ``(equation, duration)`` segments.

    Time is global: a segment starting at t continues the drive phases of
    the shared clock rather than restarting them.  Segment boundaries are
    always sample points; early stopping applies only to the final segment.
    """
    if not segments:
        raise ParameterError("piecewise evolution needs at least one segment")
    dims = {eq.layout.total_dim for eq, _ in segments}
    if len(dims) != 1:
        raise ParameterError(
            f"all segments must share one layout, got dimensions {sorted(dims)}"
        )
    for _, duration in segments:
        if duration <= 0:
            raise ParameterError(f"segment duration must be > 0, got {duration}")
        steps = round(duration / config.dt)
        if abs(steps * config.dt - duration) > 1e-9 * max(1.0, duration):
            warnings.warn(
                f"segment duration {duration} is not a multiple of dt="
                f"{config.dt}; using {steps} steps",
                stacklevel=2,
            )

    t_cursor = t0
    state = rho0
    merged: Optional[Trajectory] = None
    boundaries = []
    for i, (eq, duration) in enumerate(segments):
        is_last = i == len(segments) - 1
        seg_cfg = IntegrationConfig(
            dt=config.dt,
            t_max=duration,
            record_every=config.record_every,
            steady_eps=config.steady_eps,
            steady_window=config.steady_window,
        )
        traj = evolve(
            state,
            eq,
            seg_cfg,
            recorders,
            t0=t_cursor,
            record_snapshots=record_snapshots,
            allow_early_stop=is_last,
            _force_dense=_force_dense,
        )
        state = traj.final_state
        t_cursor = traj.times[-1]
        if merged is None:
            merged = traj
        else:
            boundaries.append(len(merged.times) - 1)
            merged = Trajectory(
                times=np.concatenate([merged.times, traj.times[1:]]),
                observables={
                    k: np.concatenate([merged.observables[k], v[1:]])
                    for k, v in traj.observables.items()
                },
                snapshots=(
                    merged.snapshots + traj.snapshots[1:]
                    if record_snapshots
                    else None
                ),
                renormalizations=merged.renormalizations + traj.renormalizations,
                reached_steady=traj.reached_steady,
                steps_taken=merged.steps_taken + traj.steps_taken,
                final_state=traj.final_state,
            )
    merged.segment_boundaries = tuple(boundaries)
    return merged
