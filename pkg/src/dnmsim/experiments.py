"""Named scenario runners producing tabular, provenance-stamped results.

Each runner wires the model, integrator, and measures into one reproducible
computation: a back-flow map over a parameter grid, the qubit-number scaling
of the back-flow measure, extremal back-flow under drive tuning, the
drive-frequency switching protocol, the effective-decay-rate fit, and the
hysteresis-loop characterization of the driven cavity.

All runners are deterministic: a fixed-step integrator, deterministic grid
seeding in the fitter, and order-independent gathering of worker results
mean identical inputs produce identical tables.  Per-point integration
failures are captured as missing cells plus a failure record instead of
aborting the whole grid.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from ._version import __version__
from .dynamics import IntegrationConfig, Recorder, Trajectory, evolve, evolve_piecewise
from .errors import ParameterError, TruncationWarning
from .fitting import (
    DEFAULT_DECAY_BOUNDS,
    DecayFit,
    PowerLawFit,
    fit_decay_rate,
    fit_power_law,
)
from .hilbert import OperatorSet, SystemLayout, basis_state, build_operators, partial_trace_qubits
from .measures import (
    dnm,
    loop_area,
    memristor_observables,
    pinch_metric,
    trace_distance_to_vacuum,
)
from .model import (
    CavityDrive,
    MasterEquation,
    ModelParams,
    QubitDrive,
    master_equation,
)

__all__ = [
    "AxisSpec",
    "ExperimentResult",
    "PointFailure",
    "SweepSpec",
    "DEFAULT_DNM_CONFIG",
    "RESONANT_DRIVE_FREQUENCY",
    "SUPPRESSING_DRIVE_FREQUENCY",
    "DEFAULT_SWITCH_SCHEDULE",
    "run_dnm_map",
    "run_scaling",
    "run_extremal_dnm",
    "run_switching",
    "run_decay_fit",
    "run_memristor",
    "run_simulate",
]

# Drive frequency (units of the cavity frequency) at which a resonant qubit
# feeds energy back into the cavity most strongly.
RESONANT_DRIVE_FREQUENCY = 1.0

# Drive frequency near the first zero of J0(2*amplitude/frequency), the
# zeroth-order Bessel factor scaling the cycle-averaged qubit-cavity
# exchange.  For amplitude 0.5 the zero sits at 2*0.5/2.405 = 0.416; the
# rounded value keeps one drive period within 0.03% of 15.0 time units, so
# the default sampling grid stays commensurate with the drive cycle.
SUPPRESSING_DRIVE_FREQUENCY = 0.419

#: (frequency, duration) pairs realizing the on -> off back-flow switch.
DEFAULT_SWITCH_SCHEDULE = (
    (RESONANT_DRIVE_FREQUENCY, 350.0),
    (SUPPRESSING_DRIVE_FREQUENCY, 2650.0),
)

#: Default integration window for back-flow measurements: long enough to
#: reach the vacuum steady state at loss rate 0.005 (early stop permitted).
DEFAULT_DNM_CONFIG = IntegrationConfig(
    dt=0.01, t_max=3000.0, record_every=10, steady_eps=1e-3, steady_window=50.0
)

#: Increments smaller than this count as flat when classifying monotonicity.
MONOTONICITY_INCREMENT_FLOOR = 1e-6

#: Top Fock-level population beyond which the truncation is suspect.
TRUNCATION_POPULATION_LIMIT = 1e-4

# Parameter names a sweep axis may address.  Dotted names reach into the
# respective drive; plain names are scalar ModelParams fields.
_SCALAR_AXES = ("g", "omega_r", "omega_q", "gamma_r", "gamma_q")
_DRIVE_AXES = (
    "drive_q.amplitude",
    "drive_q.frequency",
    "drive_c.amplitude",
    "drive_c.frequency",
)
AXIS_NAMES = _SCALAR_AXES + _DRIVE_AXES


# ---------------------------------------------------------------------------
# result containers


@dataclass(frozen=True)
class AxisSpec:
    """One swept parameter: ``steps`` evenly spaced values on [start, stop]."""

    name: str
    start: float
    stop: float
    steps: int

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ParameterError(
                f"unknown sweep axis {self.name!r}; choose from {AXIS_NAMES}"
            )
        if self.steps < 2:
            raise ParameterError(f"axis {self.name!r} needs >= 2 steps, got {self.steps}")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ParameterError(f"axis {self.name!r} bounds must be finite")
        if self.stop <= self.start:
            raise ParameterError(
                f"axis {self.name!r} needs stop > start, got [{self.start}, {self.stop}]"
            )

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


@dataclass(frozen=True)
class SweepSpec:
    """A grid experiment: up to two axes over a base parameter set."""

    axes: tuple
    base: ModelParams
    layout: SystemLayout
    config: IntegrationConfig
    tag: str = "dnm-map"

    def __post_init__(self):
        axes = tuple(self.axes)
        object.__setattr__(self, "axes", axes)
        if not 1 <= len(axes) <= 2:
            raise ParameterError(f"sweep supports 1 or 2 axes, got {len(axes)}")
        names = [a.name for a in axes]
        if len(set(names)) != len(names):
            raise ParameterError(f"sweep axes must be distinct, got {names}")


@dataclass(frozen=True)
class PointFailure:
    """One grid point that could not be evaluated.

    ``coordinates`` names the offending point explicitly, keyed by the
    swept parameter names, so failure manifests stay readable without the
    column order at hand.
    """

    coordinates: Mapping[str, object]
    message: str


@dataclass(frozen=True)
class ExperimentResult:
    """Immutable outcome of one experiment run.

    ``rows`` is a long-format table over ``columns``; ``axes`` echoes the
    swept values; ``scalars`` holds named summary numbers and labels;
    ``provenance`` records the package version, a UTC timestamp, and the
    configuration mapping the caller supplied; ``failures`` lists grid
    points that raised instead of producing a row.
    """

    tag: str
    columns: tuple
    rows: tuple
    axes: Mapping[str, tuple]
    scalars: Mapping[str, object]
    provenance: Mapping[str, object]
    failures: tuple = ()

    def __post_init__(self):
        width = len(self.columns)
        for row in self.rows:
            if len(row) != width:
                raise ParameterError(
                    f"row width {len(row)} does not match {width} columns"
                )

    def column(self, name: str) -> np.ndarray:
        """One table column as a float array."""
        try:
            idx = self.columns.index(name)
        except ValueError:
            raise KeyError(name) from None
        return np.asarray([row[idx] for row in self.rows], dtype=float)


def _provenance(config_echo: Optional[Mapping] = None) -> dict:
    return {
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "config": dict(config_echo) if config_echo else {},
    }


# ---------------------------------------------------------------------------
# parameter-grid plumbing


def _with_axis_value(params: ModelParams, name: str, value: float) -> ModelParams:
    """Return a copy of ``params`` with one (possibly dotted) field replaced."""
    if name in _SCALAR_AXES:
        return dataclasses.replace(params, **{name: float(value)})
    drive_name, field = name.split(".")
    drive = getattr(params, drive_name)
    if drive is None:
        if drive_name == "drive_q":
            drive = QubitDrive(amplitude=0.0, frequency=params.omega_r)
        else:
            drive = CavityDrive(amplitude=0.0, frequency=params.omega_r)
    drive = dataclasses.replace(drive, **{field: float(value)})
    return dataclasses.replace(params, **{drive_name: drive})


def _ground_start(layout: SystemLayout) -> np.ndarray:
    """One cavity excitation, every qubit in its ground state."""
    return basis_state(layout, cavity_excitation=1, qubit_bits="g" * layout.n_qubits)


def _dnm_recorder(layout: SystemLayout) -> Recorder:
    return Recorder(
        "D_S",
        lambda t, rho, rhs: trace_distance_to_vacuum(partial_trace_qubits(rho, layout)),
    )


def _dnm_point(task) -> float:
    """Back-flow measure for one parameter point (worker-safe).

    The per-point parameter substitutions are applied here, inside the
    guarded call, so a value that fails validation surfaces as a failure
    record for that grid point instead of aborting the sweep.
    """
    base, substitutions, layout, config = task
    params = base
    for name, value in substitutions:
        params = _with_axis_value(params, name, value)
    ops = build_operators(layout)
    equation = master_equation(params, ops)
    traj = evolve(_ground_start(layout), equation, config, [_dnm_recorder(layout)])
    return dnm(traj.observables["D_S"], reached_steady=traj.reached_steady).n_d


def _call_guarded(fn: Callable, task) -> tuple:
    try:
        return fn(task), None
    except Exception as exc:  # per-point capture is the contract
        return None, f"{type(exc).__name__}: {exc}"


def _map_tasks(fn: Callable, tasks: Sequence, workers: int) -> list:
    """Evaluate ``fn`` over tasks, returning (value, error) pairs in order."""
    if workers <= 1:
        return [_call_guarded(fn, task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_call_guarded, fn, task) for task in tasks]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# runners


def run_dnm_map(
    spec: SweepSpec,
    *,
    workers: int = 1,
    config_echo: Optional[Mapping] = None,
) -> ExperimentResult:
    """Back-flow measure on a 1- or 2-axis parameter grid.

    Every grid point integrates the full model from one cavity excitation
    with all qubits in the ground state and accumulates the positive
    variation of the cavity's distance to vacuum.
    """
    axes_values = [axis.values() for axis in spec.axes]
    shape = tuple(len(v) for v in axes_values)
    coords = list(np.ndindex(*shape))
    axis_names = tuple(a.name for a in spec.axes)
    tasks = []
    for idx in coords:
        substitutions = tuple(
            (axis.name, float(values[i]))
            for axis, values, i in zip(spec.axes, axes_values, idx)
        )
        tasks.append((spec.base, substitutions, spec.layout, spec.config))

    results = _map_tasks(_dnm_point, tasks, workers)
    columns = axis_names + ("n_d",)
    rows, failures = [], []
    for idx, (value, err) in zip(coords, results):
        point = tuple(float(values[i]) for values, i in zip(axes_values, idx))
        if err is None:
            rows.append(point + (float(value),))
        else:
            failures.append(PointFailure(dict(zip(axis_names, point)), err))
    return ExperimentResult(
        tag=spec.tag,
        columns=columns,
        rows=tuple(rows),
        axes={a.name: tuple(map(float, v)) for a, v in zip(spec.axes, axes_values)},
        scalars={
            "n_points": len(coords),
            "n_failed": len(failures),
        },
        provenance=_provenance(config_echo),
        failures=tuple(failures),
    )


def run_scaling(
    n_values: Sequence[int],
    base: ModelParams,
    config: IntegrationConfig = DEFAULT_DNM_CONFIG,
    *,
    fock_dim: int = 2,
    workers: int = 1,
    config_echo: Optional[Mapping] = None,
) -> ExperimentResult:
    """Back-flow measure versus qubit number, with a power-law fit.

    Fits log(n_d) against log(n) by least squares and reports the exponent,
    the goodness of fit, and whether the successful points are strictly
    increasing in n.
    """
    ns = [int(n) for n in n_values]
    if len(ns) != len(set(ns)) or any(n < 1 for n in ns):
        raise ParameterError(f"qubit numbers must be distinct and >= 1, got {ns}")
    tasks = [
        (base, (), SystemLayout(n_qubits=n, fock_dim=fock_dim), config) for n in ns
    ]
    results = _map_tasks(_dnm_point, tasks, workers)

    rows, failures = [], []
    for n, (value, err) in zip(ns, results):
        if err is None:
            rows.append((n, float(value)))
        else:
            failures.append(PointFailure({"n_qubits": n}, err))

    scalars: dict = {"n_points": len(ns), "n_failed": len(failures)}
    good = sorted(rows)
    scalars["strictly_increasing"] = bool(
        len(good) >= 2 and all(b[1] > a[1] for a, b in zip(good, good[1:]))
    )
    if len(good) >= 3:
        try:
            fit = fit_power_law([r[0] for r in good], [r[1] for r in good])
            scalars.update(
                exponent_k=fit.k,
                log_prefactor=fit.log_prefactor,
                r_squared=fit.r_squared,
                fit_degenerate=fit.degenerate,
            )
        except Exception as exc:
            scalars["fit_error"] = f"{type(exc).__name__}: {exc}"
    else:
        scalars["fit_error"] = "fewer than 3 successful points"
    return ExperimentResult(
        tag="scaling",
        columns=("n_qubits", "n_d"),
        rows=tuple(good),
        axes={"n_qubits": tuple(float(n) for n in ns)},
        scalars=scalars,
        provenance=_provenance(config_echo),
        failures=tuple(failures),
    )


def _extremal_point(task) -> float:
    return _dnm_point(task)


def run_extremal_dnm(
    g_values: Sequence[float],
    n_values: Sequence[int],
    base: ModelParams,
    config: IntegrationConfig = DEFAULT_DNM_CONFIG,
    *,
    frequency_values: Optional[Sequence[float]] = None,
    amplitude_values: Optional[Sequence[float]] = None,
    fock_dim: int = 2,
    workers: int = 1,
    config_echo: Optional[Mapping] = None,
) -> ExperimentResult:
    """Minimum and maximum back-flow over a drive grid, per (g, n).

    The drive grid spans (frequency, amplitude) pairs; amplitude 0 rows make
    the undriven point part of the search.  Each (g, n) row reports the
    extremal values, the drive settings attaining them, and the undriven
    reference.
    """
    freqs = np.linspace(0.0, 1.0, 11) if frequency_values is None else np.asarray(
        list(frequency_values), dtype=float
    )
    amps = np.linspace(0.0, 1.0, 11) if amplitude_values is None else np.asarray(
        list(amplitude_values), dtype=float
    )
    if freqs.size < 1 or amps.size < 1:
        raise ParameterError("drive grid needs at least one frequency and amplitude")

    pairs = [(float(g), int(n)) for g in g_values for n in n_values]
    if any(n < 1 for _, n in pairs):
        raise ParameterError(f"qubit numbers must be >= 1, got {sorted({n for _, n in pairs})}")
    grid = [(float(f), float(a)) for f in freqs for a in amps]

    undriven_base = dataclasses.replace(base, drive_q=None)
    tasks, keys = [], []
    for g, n in pairs:
        layout = SystemLayout(n_qubits=n, fock_dim=fock_dim)
        tasks.append((undriven_base, (("g", g),), layout, config))
        keys.append((g, n, None))
        for f, a in grid:
            substitutions = (
                ("g", g),
                ("drive_q.frequency", f),
                ("drive_q.amplitude", a),
            )
            tasks.append((undriven_base, substitutions, layout, config))
            keys.append((g, n, (f, a)))

    results = _map_tasks(_extremal_point, tasks, workers)

    per_pair: dict = {k: {"grid": [], "undriven": None} for k in pairs}
    failures = []
    for key, (value, err) in zip(keys, results):
        g, n, drive = key
        if err is not None:
            coord = {"g": g, "n_qubits": n}
            if drive is not None:
                coord["drive_q.frequency"], coord["drive_q.amplitude"] = drive
            failures.append(PointFailure(coord, err))
            continue
        if drive is None:
            per_pair[(g, n)]["undriven"] = float(value)
        else:
            per_pair[(g, n)]["grid"].append((float(value), drive))

    rows = []
    for g, n in pairs:
        bucket = per_pair[(g, n)]
        if not bucket["grid"] or bucket["undriven"] is None:
            failures.append(
                PointFailure(
                    {"g": g, "n_qubits": n},
                    "no successful grid points for this pair",
                )
            )
            continue
        lo = min(bucket["grid"], key=lambda item: item[0])
        hi = max(bucket["grid"], key=lambda item: item[0])
        rows.append(
            (
                g,
                n,
                lo[0],
                lo[1][0],
                lo[1][1],
                hi[0],
                hi[1][0],
                hi[1][1],
                bucket["undriven"],
            )
        )
    return ExperimentResult(
        tag="extremal",
        columns=(
            "g",
            "n_qubits",
            "n_d_min",
            "frequency_at_min",
            "amplitude_at_min",
            "n_d_max",
            "frequency_at_max",
            "amplitude_at_max",
            "n_d_undriven",
        ),
        rows=tuple(rows),
        axes={
            "g": tuple(float(g) for g in g_values),
            "n_qubits": tuple(float(n) for n in n_values),
            "drive_q.frequency": tuple(map(float, freqs)),
            "drive_q.amplitude": tuple(map(float, amps)),
        },
        scalars={
            "n_points": len(tasks),
            "n_failed": len(failures),
        },
        provenance=_provenance(config_echo),
        failures=tuple(failures),
    )


def _strobe_stride(frequency: float, sample_interval: float) -> int:
    """Samples per drive period, at least 1 (1 when the drive is static)."""
    if frequency <= 0:
        return 1
    return max(1, round((2.0 * math.pi / frequency) / sample_interval))


def run_switching(
    base: ModelParams,
    config: IntegrationConfig = DEFAULT_DNM_CONFIG,
    *,
    schedule: Sequence[tuple] = DEFAULT_SWITCH_SCHEDULE,
    amplitude: float = 0.5,
    fock_dim: int = 2,
    config_echo: Optional[Mapping] = None,
) -> ExperimentResult:
    """Switch the qubit-drive frequency mid-run and classify each segment.

    ``schedule`` is a list of (drive frequency, duration) pairs sharing one
    drive amplitude.  The distance-to-vacuum series is recorded on the fine
    sampling grid; per segment the classification reports the count of
    positive increments above ``MONOTONICITY_INCREMENT_FLOOR``, their total
    mass on the fine grid, and their total mass on a drive-period-aligned
    subgrid (one sample per drive cycle).  The subgrid mass is the secular
    (envelope) back-flow: sampling once per cycle is blind to the reversible
    intra-cycle wiggle the drive itself imprints, so it distinguishes real
    energy return from micromotion.  The headline ``mass_ratio`` compares
    the last segment's secular mass against the first segment's.
    """
    if len(schedule) < 1:
        raise ParameterError("switch schedule needs at least one segment")
    layout = SystemLayout(n_qubits=1, fock_dim=fock_dim)
    ops = build_operators(layout)
    segments = []
    for freq, duration in schedule:
        params = dataclasses.replace(
            base, drive_q=QubitDrive(amplitude=amplitude, frequency=float(freq))
        )
        segments.append((master_equation(params, ops), float(duration)))

    traj = evolve_piecewise(
        _ground_start(layout), segments, config, [_dnm_recorder(layout)]
    )
    times = np.asarray(traj.times)
    d_series = np.asarray(traj.observables["D_S"])
    bounds = (0,) + tuple(traj.segment_boundaries) + (times.size - 1,)

    sample_interval = float(times[1] - times[0]) if times.size > 1 else config.dt
    scalars: dict = {"n_points": 1, "n_failed": 0, "segments": len(schedule)}
    seg_rows = []
    masses = []
    for k, (freq, _) in enumerate(schedule):
        a, b = bounds[k], bounds[k + 1]
        if a >= b:  # early stop consumed this segment entirely
            masses.append(0.0)
            continue
        seg = d_series[a : b + 1]
        stride = _strobe_stride(float(freq), sample_interval)
        increments = np.diff(seg)
        pos_count = int(np.sum(increments > MONOTONICITY_INCREMENT_FLOOR))
        fine_mass = float(dnm(seg).n_d)
        secular_mass = (
            float(dnm(seg[::stride]).n_d) if seg[::stride].size >= 2 else 0.0
        )
        masses.append(secular_mass)
        prefix = f"segment{k}"
        scalars[f"{prefix}.frequency"] = float(freq)
        scalars[f"{prefix}.positive_count"] = pos_count
        scalars[f"{prefix}.fine_mass"] = fine_mass
        scalars[f"{prefix}.secular_mass"] = secular_mass
        scalars[f"{prefix}.stride"] = stride
        scalars[f"{prefix}.classification"] = (
            "monotone_decreasing" if secular_mass < 1e-9 else "non_monotone"
        )
        seg_rows.append((a, b))

    if len(masses) >= 2 and masses[0] > 0:
        scalars["mass_ratio"] = masses[-1] / masses[0]

    segment_index = np.zeros(times.size, dtype=int)
    for k, (a, b) in enumerate(seg_rows):
        segment_index[a : b + 1] = k
    rows = tuple(
        (float(t), float(d), int(s))
        for t, d, s in zip(times, d_series, segment_index)
    )
    return ExperimentResult(
        tag="switch",
        columns=("t", "d_s", "segment"),
        rows=rows,
        axes={"t": tuple(map(float, times))},
        scalars=scalars,
        provenance=_provenance(config_echo),
        failures=(),
    )


def _decay_fit_task(task) -> dict:
    """Simulate one driven run and fit the effective decay rate (worker-safe)."""
    (mu, base, sim_config, fit_config, bounds, grid_shape, t_max_fit) = task
    layout = SystemLayout(n_qubits=1, fock_dim=2)
    ops = build_operators(layout)
    params = dataclasses.replace(
        base,
        drive_q=dataclasses.replace(base.drive_q, frequency=float(mu))
        if base.drive_q is not None
        else QubitDrive(amplitude=0.5, frequency=float(mu)),
    )
    run_cfg = IntegrationConfig(
        dt=sim_config.dt,
        t_max=t_max_fit,
        record_every=sim_config.record_every,
        steady_eps=None,
    )
    traj = evolve(
        _ground_start(layout),
        master_equation(params, ops),
        run_cfg,
        [_dnm_recorder(layout)],
        allow_early_stop=False,
    )
    times = np.asarray(traj.times)
    target = np.asarray(traj.observables["D_S"])
    rho0_cavity = np.zeros((2, 2), dtype=np.complex128)
    rho0_cavity[1, 1] = 1.0
    fit = fit_decay_rate(
        times,
        target,
        rho0_cavity,
        fit_config,
        bounds=bounds,
        grid_shape=grid_shape,
        workers=1,
    )
    return {"mu": float(mu), "times": times, "target": target, "fit": fit}


def run_decay_fit(
    mu_values: Sequence[float],
    base: ModelParams,
    config: IntegrationConfig = DEFAULT_DNM_CONFIG,
    *,
    t_max_fit: float = 700.0,
    bounds=DEFAULT_DECAY_BOUNDS,
    grid_shape: Optional[tuple] = None,
    workers: int = 1,
    config_echo: Optional[Mapping] = None,
) -> ExperimentResult:
    """Fit the sinusoidal effective decay rate to each driven run.

    For each drive frequency the full model is integrated once, then the
    lossy-cavity surrogate's rate parameters (A, B, C) are fitted so the
    surrogate's distance-to-vacuum series tracks the full model's.  The
    table interleaves the target and fitted-model series; per-frequency fit
    parameters and the constant-rate classification land in ``scalars``.
    """
    mus = [float(m) for m in mu_values]
    if not mus:
        raise ParameterError("need at least one drive frequency to fit")
    fit_config = IntegrationConfig(
        dt=config.dt,
        t_max=t_max_fit,
        record_every=config.record_every,
        steady_eps=None,
    )
    tasks = [
        (mu, base, config, fit_config, tuple(bounds), grid_shape, float(t_max_fit))
        for mu in mus
    ]
    results = _map_tasks(_decay_fit_task, tasks, workers)

    rows, failures = [], []
    scalars: dict = {"n_points": len(mus), "n_failed": 0}
    for mu, (outcome, err) in zip(mus, results):
        if err is not None:
            failures.append(PointFailure({"mu_q": mu}, err))
            continue
        fit: DecayFit = outcome["fit"]
        for t, d_full, d_model in zip(
            outcome["times"], outcome["target"], fit.model_d
        ):
            rows.append((mu, float(t), float(d_full), float(d_model)))
        prefix = f"mu={mu:g}"
        decay = fit.decay
        window = outcome["times"]
        rate_min = float(np.min(decay.rate(window)))
        scalars[f"{prefix}/A"] = decay.A
        scalars[f"{prefix}/B"] = decay.B
        scalars[f"{prefix}/C"] = decay.C
        scalars[f"{prefix}/residual"] = fit.residual
        scalars[f"{prefix}/constant_rate"] = fit.constant_rate
        scalars[f"{prefix}/constant_residual"] = fit.constant_residual
        scalars[f"{prefix}/amplitude_ratio"] = fit.amplitude_ratio
        scalars[f"{prefix}/effectively_constant"] = fit.effectively_constant
        scalars[f"{prefix}/rate_min"] = rate_min
        scalars[f"{prefix}/rate_attains_negative"] = bool(rate_min < 0.0)
        scalars[f"{prefix}/termination"] = fit.termination_reason
        scalars[f"{prefix}/evaluations"] = fit.evaluations
    scalars["n_failed"] = len(failures)
    return ExperimentResult(
        tag="fit-decay",
        columns=("mu_q", "t", "d_s_target", "d_s_model"),
        rows=tuple(rows),
        axes={"mu_q": tuple(mus)},
        scalars=scalars,
        provenance=_provenance(config_echo),
        failures=tuple(failures),
    )


def _memristor_recorders(
    params: ModelParams, ops: OperatorSet, layout: SystemLayout, alpha: Optional[float]
) -> list:
    def field(name):
        def probe(t, rho, rhs):
            rec = memristor_observables(t, rho, rhs, params, ops, alpha=alpha)
            return getattr(rec, name)

        return probe

    recorders = [
        Recorder("I", field("input_i"), needs_rhs=True),
        Recorder("O", field("output_o"), needs_rhs=True),
        Recorder("F", field("drive_f"), needs_rhs=True),
        Recorder("G", field("exchange_g"), needs_rhs=True),
        Recorder(
            "top_population",
            lambda t, rho, rhs: float(
                partial_trace_qubits(rho, layout)[-1, -1].real
            ),
        ),
    ]
    return recorders


def run_memristor(
    base: ModelParams,
    cycles: int = 1,
    *,
    transient_periods: float = 2.0,
    n_qubits: int = 1,
    fock_dim: int = 8,
    dt: float = 0.01,
    record_every: int = 10,
    alpha: Optional[float] = None,
    config_echo: Optional[Mapping] = None,
) -> ExperimentResult:
    """Drive the cavity with the rectified waveform and measure the loop.

    Integrates ``transient_periods + cycles`` drive periods, discards the
    transient, and reports the input-output series together with the
    hysteresis summary: signed loop area per cycle, normalized pinch metric
    (how close the loop passes to the origin), and the exchange-to-output
    ratio max|G|/max|O| that quantifies how much the qubits perturb the
    input-output relation.  A truncation warning fires if the top Fock level
    ever exceeds a population of 1e-4.
    """
    if cycles < 1:
        raise ParameterError(f"need at least one recorded cycle, got {cycles}")
    if transient_periods < 0:
        raise ParameterError(f"transient must be >= 0 periods, got {transient_periods}")
    drive = base.drive_c
    if drive is None:
        drive = CavityDrive(amplitude=0.2, frequency=0.2, waveform="memristor")
        base = dataclasses.replace(base, drive_c=drive)
    if drive.frequency <= 0:
        raise ParameterError("the cavity drive frequency must be positive")
    period = 2.0 * math.pi / drive.frequency
    layout = SystemLayout(n_qubits=n_qubits, fock_dim=fock_dim)
    ops = build_operators(layout)
    equation = master_equation(base, ops)
    total = (transient_periods + cycles) * period
    config = IntegrationConfig(
        dt=dt, t_max=total, record_every=record_every, steady_eps=None
    )
    rho0 = basis_state(layout, 0, "g" * n_qubits)
    traj = evolve(
        rho0,
        equation,
        config,
        _memristor_recorders(base, ops, layout, alpha),
        allow_early_stop=False,
    )
    times = np.asarray(traj.times)
    keep = times >= transient_periods * period - 1e-9
    t_kept = times[keep]
    series = {k: np.asarray(v)[keep] for k, v in traj.observables.items()}

    top = float(np.max(traj.observables["top_population"]))
    if top > TRUNCATION_POPULATION_LIMIT:
        warnings.warn(
            f"top Fock level reached population {top:.3g} > "
            f"{TRUNCATION_POPULATION_LIMIT:g}; increase fock_dim",
            TruncationWarning,
            stacklevel=2,
        )

    i_s, o_s = series["I"], series["O"]
    samples_per_cycle = max(1, round(period / (dt * record_every)))
    areas = []
    for c in range(cycles):
        a, b = c * samples_per_cycle, (c + 1) * samples_per_cycle
        chunk_i, chunk_o = i_s[a : b + 1], o_s[a : b + 1]
        if chunk_i.size >= 3:
            areas.append(loop_area(chunk_i, chunk_o))
    scalars = {
        "n_points": 1,
        "n_failed": 0,
        "pinch_metric": pinch_metric(i_s, o_s),
        "loop_area_per_cycle": float(np.mean(areas)) if areas else 0.0,
        "g_over_o": float(np.max(np.abs(series["G"])) / np.max(np.abs(o_s))),
        "top_population_max": top,
        "truncation_suspect": bool(top > TRUNCATION_POPULATION_LIMIT),
        "period": period,
        "cycles": cycles,
    }
    rows = tuple(
        (float(t), float(i), float(o), float(f), float(g))
        for t, i, o, f, g in zip(
            t_kept, i_s, o_s, series["F"], series["G"]
        )
    )
    return ExperimentResult(
        tag="memristor",
        columns=("t", "I", "O", "F", "G"),
        rows=rows,
        axes={"t": tuple(map(float, t_kept))},
        scalars=scalars,
        provenance=_provenance(config_echo),
        failures=(),
    )


def run_simulate(
    params: ModelParams,
    layout: SystemLayout,
    config: IntegrationConfig,
    *,
    initial_cavity_excitation: int = 1,
    alpha: Optional[float] = None,
    config_echo: Optional[Mapping] = None,
) -> ExperimentResult:
    """One plain integration with the full observable set tabulated.

    Columns: time, cavity population, field quadrature, input/output pair,
    drive amplitude, exchange flow, distance to vacuum, trace, and the
    minimum eigenvalue of the full state (a positivity diagnostic).
    """
    ops = build_operators(layout)
    equation = master_equation(params, ops)
    rho0 = basis_state(
        layout, initial_cavity_excitation, "g" * layout.n_qubits
    )

    def trace_of(t, rho, rhs):
        return float(np.trace(rho).real)

    def min_eig(t, rho, rhs):
        return float(np.linalg.eigvalsh(rho)[0])

    recorders = _memristor_recorders(params, ops, layout, alpha)[:4]
    recorders += [
        Recorder(
            "N", lambda t, rho, rhs: float(np.trace(ops.n_cavity @ rho).real)
        ),
        Recorder(
            "P",
            lambda t, rho, rhs: float(
                np.trace((1j * (ops.a_dag - ops.a)) @ rho).real
            ),
        ),
        _dnm_recorder(layout),
        Recorder("trace", trace_of),
        Recorder("min_eigenvalue", min_eig),
    ]
    traj = evolve(rho0, equation, config, recorders)
    names = ("t", "N", "P", "I", "O", "F", "G", "D_S", "trace", "min_eigenvalue")
    times = np.asarray(traj.times)
    cols = [times] + [np.asarray(traj.observables[k]) for k in names[1:]]
    rows = tuple(tuple(float(c[i]) for c in cols) for i in range(times.size))
    back_flow = dnm(traj.observables["D_S"], reached_steady=traj.reached_steady)
    return ExperimentResult(
        tag="simulate",
        columns=names,
        rows=rows,
        axes={"t": tuple(map(float, times))},
        scalars={
            "n_points": 1,
            "n_failed": 0,
            "n_d": back_flow.n_d,
            "reached_steady": traj.reached_steady,
            "renormalizations": traj.renormalizations,
        },
        provenance=_provenance(config_echo),
        failures=(),
    )
