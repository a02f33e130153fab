"""Run configuration: a flat INI schema mapped onto the domain objects.

One file (or an empty one) fully determines a run: every key has a
documented default, unknown keys are rejected by name with the offending
line quoted, and ``--set section.key=value`` overrides are applied after
the file.  The resolved configuration echoes back to INI text that parses
to an equal configuration, which is how results stay reproducible from
their own provenance block.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .dynamics import IntegrationConfig
from .errors import ConfigError, DnmSimError
from .experiments import AxisSpec, SweepSpec
from .hilbert import SystemLayout
from .model import CavityDrive, ModelParams, QubitDrive

__all__ = ["RunConfig", "parse_config", "config_schema_text", "EXPERIMENTS"]

EXPERIMENTS = (
    "simulate",
    "dnm-map",
    "scaling",
    "extremal",
    "switch",
    "fit-decay",
    "memristor",
)

_FORMATS = ("csv", "json", "svg")

# (section, key) -> (type tag, default string, help)
# Type tags: float, int, bool, str, floats, ints, optfloat, axis, optaxis,
# choice:<a|b|...>, formats.
_SCHEMA: dict = {
    ("experiment", "name"): (
        "choice:" + "|".join(EXPERIMENTS),
        "simulate",
        "which runner to execute (the CLI subcommand overrides this)",
    ),
    ("model", "g"): ("float", "0.05", "qubit-cavity coupling, units of omega_r"),
    ("model", "omega_r"): ("float", "1.0", "cavity frequency (the unit of time)"),
    ("model", "omega_q"): ("float", "1.0", "qubit frequency"),
    ("model", "gamma_r"): ("float", "0.005", "cavity loss rate"),
    ("model", "gamma_q"): ("float", "0.005", "qubit loss rate"),
    ("drive_q", "enabled"): ("bool", "false", "frequency-modulate the qubits"),
    ("drive_q", "amplitude"): ("float", "0.5", "qubit drive amplitude"),
    ("drive_q", "frequency"): ("float", "1.0", "qubit drive frequency"),
    ("drive_c", "enabled"): ("bool", "false", "drive the cavity linearly"),
    ("drive_c", "amplitude"): ("float", "0.2", "cavity drive amplitude"),
    ("drive_c", "frequency"): ("float", "0.2", "cavity drive frequency"),
    ("drive_c", "waveform"): (
        "choice:sinusoid|memristor",
        "memristor",
        "cavity drive shape: plain sine or the strictly-positive "
        "1 - sin(cos(frequency*t)) form",
    ),
    ("layout", "n_qubits"): ("int", "1", "number of qubits"),
    ("layout", "fock_dim"): (
        "int",
        "2",
        "cavity levels kept (2 is exact for single-excitation runs)",
    ),
    ("integration", "dt"): ("float", "0.01", "integrator step"),
    ("integration", "t_max"): ("float", "3000.0", "time horizon"),
    ("integration", "record_every"): ("int", "10", "steps between samples"),
    ("integration", "steady_eps"): (
        "optfloat",
        "0.001",
        "early-stop threshold on the distance to vacuum (empty disables)",
    ),
    ("integration", "steady_window"): (
        "float",
        "50.0",
        "how long the distance must stay below steady_eps",
    ),
    ("sweep", "axis1"): (
        "axis",
        "g:0.0:0.1:21",
        "first sweep axis as name:start:stop:steps",
    ),
    ("sweep", "axis2"): (
        "optaxis",
        "omega_q:0.5:1.5:21",
        "second sweep axis (empty for a 1-d sweep)",
    ),
    ("scaling", "n_values"): ("ints", "1,2,3,4,5", "qubit numbers to compare"),
    ("extremal", "g_values"): ("floats", "0.02", "couplings to scan"),
    ("extremal", "n_values"): ("ints", "1", "qubit numbers to scan"),
    ("extremal", "frequency_min"): ("float", "0.0", "drive-frequency grid start"),
    ("extremal", "frequency_max"): ("float", "1.0", "drive-frequency grid stop"),
    ("extremal", "frequency_steps"): ("int", "11", "drive-frequency grid points"),
    ("extremal", "amplitude_min"): ("float", "0.0", "drive-amplitude grid start"),
    ("extremal", "amplitude_max"): ("float", "1.0", "drive-amplitude grid stop"),
    ("extremal", "amplitude_steps"): ("int", "11", "drive-amplitude grid points"),
    ("switch", "frequencies"): (
        "floats",
        "1.0,0.419",
        "qubit-drive frequency per segment",
    ),
    ("switch", "durations"): ("floats", "350.0,2650.0", "segment lengths"),
    ("switch", "amplitude"): ("float", "0.5", "qubit drive amplitude"),
    ("fit", "mu_values"): (
        "floats",
        "0.419,0.2,1.0",
        "qubit-drive frequencies whose runs get a decay-rate fit",
    ),
    ("fit", "t_max"): ("float", "700.0", "length of the fitted window"),
    ("fit", "grid_a"): ("int", "21", "seed-grid points along A"),
    ("fit", "grid_b"): ("int", "161", "seed-grid points along B"),
    ("fit", "grid_c"): ("int", "41", "seed-grid points along C"),
    ("memristor", "cycles"): ("int", "1", "drive periods kept after the transient"),
    ("memristor", "transient_periods"): (
        "float",
        "2.0",
        "drive periods discarded before loop metrics",
    ),
    ("memristor", "alpha"): (
        "optfloat",
        "",
        "output-rate offset (empty uses the cavity loss rate)",
    ),
    ("simulate", "cavity_excitation"): ("int", "1", "initial cavity Fock level"),
    ("output", "directory"): ("str", "dnmsim-out", "where result files land"),
    ("output", "formats"): (
        "formats",
        "csv,json,svg",
        "any comma subset of csv,json,svg",
    ),
}

_SECTION_ORDER = []
for _section, _ in _SCHEMA:
    if _section not in _SECTION_ORDER:
        _SECTION_ORDER.append(_section)


def _parse_axis(text: str) -> AxisSpec:
    parts = text.split(":")
    if len(parts) != 4:
        raise ConfigError(
            f"axis {text!r} must look like name:start:stop:steps (4 fields)"
        )
    name, start, stop, steps = parts
    try:
        return AxisSpec(name.strip(), float(start), float(stop), int(steps))
    except ValueError as exc:
        raise ConfigError(f"axis {text!r}: {exc}") from None


def _format_axis(axis: Optional[AxisSpec]) -> str:
    if axis is None:
        return ""
    return f"{axis.name}:{repr(axis.start)}:{repr(axis.stop)}:{axis.steps}"


_BOOL_WORDS = {
    "true": True,
    "yes": True,
    "on": True,
    "1": True,
    "false": False,
    "no": False,
    "off": False,
    "0": False,
}


def _parse_value(tag: str, raw: str):
    raw = raw.strip()
    if tag == "float":
        return float(raw)
    if tag == "int":
        return int(raw)
    if tag == "bool":
        try:
            return _BOOL_WORDS[raw.lower()]
        except KeyError:
            raise ConfigError(f"expected a boolean, got {raw!r}") from None
    if tag == "str":
        return raw
    if tag == "floats":
        return tuple(float(p) for p in raw.split(",") if p.strip())
    if tag == "ints":
        return tuple(int(p) for p in raw.split(",") if p.strip())
    if tag == "optfloat":
        return float(raw) if raw else None
    if tag == "axis":
        return _parse_axis(raw)
    if tag == "optaxis":
        return _parse_axis(raw) if raw else None
    if tag == "formats":
        chosen = tuple(sorted({p.strip() for p in raw.split(",") if p.strip()}))
        bad = [c for c in chosen if c not in _FORMATS]
        if bad or not chosen:
            raise ConfigError(
                f"formats must be a non-empty subset of {','.join(_FORMATS)}, "
                f"got {raw!r}"
            )
        return chosen
    if tag.startswith("choice:"):
        allowed = tag.split(":", 1)[1].split("|")
        if raw not in allowed:
            raise ConfigError(f"expected one of {allowed}, got {raw!r}")
        return raw
    raise AssertionError(f"unhandled schema tag {tag}")


def _format_value(tag: str, value) -> str:
    if tag == "float":
        return repr(float(value))
    if tag == "int":
        return str(int(value))
    if tag == "bool":
        return "true" if value else "false"
    if tag in ("str",) or tag.startswith("choice:"):
        return str(value)
    if tag == "floats":
        return ",".join(repr(float(v)) for v in value)
    if tag == "ints":
        return ",".join(str(int(v)) for v in value)
    if tag == "optfloat":
        return "" if value is None else repr(float(value))
    if tag in ("axis", "optaxis"):
        return _format_axis(value)
    if tag == "formats":
        return ",".join(value)
    raise AssertionError(f"unhandled schema tag {tag}")


def _line_context(text: str, section: str, key: str) -> str:
    """Locate ``key`` inside ``[section]`` in raw INI text for error messages."""
    current = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1].strip()
            if key == "":
                if current == section:
                    return f"line {lineno}: {line.strip()}"
            continue
        if current == section and stripped and not stripped.startswith(("#", ";")):
            name = stripped.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return f"line {lineno}: {line.strip()}"
    return "line unknown"


@dataclass(frozen=True)
class RunConfig:
    """A fully resolved run configuration (every schema key has a value)."""

    entries: tuple  # ((section, key, value), ...) in schema order

    def get(self, section: str, key: str):
        for s, k, v in self.entries:
            if s == section and k == key:
                return v
        raise KeyError(f"[{section}] {key}")

    # ------------------------------------------------------------------
    # derived domain objects

    @property
    def experiment(self) -> str:
        return self.get("experiment", "name")

    @property
    def params(self) -> ModelParams:
        drive_q = None
        if self.get("drive_q", "enabled"):
            drive_q = QubitDrive(
                amplitude=self.get("drive_q", "amplitude"),
                frequency=self.get("drive_q", "frequency"),
            )
        drive_c = None
        if self.get("drive_c", "enabled"):
            drive_c = CavityDrive(
                amplitude=self.get("drive_c", "amplitude"),
                frequency=self.get("drive_c", "frequency"),
                waveform=self.get("drive_c", "waveform"),
            )
        return ModelParams(
            g=self.get("model", "g"),
            omega_r=self.get("model", "omega_r"),
            omega_q=self.get("model", "omega_q"),
            gamma_r=self.get("model", "gamma_r"),
            gamma_q=self.get("model", "gamma_q"),
            drive_q=drive_q,
            drive_c=drive_c,
        )

    @property
    def layout(self) -> SystemLayout:
        return SystemLayout(
            n_qubits=self.get("layout", "n_qubits"),
            fock_dim=self.get("layout", "fock_dim"),
        )

    @property
    def integration(self) -> IntegrationConfig:
        return IntegrationConfig(
            dt=self.get("integration", "dt"),
            t_max=self.get("integration", "t_max"),
            record_every=self.get("integration", "record_every"),
            steady_eps=self.get("integration", "steady_eps"),
            steady_window=self.get("integration", "steady_window"),
        )

    @property
    def sweep(self) -> SweepSpec:
        axes = [self.get("sweep", "axis1")]
        axis2 = self.get("sweep", "axis2")
        if axis2 is not None:
            axes.append(axis2)
        return SweepSpec(
            axes=tuple(axes),
            base=self.params,
            layout=self.layout,
            config=self.integration,
            tag="dnm-map",
        )

    @property
    def switch_schedule(self) -> tuple:
        freqs = self.get("switch", "frequencies")
        durs = self.get("switch", "durations")
        if len(freqs) != len(durs):
            raise ConfigError(
                f"[switch] frequencies has {len(freqs)} entries but durations "
                f"has {len(durs)}; they pair up one-to-one"
            )
        return tuple(zip(freqs, durs))

    @property
    def output_directory(self) -> str:
        return self.get("output", "directory")

    @property
    def formats(self) -> tuple:
        return self.get("output", "formats")

    # ------------------------------------------------------------------
    # echo

    def echo_mapping(self) -> dict:
        """Flat ``section.key -> formatted value`` view (for provenance)."""
        return {
            f"{s}.{k}": _format_value(_SCHEMA[(s, k)][0], v)
            for s, k, v in self.entries
        }

    def echo_text(self) -> str:
        """Render back to INI text that parses to an equal RunConfig."""
        out = io.StringIO()
        for section in _SECTION_ORDER:
            out.write(f"[{section}]\n")
            for (s, k), (tag, _, _) in _SCHEMA.items():
                if s == section:
                    out.write(f"{k} = {_format_value(tag, self.get(s, k))}\n")
            out.write("\n")
        return out.getvalue()

    def validate(self) -> "RunConfig":
        """Construct every derived object so range errors surface here."""
        for section, build in (
            ("model", lambda: self.params),
            ("layout", lambda: self.layout),
            ("integration", lambda: self.integration),
            ("sweep", lambda: self.sweep),
            ("switch", lambda: self.switch_schedule),
        ):
            try:
                build()
            except DnmSimError as exc:
                if isinstance(exc, ConfigError):
                    raise
                raise ConfigError(f"[{section}]: {exc}") from exc
        return self


def _apply_override(values: dict, spec: str) -> None:
    if "=" not in spec:
        raise ConfigError(
            f"--set needs section.key=value, got {spec!r} (no '=')"
        )
    path, raw = spec.split("=", 1)
    path = path.strip()
    if path.count(".") != 1:
        raise ConfigError(
            f"--set needs section.key=value, got {spec!r} "
            f"(the key path must contain exactly one dot)"
        )
    section, key = (p.strip() for p in path.split("."))
    if (section, key) not in _SCHEMA:
        raise ConfigError(
            f"unknown configuration key [{section}] {key} in --set {spec!r}"
        )
    tag = _SCHEMA[(section, key)][0]
    try:
        values[(section, key)] = _parse_value(tag, raw)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(f"--set {spec!r}: {exc}") from None


def parse_config(
    path: Optional[str] = None,
    overrides: Sequence[str] = (),
    *,
    text: Optional[str] = None,
) -> RunConfig:
    """Resolve defaults, an optional INI file/text, and --set overrides.

    Unknown sections or keys are rejected naming the key path and quoting
    the offending line; type and range problems carry the same context.
    """
    if path is not None and text is not None:
        raise ConfigError("pass either a path or inline text, not both")
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path!r}: {exc}") from None

    values = {
        (s, k): _parse_value(tag, default)
        for (s, k), (tag, default, _) in _SCHEMA.items()
    }

    if text:
        parser = configparser.ConfigParser(interpolation=None)
        try:
            parser.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config file: {exc}") from None
        for section in parser.sections():
            if section not in _SECTION_ORDER:
                raise ConfigError(
                    f"unknown configuration section [{section}] "
                    f"({_line_context(text, section, '')})"
                )
            for key, raw in parser.items(section):
                if (section, key) not in _SCHEMA:
                    raise ConfigError(
                        f"unknown configuration key [{section}] {key} "
                        f"({_line_context(text, section, key)})"
                    )
                tag = _SCHEMA[(section, key)][0]
                try:
                    values[(section, key)] = _parse_value(tag, raw)
                except (ValueError, ConfigError) as exc:
                    raise ConfigError(
                        f"bad value for [{section}] {key} "
                        f"({_line_context(text, section, key)}): {exc}"
                    ) from None

    for spec in overrides:
        _apply_override(values, spec)

    entries = tuple((s, k, values[(s, k)]) for (s, k) in _SCHEMA)
    return RunConfig(entries=entries).validate()


def config_schema_text() -> str:
    """Human-readable schema listing: key, default, meaning."""
    lines = ["configuration schema (every key optional; defaults shown):", ""]
    for section in _SECTION_ORDER:
        lines.append(f"[{section}]")
        for (s, k), (tag, default, help_) in _SCHEMA.items():
            if s == section:
                shown = default if default != "" else "(empty)"
                lines.append(f"  {k} = {shown}")
                lines.append(f"      {help_}")
        lines.append("")
    return "\n".join(lines)
