"""Experiment description and its flat ``key = value`` config file.

File format: one ``key = value`` per line, ``#`` starts a comment, lists
are written ``[a, b, c]``, bits accept ``inf``. Unknown keys are errors.
``n_cells``, ``n_users`` and ``n_antennas`` are required; everything else
has a default (physical-layer values follow the standard hexagonal
2 km / 2.4 GHz / 10 MHz setup).

=====================  =========================================  ==============
key                    meaning                                    default
=====================  =========================================  ==============
preset                 max_power_vs_sinr | antenna_cdf |          single_run
                       papr_table | single_run
n_cells                number of cells / BSs                      (required)
n_users                users per cell                             (required)
n_antennas             antennas per BS                            (required)
sinr_db                target SINR sweep in dB                    preset
bits                   DAC resolution sweep (``inf`` allowed)     preset
n_realizations         channel realizations per sweep point       preset
seed                   master seed                                0
common_channels        reuse realization r across sweep points    false
inter_bs_distance      m                                          2000
min_bs_user_distance   m                                          100
carrier_freq           Hz                                         2.4e9
bandwidth              Hz                                         1e7
noise_figure_db        dB                                         5
shadowing_std_db       dB                                         8.7
pathloss_exponent      -                                          3.5
pathloss_ref_distance  m                                          100
update                 mirror | euclidean                         mirror
step_rule              diminishing | fixed (euclidean only)       diminishing
step_scale             euclidean first-step scale                 0.1
mirror_step            initial mirror step                        1.0
outer_tol              relative change of D to stop               1e-5
gap_tol                certified duality gap to stop              1e-4
max_outer_iters        outer iteration limit                      2000
stall_iters            iterations without dual progress to stop   25
inner_tol              fixed-point relative tolerance             1e-9
inner_max_iter         fixed-point sweep limit                    10000
trace_scope            network | cell                             network
d_floor                lower bound on D relative to uniform       1e-6
papr_per_bs            PAPR inside each BS instead of network     false
=====================  =========================================  ==============
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Union

from .netgen import ConfigError, NetworkConfig
from .outer import OuterConfig
from .quant import format_bits, parse_bits

PRESETS = ("max_power_vs_sinr", "antenna_cdf", "papr_table", "single_run")

PRESET_SWEEPS = {
    "max_power_vs_sinr": dict(sinr_db=[-3.0, 0.0, 2.0, 4.0, 6.0], bits=[2.0, 3.0, math.inf], n_realizations=20),
    "antenna_cdf": dict(sinr_db=[2.0], bits=[3.0], n_realizations=1),
    "papr_table": dict(sinr_db=[2.0, -3.0], bits=[3.0], n_realizations=20),
    "single_run": dict(sinr_db=[2.0], bits=[3.0], n_realizations=1),
}

NETWORK_KEYS = (
    "n_cells", "n_users", "n_antennas", "seed",
    "inter_bs_distance", "min_bs_user_distance", "carrier_freq", "bandwidth",
    "noise_figure_db", "shadowing_std_db", "pathloss_exponent", "pathloss_ref_distance",
)
REQUIRED_KEYS = ("n_cells", "n_users", "n_antennas")
SOLVER_KEYS = tuple(f.name for f in dataclasses.fields(OuterConfig) if f.name != "warm_start")
SWEEP_KEYS = ("preset", "sinr_db", "bits", "n_realizations", "common_channels")
ALL_KEYS = SWEEP_KEYS + NETWORK_KEYS + SOLVER_KEYS

_INT_KEYS = {"n_cells", "n_users", "n_antennas", "seed", "n_realizations",
             "max_outer_iters", "stall_iters", "inner_max_iter"}
_BOOL_KEYS = {"common_channels", "papr_per_bs"}
_STR_KEYS = {"preset", "update", "step_rule", "trace_scope"}
_LIST_KEYS = {"sinr_db", "bits"}


@dataclass
class ExperimentSpec:
    """Everything needed to run one experiment reproducibly."""

    preset: str
    network: NetworkConfig
    solver: OuterConfig
    sinr_db: list
    bits: list
    n_realizations: int
    common_channels: bool = False
    values: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.preset not in PRESETS:
            raise ConfigError(f"preset: must be one of {PRESETS}, got {self.preset!r}")
        if not self.sinr_db:
            raise ConfigError("sinr_db: sweep list must not be empty")
        if not self.bits:
            raise ConfigError("bits: sweep list must not be empty")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations: must be >= 1")

    def network_for(self, sinr_db: float, bits: float) -> NetworkConfig:
        return dataclasses.replace(self.network, target_sinr_db=float(sinr_db), bits=bits)


def _parse_scalar(key: str, text: str, lineno: int) -> Any:
    text = text.strip()
    try:
        if key in _BOOL_KEYS:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if key in _STR_KEYS:
            return text.strip("\"'")
        if key == "bits":
            return parse_bits(text)
        if key in _INT_KEYS:
            v = float(text)
            if v != int(v):
                raise ValueError(text)
            return int(v)
        return float(text)
    except ValueError:
        raise ConfigError(f"line {lineno}: invalid value {text!r} for {key}") from None


def parse_text(text: str, source: str = "<config>") -> dict:
    """Parse config text into a ``{key: value}`` dict without applying defaults."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in ALL_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        if key in _LIST_KEYS:
            inner = value.strip()
            if inner.startswith("[") and inner.endswith("]"):
                inner = inner[1:-1]
            items = [s for s in (p.strip() for p in inner.split(",")) if s]
            values[key] = [_parse_scalar(key, s, lineno) for s in items]
        else:
            values[key] = _parse_scalar(key, value, lineno)
    return values


def build_spec(values: dict, preset: str | None = None) -> ExperimentSpec:
    """Validate parsed values, fill defaults and build the spec."""
    values = dict(values)
    if preset is not None:
        values["preset"] = preset
    missing = [k for k in REQUIRED_KEYS if k not in values]
    if missing:
        raise ConfigError(f"missing required field(s): {', '.join(missing)}")
    preset_name = values.get("preset", "single_run")
    if preset_name not in PRESETS:
        raise ConfigError(f"preset: must be one of {PRESETS}, got {preset_name!r}")
    sweep = PRESET_SWEEPS[preset_name]
    net_kwargs = {k: values[k] for k in NETWORK_KEYS if k in values}
    solver_kwargs = {k: values[k] for k in SOLVER_KEYS if k in values}
    sinr_db = list(values.get("sinr_db", sweep["sinr_db"]))
    bits = list(values.get("bits", sweep["bits"]))
    try:
        network = NetworkConfig(target_sinr_db=sinr_db[0] if sinr_db else 0.0,
                                bits=bits[0] if bits else 3, **net_kwargs)
        solver = OuterConfig(**solver_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    spec = ExperimentSpec(
        preset=preset_name,
        network=network,
        solver=solver,
        sinr_db=[float(x) for x in sinr_db],
        bits=bits,
        n_realizations=int(values.get("n_realizations", sweep["n_realizations"])),
        common_channels=bool(values.get("common_channels", False)),
    )
    spec.values = canonical_values(spec)
    return spec


def canonical_values(spec: ExperimentSpec) -> dict:
    """Complete ``{key: value}`` mapping of a spec, in schema order."""
    out: dict = {
        "preset": spec.preset,
        "sinr_db": list(spec.sinr_db),
        "bits": list(spec.bits),
        "n_realizations": spec.n_realizations,
        "common_channels": spec.common_channels,
    }
    for k in NETWORK_KEYS:
        out[k] = getattr(spec.network, k)
    for k in SOLVER_KEYS:
        out[k] = getattr(spec.solver, k)
    return out


def _format(key: str, value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return "[" + ", ".join(_format(key, v) for v in value) + "]"
    if key == "bits":
        return format_bits(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize(spec: ExperimentSpec) -> str:
    """Render a spec as a complete config file."""
    lines = ["# qcomp experiment config"]
    for key, value in canonical_values(spec).items():
        lines.append(f"{key} = {_format(key, value)}")
    return "\n".join(lines) + "\n"


def load(path: Union[str, Path], preset: str | None = None) -> ExperimentSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_spec(parse_text(text, source=str(path)), preset=preset)
