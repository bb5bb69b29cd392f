"""Experiment configuration: flat `key = value` text with `[section]` headers.

All lengths are in meters, frequencies in Hz, angles in radians.  Parsing
and validation happen before any computation, and validation messages name
the violated design criterion (grid matching, vertical Nyquist sampling,
angular sampling bound) so configs can be fixed without reading code.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .arraylab import angular_sampling_bound, nyquist_spacing
from .geometry import ArrayLayout, FrequencyGrid, LayoutError, integer_spacing_ratio
from .imaging import ImageGrid
from .rma import RmaConfig

FORMAT_VERSION = 1


class ConfigError(ValueError):
    """Unparseable or invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    """Everything one experiment run needs, minus the command name."""

    radius_R0: float
    tx_count_theta: int
    tx_spacing_theta: float
    rx_count_theta: int
    rx_spacing_theta: float
    tx_count_z: int
    tx_spacing_z: float
    rx_count_z: int
    rx_spacing_z: float
    freq_start_hz: float
    freq_stop_hz: float
    freq_count: int
    scene_file: str
    output_dir: str
    method: str = "rma"
    grid_center: tuple = (0.0, 0.0, 0.0)
    grid_spacing: tuple = (0.005, 0.005, 0.005)
    grid_shape: tuple = (64, 64, 64)
    spectrum_filter: bool = True
    oversample: float = 2.0
    evanescent_guard: float = 0.95
    noise_sigma: float = 0.0
    seed: int = 0
    format_version: int = FORMAT_VERSION

    def layout(self):
        return ArrayLayout.centered(
            self.radius_R0,
            self.tx_count_theta, self.tx_spacing_theta,
            self.rx_count_theta, self.rx_spacing_theta,
            self.tx_count_z, self.tx_spacing_z,
            self.rx_count_z, self.rx_spacing_z)

    def frequency_grid(self):
        return FrequencyGrid(self.freq_start_hz, self.freq_stop_hz, self.freq_count)

    def image_grid(self):
        return ImageGrid(self.grid_center, self.grid_spacing, self.grid_shape)

    def rma_config(self):
        return RmaConfig(self.image_grid(),
                         spectrum_filter=self.spectrum_filter,
                         oversample=self.oversample,
                         evanescent_guard=self.evanescent_guard)


# map of section -> key -> converter; grid triples expand to one flat key
# per axis to keep the format line-oriented
_SCHEMA = {
    "": {"format_version": int},
    "array": {
        "radius_R0": float,
        "tx_count_theta": int, "tx_spacing_theta": float,
        "rx_count_theta": int, "rx_spacing_theta": float,
        "tx_count_z": int, "tx_spacing_z": float,
        "rx_count_z": int, "rx_spacing_z": float,
    },
    "frequency": {"start_hz": float, "stop_hz": float, "count": int},
    "scene": {"file": str},
    "reconstruction": {
        "method": str,
        "center_x": float, "center_y": float, "center_z": float,
        "spacing_x": float, "spacing_y": float, "spacing_z": float,
        "shape_x": int, "shape_y": int, "shape_z": int,
        "spectrum_filter": bool, "oversample": float, "evanescent_guard": float,
    },
    "noise": {"sigma": float, "seed": int},
    "output": {"directory": str},
    "beampattern": {
        "length_L": float, "radius_R0": float, "frequency_hz": float,
        "method": str, "zero_fill": bool, "spectrum_filter": bool,
        "spacing": float, "role": str,
        "tx_spacing": float, "rx_spacing": float,
    },
}

_REQUIRED = {
    ("array", k) for k in _SCHEMA["array"]
} | {("frequency", k) for k in _SCHEMA["frequency"]} | {
    ("scene", "file"), ("output", "directory")}


def _convert(section, key, value, conv, path, ln):
    try:
        if conv is bool:
            if value.lower() in ("1", "true", "yes"):
                return True
            if value.lower() in ("0", "false", "no"):
                return False
            raise ValueError(value)
        if conv is int:
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        return conv(value)
    except ValueError as e:
        raise ConfigError(f"{path}:{ln}: bad value for [{section}] {key}: {value!r}") from e


def _parse_file(path):
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    values = {}
    section = ""
    with open(path) as f:
        for ln, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                if section not in _SCHEMA:
                    raise ConfigError(f"{path}:{ln}: unknown section [{section}]")
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected 'key = value'")
            key, _, value = line.partition("=")
            key, value = key.strip(), value.strip()
            schema = _SCHEMA.get(section, {})
            if key not in schema:
                raise ConfigError(f"{path}:{ln}: unknown key {key!r} in section [{section}]")
            values[(section, key)] = _convert(section, key, value, schema[key], path, ln)
    return values


def parse_beampattern(path):
    """Read the [beampattern] section into a plain dict of validated keys."""
    values = _parse_file(path)
    out = {k: v for (s, k), v in values.items() if s == "beampattern"}
    for key in ("length_L", "radius_R0", "frequency_hz"):
        if key not in out:
            raise ConfigError(f"{path}: missing required key [beampattern] {key}")
    single = "spacing" in out or "role" in out
    pair = "tx_spacing" in out or "rx_spacing" in out
    if single == pair:
        raise ConfigError(f"{path}: give either [beampattern] spacing+role "
                          "or tx_spacing+rx_spacing")
    if single and ("spacing" not in out or "role" not in out):
        raise ConfigError(f"{path}: [beampattern] spacing and role go together")
    if pair and ("tx_spacing" not in out or "rx_spacing" not in out):
        raise ConfigError(f"{path}: [beampattern] tx_spacing and rx_spacing go together")
    out.setdefault("method", "bp")
    out.setdefault("zero_fill", False)
    out.setdefault("spectrum_filter", False)
    return out


def parse_config(path):
    """Read and cross-validate a config file into an ExperimentConfig."""
    values = _parse_file(path)
    missing = sorted(_REQUIRED - set(values))
    if missing:
        names = ", ".join(f"[{s}] {k}" for s, k in missing)
        raise ConfigError(f"{path}: missing required keys: {names}")

    def get(section, key, default=None):
        return values.get((section, key), default)

    kwargs = dict(
        radius_R0=get("array", "radius_R0"),
        tx_count_theta=get("array", "tx_count_theta"),
        tx_spacing_theta=get("array", "tx_spacing_theta"),
        rx_count_theta=get("array", "rx_count_theta"),
        rx_spacing_theta=get("array", "rx_spacing_theta"),
        tx_count_z=get("array", "tx_count_z"),
        tx_spacing_z=get("array", "tx_spacing_z"),
        rx_count_z=get("array", "rx_count_z"),
        rx_spacing_z=get("array", "rx_spacing_z"),
        freq_start_hz=get("frequency", "start_hz"),
        freq_stop_hz=get("frequency", "stop_hz"),
        freq_count=get("frequency", "count"),
        scene_file=get("scene", "file"),
        output_dir=get("output", "directory"),
        format_version=get("", "format_version", FORMAT_VERSION),
    )
    if kwargs["format_version"] != FORMAT_VERSION:
        raise ConfigError(f"{path}: unsupported format_version {kwargs['format_version']}")
    if ("reconstruction", "method") in values:
        kwargs["method"] = get("reconstruction", "method")
    for name, default in (("center", (0.0, 0.0, 0.0)),
                          ("spacing", (0.005, 0.005, 0.005)),
                          ("shape", (64, 64, 64))):
        triple = tuple(get("reconstruction", f"{name}_{a}", d)
                       for a, d in zip("xyz", default))
        kwargs[f"grid_{name}"] = triple
    for key in ("spectrum_filter", "oversample", "evanescent_guard"):
        if ("reconstruction", key) in values:
            kwargs[key] = get("reconstruction", key)
    kwargs["noise_sigma"] = get("noise", "sigma", 0.0)
    kwargs["seed"] = get("noise", "seed", 0)

    cfg = ExperimentConfig(**kwargs)
    # resolve the scene path relative to the config file
    base = os.path.dirname(os.path.abspath(path))
    if not os.path.isabs(cfg.scene_file):
        cfg.scene_file = os.path.join(base, cfg.scene_file)
    validate_config(cfg)
    return cfg


def validate_config(cfg):
    """Cross-checks that must hold before any computation starts."""
    if cfg.method not in ("rma", "bp"):
        raise ConfigError(f"method must be 'rma' or 'bp', got {cfg.method!r}")
    if not os.path.exists(cfg.scene_file):
        raise ConfigError(f"scene file not found: {cfg.scene_file}")
    # grid matching: the sparse/dense spacing ratio must be an integer on
    # both aperture directions, otherwise zero-filling cannot put the
    # transmit and receive spectra on one wavenumber grid (checked before
    # the layout is built, which enforces the same rule with a terser error)
    for name, a, b in (("vertical", cfg.tx_spacing_z, cfg.rx_spacing_z),
                       ("angular", cfg.tx_spacing_theta, cfg.rx_spacing_theta)):
        try:
            integer_spacing_ratio(a, b)
        except LayoutError as e:
            raise ConfigError(
                f"grid matching: {name} spacings {a} and {b} have a "
                "non-integer ratio, so the transmit and receive spectra "
                "cannot share one wavenumber grid") from e

    try:
        layout = cfg.layout()
        freqs = cfg.frequency_grid()
        grid = cfg.image_grid()
    except (LayoutError, ValueError) as e:
        raise ConfigError(str(e)) from e

    lambda0 = freqs.center_wavelength
    extent_z = grid.spacing[2] * grid.shape[2]
    extent_xy = grid.spacing[0] * grid.shape[0]

    # vertical Nyquist sampling of the dense z subarray
    dense_dz = min(cfg.tx_spacing_z, cfg.rx_spacing_z)
    dense_nz = cfg.rx_count_z if cfg.rx_spacing_z <= cfg.tx_spacing_z else cfg.tx_count_z
    lz = dense_dz * (dense_nz - 1)
    if lz > 0:
        bound = nyquist_spacing(lambda0, cfg.radius_R0, lz, extent_z)
        if dense_dz > bound + 1e-12:
            raise ConfigError(
                f"vertical Nyquist sampling: dense spacing {dense_dz:.6g} m "
                f"exceeds the alias-free bound {bound:.6g} m for this "
                "aperture and target extent")

    # angular sampling bound of the dense arc subarray
    dense_dth = min(cfg.tx_spacing_theta, cfg.rx_spacing_theta)
    if extent_xy > 0:
        bound = angular_sampling_bound(lambda0, extent_xy)
        if dense_dth > bound + 1e-12:
            raise ConfigError(
                f"angular sampling bound: dense angular step {dense_dth:.6g} rad "
                f"exceeds the alias-free bound {bound:.6g} rad for target "
                f"extent {extent_xy:.6g} m")

    return cfg
