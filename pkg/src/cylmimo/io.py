"""Deterministic on-disk artifacts: echo cubes, image volumes, CSV tables.

Binary payloads are raw little-endian float32 (re, im) pairs with a text
sidecar (`<file>.txt`) describing axes and provenance.  All writers use
fixed number formatting and no timestamps, so re-running a command with the
same inputs reproduces every output byte for byte.
"""

from __future__ import annotations

import math
import os

import numpy as np

from .arraylab import BeamPatternResult
from .forward import EchoTensor
from .geometry import ArrayLayout, FrequencyGrid
from .imaging import ImageGrid, ImageVolume

FORMAT_VERSION = 1
_DB_FLOOR = -200.0


class SidecarError(RuntimeError):
    """Missing, corrupt, or inconsistent sidecar metadata."""


def _fmt(x):
    return "%.17g" % float(x)


def _write_sidecar(path, entries):
    lines = [f"{k} = {v}" for k, v in entries]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def _read_sidecar(path):
    if not os.path.exists(path):
        raise SidecarError(f"sidecar not found: {path}")
    entries = {}
    with open(path) as f:
        for ln, raw in enumerate(f, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise SidecarError(f"{path}:{ln}: expected 'key = value'")
            key, _, value = line.partition("=")
            entries[key.strip()] = value.strip()
    return entries


def _need(entries, path, key):
    if key not in entries:
        raise SidecarError(f"{path}: missing key {key!r}")
    return entries[key]


def _need_float(entries, path, key):
    try:
        return float(_need(entries, path, key))
    except ValueError as e:
        raise SidecarError(f"{path}: bad number for {key!r}") from e


def _need_int(entries, path, key):
    v = _need_float(entries, path, key)
    if v != int(v):
        raise SidecarError(f"{path}: {key!r} must be an integer")
    return int(v)


def sidecar_path(data_path):
    return data_path + ".txt"


# ---------------------------------------------------------------------------
# echo tensors


def save_echo(path, echo):
    """Write the raw echo cube plus its sidecar; returns the sidecar path."""
    lay, fr = echo.layout, echo.freqs
    entries = [
        ("format_version", FORMAT_VERSION),
        ("kind", "echo"),
        ("radius_R0", _fmt(lay.radius_R0)),
        ("freq_start_hz", _fmt(fr.start_hz)),
        ("freq_stop_hz", _fmt(fr.stop_hz)),
        ("freq_count", fr.count),
    ]
    for name, coords in (("tx_theta", lay.tx_angles), ("rx_theta", lay.rx_angles),
                         ("tx_z", lay.tx_heights), ("rx_z", lay.rx_heights)):
        step = coords[1] - coords[0] if coords.size > 1 else 0.0
        entries += [(f"{name}_start", _fmt(coords[0])),
                    (f"{name}_step", _fmt(step)),
                    (f"{name}_count", coords.size)]
    with open(path, "wb") as f:
        f.write(np.ascontiguousarray(echo.data).astype("<c8").tobytes())
    sc = sidecar_path(path)
    _write_sidecar(sc, entries)
    return sc


def load_echo(path):
    """Read an echo cube written by save_echo."""
    sc = sidecar_path(path)
    entries = _read_sidecar(sc)
    if _need(entries, sc, "kind") != "echo":
        raise SidecarError(f"{sc}: not an echo sidecar")
    if _need_int(entries, sc, "format_version") != FORMAT_VERSION:
        raise SidecarError(f"{sc}: unsupported format version")
    axes = {}
    for name in ("tx_theta", "rx_theta", "tx_z", "rx_z"):
        start = _need_float(entries, sc, f"{name}_start")
        step = _need_float(entries, sc, f"{name}_step")
        count = _need_int(entries, sc, f"{name}_count")
        axes[name] = start + step * np.arange(count)
    layout = ArrayLayout(_need_float(entries, sc, "radius_R0"),
                         axes["tx_theta"], axes["rx_theta"],
                         axes["tx_z"], axes["rx_z"])
    freqs = FrequencyGrid(_need_float(entries, sc, "freq_start_hz"),
                          _need_float(entries, sc, "freq_stop_hz"),
                          _need_int(entries, sc, "freq_count"))
    shape = (freqs.count, axes["tx_theta"].size, axes["rx_theta"].size,
             axes["tx_z"].size, axes["rx_z"].size)
    raw = np.fromfile(path, dtype="<c8")
    if raw.size != int(np.prod(shape)):
        raise SidecarError(f"{path}: payload has {raw.size} samples, "
                           f"sidecar implies {int(np.prod(shape))}")
    return EchoTensor(raw.reshape(shape).astype(np.complex128), freqs, layout)


# ---------------------------------------------------------------------------
# image volumes


def save_image(path, vol):
    """Write volume + sidecar + range-axis MIP (PGM) + peak-profile CSVs.

    Companion files share the volume path stem: `<stem>.pgm` and
    `<stem>_profile_{x,y,z}.csv`.
    """
    g = vol.grid
    entries = [
        ("format_version", FORMAT_VERSION),
        ("kind", "image"),
        ("method", vol.method),
        ("config_hash", vol.config_hash or "-"),
    ]
    for name, triple in (("center", g.center), ("spacing", g.spacing), ("shape", g.shape)):
        for axis, v in zip("xyz", triple):
            entries.append((f"{name}_{axis}", _fmt(v) if name != "shape" else int(v)))
    with open(path, "wb") as f:
        f.write(np.ascontiguousarray(vol.data).astype("<c8").tobytes())
    _write_sidecar(sidecar_path(path), entries)

    stem = os.path.splitext(path)[0]
    mip = np.abs(vol.data).max(axis=1)  # collapse the range (y) axis
    _write_pgm(stem + ".pgm", mip)
    for axis, (coords, values) in vol.profiles_through_peak().items():
        _write_profile_csv(f"{stem}_profile_{axis}.csv", coords, np.abs(values))
    return sidecar_path(path)


def load_image(path):
    sc = sidecar_path(path)
    entries = _read_sidecar(sc)
    if _need(entries, sc, "kind") != "image":
        raise SidecarError(f"{sc}: not an image sidecar")
    if _need_int(entries, sc, "format_version") != FORMAT_VERSION:
        raise SidecarError(f"{sc}: unsupported format version")
    center = tuple(_need_float(entries, sc, f"center_{a}") for a in "xyz")
    spacing = tuple(_need_float(entries, sc, f"spacing_{a}") for a in "xyz")
    shape = tuple(_need_int(entries, sc, f"shape_{a}") for a in "xyz")
    grid = ImageGrid(center, spacing, shape)
    raw = np.fromfile(path, dtype="<c8")
    if raw.size != int(np.prod(shape)):
        raise SidecarError(f"{path}: payload has {raw.size} samples, "
                           f"sidecar implies {int(np.prod(shape))}")
    config_hash = _need(entries, sc, "config_hash")
    return ImageVolume(raw.reshape(shape).astype(np.complex128), grid,
                       _need(entries, sc, "method"),
                       "" if config_hash == "-" else config_hash)


def _write_pgm(path, image):
    """8-bit binary PGM of a nonnegative 2-D array, scaled to its maximum."""
    peak = image.max()
    scaled = np.zeros(image.shape, dtype=np.uint8)
    if peak > 0:
        scaled = np.rint(255.0 * image / peak).astype(np.uint8)
    header = f"P5\n{image.shape[1]} {image.shape[0]}\n255\n"
    with open(path, "wb") as f:
        f.write(header.encode("ascii"))
        f.write(scaled.tobytes())


# ---------------------------------------------------------------------------
# CSV tables


def _db(mag):
    return 20.0 * math.log10(mag) if mag > 10 ** (_DB_FLOOR / 20.0) else _DB_FLOOR


def _write_profile_csv(path, coords, magnitude):
    peak = magnitude.max()
    norm = magnitude / peak if peak > 0 else magnitude
    lines = ["coordinate_m,magnitude_linear,magnitude_db"]
    for c, m in zip(coords, norm):
        lines.append(f"{_fmt(c)},{_fmt(m)},{_fmt(_db(m))}")
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def save_pattern_csv(path, result):
    """Beam pattern as `coordinate_m,magnitude_linear,magnitude_db` rows."""
    _write_profile_csv(path, result.coords, result.magnitude)


def load_pattern_csv(path):
    """Read a pattern CSV back as a BeamPatternResult (method 'csv')."""
    coords, mags = [], []
    with open(path) as f:
        header = f.readline().strip()
        if header != "coordinate_m,magnitude_linear,magnitude_db":
            raise SidecarError(f"{path}: unexpected CSV header")
        for ln, line in enumerate(f, 2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise SidecarError(f"{path}:{ln}: expected 3 columns")
            try:
                coords.append(float(parts[0]))
                mags.append(float(parts[1]))
            except ValueError as e:
                raise SidecarError(f"{path}:{ln}: bad number") from e
    if not coords:
        raise SidecarError(f"{path}: no samples")
    return BeamPatternResult(np.asarray(coords), np.asarray(mags), "csv")


_METRIC_FIELDS = ("resolution_m", "pslr_db", "grating_lobe_offset_m")


def _metric_values(metrics):
    vals = (metrics.resolution, metrics.pslr, metrics.grating_lobe_offset)
    return [_fmt(v) if v is not None else "nan" for v in vals]


def save_metrics_csv(path, metrics):
    """Single data row under a `resolution_m,pslr_db,grating_lobe_offset_m` header."""
    with open(path, "w") as f:
        f.write(",".join(_METRIC_FIELDS) + "\n")
        f.write(",".join(_metric_values(metrics)) + "\n")


def save_table1_csv(path, rows):
    """All benchmark scenarios: `scenario` label plus the metric columns."""
    lines = ["scenario," + ",".join(_METRIC_FIELDS)]
    for label, _pattern, metrics in rows:
        lines.append(",".join([label] + _metric_values(metrics)))
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
