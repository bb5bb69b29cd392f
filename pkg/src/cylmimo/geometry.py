"""Cylindrical aperture geometry, antenna placement, scenes and frequency grids.

Conventions: the cylinder axis is z, angles are measured from the negative
y axis so an element at angle theta sits at (R0*sin(theta), -R0*cos(theta), z).
Angle and height grids are centered on the aperture midline (theta = 0, z = 0
for symmetric layouts), all angles in radians, all lengths in meters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .constants import C0

# max relative deviation from uniform spacing tolerated at construction
_UNIFORMITY_TOL = 1e-9
# tolerance on the sparse/dense spacing ratio being an integer
_RATIO_TOL = 1e-6


class LayoutError(ValueError):
    """Raised when an array layout violates a construction invariant."""


class SceneError(ValueError):
    """Raised when a scene violates a construction invariant."""


def _check_uniform(values, name):
    v = np.asarray(values, dtype=float)
    if v.ndim != 1 or v.size < 1:
        raise LayoutError(f"{name}: need a 1-D non-empty coordinate list")
    if v.size == 1:
        return v, 0.0
    d = np.diff(v)
    if np.any(d <= 0):
        raise LayoutError(f"{name}: values must be strictly increasing")
    spacing = (v[-1] - v[0]) / (v.size - 1)
    if np.max(np.abs(d - spacing)) > _UNIFORMITY_TOL * spacing:
        raise LayoutError(f"{name}: spacing is not uniform")
    return v, float(spacing)


def integer_spacing_ratio(a, b):
    """Return the integer ratio P >= 1 between two spacings (larger/smaller).

    Raises LayoutError when the ratio is not an integer within tolerance.
    Zero spacings (single-element axes) are treated as ratio 1.
    """
    if a == 0.0 or b == 0.0:
        return 1
    hi, lo = max(a, b), min(a, b)
    p = hi / lo
    p_int = int(round(p))
    if p_int < 1 or abs(p - p_int) > _RATIO_TOL * p_int:
        raise LayoutError(
            f"spacing ratio {p:.6g} is not a positive integer (zero-filling "
            f"requires the sparse spacing to be an integer multiple of the dense one)"
        )
    return p_int


@dataclass(frozen=True)
class FrequencyGrid:
    """Stepped-frequency grid with derived wavenumbers k = 2*pi*f/c."""

    start_hz: float
    stop_hz: float
    count: int

    def __post_init__(self):
        if not (self.stop_hz > self.start_hz > 0):
            raise ValueError("need stop_hz > start_hz > 0")
        if self.count < 1:
            raise ValueError("count must be positive")

    @property
    def frequencies(self):
        return np.linspace(self.start_hz, self.stop_hz, self.count)

    @property
    def wavenumbers(self):
        return 2.0 * math.pi * self.frequencies / C0

    @property
    def center_wavenumber(self):
        k = self.wavenumbers
        return 0.5 * (k[0] + k[-1])

    @property
    def center_wavelength(self):
        return 2.0 * math.pi / self.center_wavenumber

    @property
    def bandwidth(self):
        return self.stop_hz - self.start_hz


@dataclass(frozen=True)
class ArrayLayout:
    """Transmit/receive element grids on a cylinder of radius radius_R0.

    Angles are element angles theta (rad), heights are element z (m).  Each
    axis must be strictly increasing and uniformly spaced; the tx/rx spacing
    ratio along each axis must be a positive integer (checked here because
    zero-filling in the reconstruction depends on it).
    """

    radius_R0: float
    tx_angles: np.ndarray
    rx_angles: np.ndarray
    tx_heights: np.ndarray
    rx_heights: np.ndarray
    tx_spacing_z: float = field(init=False)
    rx_spacing_z: float = field(init=False)
    tx_spacing_theta: float = field(init=False)
    rx_spacing_theta: float = field(init=False)

    def __post_init__(self):
        if not self.radius_R0 > 0:
            raise LayoutError("radius_R0 must be positive")
        ta, dta = _check_uniform(self.tx_angles, "tx_angles")
        ra, dra = _check_uniform(self.rx_angles, "rx_angles")
        th, dth = _check_uniform(self.tx_heights, "tx_heights")
        rh, drh = _check_uniform(self.rx_heights, "rx_heights")
        for name, arr in (("tx_angles", ta), ("rx_angles", ra),
                          ("tx_heights", th), ("rx_heights", rh)):
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "tx_spacing_theta", dta)
        object.__setattr__(self, "rx_spacing_theta", dra)
        object.__setattr__(self, "tx_spacing_z", dth)
        object.__setattr__(self, "rx_spacing_z", drh)
        # raises when the ratio is not an integer
        integer_spacing_ratio(dth, drh)
        integer_spacing_ratio(dta, dra)

    @classmethod
    def centered(cls, radius_R0, n_theta_tx, dtheta_tx, n_theta_rx, dtheta_rx,
                 n_z_tx, dz_tx, n_z_rx, dz_rx, arc_spacing=False):
        """Build a layout with both arrays centered on theta = 0, z = 0.

        With arc_spacing=True the angular spacings are interpreted as arc
        lengths (m) and converted via dtheta = arc / R0.
        """
        if arc_spacing:
            dtheta_tx = dtheta_tx / radius_R0
            dtheta_rx = dtheta_rx / radius_R0

        def grid(n, d):
            return (np.arange(n) - (n - 1) / 2.0) * d

        return cls(radius_R0=radius_R0,
                   tx_angles=grid(n_theta_tx, dtheta_tx),
                   rx_angles=grid(n_theta_rx, dtheta_rx),
                   tx_heights=grid(n_z_tx, dz_tx),
                   rx_heights=grid(n_z_rx, dz_rx))

    @property
    def tx_spacing_arc(self):
        return self.radius_R0 * self.tx_spacing_theta

    @property
    def rx_spacing_arc(self):
        return self.radius_R0 * self.rx_spacing_theta

    def n_tx(self):
        return len(self.tx_angles) * len(self.tx_heights)

    def n_rx(self):
        return len(self.rx_angles) * len(self.rx_heights)


def antenna_position(layout, side, angle_index, height_index):
    """Cartesian (x, y, z) of one element; side is 'tx' or 'rx'."""
    if side == "tx":
        angles, heights = layout.tx_angles, layout.tx_heights
    elif side == "rx":
        angles, heights = layout.rx_angles, layout.rx_heights
    else:
        raise ValueError(f"side must be 'tx' or 'rx', got {side!r}")
    if not (0 <= angle_index < len(angles)):
        raise IndexError(f"angle_index {angle_index} out of range")
    if not (0 <= height_index < len(heights)):
        raise IndexError(f"height_index {height_index} out of range")
    th = angles[angle_index]
    r0 = layout.radius_R0
    return (r0 * math.sin(th), -r0 * math.cos(th), heights[height_index])


def side_positions(layout, side):
    """All element positions of one side, shape (n_theta, n_z, 3)."""
    angles = layout.tx_angles if side == "tx" else layout.rx_angles
    heights = layout.tx_heights if side == "tx" else layout.rx_heights
    r0 = layout.radius_R0
    pos = np.empty((len(angles), len(heights), 3))
    pos[:, :, 0] = (r0 * np.sin(angles))[:, None]
    pos[:, :, 1] = (-r0 * np.cos(angles))[:, None]
    pos[:, :, 2] = heights[None, :]
    return pos


def two_way_distance(tx_pos, rx_pos, target_pos):
    """R_T + R_R: transmit-to-target plus target-to-receive path length."""
    t = np.asarray(target_pos, dtype=float)
    rt = float(np.linalg.norm(t - np.asarray(tx_pos, dtype=float)))
    rr = float(np.linalg.norm(t - np.asarray(rx_pos, dtype=float)))
    return rt + rr


@dataclass(frozen=True)
class Scene:
    """Ideal point scatterers: positions (n, 3) and complex reflectivities (n,)."""

    positions: np.ndarray
    reflectivities: np.ndarray

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.positions, dtype=float))
        if pos.size == 0:
            pos = pos.reshape(0, 3)
        refl = np.atleast_1d(np.asarray(self.reflectivities, dtype=complex))
        if pos.shape[1:] != (3,) or refl.shape != (pos.shape[0],):
            raise SceneError("positions must be (n, 3) with matching reflectivities")
        if not (np.all(np.isfinite(pos)) and np.all(np.isfinite(refl))):
            raise SceneError("scene contains non-finite values")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "reflectivities", refl)

    def __len__(self):
        return self.positions.shape[0]

    def validate_inside(self, radius_R0):
        """Reject scatterers at or outside the aperture radius (rho >= R0)."""
        if len(self) == 0:
            return
        rho = np.hypot(self.positions[:, 0], self.positions[:, 1])
        if np.any(rho >= radius_R0):
            raise SceneError("scatterer outside the cylinder interior (rho >= R0)")

    @classmethod
    def empty(cls):
        return cls(np.zeros((0, 3)), np.zeros(0, dtype=complex))


def load_scene(path):
    """Read a scene file: one 'x,y,z,re,im' line per scatterer, '#' comments."""
    pos, refl = [], []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) != 5:
                raise SceneError(f"{path}:{lineno}: expected 'x,y,z,re,im'")
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise SceneError(f"{path}:{lineno}: {exc}") from exc
            pos.append(vals[:3])
            refl.append(complex(vals[3], vals[4]))
    if not pos:
        return Scene.empty()
    return Scene(np.array(pos), np.array(refl))


def save_scene(path, scene):
    with open(path, "w") as fh:
        fh.write("# x,y,z,re,im (SI units)\n")
        for p, g in zip(scene.positions, scene.reflectivities):
            fh.write("%.17g,%.17g,%.17g,%.17g,%.17g\n"
                     % (p[0], p[1], p[2], g.real, g.imag))
