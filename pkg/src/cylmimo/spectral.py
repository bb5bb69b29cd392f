"""Wavenumber-domain kernels: axis-aware DFTs, zero-filling, Hankel phase
factors, spectral windows and polar-to-Cartesian resampling.

DFT convention: unnormalized forward, S(w) = sum_n s_n exp(-j w x_n), and
1/N on the inverse.  Transforms are coordinate-aware: the spatial origin of
an axis is folded into the spectrum phase so axes do not need to start at
zero, and the producing coordinates are kept on the new axis so a round
trip is exact.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

_AXIS_TOL = 1e-9

# spatial label -> wavenumber label
FOURIER_DUALS = {
    "z_T": "k_zT",
    "z_R": "k_zR",
    "theta_T": "xi_T",
    "theta_R": "xi_R",
    "x": "k_x",
    "y": "k_y",
    "z": "k_z",
}
_INVERSE_DUALS = {v: k for k, v in FOURIER_DUALS.items()}


class AxisError(ValueError):
    """Unknown, missing or non-uniform axis."""


@dataclass(frozen=True)
class Axis:
    label: str
    coords: np.ndarray
    # coordinates of the spatial axis that produced this Fourier axis;
    # kept so the inverse transform can restore them exactly
    origin_coords: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1 or c.size == 0:
            raise AxisError(f"axis {self.label}: coords must be 1-D, non-empty")
        if c.size > 1 and np.any(np.diff(c) <= 0):
            raise AxisError(f"axis {self.label}: coords must be strictly increasing")
        object.__setattr__(self, "coords", c)

    @property
    def size(self):
        return self.coords.size

    def spacing(self):
        if self.size < 2:
            raise AxisError(f"axis {self.label}: spacing undefined for size 1")
        d = np.diff(self.coords)
        step = (self.coords[-1] - self.coords[0]) / (self.size - 1)
        if np.max(np.abs(d - step)) > _AXIS_TOL * abs(step):
            raise AxisError(f"axis {self.label}: not uniformly sampled")
        return step


@dataclass
class SpectrumTensor:
    """Complex data cube with labeled, coordinate-carrying axes.

    mask, when present, flags valid cells (True) of the same shape as data;
    cells that no operation populated are invalid.
    """

    data: np.ndarray
    axes: tuple
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.axes = tuple(self.axes)
        shape = tuple(ax.size for ax in self.axes)
        if self.data.shape != shape:
            raise AxisError(f"data shape {self.data.shape} != axes shape {shape}")
        if self.mask is not None and self.mask.shape != self.data.shape:
            raise AxisError("mask shape mismatch")
        labels = [ax.label for ax in self.axes]
        if len(set(labels)) != len(labels):
            raise AxisError("duplicate axis labels")

    def axis_index(self, label):
        for i, ax in enumerate(self.axes):
            if ax.label == label:
                return i
        raise AxisError(f"no axis labeled {label!r}")

    def axis(self, label):
        return self.axes[self.axis_index(label)]

    def with_data(self, data, mask=None):
        return SpectrumTensor(data, self.axes, mask)


def dft_axis(t, label, direction):
    """Transform one axis; 'fwd' goes spatial -> wavenumber, 'inv' back.

    inverse(forward(t)) == t to machine precision; the transformed axis is
    relabeled to its Fourier dual and carries the physical coordinates.
    """
    i = t.axis_index(label)
    ax = t.axes[i]
    n = ax.size
    if direction == "fwd":
        if label not in FOURIER_DUALS:
            raise AxisError(f"axis {label!r} has no Fourier dual")
        step = ax.spacing() if n > 1 else 1.0
        w = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(n, step))
        spec = np.fft.fftshift(np.fft.fft(t.data, axis=i), axes=i)
        phase = np.exp(-1j * w * ax.coords[0])
        spec = spec * _along(phase, i, t.data.ndim)
        new_ax = Axis(FOURIER_DUALS[label], w, origin_coords=ax.coords.copy())
    elif direction == "inv":
        if label not in _INVERSE_DUALS:
            raise AxisError(f"axis {label!r} is not a wavenumber axis")
        if ax.origin_coords is not None and ax.origin_coords.size == n:
            x = ax.origin_coords
        else:
            # never forwarded: synthesize a zero-based spatial grid
            dw = ax.spacing() if n > 1 else 2.0 * np.pi
            x = np.arange(n) * (2.0 * np.pi / (n * dw))
        phase = np.exp(1j * ax.coords * x[0])
        spec = t.data * _along(phase, i, t.data.ndim)
        out = np.fft.ifft(np.fft.ifftshift(spec, axes=i), axis=i)
        new_ax = Axis(_INVERSE_DUALS[label], x)
        spec = out
    else:
        raise ValueError("direction must be 'fwd' or 'inv'")
    axes = list(t.axes)
    axes[i] = new_ax
    return SpectrumTensor(spec, tuple(axes), t.mask)


def _along(vec, axis, ndim):
    shape = [1] * ndim
    shape[axis] = vec.size
    return vec.reshape(shape)


def zero_fill(t, label, factor_P):
    """Insert P-1 zeros between successive samples along one axis."""
    if factor_P < 1 or int(factor_P) != factor_P:
        raise ValueError("factor_P must be a positive integer")
    p = int(factor_P)
    if p == 1:
        return t
    i = t.axis_index(label)
    ax = t.axes[i]
    step = ax.spacing() if ax.size > 1 else 1.0
    shape = list(t.data.shape)
    shape[i] = ax.size * p
    out = np.zeros(shape, dtype=t.data.dtype)
    sl = [slice(None)] * t.data.ndim
    sl[i] = slice(0, ax.size * p, p)
    out[tuple(sl)] = t.data
    coords = ax.coords[0] + np.arange(ax.size * p) * (step / p)
    axes = list(t.axes)
    axes[i] = Axis(ax.label, coords)
    return SpectrumTensor(out, tuple(axes))


def hankel_factor(xi, k_rho, R0):
    """Asymptotic outgoing cylindrical-wave phase factor.

    exp(j*sqrt(k_rho^2 R0^2 - xi^2)) * exp(-j*pi*xi/2) inside the
    propagating region xi^2 < (k_rho R0)^2, exactly 0 outside (evanescent).
    Accepts scalars or broadcastable arrays; |result| is 0 or 1.
    """
    xi = np.asarray(xi, dtype=float)
    k_rho = np.asarray(k_rho, dtype=float)
    if R0 <= 0:
        raise ValueError("R0 must be positive")
    x2 = (k_rho * R0) ** 2 - xi ** 2
    prop = x2 > 0
    root = np.sqrt(np.where(prop, x2, 0.0))
    out = np.where(prop, np.exp(1j * root) * np.exp(-1j * np.pi * xi / 2.0), 0.0 + 0.0j)
    if out.ndim == 0:
        return complex(out)
    return out


def support_bound_kz(R0, L, D, k):
    """Half-extent of the true kz spectrum of a target of size D seen by an
    aperture of length L at radius R0: k * (L+D)/2 / sqrt(R0^2 + (L+D)^2/4)."""
    if R0 <= 0 or L < 0 or D < 0 or k <= 0:
        raise ValueError("need R0 > 0, k > 0, L >= 0, D >= 0")
    half = 0.5 * (L + D)
    return k * half / np.sqrt(R0 ** 2 + half ** 2)


@dataclass(frozen=True)
class SpectralWindow:
    """Per-axis pass bands with a rectangular or raised-cosine taper."""

    bands: dict  # axis label -> (lo, hi)
    taper: str = "rect"  # 'rect' | 'cos'
    rolloff: float = 0.0  # fraction of band half-width used for the cosine ramp

    def __post_init__(self):
        for label, (lo, hi) in self.bands.items():
            if not lo < hi:
                raise ValueError(f"window on {label}: need lo < hi")
        if self.taper not in ("rect", "cos"):
            raise ValueError("taper must be 'rect' or 'cos'")
        if not 0.0 <= self.rolloff <= 0.5:
            raise ValueError("rolloff fraction must lie in [0, 0.5]")

    def weights(self, coords, label):
        lo, hi = self.bands[label]
        w = ((coords >= lo) & (coords <= hi)).astype(float)
        if self.taper == "cos" and self.rolloff > 0.0:
            ramp = self.rolloff * (hi - lo)
            rise = (coords >= lo) & (coords < lo + ramp)
            fall = (coords > hi - ramp) & (coords <= hi)
            w[rise] = 0.5 * (1 - np.cos(np.pi * (coords[rise] - lo) / ramp))
            w[fall] = 0.5 * (1 - np.cos(np.pi * (hi - coords[fall]) / ramp))
        return w


def apply_window(t, window):
    """Scale samples outside each pass band to zero (or taper them)."""
    data = t.data
    for label in window.bands:
        i = t.axis_index(label)
        coords = t.axes[i].coords
        w = window.weights(coords, label)
        if not np.any(w > 0):
            raise ValueError(f"window on {label} is disjoint from the axis range")
        data = data * _along(w, i, data.ndim)
    return t.with_data(data, t.mask)


def polar_bilinear_weights(rho_nodes, theta_nodes, kx_grid, ky_grid):
    """Bilinear interpolation table from a polar grid onto Cartesian points.

    Target point (kx, ky) maps to (rho, phi) with kx = rho*sin(phi),
    ky = -rho*cos(phi).  Returns (i0, wr, p0, wt, valid) arrays of shape
    (len(kx_grid), len(ky_grid)): lower bracketing node indices, weights of
    the lower node, and a validity flag (False where the preimage leaves the
    sampled polar region).  rho_nodes may be non-uniform but must increase.
    """
    rho_nodes = np.asarray(rho_nodes, dtype=float)
    theta_nodes = np.asarray(theta_nodes, dtype=float)
    kx = np.asarray(kx_grid, dtype=float)[:, None]
    ky = np.asarray(ky_grid, dtype=float)[None, :]
    rho = np.hypot(kx, ky)
    phi = np.arctan2(kx, -ky)

    shape = np.broadcast_shapes(rho.shape, phi.shape)
    rho = np.broadcast_to(rho, shape)
    phi = np.broadcast_to(phi, shape)

    valid = np.ones(shape, dtype=bool)
    if rho_nodes.size < 2 or theta_nodes.size < 2:
        return (np.zeros(shape, np.int64), np.zeros(shape), np.zeros(shape, np.int64),
                np.zeros(shape), np.zeros(shape, dtype=bool))

    valid &= (rho >= rho_nodes[0]) & (rho <= rho_nodes[-1])
    valid &= (phi >= theta_nodes[0]) & (phi <= theta_nodes[-1])

    i0 = np.clip(np.searchsorted(rho_nodes, rho, side="right") - 1, 0, rho_nodes.size - 2)
    p0 = np.clip(np.searchsorted(theta_nodes, phi, side="right") - 1, 0, theta_nodes.size - 2)
    dr = rho_nodes[i0 + 1] - rho_nodes[i0]
    wr = 1.0 - (rho - rho_nodes[i0]) / dr
    dt = theta_nodes[p0 + 1] - theta_nodes[p0]
    wt = 1.0 - (phi - theta_nodes[p0]) / dt
    wr = np.where(valid, np.clip(wr, 0.0, 1.0), 0.0)
    wt = np.where(valid, np.clip(wt, 0.0, 1.0), 0.0)
    return i0, wr, p0, wt, valid


def interp_polar_to_cartesian(t, which, kx_grid, ky_grid):
    """Resample a (k_rho, theta) pair of axes onto a Cartesian (kx, ky) grid.

    which is 'T' or 'R'; the tensor must carry axes 'k_rho{which}' and
    'theta_{which}'.  Bilinear interpolation; output cells whose polar
    preimage falls outside the sampled region are exactly 0 and flagged
    invalid in the returned mask.
    """
    if which not in ("T", "R"):
        raise ValueError("which must be 'T' or 'R'")
    rho_label = f"k_rho{which}"
    th_label = f"theta_{which}"
    ir = t.axis_index(rho_label)
    it = t.axis_index(th_label)
    rho_nodes = t.axes[ir].coords
    th_nodes = t.axes[it].coords

    i0, wr, p0, wt, valid = polar_bilinear_weights(rho_nodes, th_nodes, kx_grid, ky_grid)
    if not np.any(valid):
        raise ValueError("output grid has no overlap with the sampled polar region")

    # move (rho, theta) axes to the front for gathering
    data = np.moveaxis(t.data, (ir, it), (0, 1))
    rest = data.shape[2:]
    out = np.zeros((len(kx_grid), len(ky_grid)) + rest, dtype=t.data.dtype)
    for da in (0, 1):
        for db in (0, 1):
            w = (wr if da == 0 else 1.0 - wr) * (wt if db == 0 else 1.0 - wt)
            vals = data[i0 + da, p0 + db]  # (nx, ny) + rest
            out += np.where(valid, w, 0.0).reshape(w.shape + (1,) * len(rest)) * vals

    axes = [ax for j, ax in enumerate(t.axes) if j not in (ir, it)]
    suffix = which
    new_axes = (Axis(f"k_x{suffix}", np.asarray(kx_grid, dtype=float)),
                Axis(f"k_y{suffix}", np.asarray(ky_grid, dtype=float))) + tuple(axes)
    mask = np.broadcast_to(valid.reshape(valid.shape + (1,) * len(rest)),
                           out.shape).copy()
    return SpectrumTensor(out, new_axes, mask)
