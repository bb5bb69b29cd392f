"""Synthetic multistatic echo generation for point-scatterer scenes.

Each sample is sum_s g_s * exp(-j k (R_T + R_R)) -- phase-only propagation,
no 1/R amplitude decay, so the forward model, backprojection and the
wavenumber reconstruction share one consistent convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import ArrayLayout, FrequencyGrid, Scene, side_positions


class EchoAxisError(ValueError):
    """Echo tensors with mismatched axes cannot be combined."""


@dataclass
class EchoTensor:
    """5-D data cube s[k, theta_T, theta_R, z_T, z_R] plus its axes."""

    data: np.ndarray
    freqs: FrequencyGrid
    layout: ArrayLayout

    def __post_init__(self):
        expect = (self.freqs.count, len(self.layout.tx_angles),
                  len(self.layout.rx_angles), len(self.layout.tx_heights),
                  len(self.layout.rx_heights))
        if self.data.shape != expect:
            raise EchoAxisError(f"echo shape {self.data.shape} != layout/freq shape {expect}")
        if not np.all(np.isfinite(self.data.view(float))):
            raise EchoAxisError("echo contains non-finite samples")

    @property
    def shape(self):
        return self.data.shape

    def axes_equal(self, other):
        return (self.freqs == other.freqs
                and self.layout.radius_R0 == other.layout.radius_R0
                and np.array_equal(self.layout.tx_angles, other.layout.tx_angles)
                and np.array_equal(self.layout.rx_angles, other.layout.rx_angles)
                and np.array_equal(self.layout.tx_heights, other.layout.tx_heights)
                and np.array_equal(self.layout.rx_heights, other.layout.rx_heights))

    def flat_tx_rx(self):
        """View of the data as (nk, n_tx, n_rx), tx = (theta, z) row-major."""
        nk, nat, nar, nzt, nzr = self.data.shape
        return self.data.transpose(0, 1, 3, 2, 4).reshape(nk, nat * nzt, nar * nzr)


def flat_positions(layout):
    """(tx_pos, rx_pos) as (n, 3) arrays, (theta, z) row-major ordering."""
    tx = side_positions(layout, "tx").reshape(-1, 3)
    rx = side_positions(layout, "rx").reshape(-1, 3)
    return tx, rx


def simulate_echo(scene, layout, freqs):
    """Simulate the multistatic echo of a point-scatterer scene."""
    scene.validate_inside(layout.radius_R0)
    tx_pos, rx_pos = flat_positions(layout)
    flat = _kernels.simulate_echo_flat(freqs.wavenumbers, tx_pos, rx_pos,
                                       scene.positions, scene.reflectivities)
    nk = freqs.count
    nat, nzt = len(layout.tx_angles), len(layout.tx_heights)
    nar, nzr = len(layout.rx_angles), len(layout.rx_heights)
    data = flat.reshape(nk, nat, nzt, nar, nzr).transpose(0, 1, 3, 2, 4)
    return EchoTensor(np.ascontiguousarray(data), freqs, layout)


def superpose(e1, e2):
    """Elementwise sum of two echoes over identical axes."""
    if not e1.axes_equal(e2):
        raise EchoAxisError("echo axes differ")
    return EchoTensor(e1.data + e2.data, e1.freqs, e1.layout)


def add_noise(echo, sigma, seed):
    """Additive complex Gaussian noise with a seedable generator (CLI option)."""
    rng = np.random.default_rng(seed)
    shape = echo.data.shape
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return EchoTensor(echo.data + sigma / np.sqrt(2.0) * noise, echo.freqs, echo.layout)
