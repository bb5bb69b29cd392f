"""Backprojection reconstruction, the time-domain benchmark.

Matched filter of the forward model: g(r) = sum over (k, tx, rx) of
s * exp(+j k (R_T + R_R)).  No amplitude weighting, voxel-major with
antenna-inner ordering, so results are deterministic and the operator is
the exact adjoint of simulate_echo.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .forward import flat_positions
from .imaging import ImageVolume


def backproject_at(echo, points):
    """BP evaluated at arbitrary points, shape (n,) complex."""
    tx_pos, rx_pos = flat_positions(echo.layout)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return _kernels.backproject_points(echo.flat_tx_rx(), echo.freqs.wavenumbers,
                                       tx_pos, rx_pos, pts)


def reconstruct_bp(echo, grid, config_hash=""):
    """Full-volume backprojection onto an ImageGrid."""
    vals = backproject_at(echo, grid.points())
    return ImageVolume(vals.reshape(grid.shape), grid, "bp", config_hash)


def bp_profile_1d(echo, start, direction, offsets):
    """BP along the line start + t*direction for each t in offsets.

    Returns (points, values); direction is normalized internally.
    """
    d = np.asarray(direction, dtype=float)
    norm = np.linalg.norm(d)
    if norm == 0:
        raise ValueError("direction must be nonzero")
    d = d / norm
    pts = np.asarray(start, dtype=float)[None, :] + np.asarray(offsets, dtype=float)[:, None] * d
    return pts, backproject_at(echo, pts)
