"""Image volumes and Cartesian reconstruction grids shared by both
reconstruction methods."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ImageGrid:
    """Uniform Cartesian grid given by per-axis centers, spacings and counts."""

    center: tuple
    spacing: tuple
    shape: tuple

    def __post_init__(self):
        if len(self.center) != 3 or len(self.spacing) != 3 or len(self.shape) != 3:
            raise ValueError("center, spacing and shape must have 3 entries")
        if any(s <= 0 for s in self.spacing) or any(n < 1 for n in self.shape):
            raise ValueError("spacings must be positive, counts >= 1")

    def axis(self, i):
        n = self.shape[i]
        return self.center[i] + (np.arange(n) - (n - 1) / 2.0) * self.spacing[i]

    @property
    def x(self):
        return self.axis(0)

    @property
    def y(self):
        return self.axis(1)

    @property
    def z(self):
        return self.axis(2)

    def points(self):
        """All voxel centers, shape (nx*ny*nz, 3), x-major then y then z."""
        xx, yy, zz = np.meshgrid(self.x, self.y, self.z, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])


@dataclass
class ImageVolume:
    """Complex reflectivity on an ImageGrid with provenance."""

    data: np.ndarray
    grid: ImageGrid
    method: str  # 'rma' | 'bp'
    config_hash: str = ""

    def __post_init__(self):
        if self.data.shape != self.grid.shape:
            raise ValueError("data shape does not match grid")
        if not np.all(np.isfinite(self.data.view(float))):
            raise ValueError("image contains non-finite samples")

    def peak_index(self):
        return np.unravel_index(np.argmax(np.abs(self.data)), self.data.shape)

    def peak_position(self):
        i, j, k = self.peak_index()
        return (self.grid.x[i], self.grid.y[j], self.grid.z[k])

    def normalized_magnitude(self):
        mag = np.abs(self.data)
        peak = mag.max()
        return mag / peak if peak > 0 else mag

    def profiles_through_peak(self):
        """1-D complex profiles along x, y, z through the global peak."""
        i, j, k = self.peak_index()
        return {"x": (self.grid.x, self.data[:, j, k]),
                "y": (self.grid.y, self.data[i, :, k]),
                "z": (self.grid.z, self.data[i, j, :])}
