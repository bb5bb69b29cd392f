"""Cylindrical wavenumber-domain (range migration) reconstruction.

Stage order: vertical spectra (with zero-filling of the sparse vertical
axis) -> angular deconvolution of the cylindrical phase factors ->
frequency dimension increase k = k_T + k_R -> polar-to-Cartesian
interpolation of both sides on a shared grid -> dimension reduction onto
(k_x, k_y, k_z) -> support filtering -> 3-D inverse transform.

Sign conventions: with the echo phase exp(-j k (R_T + R_R)) and forward
DFTs exp(-j w u) along the apertures, the spectra carry
exp(-j(k_rho*rho + k_z*z0)) per side.  Deconvolving the outgoing
cylindrical wave therefore multiplies by exp(+j sqrt(k_rho^2 R0^2 - xi^2))
(the conjugate phase), leaving G with exp(+j(k_x x0 + k_y y0)) transverse
and exp(-j k_z z0) vertical phases; the final transform uses matching
per-axis signs so a scatterer focuses at its true position.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import integer_spacing_ratio
from .imaging import ImageGrid, ImageVolume
from .spectral import (Axis, SpectralWindow, SpectrumTensor, apply_window,
                       dft_axis, support_bound_kz, zero_fill)


class PipelineError(RuntimeError):
    """Numeric failure inside the reconstruction pipeline."""


@dataclass
class RmaConfig:
    """Knobs of the wavenumber reconstruction."""

    grid: ImageGrid
    zero_fill_P_vertical: int | None = None  # None: derive from layout spacings
    zero_fill_P_arc: int | None = None
    spectrum_filter: bool = True
    evanescent_guard: float = 0.95
    oversample: float = 2.0
    target_extent_xy: float | None = None  # D in the arc-direction support bound
    target_extent_z: float | None = None

    def __post_init__(self):
        if not 0.0 < self.evanescent_guard <= 1.0:
            raise ValueError("evanescent_guard must lie in (0, 1]")
        if self.oversample <= 0:
            raise ValueError("oversample must be positive")

    def extent_xy(self):
        if self.target_extent_xy is not None:
            return self.target_extent_xy
        return self.grid.spacing[0] * self.grid.shape[0]

    def extent_z(self):
        if self.target_extent_z is not None:
            return self.target_extent_z
        return self.grid.spacing[2] * self.grid.shape[2]


def _next_pow2(n):
    return 1 << max(0, (int(n) - 1)).bit_length()


def echo_to_tensor(echo):
    """Wrap an EchoTensor as a labeled SpectrumTensor."""
    lay, fr = echo.layout, echo.freqs
    axes = (Axis("k", fr.wavenumbers),
            Axis("theta_T", lay.tx_angles),
            Axis("theta_R", lay.rx_angles),
            Axis("z_T", lay.tx_heights),
            Axis("z_R", lay.rx_heights))
    return SpectrumTensor(np.asarray(echo.data, dtype=np.complex128), axes)


def _pad_axis(t, label, n_new, centered=True):
    """Zero-pad one spatial axis to n_new samples, extending its coordinates."""
    i = t.axis_index(label)
    ax = t.axes[i]
    n = ax.size
    if n_new <= n:
        return t
    step = ax.spacing()
    extra = n_new - n
    before = extra // 2 if centered else 0
    after = extra - before
    pad = [(0, 0)] * t.data.ndim
    pad[i] = (before, after)
    data = np.pad(t.data, pad)
    coords = ax.coords[0] + (np.arange(n_new) - before) * step
    axes = list(t.axes)
    axes[i] = Axis(label, coords)
    return SpectrumTensor(data, tuple(axes))


def _slice_axis(t, label, keep):
    i = t.axis_index(label)
    idx = [slice(None)] * t.data.ndim
    idx[i] = keep
    axes = list(t.axes)
    ax = axes[i]
    axes[i] = Axis(ax.label, ax.coords[keep], origin_coords=ax.origin_coords)
    return SpectrumTensor(t.data[tuple(idx)], tuple(axes))


def vertical_spectra(echo, cfg):
    """Zero-fill the sparse vertical axis and transform both to (k_zT, k_zR).

    Both k_z grids share one spacing because both z axes end up with equal
    sample spacing and equal FFT length (the grid-matching requirement
    1/(N_T dz_T) = 1/(N_R dz_R)).
    """
    t = echo_to_tensor(echo)
    lay = echo.layout
    dz_t, dz_r = lay.tx_spacing_z, lay.rx_spacing_z
    p = integer_spacing_ratio(dz_t, dz_r)
    if cfg.zero_fill_P_vertical is not None and cfg.zero_fill_P_vertical != p:
        raise ValueError(
            f"zero_fill_P_vertical={cfg.zero_fill_P_vertical} inconsistent with "
            f"layout spacing ratio {p}")
    if p > 1:
        sparse = "z_T" if dz_t > dz_r else "z_R"
        t = zero_fill(t, sparse, p)
    n = _next_pow2(max(t.axis("z_T").size, t.axis("z_R").size))
    t = _pad_axis(t, "z_T", n, centered=False)
    t = _pad_axis(t, "z_R", n, centered=False)
    t = dft_axis(t, "z_T", "fwd")
    t = dft_axis(t, "z_R", "fwd")
    return t


def angular_deconvolve(t, R0, guard=0.95):
    """Remove the cylindrical-aperture convolution along both angle axes.

    Transforms theta -> xi, divides out k_rho and the outgoing-wave phase
    factor per side (zeroing evanescent cells, cells beyond the asymptotic
    validity guard |xi| >= guard * k_rho * R0, and k_rho <= 0), then
    transforms back to theta.
    """
    for lbl in ("theta_T", "theta_R", "k", "k_zT", "k_zR"):
        t.axis_index(lbl)  # raises on missing axes
    t = dft_axis(t, "theta_T", "fwd")
    t = dft_axis(t, "theta_R", "fwd")

    k = t.axis("k").coords
    data = t.data
    nd = data.ndim
    for which, xi_lbl, kz_lbl in (("T", "xi_T", "k_zT"), ("R", "xi_R", "k_zR")):
        xi = t.axis(xi_lbl).coords
        kz = t.axis(kz_lbl).coords
        krho2 = k[:, None] ** 2 - kz[None, :] ** 2  # (nk, nkz)
        prop = krho2 > 0
        krho = np.sqrt(np.where(prop, krho2, 1.0))
        # (nk, nxi, nkz)
        arg2 = (krho[:, None, :] * R0) ** 2 - xi[None, :, None] ** 2
        keep = prop[:, None, :] & (np.abs(xi)[None, :, None] < guard * krho[:, None, :] * R0)
        keep &= arg2 > 0
        factor = np.where(keep,
                          np.exp(1j * np.sqrt(np.where(keep, arg2, 0.0))) / krho[:, None, :],
                          0.0 + 0.0j)
        shape = [1] * nd
        shape[t.axis_index("k")] = len(k)
        shape[t.axis_index(xi_lbl)] = len(xi)
        shape[t.axis_index(kz_lbl)] = len(kz)
        data = data * factor.reshape(shape)

    t = t.with_data(data)
    t = dft_axis(t, "xi_T", "inv")
    t = dft_axis(t, "xi_R", "inv")
    return t


def dimension_increase(t):
    """Split the frequency axis k into independent (k_T, k_R) axes.

    Each sample at k_n populates the anti-diagonal cells k_T_i + k_R_j = k_n
    of an (n_k x n_k) grid with coordinates k/2; cells without a source stay
    zero and are flagged invalid in the mask.
    """
    ik = t.axis_index("k")
    kvals = t.axes[ik].coords
    nk = kvals.size
    data = np.moveaxis(t.data, ik, 0)
    rest = data.shape[1:]
    out = np.zeros((nk, nk) + rest, dtype=t.data.dtype)
    mask = np.zeros((nk, nk) + rest, dtype=bool)
    for i in range(nk):
        for j in range(nk):
            if (i + j) % 2 == 0:
                out[i, j] = data[(i + j) // 2]
                mask[i, j] = True
    half = Axis("k_T", kvals / 2.0), Axis("k_R", kvals / 2.0)
    axes = list(t.axes)
    axes.pop(ik)
    new_axes = tuple(axes[:ik]) + half + tuple(axes[ik:])
    out = np.moveaxis(out, (0, 1), (ik, ik + 1))
    mask = np.moveaxis(mask, (0, 1), (ik, ik + 1))
    return SpectrumTensor(out, new_axes, mask)


def reduce_to_image_spectrum(t, cfg=None):
    """Collapse (k_xT, k_yT, k_xR, k_yR, k_zT, k_zR) onto (k_x, k_y, k_z).

    Transmit and receive must sit on identical per-axis grids; every (T, R)
    pair accumulates onto the cell at the coordinate sums, invalid (masked)
    cells excluded.
    """
    labels = ("k_xT", "k_yT", "k_xR", "k_yR", "k_zT", "k_zR")
    order = [t.axis_index(l) for l in labels]
    for a, b in (("k_xT", "k_xR"), ("k_yT", "k_yR"), ("k_zT", "k_zR")):
        ca, cb = t.axis(a).coords, t.axis(b).coords
        if ca.size != cb.size or not np.allclose(ca, cb, rtol=0, atol=1e-9 * max(1.0, np.abs(ca).max())):
            raise ValueError(f"transmit/receive grid mismatch on {a}/{b}")
    data = np.transpose(t.data, order)
    mask = np.ones_like(data, dtype=bool) if t.mask is None else np.transpose(t.mask, order)
    data = np.where(mask, data, 0.0)
    nx, ny = data.shape[0], data.shape[1]
    nrx, nry = data.shape[2], data.shape[3]
    nz1, nz2 = data.shape[4], data.shape[5]
    out = np.zeros((nx + nrx - 1, ny + nry - 1, nz1 + nz2 - 1), dtype=t.data.dtype)
    omask = np.zeros(out.shape, dtype=bool)
    for a in range(nrx):
        for b in range(nry):
            block = data[:, :, a, b, :, :]           # (nx, ny, nz1, nz2)
            mblock = mask[:, :, a, b, :, :]
            for e in range(nz2):
                out[a:a + nx, b:b + ny, e:e + nz1] += np.transpose(block[:, :, :, e], (0, 1, 2))
                omask[a:a + nx, b:b + ny, e:e + nz1] |= mblock[:, :, :, e]

    cx = t.axis("k_xT").coords
    cy = t.axis("k_yT").coords
    czt = t.axis("k_zT").coords
    czr = t.axis("k_zR").coords
    step = lambda c: (c[-1] - c[0]) / (c.size - 1) if c.size > 1 else 1.0
    kx = 2 * cx[0] + np.arange(2 * cx.size - 1) * step(cx)
    ky = 2 * cy[0] + np.arange(2 * cy.size - 1) * step(cy)
    kz = czt[0] + czr[0] + np.arange(czt.size + czr.size - 1) * step(czt)
    axes = (Axis("k_x", kx), Axis("k_y", ky), Axis("k_z", kz))
    return SpectrumTensor(out, axes, omask)


# ---------------------------------------------------------------------------
# end-to-end pipeline


def _radial_tables(kvals, kz_coords, theta_coords, kx_grid, ky_grid):
    """Interpolation tables per (parity class, vertical wavenumber index).

    Radial nodes of class c are k_rho = sqrt((2 k_T)^2 - k_z^2) over the
    parity-c frequency indices; returns int/float/bool arrays shaped
    (2, n_kz, n_cells) plus the per-cell angular brackets.
    """
    nk = kvals.size
    kt = kvals / 2.0
    kx = np.asarray(kx_grid)[:, None]
    ky = np.asarray(ky_grid)[None, :]
    rho_t = np.hypot(kx, ky).ravel()
    phi_t = np.arctan2(kx, -ky).ravel()
    ncell = rho_t.size

    th = theta_coords
    avalid = (phi_t >= th[0]) & (phi_t <= th[-1])
    p0 = np.clip(np.searchsorted(th, phi_t, side="right") - 1, 0, th.size - 2)
    wp = np.where(avalid, 1.0 - (phi_t - th[p0]) / (th[p0 + 1] - th[p0]), 0.0)

    nkz = kz_coords.size
    i0 = np.zeros((2, nkz, ncell), dtype=np.int64)
    wi = np.zeros((2, nkz, ncell))
    val = np.zeros((2, nkz, ncell), dtype=bool)
    nj = [0, 0]
    for c in (0, 1):
        idx = np.arange(c, nk, 2)
        nj[c] = idx.size
        if idx.size < 2:
            continue
        for iz, kz in enumerate(kz_coords):
            rho2 = (2.0 * kt[idx]) ** 2 - kz ** 2
            good = rho2 > 0
            first = int(np.argmax(good)) if np.any(good) else idx.size
            nvalid = idx.size - first
            if nvalid < 2:
                continue
            nodes = np.sqrt(rho2[first:])
            rv = (rho_t >= nodes[0]) & (rho_t <= nodes[-1]) & avalid
            b0 = np.clip(np.searchsorted(nodes, rho_t, side="right") - 1, 0, nodes.size - 2)
            w = 1.0 - (rho_t - nodes[b0]) / (nodes[b0 + 1] - nodes[b0])
            i0[c, iz] = b0 + first
            wi[c, iz] = np.where(rv, np.clip(w, 0.0, 1.0), 0.0)
            val[c, iz] = rv
    return (i0, wi, val, p0.astype(np.int64), wp, tuple(nj))


def _replication_weights(nk):
    """Reciprocal anti-diagonal multiplicity per (parity class, frequency).

    The dimension increase copies the sample at frequency index n into every
    cell pair (a, b) with a + b = 2n and a, b of parity c; the reduction then
    sums those copies back.  Weighting each copy by 1 / count keeps every
    frequency single-counted, so the radial band retains the flat weighting
    of the measurement instead of picking up a triangular taper.
    """
    inv_m = np.zeros((2, nk))
    for c in (0, 1):
        njc = np.arange(c, nk, 2).size
        for n in range(c, nk):
            s = n - c  # u + v over node ordinals u, v in [0, njc)
            m = min(s, njc - 1) - max(0, s - (njc - 1)) + 1
            if m > 0:
                inv_m[c, n] = 1.0 / m
    return inv_m


def _axis_to_space(data, axis, k_coords, sign, target_spacing):
    """Evaluate sum_m A_m exp(sign * j * k_m * x) on its natural FFT grid.

    Returns (x_coords increasing, transformed data); the grid spacing is at
    most target_spacing (spectrum zero-padded as needed).
    """
    n = k_coords.size
    dk = (k_coords[-1] - k_coords[0]) / (n - 1) if n > 1 else 1.0
    npad = _next_pow2(max(n, int(math.ceil(2.0 * math.pi / (target_spacing * dk)))))
    pad = [(0, 0)] * data.ndim
    pad[axis] = (0, npad - n)
    a = np.pad(data, pad)
    if sign < 0:
        out = np.fft.fft(a, axis=axis)
    else:
        out = np.fft.ifft(a, axis=axis) * npad
    x = np.arange(npad) * (2.0 * math.pi / (npad * dk))
    x[npad // 2:] -= 2.0 * math.pi / dk  # wrap to a centered window
    order = np.argsort(x)
    x = x[order]
    out = np.take(out, order, axis=axis)
    shape = [1] * data.ndim
    shape[axis] = npad
    out = out * np.exp(sign * 1j * k_coords[0] * x).reshape(shape)
    return x, out


def _resample_trilinear(values, axes, grid):
    """Complex trilinear resampling of values on 'axes' onto an ImageGrid."""
    out_axes = [grid.x, grid.y, grid.z]
    idx = []
    for ax, q in zip(axes, out_axes):
        if q[0] < ax[0] - 1e-9 or q[-1] > ax[-1] + 1e-9:
            raise PipelineError(
                "image grid extends beyond the unambiguous reconstruction window "
                f"([{ax[0]:.3f}, {ax[-1]:.3f}] m); reduce the grid extent or the "
                "wavenumber spacing")
        step = ax[1] - ax[0]
        f = np.clip((q - ax[0]) / step, 0.0, ax.size - 1 - 1e-12)
        idx.append((np.floor(f).astype(int), f - np.floor(f)))
    (ix, fx), (iy, fy), (iz, fz) = idx
    out = np.zeros(grid.shape, dtype=values.dtype)
    for a in (0, 1):
        wx = (1 - fx if a == 0 else fx)[:, None, None]
        for b in (0, 1):
            wy = (1 - fy if b == 0 else fy)[None, :, None]
            for c in (0, 1):
                wz = (1 - fz if c == 0 else fz)[None, None, :]
                out += wx * wy * wz * values[np.ix_(ix + a, iy + b, iz + c)]
    return out


def reconstruct_rma(echo, layout, cfg, config_hash=""):
    """Run the full cylindrical wavenumber reconstruction to an ImageVolume."""
    r0 = layout.radius_R0
    ks = echo.freqs.wavenumbers
    k_max = ks[-1]

    t = vertical_spectra(echo, cfg)

    # per-side support bounds (vertical); trimming the k_z axes outside the
    # support equals applying the rectangular filter and dropping zero slices
    span = lambda c: (c[-1] - c[0]) if c.size > 1 else 0.0
    lz_t = span(layout.tx_heights)
    lz_r = span(layout.rx_heights)
    d_z = cfg.extent_z()
    bounds_z = {}
    for lbl, lz in (("k_zT", lz_t), ("k_zR", lz_r)):
        if cfg.spectrum_filter:
            bounds_z[lbl] = support_bound_kz(r0, lz, d_z, k_max)
        else:
            bounds_z[lbl] = k_max  # evanescent limit only
        keep = np.abs(t.axis(lbl).coords) <= bounds_z[lbl] + 1e-12
        if not np.any(keep):
            raise PipelineError(f"empty spectrum: no {lbl} bins inside the support")
        t = _slice_axis(t, lbl, np.where(keep)[0])

    # arc zero-filling of the sparse angular axis, then pad for the FFTs
    dth_t, dth_r = layout.tx_spacing_theta, layout.rx_spacing_theta
    p_arc = integer_spacing_ratio(dth_t, dth_r)
    if cfg.zero_fill_P_arc is not None and cfg.zero_fill_P_arc != p_arc:
        raise ValueError(f"zero_fill_P_arc={cfg.zero_fill_P_arc} inconsistent with "
                         f"layout spacing ratio {p_arc}")
    if p_arc > 1:
        sparse = "theta_T" if dth_t > dth_r else "theta_R"
        t = zero_fill(t, sparse, p_arc)

    # the angular stage is independent per frequency; one k slice at a time
    # keeps the theta-padded tensor from dominating memory.  The padding only
    # decongests the circular xi-domain convolution, and deconvolved values
    # outside the physical arc are extrapolation ringing that smears the
    # outer spectral edge, so the padded angles are dropped again afterwards.
    n_pad_t = _next_pow2(t.axis("theta_T").size)
    n_pad_r = _next_pow2(t.axis("theta_R").size)
    if t.axis_index("k") != 0:
        raise PipelineError("frequency axis must come first")
    out = None
    axes_out = None
    for i in range(t.axis("k").size):
        ti = _slice_axis(t, "k", np.array([i]))
        ti = _pad_axis(ti, "theta_T", n_pad_t)
        ti = _pad_axis(ti, "theta_R", n_pad_r)
        ti = angular_deconvolve(ti, r0, cfg.evanescent_guard)
        for lbl, phys in (("theta_T", layout.tx_angles), ("theta_R", layout.rx_angles)):
            coords = ti.axis(lbl).coords
            tol = 1e-9 * max(1.0, float(np.abs(phys).max()))
            keep = (coords >= phys[0] - tol) & (coords <= phys[-1] + tol)
            ti = _slice_axis(ti, lbl, np.where(keep)[0])
        if out is None:
            out = np.empty((t.axis("k").size,) + ti.data.shape[1:], dtype=ti.data.dtype)
            axes_out = ti.axes
        out[i] = ti.data[0]
    axes = list(axes_out)
    axes[0] = t.axis("k")
    t = SpectrumTensor(out, tuple(axes))

    # shared Cartesian side grid from the union of both polar supports
    th_t = t.axis("theta_T").coords
    th_r = t.axis("theta_R").coords
    phi_max = max(np.abs(th_t).max(), np.abs(th_r).max())
    krho_min = math.sqrt(max(ks[0] ** 2 - max(bounds_z.values()) ** 2, 0.0))
    kx_half = k_max * math.sin(phi_max)
    ky_lo, ky_hi = -k_max, -krho_min * math.cos(phi_max)
    nth = max(th_t.size, th_r.size)
    nkx = max(8, int(math.ceil(cfg.oversample * nth)))
    nky = max(8, int(math.ceil(cfg.oversample * ks.size)))
    kx_grid = np.linspace(-kx_half, kx_half, nkx)
    ky_grid = np.linspace(ky_lo, ky_hi, nky)

    tables_t = _radial_tables(ks, t.axis("k_zT").coords, th_t, kx_grid, ky_grid)
    tables_r = _radial_tables(ks, t.axis("k_zR").coords, th_r, kx_grid, ky_grid)

    nkz_t = t.axis("k_zT").size
    nkz_r = t.axis("k_zR").size
    inv_m = _replication_weights(ks.size)
    spec3 = _kernels.fused_interp_reduce(t.data, inv_m, tables_t, tables_r,
                                         nkx, nky, nkz_t + nkz_r - 1)
    if not np.any(spec3):
        raise PipelineError("empty spectrum: masking removed all energy")

    dkx = kx_grid[1] - kx_grid[0]
    dky = ky_grid[1] - ky_grid[0]
    kzt = t.axis("k_zT").coords
    kzr = t.axis("k_zR").coords
    dkz = kzt[1] - kzt[0] if kzt.size > 1 else (kzr[1] - kzr[0])
    kx2 = 2 * kx_grid[0] + np.arange(2 * nkx - 1) * dkx
    ky2 = 2 * ky_grid[0] + np.arange(2 * nky - 1) * dky
    kz2 = kzt[0] + kzr[0] + np.arange(nkz_t + nkz_r - 1) * dkz
    spec = SpectrumTensor(spec3, (Axis("k_x", kx2), Axis("k_y", ky2), Axis("k_z", kz2)))

    if cfg.spectrum_filter:
        d_xy = cfg.extent_xy()
        arc_t = r0 * span(layout.tx_angles)
        arc_r = r0 * span(layout.rx_angles)
        bx = (support_bound_kz(r0, arc_t, d_xy, k_max)
              + support_bound_kz(r0, arc_r, d_xy, k_max))
        bz = sum(bounds_z.values())
        window = SpectralWindow({"k_x": (-bx, bx), "k_z": (-bz, bz)})
        spec = apply_window(spec, window)

    # final per-axis transforms; vertical spectra carry the opposite phase
    # sign from the transverse ones (see module docstring).  After each
    # transform the spatial axis is cut down to the image window (plus one
    # sample of margin for the trilinear stage) to bound memory.
    def _to_space(data, axis, k_coords, sign, grid_axis, spacing):
        x, data = _axis_to_space(data, axis, k_coords, sign, spacing)
        step = x[1] - x[0] if x.size > 1 else spacing
        keep = (x >= grid_axis[0] - step) & (x <= grid_axis[-1] + step)
        idx = [slice(None)] * data.ndim
        idx[axis] = keep
        return x[keep], data[tuple(idx)]

    data = spec.data
    x_ax, data = _to_space(data, 0, kx2, -1, cfg.grid.x, cfg.grid.spacing[0])
    y_ax, data = _to_space(data, 1, ky2, -1, cfg.grid.y, cfg.grid.spacing[1])
    z_ax, data = _to_space(data, 2, kz2, +1, cfg.grid.z, cfg.grid.spacing[2])
    vol = _resample_trilinear(data, (x_ax, y_ax, z_ax), cfg.grid)
    return ImageVolume(vol, cfg.grid, "rma", config_hash)
