"""1-D linear-array analysis: near-field beam patterns, aliasing and
grating-lobe calculators, resolution formulas and image-quality metrics.

The study geometry is a vertical line array with elements at heights z_e,
focused on a point target broadside at distance R0; the pattern is the
point response along the cross-range coordinate z at that distance, so
R(z_e, z) = sqrt(R0^2 + (z - z_e)^2).  'bp' evaluates the matched-filter
sum directly; 'rma' goes through the spatial spectrum: DFT of the
(optionally zero-filled) aperture data, optional rectangular support
filter, matched-phase focusing exp(+j sqrt(k^2 - kz^2) R0), and a dense
inverse DFT.  Monostatic arrays use the two-way wavenumber 2k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .constants import C0
from .geometry import integer_spacing_ratio
from .spectral import (Axis, SpectrumTensor, dft_axis, support_bound_kz,
                       zero_fill)

_COUNT_TOL = 1e-6
# output sampling density: samples per wavelength across +-L of cross-range
_SAMPLES_PER_WAVELENGTH = 8


@dataclass(frozen=True)
class LinearArraySpec:
    """One linear (sub)array of the 1-D beam-pattern study."""

    length_L: float
    spacing: float
    role: str  # 'tx' | 'rx' | 'monostatic'
    R0: float
    frequency: float

    def __post_init__(self):
        if min(self.length_L, self.spacing, self.R0, self.frequency) <= 0:
            raise ValueError("length, spacing, R0 and frequency must be positive")
        if self.role not in ("tx", "rx", "monostatic"):
            raise ValueError("role must be 'tx', 'rx' or 'monostatic'")
        n = self.length_L / self.spacing
        if abs(n - round(n)) > _COUNT_TOL * n:
            raise ValueError("spacing must divide the array length evenly")

    @property
    def wavelength(self):
        return C0 / self.frequency

    @property
    def wavenumber(self):
        """Effective wavenumber: 2k for monostatic (two-way), k otherwise."""
        k = 2.0 * math.pi / self.wavelength
        return 2.0 * k if self.role == "monostatic" else k

    def element_heights(self):
        n = int(round(self.length_L / self.spacing)) + 1
        return (np.arange(n) - (n - 1) / 2.0) * self.spacing


@dataclass
class BeamPatternResult:
    """Peak-normalized cross-range point response."""

    coords: np.ndarray
    magnitude: np.ndarray  # linear, max = 1
    method: str

    def __post_init__(self):
        peak = np.max(self.magnitude)
        if peak <= 0:
            raise ValueError("beam pattern is identically zero")
        self.magnitude = np.asarray(self.magnitude, dtype=float) / peak

    def magnitude_db(self, floor=-200.0):
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(self.magnitude)
        return np.maximum(db, floor)


@dataclass(frozen=True)
class QualityMetrics:
    resolution: float            # -3 dB full width, m
    pslr: float | None           # dB, None when no sidelobe exists
    grating_lobe_offset: float | None  # m, None when no lobe above -15 dB

    def __post_init__(self):
        if self.resolution <= 0:
            raise ValueError("resolution must be positive")
        if self.pslr is not None and self.pslr > 0:
            raise ValueError("PSLR cannot exceed 0 dB")


def _output_grid(spec):
    step = spec.wavelength / _SAMPLES_PER_WAVELENGTH
    n = int(math.ceil(spec.length_L / step))
    return np.arange(-n, n + 1) * step


def _aperture_data(spec):
    """Echo of the broadside focus target over the elements."""
    z = spec.element_heights()
    r = np.hypot(spec.R0, z)
    return z, np.exp(-1j * spec.wavenumber * r)


def _pattern_bp(spec, z_out):
    z_e, s = _aperture_data(spec)
    r = np.hypot(spec.R0, z_out[:, None] - z_e[None, :])
    return np.exp(1j * spec.wavenumber * r) @ s


def _fill_factor(spec, partner=None):
    """Zero-filling factor toward the dense grid.

    With a partner (MIMO pair) the dense grid is the partner's; alone, the
    reference is the half-wavelength grid nearest an integer divisor.
    """
    if partner is not None:
        return integer_spacing_ratio(spec.spacing, partner.spacing)
    p = max(1, int(round(spec.spacing / (spec.wavelength / 2.0))))
    return p


def _pattern_rma(spec, z_out, do_zero_fill, do_filter, partner=None):
    z_e, s = _aperture_data(spec)
    t = SpectrumTensor(s.astype(np.complex128), (Axis("z", z_e),))
    if do_zero_fill:
        p = _fill_factor(spec, partner)
        t = zero_fill(t, "z", p)
    # the aperture is exactly zero beyond the array, so padding before the
    # DFT just samples the same spectrum finer; it pushes the transform's
    # spatial period beyond the evaluation window
    z_g = t.axes[0].coords
    d = z_g[1] - z_g[0] if z_g.size > 1 else spec.spacing
    m = 1 << max(0, int(math.ceil(4.0 * spec.length_L / d)) - 1).bit_length()
    if m > z_g.size:
        pad = np.zeros(m - z_g.size, dtype=np.complex128)
        t = SpectrumTensor(np.concatenate([t.data, pad]),
                           (Axis("z", z_g[0] + np.arange(m) * d),))
    t = dft_axis(t, "z", "fwd")
    kz = t.axis("k_z").coords
    spec_data = t.data

    k = spec.wavenumber
    if do_filter:
        bound = support_bound_kz(spec.R0, spec.length_L, 0.0, k)
        spec_data = np.where(np.abs(kz) <= bound, spec_data, 0.0)
    prop = kz ** 2 < k ** 2
    ky = np.sqrt(np.where(prop, k ** 2 - kz ** 2, 0.0))
    spec_data = np.where(prop, spec_data * np.exp(1j * ky * spec.R0), 0.0)

    return np.exp(1j * z_out[:, None] * kz[None, :]) @ spec_data


def beam_pattern(spec, method, zero_fill=False, spectrum_filter=False):
    """One-way point response of one array, or the two-way product of a pair.

    spec is a LinearArraySpec or a (tx, rx) tuple; method is 'bp' or 'rma'.
    For a pair the result is the elementwise product of the two one-way
    patterns; zero_fill then fills each undersampled side to its partner's
    grid.
    """
    if isinstance(spec, tuple):
        a, b = spec
        if abs(a.R0 - b.R0) > 1e-12 or abs(a.frequency - b.frequency) > 1e-6:
            raise ValueError("pair members must share R0 and frequency")
        z_out = _output_grid(a if a.length_L >= b.length_L else b)
        vals = np.ones(z_out.size, dtype=np.complex128)
        for me, other in ((a, b), (b, a)):
            if method == "bp":
                vals = vals * _pattern_bp(me, z_out)
            else:
                fill = zero_fill and me.spacing > other.spacing
                vals = vals * _pattern_rma(me, z_out, fill, spectrum_filter, other)
        tag = f"{method}-two-way"
    else:
        z_out = _output_grid(spec)
        if method == "bp":
            vals = _pattern_bp(spec, z_out)
        elif method == "rma":
            vals = _pattern_rma(spec, z_out, zero_fill, spectrum_filter)
        else:
            raise ValueError("method must be 'bp' or 'rma'")
        tag = method
    return BeamPatternResult(z_out, np.abs(vals), tag)


# ---------------------------------------------------------------------------
# sampling and resolution calculators


def grating_lobe_spacing(lambda0, R0, L, D):
    """Element spacing that places the first grating lobe a distance D away
    (exact form): lambda0 / [ (L/2)/sqrt(R0^2+L^2/4) - (L/2-D)/sqrt(R0^2+(L/2-D)^2) ]."""
    if not 0 < D <= L:
        raise ValueError("need 0 < D <= L")
    if lambda0 <= 0 or R0 <= 0:
        raise ValueError("lambda0 and R0 must be positive")
    a = (L / 2.0) / math.sqrt(R0 ** 2 + L ** 2 / 4.0)
    b = (L / 2.0 - D) / math.sqrt(R0 ** 2 + (L / 2.0 - D) ** 2)
    return lambda0 / (a - b)


def grating_lobe_spacing_approx(lambda0, R0, D):
    """Far-field approximation of grating_lobe_spacing: lambda0 * R0 / D."""
    if D <= 0:
        raise ValueError("D must be positive")
    if lambda0 <= 0 or R0 <= 0:
        raise ValueError("lambda0 and R0 must be positive")
    return lambda0 * R0 / D


def nyquist_spacing(lambda0, R0, L, D):
    """Largest alias-free element spacing of the dense array:
    lambda0 * sqrt(R0^2 + (L+D)^2/4) / (L+D)."""
    if L + D <= 0:
        raise ValueError("need L + D > 0")
    if lambda0 <= 0 or R0 <= 0 or L < 0 or D < 0:
        raise ValueError("inputs must be positive (L, D nonnegative)")
    s = L + D
    return lambda0 * math.sqrt(R0 ** 2 + s ** 2 / 4.0) / s


def angular_sampling_bound(lambda0, D):
    """Largest alias-free angular step of the dense arc: lambda0 / D (rad)."""
    if D <= 0 or lambda0 <= 0:
        raise ValueError("lambda0 and D must be positive")
    return lambda0 / D


def resolution_formulas(lambda_c, Theta_h, Theta_z, B):
    """Theoretical resolutions {dx, dz, dy} from the subtended angles and
    bandwidth: d_cross = lambda_c / (4 sin(Theta/2)), dy = c / (2B)."""
    if lambda_c <= 0 or B <= 0:
        raise ValueError("lambda_c and B must be positive")
    for th in (Theta_h, Theta_z):
        if not 0 < th <= math.pi:
            raise ValueError("angles must lie in (0, pi]")
    return {"dx": lambda_c / (4.0 * math.sin(Theta_h / 2.0)),
            "dz": lambda_c / (4.0 * math.sin(Theta_z / 2.0)),
            "dy": C0 / (2.0 * B)}


# ---------------------------------------------------------------------------
# metrics


def _crossing(coords, mag, i_out, i_in, level):
    """Linear interpolation of the coordinate where mag crosses level
    between samples i_out (below) and i_in (above)."""
    m0, m1 = mag[i_out], mag[i_in]
    f = (level - m0) / (m1 - m0)
    return coords[i_out] + f * (coords[i_in] - coords[i_out])


def measure_metrics(pattern):
    """Resolution, PSLR and grating-lobe offset of a beam pattern.

    Resolution is the full width at 1/sqrt(2) of the peak amplitude with
    linear interpolation; the mainlobe ends at the first local minima
    flanking the peak; PSLR is the strongest local maximum outside the
    mainlobe (None when no sidelobe exists); the grating-lobe offset is
    the distance to the strongest secondary lobe above -15 dB (None when
    all secondary lobes are weaker).
    """
    mag = pattern.magnitude
    coords = pattern.coords
    n = mag.size
    peak = int(np.argmax(mag))
    if peak in (0, n - 1):
        raise ValueError("pattern peak lies on the profile edge")

    level = 1.0 / math.sqrt(2.0)
    left = right = None
    for i in range(peak, 0, -1):
        if mag[i - 1] < level <= mag[i]:
            left = _crossing(coords, mag, i - 1, i, level)
            break
    for i in range(peak, n - 1):
        if mag[i + 1] < level <= mag[i]:
            right = _crossing(coords, mag, i + 1, i, level)
            break
    if left is None or right is None:
        raise ValueError("profile never drops below the -3 dB level")
    resolution = right - left

    lo = peak
    while lo > 0 and mag[lo - 1] <= mag[lo]:
        lo -= 1
    hi = peak
    while hi < n - 1 and mag[hi + 1] <= mag[hi]:
        hi += 1

    side_idx = [i for i in range(1, n - 1)
                if (i < lo or i > hi) and mag[i] >= mag[i - 1] and mag[i] >= mag[i + 1]]
    if not side_idx:
        return QualityMetrics(resolution, None, None)
    levels = mag[side_idx]
    pslr = 20.0 * math.log10(np.max(levels))

    strong = [(m, abs(coords[i] - coords[peak]))
              for i, m in zip(side_idx, levels) if 20.0 * math.log10(m) > -15.0]
    offset = max(strong)[1] if strong else None
    return QualityMetrics(resolution, min(pslr, 0.0), offset)


# ---------------------------------------------------------------------------
# Table-of-scenarios batch (L = 1 m, f = 30 GHz, R0 = 1 m, P = 20)


def table1_rows(length_L=1.0, frequency=30e9, R0=1.0, P=20):
    """The nine benchmark scenarios: [(label, BeamPatternResult, QualityMetrics)].

    The dense (receive) spacing is the half-wavelength grid rounded to divide
    the length evenly; the sparse (transmit) spacing is P times that.
    """
    lam = C0 / frequency
    n_dense = int(round(length_L / (lam / 2.0)))
    dense = length_L / n_dense
    sparse = P * dense
    rx = LinearArraySpec(length_L, dense, "rx", R0, frequency)
    tx = LinearArraySpec(length_L, sparse, "tx", R0, frequency)
    mono = LinearArraySpec(length_L, dense, "monostatic", R0, frequency)

    scenarios = [
        ("fully sampled array by BP", rx, "bp", {}),
        ("fully sampled array by RMA", rx, "rma", {}),
        ("undersampled array by RMA without zero filling", tx, "rma", {}),
        ("undersampled array by RMA with zero filling but without spectrum filtering",
         tx, "rma", {"zero_fill": True}),
        ("undersampled array by RMA with zero filling and spectrum filtering",
         tx, "rma", {"zero_fill": True, "spectrum_filter": True}),
        ("MIMO array by BP", (tx, rx), "bp", {}),
        ("MIMO array by RMA without spectrum filtering",
         (tx, rx), "rma", {"zero_fill": True}),
        ("MIMO array by RMA with spectrum filtering",
         (tx, rx), "rma", {"zero_fill": True, "spectrum_filter": True}),
        ("Monostatic array by RMA", mono, "rma", {}),
    ]
    rows = []
    for label, spec, method, opts in scenarios:
        pat = beam_pattern(spec, method, **opts)
        rows.append((label, pat, measure_metrics(pat)))
    return rows
