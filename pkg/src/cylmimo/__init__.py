"""Near-field imaging with cylindrical MIMO millimeter-wave arrays.

Simulates multistatic stepped-frequency echoes of point-scatterer scenes
and reconstructs 3-D reflectivity either with a cylindrical wavenumber
(range migration) pipeline or with time-domain backprojection; an array
laboratory analyzes 1-D aperture sampling, aliasing, and resolution.
"""

from .arraylab import (BeamPatternResult, LinearArraySpec, QualityMetrics,
                       angular_sampling_bound, beam_pattern,
                       grating_lobe_spacing, grating_lobe_spacing_approx,
                       measure_metrics, nyquist_spacing, resolution_formulas,
                       table1_rows)
from .backprojection import backproject_at, bp_profile_1d, reconstruct_bp
from .config import ConfigError, ExperimentConfig, parse_config, validate_config
from .constants import C0
from .forward import EchoTensor, add_noise, simulate_echo, superpose
from .geometry import (ArrayLayout, FrequencyGrid, LayoutError, Scene,
                       SceneError, antenna_position, integer_spacing_ratio,
                       load_scene, save_scene, side_positions,
                       two_way_distance)
from .imaging import ImageGrid, ImageVolume
from .io import (SidecarError, load_echo, load_image, load_pattern_csv,
                 save_echo, save_image, save_metrics_csv, save_pattern_csv,
                 save_table1_csv)
from .rma import (PipelineError, RmaConfig, angular_deconvolve,
                  dimension_increase, echo_to_tensor, reconstruct_rma,
                  reduce_to_image_spectrum, vertical_spectra)
from .spectral import (Axis, AxisError, SpectralWindow, SpectrumTensor,
                       apply_window, dft_axis, hankel_factor,
                       interp_polar_to_cartesian, support_bound_kz, zero_fill)

__version__ = "0.1.0"
