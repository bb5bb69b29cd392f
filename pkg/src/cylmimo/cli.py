"""Command-line front end for reproducible simulation / reconstruction runs.

Exit statuses: 0 success, 2 validation or usage error, 3 numeric failure,
4 I/O error.  Every command is deterministic given its config (and seed);
re-runs produce byte-identical outputs regardless of --workers.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys

import numpy as np

from . import _kernels, io
from .arraylab import (LinearArraySpec, angular_sampling_bound, beam_pattern,
                       grating_lobe_spacing, grating_lobe_spacing_approx,
                       measure_metrics, nyquist_spacing, table1_rows)
from .backprojection import reconstruct_bp
from .config import ConfigError, parse_beampattern, parse_config
from .forward import add_noise, simulate_echo
from .geometry import LayoutError, SceneError, load_scene
from .rma import PipelineError, reconstruct_rma


def _config_hash(path):
    with open(path, "rb") as f:
        return hashlib.sha256(f.read()).hexdigest()[:16]


def _set_workers(n):
    if n is None:
        return
    if n < 1:
        raise ConfigError("--workers must be >= 1")
    if _kernels.using_numba():
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def cmd_simulate(args):
    cfg = parse_config(args.config)
    scene = load_scene(cfg.scene_file)
    echo = simulate_echo(scene, cfg.layout(), cfg.frequency_grid())
    if cfg.noise_sigma > 0:
        echo = add_noise(echo, cfg.noise_sigma, cfg.seed)
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, args.out)
    io.save_echo(path, echo)
    print(path)


def cmd_reconstruct(args):
    cfg = parse_config(args.config)
    echo = io.load_echo(args.echo)
    lay, fr = cfg.layout(), cfg.frequency_grid()
    same = (echo.freqs == fr
            and echo.layout.radius_R0 == lay.radius_R0
            and all(np.allclose(a, b, rtol=0, atol=1e-12) for a, b in (
                (echo.layout.tx_angles, lay.tx_angles),
                (echo.layout.rx_angles, lay.rx_angles),
                (echo.layout.tx_heights, lay.tx_heights),
                (echo.layout.rx_heights, lay.rx_heights))))
    if not same:
        raise ConfigError(f"echo file {args.echo} does not match the config's "
                          "array layout / frequency grid")
    method = args.method or cfg.method
    chash = _config_hash(args.config)
    if method == "rma":
        vol = reconstruct_rma(echo, echo.layout, cfg.rma_config(), config_hash=chash)
    elif method == "bp":
        vol = reconstruct_bp(echo, cfg.image_grid(), config_hash=chash)
    else:
        raise ConfigError(f"unknown method {method!r}")
    os.makedirs(cfg.output_dir, exist_ok=True)
    path = os.path.join(cfg.output_dir, f"{args.out_prefix}_{method}.bin")
    io.save_image(path, vol)
    print(path)


def _beampattern_spec(bp):
    common = dict(length_L=bp["length_L"], R0=bp["radius_R0"],
                  frequency=bp["frequency_hz"])
    if "spacing" in bp:
        return LinearArraySpec(spacing=bp["spacing"], role=bp["role"], **common)
    return (LinearArraySpec(spacing=bp["tx_spacing"], role="tx", **common),
            LinearArraySpec(spacing=bp["rx_spacing"], role="rx", **common))


def cmd_beampattern(args):
    bp = parse_beampattern(args.config)
    result = beam_pattern(_beampattern_spec(bp), bp["method"],
                          zero_fill=bp["zero_fill"],
                          spectrum_filter=bp["spectrum_filter"])
    io.save_pattern_csv(args.out, result)
    print(args.out)


def cmd_design(args):
    lam, r0, length, extent = args.wavelength, args.radius, args.length, args.extent
    nyq = nyquist_spacing(lam, r0, length, extent)
    ang = angular_sampling_bound(lam, extent) if extent > 0 else float("nan")
    approx = grating_lobe_spacing_approx(lam, r0, extent) if extent > 0 else float("nan")
    exact = (grating_lobe_spacing(lam, r0, length, extent)
             if 0 < extent <= length else float("nan"))
    header = ("nyquist_spacing_m,angular_sampling_bound_rad,"
              "grating_lobe_spacing_m,grating_lobe_spacing_approx_m")
    row = ",".join("%.17g" % v for v in (nyq, ang, exact, approx))
    with open(args.out, "w") as f:
        f.write(header + "\n" + row + "\n")
    print(args.out)


def cmd_table1(args):
    rows = table1_rows(length_L=args.length, frequency=args.frequency,
                       R0=args.radius, P=args.fill)
    io.save_table1_csv(args.out, rows)
    print(args.out)


def cmd_metrics(args):
    result = io.load_pattern_csv(args.pattern)
    io.save_metrics_csv(args.out, measure_metrics(result))
    print(args.out)


def build_parser():
    p = argparse.ArgumentParser(
        prog="cylmimo",
        description="Cylindrical MIMO array simulation and wavenumber imaging")
    p.add_argument("--workers", type=int, default=None,
                   help="bound internal parallelism (results independent of N)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate an echo cube from a config")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="echo.bin", help="file name inside the output directory")
    s.set_defaults(fn=cmd_simulate)

    s = sub.add_parser("reconstruct", help="reconstruct an image from an echo file")
    s.add_argument("--config", required=True)
    s.add_argument("--echo", required=True)
    s.add_argument("--method", choices=("rma", "bp"), default=None,
                   help="override the config's method")
    s.add_argument("--out-prefix", default="image")
    s.set_defaults(fn=cmd_reconstruct)

    s = sub.add_parser("beampattern", help="1-D array beam pattern to CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", default="pattern.csv")
    s.set_defaults(fn=cmd_beampattern)

    s = sub.add_parser("design", help="sampling bounds and grating-lobe spacings")
    s.add_argument("--wavelength", type=float, required=True)
    s.add_argument("--radius", type=float, required=True)
    s.add_argument("--length", type=float, required=True)
    s.add_argument("--extent", type=float, required=True)
    s.add_argument("--out", default="design.csv")
    s.set_defaults(fn=cmd_design)

    s = sub.add_parser("table1", help="all nine benchmark array scenarios to CSV")
    s.add_argument("--length", type=float, default=1.0)
    s.add_argument("--frequency", type=float, default=30e9)
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--fill", type=int, default=20)
    s.add_argument("--out", default="table1.csv")
    s.set_defaults(fn=cmd_table1)

    s = sub.add_parser("metrics", help="quality metrics of a pattern CSV")
    s.add_argument("--pattern", required=True)
    s.add_argument("--out", default="metrics.csv")
    s.set_defaults(fn=cmd_metrics)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _set_workers(args.workers)
        args.fn(args)
    except (ConfigError, LayoutError, SceneError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (PipelineError, FloatingPointError) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return 3
    except (io.SidecarError, OSError) as e:
        print(f"i/o error: {e}", file=sys.stderr)
        return 4
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
