import numpy as np
import pytest

from cylmimo import _kernels
from cylmimo.backprojection import backproject_at, bp_profile_1d, reconstruct_bp
from cylmimo.forward import flat_positions, simulate_echo
from cylmimo.geometry import ArrayLayout, FrequencyGrid, Scene
from cylmimo.imaging import ImageGrid


def small_layout():
    return ArrayLayout.centered(1.5, 2, 0.066, 5, 0.033, 2, 0.1, 5, 0.05)


def small_freqs():
    return FrequencyGrid(31e9, 39e9, 5)


def test_bp_coherent_maximum_at_scatterer():
    lay, fr = small_layout(), small_freqs()
    scene = Scene(np.array([[0.0, 0.0, 0.0]]), np.array([1.0 + 0j]))
    echo = simulate_echo(scene, lay, fr)
    val = backproject_at(echo, np.array([[0.0, 0.0, 0.0]]))[0]
    n_samples = fr.count * lay.n_tx() * lay.n_rx()
    assert abs(val - n_samples) < 1e-6 * n_samples


def test_bp_zero_echo_zero_image():
    echo = simulate_echo(Scene.empty(), small_layout(), small_freqs())
    grid = ImageGrid((0, 0, 0), (0.01, 0.01, 0.01), (4, 4, 4))
    vol = reconstruct_bp(echo, grid)
    assert np.all(vol.data == 0)
    assert vol.method == "bp"


def test_bp_peak_within_voxel():
    lay, fr = small_layout(), small_freqs()
    pos = np.array([0.012, -0.008, 0.021])
    echo = simulate_echo(Scene(pos[None, :], np.array([1.0 + 0j])), lay, fr)
    grid = ImageGrid((0.0, 0.0, 0.02), (0.004, 0.004, 0.004), (15, 15, 15))
    vol = reconstruct_bp(echo, grid)
    err = np.abs(np.array(vol.peak_position()) - pos)
    assert np.all(err <= np.array(grid.spacing) + 1e-12)


def test_bp_two_equal_scatterers_balanced():
    lay = ArrayLayout.centered(1.5, 3, 0.132, 21, 0.0132, 3, 0.12, 25, 0.012)
    fr = FrequencyGrid(31e9, 39e9, 7)
    scene = Scene(np.array([[-0.05, 0.0, 0.0], [0.05, 0.0, 0.0]]),
                  np.array([1.0 + 0j, 1.0 + 0j]))
    echo = simulate_echo(scene, lay, fr)
    vals = np.abs(backproject_at(echo, scene.positions))
    assert abs(vals[0] - vals[1]) < 0.05 * max(vals)


def test_bp_adjoint_of_simulate():
    rng = np.random.default_rng(31)
    lay, fr = small_layout(), small_freqs()
    pos = rng.uniform(-0.05, 0.05, (6, 3))
    u = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    echo_u = simulate_echo(Scene(pos, u), lay, fr)
    v = rng.standard_normal(echo_u.shape) + 1j * rng.standard_normal(echo_u.shape)
    lhs = np.vdot(echo_u.data, v)
    echo_v = simulate_echo(Scene.empty(), lay, fr)
    echo_v.data[...] = v
    rhs = np.vdot(u, backproject_at(echo_v, pos))
    assert abs(lhs - rhs) < 1e-9 * abs(lhs)


def test_bp_profile_matches_volume_line():
    lay, fr = small_layout(), small_freqs()
    scene = Scene(np.array([[0.01, 0.0, 0.0]]), np.array([1.0 + 0j]))
    echo = simulate_echo(scene, lay, fr)
    grid = ImageGrid((0.0, 0.0, 0.0), (0.005, 0.005, 0.005), (9, 9, 9))
    vol = reconstruct_bp(echo, grid)
    i, j, k = vol.peak_index()
    start = (grid.x[0], grid.y[j], grid.z[k])
    pts, vals = bp_profile_1d(echo, start, (1.0, 0.0, 0.0), grid.x - grid.x[0])
    assert np.allclose(pts[:, 0], grid.x)
    line = vol.data[:, j, k]
    assert np.allclose(vals, line, rtol=1e-9, atol=1e-9 * np.abs(line).max())


def test_bp_profile_peak_and_symmetry():
    lay, fr = small_layout(), small_freqs()
    scene = Scene(np.array([[0.0, 0.0, 0.0]]), np.array([1.0 + 0j]))
    echo = simulate_echo(scene, lay, fr)
    offsets = np.linspace(-0.05, 0.05, 41)
    _, vals = bp_profile_1d(echo, (0.0, 0.0, 0.0), (0.0, 0.0, 1.0), offsets)
    mag = np.abs(vals)
    assert np.argmax(mag) == 20  # the scatterer sits at offset 0
    asym = np.abs(mag - mag[::-1]).max() / mag.max()
    assert asym < 1e-9
    with pytest.raises(ValueError):
        bp_profile_1d(echo, (0, 0, 0), (0, 0, 0), offsets)


def test_bp_kernel_fallback_matches_numba():
    if not _kernels.using_numba():
        pytest.skip("numba disabled; only one implementation active")
    rng = np.random.default_rng(32)
    lay, fr = small_layout(), small_freqs()
    tx, rx = flat_positions(lay)
    data = rng.standard_normal((fr.count, tx.shape[0], rx.shape[0])) \
        + 1j * rng.standard_normal((fr.count, tx.shape[0], rx.shape[0]))
    pts = rng.uniform(-0.05, 0.05, (10, 3))
    out_nb = np.zeros(10, np.complex128)
    out_np = np.zeros(10, np.complex128)
    ks = fr.wavenumbers
    _kernels._bp_nb(data, ks[0], ks[1] - ks[0], tx, rx, pts, out_nb)
    _kernels._bp_np(data, ks[0], ks[1] - ks[0], tx, rx, pts, out_np)
    assert np.allclose(out_nb, out_np, rtol=1e-9, atol=1e-9 * np.abs(out_np).max())
