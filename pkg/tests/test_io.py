import numpy as np
import pytest

from cylmimo.arraylab import QualityMetrics, measure_metrics
from cylmimo.forward import simulate_echo
from cylmimo.geometry import ArrayLayout, FrequencyGrid, Scene
from cylmimo.imaging import ImageGrid, ImageVolume
from cylmimo.io import (SidecarError, load_echo, load_image, load_pattern_csv,
                        save_echo, save_image, save_metrics_csv,
                        save_pattern_csv, save_table1_csv, sidecar_path)


def small_echo():
    lay = ArrayLayout.centered(1.5, 2, 0.066, 3, 0.033, 2, 0.1, 3, 0.05)
    fr = FrequencyGrid(31e9, 39e9, 4)
    scene = Scene(np.array([[0.01, -0.02, 0.03]]), np.array([1.0 - 0.5j]))
    return simulate_echo(scene, lay, fr)


def small_volume():
    rng = np.random.default_rng(41)
    grid = ImageGrid((0.0, 0.01, -0.02), (0.004, 0.005, 0.006), (5, 6, 7))
    data = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return ImageVolume(data, grid, "rma", "abc123")


def test_echo_round_trip(tmp_path):
    echo = small_echo()
    path = str(tmp_path / "echo.bin")
    save_echo(path, echo)
    back = load_echo(path)
    assert back.shape == echo.shape
    assert back.freqs == echo.freqs
    assert np.allclose(back.layout.tx_angles, echo.layout.tx_angles, atol=1e-9)
    # payload is float32 re/im pairs, so the round trip is single precision
    assert np.allclose(back.data, echo.data, rtol=0, atol=1e-6 * np.abs(echo.data).max())


def test_echo_sidecar_errors(tmp_path):
    echo = small_echo()
    path = str(tmp_path / "echo.bin")
    sc = save_echo(path, echo)
    assert sc == sidecar_path(path)

    # missing sidecar
    with pytest.raises(SidecarError):
        load_echo(str(tmp_path / "other.bin"))

    # corrupt sidecar: drop a required key
    lines = [l for l in open(sc).read().splitlines() if not l.startswith("freq_count")]
    open(sc, "w").write("\n".join(lines) + "\n")
    with pytest.raises(SidecarError):
        load_echo(path)

    # restore, then truncate the payload
    save_echo(path, echo)
    raw = open(path, "rb").read()
    open(path, "wb").write(raw[:-8])
    with pytest.raises(SidecarError):
        load_echo(path)


def test_echo_sidecar_wrong_kind(tmp_path):
    vol = small_volume()
    path = str(tmp_path / "image.bin")
    save_image(path, vol)
    with pytest.raises(SidecarError):
        load_echo(path)


def test_image_round_trip_and_companions(tmp_path):
    vol = small_volume()
    path = str(tmp_path / "image.bin")
    save_image(path, vol)
    back = load_image(path)
    assert back.grid == vol.grid
    assert back.method == "rma"
    assert back.config_hash == "abc123"
    assert np.allclose(back.data, vol.data, rtol=0, atol=1e-6 * np.abs(vol.data).max())
    stem = str(tmp_path / "image")
    assert (tmp_path / "image.pgm").exists()
    for axis in "xyz":
        assert (tmp_path / f"image_profile_{axis}.csv").exists()
    # PGM header: P5, width x height of the range-collapsed projection, 255
    head = open(stem + ".pgm", "rb").read(20).split(b"\n")
    assert head[0] == b"P5"
    w, h = map(int, head[1].split())
    assert (h, w) == (vol.grid.shape[0], vol.grid.shape[2])
    assert head[2] == b"255"


def test_image_sidecar_version_check(tmp_path):
    vol = small_volume()
    path = str(tmp_path / "image.bin")
    save_image(path, vol)
    sc = sidecar_path(path)
    text = open(sc).read().replace("format_version = 1", "format_version = 99")
    open(sc, "w").write(text)
    with pytest.raises(SidecarError):
        load_image(path)


def test_profile_csv_contents(tmp_path):
    vol = small_volume()
    path = str(tmp_path / "image.bin")
    save_image(path, vol)
    lines = open(str(tmp_path / "image_profile_x.csv")).read().splitlines()
    assert lines[0] == "coordinate_m,magnitude_linear,magnitude_db"
    assert len(lines) == 1 + vol.grid.shape[0]
    vals = np.array([[float(v) for v in l.split(",")] for l in lines[1:]])
    assert np.allclose(vals[:, 0], vol.grid.x)
    assert abs(vals[:, 1].max() - 1.0) < 1e-12  # peak-normalized
    assert abs(vals[np.argmax(vals[:, 1]), 2]) < 1e-9  # 0 dB at the peak


def test_pattern_csv_round_trip(tmp_path):
    coords = np.linspace(-0.1, 0.1, 41)
    mag = np.abs(np.sinc(coords / 0.02))
    path = str(tmp_path / "pattern.csv")
    from cylmimo.arraylab import BeamPatternResult
    save_pattern_csv(path, BeamPatternResult(coords, mag, "bp"))
    back = load_pattern_csv(path)
    assert back.method == "csv"
    assert np.allclose(back.coords, coords, atol=1e-12)
    assert np.allclose(back.magnitude, mag / mag.max(), atol=1e-12)
    m1 = measure_metrics(BeamPatternResult(coords, mag, "bp"))
    m2 = measure_metrics(back)
    assert abs(m1.resolution - m2.resolution) < 1e-9


def test_pattern_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("wrong,header,here\n0,1,0\n")
    with pytest.raises(SidecarError):
        load_pattern_csv(str(path))
    path.write_text("coordinate_m,magnitude_linear,magnitude_db\n0,one,0\n")
    with pytest.raises(SidecarError):
        load_pattern_csv(str(path))
    path.write_text("coordinate_m,magnitude_linear,magnitude_db\n")
    with pytest.raises(SidecarError):
        load_pattern_csv(str(path))


def test_metrics_csv(tmp_path):
    path = str(tmp_path / "metrics.csv")
    save_metrics_csv(path, QualityMetrics(0.0095, -11.5, None))
    lines = open(path).read().splitlines()
    assert lines[0] == "resolution_m,pslr_db,grating_lobe_offset_m"
    fields = lines[1].split(",")
    assert abs(float(fields[0]) - 0.0095) < 1e-12
    assert abs(float(fields[1]) + 11.5) < 1e-12
    assert fields[2] == "nan"


def test_table1_csv(tmp_path):
    path = str(tmp_path / "table1.csv")
    from cylmimo.arraylab import BeamPatternResult
    coords = np.linspace(-0.1, 0.1, 401)
    pat = BeamPatternResult(coords, np.abs(np.sinc(coords / 0.02)), "bp")
    rows = [("scenario one", pat, measure_metrics(pat))]
    save_table1_csv(path, rows)
    lines = open(path).read().splitlines()
    assert lines[0] == "scenario,resolution_m,pslr_db,grating_lobe_offset_m"
    assert lines[1].startswith("scenario one,")


def test_deterministic_bytes(tmp_path):
    echo = small_echo()
    p1, p2 = str(tmp_path / "a.bin"), str(tmp_path / "b.bin")
    save_echo(p1, echo)
    save_echo(p2, echo)
    assert open(p1, "rb").read() == open(p2, "rb").read()
    assert open(sidecar_path(p1)).read() == open(sidecar_path(p2)).read()
    vol = small_volume()
    q1, q2 = str(tmp_path / "v1.bin"), str(tmp_path / "v2.bin")
    save_image(q1, vol)
    save_image(q2, vol)
    assert open(q1, "rb").read() == open(q2, "rb").read()
