import numpy as np
import pytest

from sarforge.bpa import backproject, range_profiles
from sarforge.echo import H, V, Scene, simulate_cube
from sarforge.radar import DEFAULT_WAVEFORM, PointScatterer, max_unambiguous_range, wavenumber_axis

from conftest import centred_positions, point_cube

W = DEFAULT_WAVEFORM


def direct_matched_sum(cube, x, y, rx_pol=H):
    """Exact per-sample matched filter, no FFTs or interpolation."""
    kr = wavenumber_axis(cube.params)
    data = cube.channel(rx_pol)
    total = 0j
    for n, xn in enumerate(cube.pulse_positions):
        r = np.hypot(y, x - xn)
        total += np.sum(data[n] * np.exp(1j * kr * r))
    return total


def test_matches_direct_matched_filter():
    cube = point_cube([(0.3, 14.0)], n=32)
    xs = np.array([0.3, 0.31, 0.5])
    ys = np.array([13.7, 14.0, 14.2])
    img = backproject(cube, xs, ys)
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            ref = direct_matched_sum(cube, x, y)
            assert abs(img.pixels[i, j] - ref) <= 0.02 * abs(direct_matched_sum(cube, 0.3, 14.0))


def test_peak_at_truth_on_grid():
    cube = point_cube([(0.3, 14.0)], n=128)
    xs = 0.3 + 0.01 * np.arange(-20, 21)
    ys = 14.0 + 0.05 * np.arange(-20, 21)
    x, y, mag = backproject(cube, xs, ys).peak()
    assert x == pytest.approx(0.3) and y == pytest.approx(14.0)
    assert mag == pytest.approx(128 * W.n_fast, rel=0.02)


def test_nonuniform_track_still_focuses():
    rng = np.random.default_rng(5)
    x = centred_positions(128) + rng.uniform(-0.008, 0.008, 128)
    cube = simulate_cube(Scene((PointScatterer(-0.2, 9.0),)), W, x, tdm=False)
    img = backproject(cube, -0.2 + 0.01 * np.arange(-10, 11), 9.0 + 0.05 * np.arange(-10, 11))
    px, py, _ = img.peak()
    assert px == pytest.approx(-0.2) and py == pytest.approx(9.0)


def test_pixels_beyond_max_range_are_invalid():
    cube = point_cube([(0.0, 10.0)], n=8)
    ys = np.array([30.0, 37.0, 38.0, 45.0])
    img = backproject(cube, np.array([0.0, 0.1]), ys)
    r_max = max_unambiguous_range(W)
    assert np.array_equal(img.valid[0], ys <= r_max)
    assert not np.any(img.pixels[:, ys > r_max])
    assert img.metadata["invalid_pixels"] == 4


def test_tdm_selects_transmit_polarisation():
    cube = point_cube([(0.0, 10.0, [[0, 0], [0, 1]])], n=16, tdm=True)
    xs, ys = np.array([0.0]), np.array([10.0])
    assert abs(backproject(cube, xs, ys, V, V).pixels[0, 0]) > 100
    assert abs(backproject(cube, xs, ys, H, H).pixels[0, 0]) == 0
    assert backproject(cube, xs, ys, V, H).pol_label == "VH"


def test_threaded_equals_serial():
    cube = point_cube([(0.0, 10.0)], n=40)
    xs, ys = np.linspace(-0.5, 0.5, 11), np.linspace(9, 11, 9)
    a = backproject(cube, xs, ys)
    b = backproject(cube, xs, ys, workers=4)
    assert np.allclose(a.pixels, b.pixels)


def test_wavenumber_weighting_at_broadside_is_inverse_sqrt_range():
    cube = point_cube([(0.0, 16.0)], n=1)
    xs, ys = np.array([0.0]), np.array([16.0])
    a = backproject(cube, xs, ys)
    b = backproject(cube, xs, ys, weighting="wavenumber")
    assert abs(b.pixels[0, 0]) == pytest.approx(abs(a.pixels[0, 0]) / 4.0)


def test_argument_checks():
    cube = point_cube([(0.0, 10.0)], n=4)
    with pytest.raises(ValueError):
        backproject(cube, [0.0], [10.0], weighting="taylor")
    with pytest.raises(ValueError):
        backproject(cube, [0.0], [10.0], positions=[0.0, 1.0])


def test_range_profile_peak_at_beat_frequency():
    cube = point_cube([(0.0, 20.0)], n=1)
    prof, f0, df = range_profiles(cube, cube.channel(H))
    f = f0 + df * np.argmax(np.abs(prof[0]))
    assert f == pytest.approx(-2 * W.chirp_rate * 20.0 / 299792458.0, abs=df)
