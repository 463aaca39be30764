
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sarforge.echo import H, V, Scene, simulate_cube
from sarforge.errors import EmptySupport, NonuniformTrack
from sarforge.psf import local_peak, peak_sidelobe_db
from sarforge.radar import C, DEFAULT_WAVEFORM, PointScatterer, range_resolution
from sarforge.rma import (
    FocusConfig,
    SarImage,
    Spectrum,
    crossrange_transform,
    focus,
    matched_filter,
    pol_label,
    rvp_compensate,
    stolt_interpolate,
    track_spacing,
    upsample_k,
)

from conftest import centred_positions, point_cube

W = DEFAULT_WAVEFORM


@pytest.mark.parametrize(
    "kwargs",
    [
        {"r_ref": -1.0},
        {"window": "kaiser"},
        {"window_alpha": 0.3},
        {"stolt_interp": "cubic"},
        {"sinc_taps": 3},
        {"ky_extent": "wide"},
        {"oversample": 0},
        {"range_pad": 0},
    ],
)
def test_focus_config_validation(kwargs):
    with pytest.raises(ValueError):
        FocusConfig(**kwargs)


def test_reference_range_default_is_half_max_range():
    assert FocusConfig().reference_range(W) == pytest.approx(C * W.f_s * W.tau_pd / (8 * W.beta))
    assert FocusConfig(r_ref=12.0).reference_range(W) == 12.0


def test_track_spacing():
    assert track_spacing(np.arange(10) * 0.03) == pytest.approx(0.03)
    jitter = np.arange(10) * 0.03
    jitter[4] += 0.01
    with pytest.raises(NonuniformTrack):
        track_spacing(jitter)
    with pytest.raises(NonuniformTrack):
        track_spacing(np.array([0.0]))
    with pytest.raises(NonuniformTrack):
        track_spacing(np.arange(5)[::-1] * 0.03)


def test_pol_labels():
    assert pol_label(H, V) == "HV" and pol_label(V, H) == "VH"


def test_crossrange_transform_is_unitary():
    cube = point_cube([(0.0, 10.0)], n=64)
    spec = crossrange_transform(cube)
    assert np.sum(np.abs(spec.data) ** 2) == pytest.approx(np.sum(np.abs(cube.channel(H)) ** 2))
    assert spec.kx[len(spec.kx) // 2] == 0.0
    assert spec.dx == pytest.approx(0.03)


def test_matched_filter_shift_is_invertible_on_propagating_bins():
    spec = crossrange_transform(point_cube([(0.0, 10.0)], n=64))
    out = matched_filter(spec, W, r_ref=15.0)
    back = matched_filter(out, W, r_ref=-15.0)
    keep = spec.k[None, :] ** 2 > spec.kx[:, None] ** 2
    assert np.allclose(back.data[keep], spec.data[keep])
    assert np.all(back.data[~keep] == 0)
    assert out.r_ref == 15.0 and back.r_ref == 0.0
    assert out.masked == np.count_nonzero(~keep)


@settings(max_examples=20, deadline=None)
@given(st.integers(8, 40), st.integers(2, 4), st.integers(0, 2**31 - 1))
def test_upsample_k_keeps_original_samples(n, factor, seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    y = upsample_k(x[None, :], factor)[0]
    assert y.shape == (n * factor,)
    assert np.allclose(y[::factor], x)


def test_upsample_k_interpolates_a_tone():
    n = 32
    i = np.arange(n)
    tone = np.exp(2j * np.pi * 3 * i / n)
    fine = upsample_k(tone[None, :], 4)[0]
    assert np.allclose(fine, np.exp(2j * np.pi * 3 * np.arange(4 * n) / (4 * n)))


def test_stolt_without_support_raises():
    kr = np.linspace(240.0, 256.0, 16)
    spec = Spectrum(np.ones((2, 16), complex), np.array([500.0, 600.0]), kr, "kr", 0.0, 0.03)
    with pytest.raises(EmptySupport):
        stolt_interpolate(spec, FocusConfig(ky_extent="center"))


def test_stolt_requires_kr_domain():
    spec = Spectrum(np.ones((2, 4), complex), np.zeros(2), np.arange(4.0), "ky", 0.0, 0.03)
    with pytest.raises(ValueError):
        stolt_interpolate(spec)
    with pytest.raises(ValueError):
        matched_filter(spec, W)


@pytest.mark.parametrize("interp", ["linear", "sinc"])
@pytest.mark.parametrize("extent", ["center", "full"])
def test_point_target_focuses_at_truth(interp, extent):
    cube = point_cube([(0.4, 13.0)], n=256)
    img = focus(cube, cfg=FocusConfig(stolt_interp=interp, ky_extent=extent, oversample=2))
    x, y, _ = img.peak()
    assert abs(x - 0.4) <= 0.036
    assert abs(y - 13.0) <= range_resolution(W) / 2
    assert img.pol_label == "HH"


def test_image_axes_are_centred_on_reference_range():
    cube = point_cube([(0.0, 10.0)], n=64)
    img = focus(cube, cfg=FocusConfig(r_ref=12.0))
    m = img.shape[1]
    assert img.y_axis[m // 2] == pytest.approx(12.0)
    assert img.x_axis[0] == pytest.approx(cube.pulse_positions[0])
    assert img.metadata["r_ref"] == 12.0


def test_oversampling_preserves_peak_amplitude():
    cube = point_cube([(0.0, 12.0)], n=128)
    a = focus(cube, cfg=FocusConfig(oversample=1)).peak()[2]
    b = focus(cube, cfg=FocusConfig(oversample=4)).peak()[2]
    assert b == pytest.approx(a, rel=0.2)
    assert b >= a * 0.999


def test_window_lowers_downrange_sidelobes():
    cube = point_cube([(0.0, 12.0)], n=128)
    raw = focus(cube, cfg=FocusConfig(oversample=4))
    win = focus(cube, cfg=FocusConfig(oversample=4, window="raised-cosine"))
    def psl(img):
        ix, iy, *_ = local_peak(img, 0.0, 12.0, 0.2, 1.0)
        return peak_sidelobe_db(img.pixels[ix, iy - 80:iy + 80])
    assert psl(raw) > -20
    assert psl(win) < psl(raw) - 10


def test_rvp_compensation_round_trip():
    # Broadside pulse at a range whose beat tone falls exactly on a DFT bin.
    n = W.n_fast
    dt = W.tau_pd / (n - 1)
    r = 20 / (n * dt) * C / (2 * W.chirp_rate)
    scene = Scene((PointScatterer(0.0, r),))
    with_rvp = simulate_cube(scene, W, [0.0], tdm=False, include_rvp=True)
    clean = simulate_cube(scene, W, [0.0], tdm=False)
    fixed = rvp_compensate(with_rvp)
    assert not fixed.rvp_present
    assert np.allclose(fixed.samples, clean.samples, atol=1e-9)


def test_rvp_compensate_without_rvp_warns_and_returns_input():
    cube = point_cube([(0.0, 10.0)], n=4)
    with pytest.warns(UserWarning):
        assert rvp_compensate(cube) is cube


def test_nonuniform_track_is_rejected():
    x = centred_positions(64)
    x[10] += 0.01
    cube = simulate_cube(Scene((PointScatterer(0.0, 10.0),)), W, x, tdm=False)
    with pytest.raises(NonuniformTrack):
        focus(cube)


def test_single_pol_cube_has_no_v_transmit():
    cube = point_cube([(0.0, 10.0)], n=16)
    with pytest.raises(ValueError):
        focus(cube, tx_pol=V)


def test_sar_image_validation():
    with pytest.raises(ValueError):
        SarImage(np.zeros(3), 0, 1, 0, 1)
    with pytest.raises(ValueError):
        SarImage(np.zeros((2, 2)), 0, 1, 0, 1, pol_label="XX")
    with pytest.raises(ValueError):
        SarImage(np.zeros((2, 2)), 0, -1, 0, 1)
    img = SarImage(np.ones((2, 3)), 1.0, 0.5, 2.0, 0.25, cal_constant=4.0)
    assert np.allclose(img.power(), 4.0)
    assert img.index_of(1.5, 2.5) == (1, 2)
