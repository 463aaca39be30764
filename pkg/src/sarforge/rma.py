"""Range Migration (omega-K) image formation.

Pipeline: optional RVP removal and downrange window, crossrange FFT,
reference-range matched filter, Stolt resampling onto a uniform ``k_y`` grid,
and a 2-D inverse FFT. The spectrum's crossrange axis is kept DC-centred.

Sign convention: the simulated phase is ``exp(-j k_r R)``, so after the
crossrange transform and matched filter a target at ``(x_t, y_t)`` carries
``exp(-j[(y_t - R_ref) k_y + k_x (x_t - x_0)])`` and the inverse transform
places it at ``(x_t, y_t)``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .echo import H, POL_NAMES, DataCube
from .errors import EmptySupport, NonuniformTrack
from .radar import C, WaveformParams, max_unambiguous_range, rvp_phase, wavenumber_axis

log = logging.getLogger(__name__)

POL_LABELS = ("HH", "HV", "VH", "VV")
UNIFORMITY_TOL = 0.05


@dataclass(frozen=True)
class FocusConfig:
    """Image-formation settings.

    ``r_ref=None`` selects R_max/2. ``window`` is ``"none"`` or
    ``"raised-cosine"`` with coefficient ``window_alpha`` (0.5 Hann, 0.54
    Hamming). ``range_pad`` is the fast-time upsampling factor applied before
    Stolt resampling; ``oversample`` zero-pads the final spectrum so image
    pixels are finer than the resolution cell.
    """

    r_ref: Optional[float] = None
    window: str = "none"
    window_alpha: float = 0.5
    stolt_interp: str = "linear"
    sinc_taps: int = 8
    range_pad: int = 2
    ky_extent: str = "full"
    zero_pad_crossrange: int = 1
    oversample: int = 1
    compensate_rvp: bool = True

    def __post_init__(self):
        if self.r_ref is not None and self.r_ref < 0:
            raise ValueError("r_ref must be >= 0")
        if self.window not in ("none", "raised-cosine"):
            raise ValueError(f"unknown window {self.window!r}")
        if not 0.5 <= self.window_alpha <= 1.0:
            raise ValueError("window_alpha must lie in [0.5, 1]")
        if self.stolt_interp not in ("linear", "sinc"):
            raise ValueError(f"unknown stolt_interp {self.stolt_interp!r}")
        if self.sinc_taps < 2 or self.sinc_taps % 2:
            raise ValueError("sinc_taps must be an even number >= 2")
        if self.ky_extent not in ("center", "full"):
            raise ValueError(f"unknown ky_extent {self.ky_extent!r}")
        for name in ("range_pad", "zero_pad_crossrange", "oversample"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be >= 1")

    def reference_range(self, w: WaveformParams) -> float:
        return max_unambiguous_range(w) / 2 if self.r_ref is None else float(self.r_ref)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Wavenumber-domain data ``[n_kx, n_k]`` with a DC-centred ``kx`` axis.

    ``domain`` is ``"kr"`` before Stolt resampling and ``"ky"`` after. ``k`` is
    always uniform. ``r_ref`` is the accumulated matched-filter shift.
    """

    data: np.ndarray
    kx: np.ndarray
    k: np.ndarray
    domain: str
    x0: float
    dx: float
    r_ref: float = 0.0
    masked: int = 0
    pol_label: Optional[str] = None
    metadata: dict = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class SarImage:
    """Complex image ``pixels[ix, iy]`` on uniform crossrange/downrange axes.

    ``cal_constant`` maps ``|pixel|**2`` to RCS in m^2 once calibrated.
    ``valid`` optionally flags pixels that could be formed unambiguously.
    """

    pixels: np.ndarray
    x0: float
    dx: float
    y0: float
    dy: float
    pol_label: Optional[str] = None
    cal_constant: Optional[float] = None
    metadata: dict = field(default_factory=dict)
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2:
            raise ValueError("pixels must be 2-D")
        if self.pol_label is not None and self.pol_label not in POL_LABELS:
            raise ValueError(f"pol_label must be one of {POL_LABELS}")
        if pixels.size and not (self.dx > 0 and self.dy > 0):
            raise ValueError("axis steps must be positive")
        object.__setattr__(self, "pixels", pixels)

    @property
    def shape(self):
        return self.pixels.shape

    @property
    def x_axis(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.pixels.shape[0])

    @property
    def y_axis(self) -> np.ndarray:
        return self.y0 + self.dy * np.arange(self.pixels.shape[1])

    def power(self) -> np.ndarray:
        """``|pixel|**2``, scaled to m^2 when calibrated."""
        p = np.abs(self.pixels) ** 2
        return p * self.cal_constant if self.cal_constant is not None else p

    def index_of(self, x: float, y: float):
        ix = int(round((x - self.x0) / self.dx))
        iy = int(round((y - self.y0) / self.dy))
        return ix, iy

    def peak(self):
        """(x, y, |pixel|) of the global magnitude maximum."""
        mag = np.abs(self.pixels)
        ix, iy = np.unravel_index(np.argmax(mag), mag.shape)
        return self.x0 + ix * self.dx, self.y0 + iy * self.dy, float(mag[ix, iy])


def pol_label(tx_pol: int, rx_pol: int) -> str:
    """Transmit polarisation followed by receive polarisation, e.g. ``"HV"``."""
    return POL_NAMES[tx_pol] + POL_NAMES[rx_pol]


def _fast_dt(w: WaveformParams, n_fast: int) -> float:
    return w.tau_pd / (n_fast - 1)


def rvp_compensate(cube: DataCube) -> DataCube:
    """Remove the residual video phase in the fast-time frequency domain.

    Each beat-frequency bin ``f`` corresponds to range ``R = -f c / (2K)``; the
    bin is multiplied by ``exp(-j K 4 pi R^2 / c^2)``.
    """
    if not cube.rvp_present:
        warnings.warn("cube has no residual video phase; rvp_compensate is a no-op", stacklevel=2)
        return cube
    w = cube.params
    if cube.n_pulses == 0:
        return cube.with_samples(cube.samples, rvp_present=False)
    f = np.fft.fftfreq(cube.n_fast, _fast_dt(w, cube.n_fast))
    r = -f * C / (2.0 * w.chirp_rate)
    corr = np.exp(-1j * rvp_phase(w, r))
    spec = np.fft.fft(cube.samples, axis=1)
    out = np.fft.ifft(spec * corr[None, :, None], axis=1)
    return cube.with_samples(out, rvp_present=False)


def downrange_window(n: int, cfg: FocusConfig) -> np.ndarray:
    if cfg.window == "none":
        return np.ones(n)
    a = cfg.window_alpha
    return a - (1.0 - a) * np.cos(2.0 * np.pi * np.arange(n) / (n - 1))


def apply_window(cube: DataCube, cfg: FocusConfig) -> DataCube:
    if cfg.window == "none":
        return cube
    win = downrange_window(cube.n_fast, cfg)
    return cube.with_samples(cube.samples * win[None, :, None])


def _select(cube: DataCube, tx_pol: int):
    if cube.tdm:
        keep = cube.pulse_tx_pol == tx_pol
    else:
        if np.any(cube.pulse_tx_pol != tx_pol):
            raise ValueError(f"cube has no TDM schedule for tx polarisation {POL_NAMES[tx_pol]}")
        keep = np.ones(cube.n_pulses, dtype=bool)
    return keep


def track_spacing(positions: np.ndarray) -> float:
    """Mean along-track spacing; raises NonuniformTrack beyond 5 % deviation."""
    if len(positions) < 2:
        raise NonuniformTrack("at least two pulses are needed for a crossrange transform")
    dx = (positions[-1] - positions[0]) / (len(positions) - 1)
    if not dx > 0:
        raise NonuniformTrack("pulse positions must increase along the track")
    worst = float(np.max(np.abs(np.diff(positions) - dx)))
    if worst > UNIFORMITY_TOL * dx:
        raise NonuniformTrack(
            f"pulse spacing deviates by {worst * 1e3:.2f} mm from the mean {dx * 1e3:.2f} mm"
        )
    return float(dx)


def crossrange_transform(
    cube: DataCube, cfg: FocusConfig = FocusConfig(), tx_pol: int = H, rx_pol: int = H
) -> Spectrum:
    """Unitary DFT along the pulse axis for one transmit/receive pair."""
    keep = _select(cube, tx_pol)
    positions = cube.pulse_positions[keep]
    dx = track_spacing(positions)
    data = cube.channel(rx_pol)[keep]
    n = len(positions) * int(cfg.zero_pad_crossrange)
    spec = np.fft.fftshift(np.fft.fft(data, n=n, axis=0, norm="ortho"), axes=0)
    kx = np.fft.fftshift(2.0 * np.pi * np.fft.fftfreq(n, dx))
    kr = wavenumber_axis(cube.params, cube.n_fast)
    return Spectrum(spec, kx, kr, "kr", float(positions[0]), dx, pol_label=pol_label(tx_pol, rx_pol))


def matched_filter(
    spectrum: Spectrum, w: WaveformParams, cfg: FocusConfig = FocusConfig(), r_ref: Optional[float] = None
) -> Spectrum:
    """Multiply by ``exp(+j R_ref sqrt(k_r^2 - k_x^2))``; evanescent bins are zeroed.

    ``r_ref`` overrides the configured reference range (negative values are
    allowed here, which undoes an earlier shift).
    """
    if spectrum.domain != "kr":
        raise ValueError("matched_filter expects a k_r-domain spectrum")
    shift = cfg.reference_range(w) if r_ref is None else float(r_ref)
    kz2 = spectrum.k[None, :] ** 2 - spectrum.kx[:, None] ** 2
    keep = kz2 > 0
    kz = np.sqrt(np.where(keep, kz2, 0.0))
    filt = np.where(keep, np.exp(1j * shift * kz), 0.0)
    masked = int(np.count_nonzero(~keep))
    return replace(
        spectrum,
        data=spectrum.data * filt,
        r_ref=spectrum.r_ref + shift,
        masked=spectrum.masked + masked,
    )


def upsample_k(data: np.ndarray, factor: int) -> np.ndarray:
    """Band-limited upsampling along the last axis by zero-padding its transform."""
    if factor == 1:
        return data
    n = data.shape[-1]
    spec = np.fft.fft(data, axis=-1)
    m = n * factor
    out = np.zeros(data.shape[:-1] + (m,), dtype=complex)
    half = (n + 1) // 2
    out[..., :half] = spec[..., :half]
    out[..., m - (n - half):] = spec[..., half:]
    if n % 2 == 0:
        # Split the Nyquist bin so real inputs stay real.
        out[..., half] = spec[..., half] / 2
        out[..., m - half] = spec[..., half] / 2
    return np.fft.ifft(out, axis=-1) * factor


def _ky_grid(kr: np.ndarray, kx: np.ndarray, step: float, n_center: int, policy: str) -> np.ndarray:
    k_lo, k_hi = float(kr[0]), float(kr[-1])
    if policy == "center":
        return np.linspace(k_lo, k_hi, n_center)
    kx_max = float(np.max(np.abs(kx[np.abs(kx) < k_hi]))) if np.any(np.abs(kx) < k_hi) else 0.0
    lo = math.sqrt(max(k_lo**2 - kx_max**2, 0.0))
    n = int(math.floor((k_hi - lo) / step)) + 1
    return k_hi - step * np.arange(n)[::-1]


def _interp_linear(data, u, n):
    i0 = np.floor(u).astype(np.int64)
    t = u - i0
    i0c = np.clip(i0, 0, n - 1)
    i1c = np.clip(i0 + 1, 0, n - 1)
    rows = np.arange(data.shape[0])[:, None]
    return (1.0 - t) * data[rows, i0c] + t * data[rows, i1c]


def _interp_sinc(data, u, n, taps):
    rows = np.arange(data.shape[0])[:, None]
    i0 = np.floor(u).astype(np.int64)
    half = taps // 2
    out = np.zeros(u.shape, dtype=complex)
    beta = 2.5
    for off in range(-half + 1, half + 1):
        idx = i0 + off
        d = u - idx
        inside = (idx >= 0) & (idx < n)
        # Kaiser-tapered sinc kernel over the tap span.
        arg = np.clip(1.0 - (d / half) ** 2, 0.0, None)
        kern = np.sinc(d) * np.i0(beta * np.sqrt(arg)) / np.i0(beta)
        out += np.where(inside, kern * data[rows, np.clip(idx, 0, n - 1)], 0.0)
    return out


def stolt_interpolate(spectrum: Spectrum, cfg: FocusConfig = FocusConfig()) -> Spectrum:
    """Resample each k_x column from ``k_y = sqrt(k_r^2 - k_x^2)`` onto a uniform k_y grid."""
    if spectrum.domain != "kr":
        raise ValueError("stolt_interpolate expects a k_r-domain spectrum")
    kr = spectrum.k
    n_kr = len(kr)
    pad = int(cfg.range_pad)
    data = upsample_k(spectrum.data, pad)
    n_fine = data.shape[1]
    step = (kr[1] - kr[0]) / pad
    ky = _ky_grid(kr, spectrum.kx, step, n_kr * pad, cfg.ky_extent)

    kr_needed = np.sqrt(ky[None, :] ** 2 + spectrum.kx[:, None] ** 2)
    u = (kr_needed - kr[0]) / step
    support = (u >= 0) & (u <= (n_kr - 1) * pad + 1e-9)
    if not np.any(support):
        raise EmptySupport("the k_y grid does not intersect the data support")
    if cfg.stolt_interp == "linear":
        out = _interp_linear(data, u, n_fine)
    else:
        out = _interp_sinc(data, u, n_fine, cfg.sinc_taps)
    out = np.where(support, out, 0.0)
    meta = dict(spectrum.metadata, stolt_support=int(np.count_nonzero(support)))
    return replace(spectrum, data=out, k=ky, domain="ky", metadata=meta)


def image_invert(spectrum: Spectrum, cfg: FocusConfig = FocusConfig()) -> SarImage:
    """2-D inverse DFT of a uniform-grid spectrum into a crossrange x downrange image.

    The downrange axis is offset by the accumulated ``r_ref``. With
    ``oversample > 1`` the spectrum is zero-padded in both dimensions and the
    result rescaled so peak amplitudes do not depend on the oversampling.
    """
    os_ = int(cfg.oversample)
    data = spectrum.data
    n_kx, n_k = data.shape
    m_kx, m_k = n_kx * os_, n_k * os_
    if os_ > 1:
        before = m_kx // 2 - n_kx // 2
        data = np.pad(data, ((before, m_kx - n_kx - before), (0, m_k - n_k)))
    img = np.fft.ifft(np.fft.ifftshift(data, axes=0), axis=0, norm="ortho")
    img = np.fft.fftshift(np.fft.ifft(img, axis=1, norm="ortho"), axes=1)
    if os_ > 1:
        img = img * os_
    dk = spectrum.k[1] - spectrum.k[0]
    dkx = spectrum.kx[1] - spectrum.kx[0] if n_kx > 1 else 2 * np.pi / spectrum.dx
    dy = 2.0 * np.pi / (m_k * dk)
    dxi = 2.0 * np.pi / (m_kx * dkx)
    y0 = spectrum.r_ref - (m_k // 2) * dy
    meta = dict(spectrum.metadata, r_ref=spectrum.r_ref, masked_bins=spectrum.masked)
    return SarImage(img, spectrum.x0, dxi, y0, dy, pol_label=spectrum.pol_label, metadata=meta)


def focus(
    cube: DataCube,
    w: Optional[WaveformParams] = None,
    cfg: FocusConfig = FocusConfig(),
    tx_pol: int = H,
    rx_pol: int = H,
) -> SarImage:
    """Form the image of one transmit/receive pair with the full RMA chain."""
    w = cube.params if w is None else w
    if cube.rvp_present and cfg.compensate_rvp:
        cube = rvp_compensate(cube)
    cube = apply_window(cube, cfg)
    spec = crossrange_transform(cube, cfg, tx_pol, rx_pol)
    spec = matched_filter(spec, w, cfg)
    spec = stolt_interpolate(spec, cfg)
    img = image_invert(spec, cfg)
    meta = dict(img.metadata, focus_config=asdict(cfg), rvp_remaining=cube.rvp_present)
    log.debug("focused %s: %s pixels, r_ref=%.3f m", img.pol_label, img.shape, spec.r_ref)
    return replace(img, metadata=meta)
