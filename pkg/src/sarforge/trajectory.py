"""GNSS track analysis against the constant-velocity straight-line motion model.

Track frame: the along-track axis is the fitted heading and the cross-track
axis is its left normal, so positive cross-track error lies to the left of the
direction of travel.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .echo import SamplingWarning
from .errors import DegenerateTrack
from .radar import max_spatial_step

GNSS_SIGMA = 0.020  # m, per-axis RTK noise used for synthetic logs


@dataclass(frozen=True, eq=False)
class TrackLog:
    t: np.ndarray
    east: np.ndarray
    north: np.ndarray
    up: np.ndarray
    source: str = ""

    def __post_init__(self):
        arrays = [np.array(getattr(self, k), dtype=float) for k in ("t", "east", "north", "up")]
        n = len(arrays[0])
        if any(a.shape != (n,) for a in arrays):
            raise ValueError("t, east, north and up must be 1-D and of equal length")
        if n < 2:
            raise ValueError("a track log needs at least 2 samples")
        if not np.all(np.diff(arrays[0]) > 0):
            raise ValueError("track timestamps must be strictly increasing")
        for name, a in zip(("t", "east", "north", "up"), arrays):
            a.flags.writeable = False
            object.__setattr__(self, name, a)

    def __len__(self):
        return len(self.t)

    def __eq__(self, other):
        if not isinstance(other, TrackLog):
            return NotImplemented
        return self.source == other.source and all(
            np.array_equal(getattr(self, k), getattr(other, k)) for k in ("t", "east", "north", "up")
        )


@dataclass(frozen=True)
class TrackFit:
    """Straight line traversed at constant speed: ``origin + speed * t * (cos h, sin h)``.

    ``heading`` is measured counter-clockwise from east [rad].
    """

    speed: float
    heading: float
    origin: tuple

    @property
    def along(self) -> np.ndarray:
        return np.array([math.cos(self.heading), math.sin(self.heading)])

    @property
    def left(self) -> np.ndarray:
        return np.array([-math.sin(self.heading), math.cos(self.heading)])

    def position(self, t):
        """Model (east, north) at times ``t``; shape ``[len(t), 2]``."""
        t = np.asarray(t, dtype=float)
        return np.asarray(self.origin)[None, :] + self.speed * t[:, None] * self.along[None, :]


@dataclass(frozen=True, eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray

    def __eq__(self, other):
        return (
            isinstance(other, Histogram)
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.counts, other.counts)
        )


@dataclass(frozen=True, eq=False)
class TrackErrorStats:
    v_fit: float
    heading_fit: float
    origin: tuple
    rmse: float
    along_errors: np.ndarray
    cross_errors: np.ndarray
    along_rates: np.ndarray
    cross_rates: np.ndarray
    along_hist: Histogram
    cross_hist: Histogram
    along_rate_hist: Histogram
    cross_rate_hist: Histogram
    source: str = ""

    _ARRAYS = ("along_errors", "cross_errors", "along_rates", "cross_rates")
    _HISTS = ("along_hist", "cross_hist", "along_rate_hist", "cross_rate_hist")

    def __eq__(self, other):
        if not isinstance(other, TrackErrorStats):
            return NotImplemented
        same = (self.v_fit, self.heading_fit, tuple(self.origin), self.rmse, self.source) == (
            other.v_fit, other.heading_fit, tuple(other.origin), other.rmse, other.source
        )
        return (
            same
            and all(np.array_equal(getattr(self, k), getattr(other, k)) for k in self._ARRAYS)
            and all(getattr(self, k) == getattr(other, k) for k in self._HISTS)
        )


def fit_constant_velocity(log: TrackLog, noise_scale: float = GNSS_SIGMA) -> TrackFit:
    """Least-squares straight line in (east, north) versus time.

    Raises DegenerateTrack when the fitted displacement over the log is below
    ten times ``noise_scale``.
    """
    design = np.column_stack([np.ones(len(log)), log.t])
    coef, *_ = np.linalg.lstsq(design, np.column_stack([log.east, log.north]), rcond=None)
    (e0, n0), (ve, vn) = coef
    speed = math.hypot(ve, vn)
    if speed * (log.t[-1] - log.t[0]) < 10.0 * noise_scale:
        raise DegenerateTrack(
            f"fitted displacement {speed * (log.t[-1] - log.t[0]):.3f} m is below 10x the "
            f"{noise_scale:.3f} m position noise"
        )
    return TrackFit(speed=float(speed), heading=float(math.atan2(vn, ve)), origin=(float(e0), float(n0)))


def histogram(values, bin_width: float) -> Histogram:
    """Counts on bins aligned to multiples of ``bin_width`` covering all values."""
    if not bin_width > 0:
        raise ValueError("bin_width must be > 0")
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return Histogram(np.array([0.0, bin_width]), np.zeros(1, dtype=np.int64))
    lo = math.floor(v.min() / bin_width)
    hi = max(math.ceil(v.max() / bin_width), lo + 1)
    edges = bin_width * np.arange(lo, hi + 1, dtype=float)
    counts, _ = np.histogram(v, bins=edges)
    return Histogram(edges, counts.astype(np.int64))


def approximation_errors(
    log: TrackLog, fit: TrackFit, bin_width: float = 0.05, rate_bin_width: float = 0.05
) -> TrackErrorStats:
    """Signed along/cross-track deviation of the logged positions from the model.

    Error rates are first differences over the logged timestamps.
    """
    model = fit.position(log.t)
    d = np.column_stack([log.east, log.north]) - model
    along = d @ fit.along
    cross = d @ fit.left
    dt = np.diff(log.t)
    along_rate = np.diff(along) / dt
    cross_rate = np.diff(cross) / dt
    rmse = math.sqrt(float(np.mean(along**2 + cross**2)))
    return TrackErrorStats(
        v_fit=fit.speed,
        heading_fit=fit.heading,
        origin=tuple(fit.origin),
        rmse=rmse,
        along_errors=along,
        cross_errors=cross,
        along_rates=along_rate,
        cross_rates=cross_rate,
        along_hist=histogram(along, bin_width),
        cross_hist=histogram(cross, bin_width),
        along_rate_hist=histogram(along_rate, rate_bin_width),
        cross_rate_hist=histogram(cross_rate, rate_bin_width),
        source=log.source,
    )


def pulse_positions(
    fit: TrackFit, f_p: float, n_pulses: int, f0: Optional[float] = None, theta_r: Optional[float] = None
) -> np.ndarray:
    """Along-track positions ``n * v / f_p`` in the track frame.

    When ``f0`` and ``theta_r`` are given the spacing is checked against the
    crossrange sampling bound and a SamplingWarning is issued if it fails.
    """
    if not f_p > 0:
        raise ValueError("f_p must be > 0")
    step = fit.speed / f_p
    if f0 is not None and theta_r is not None:
        bound = max_spatial_step(f0, theta_r)
        if step >= bound:
            warnings.warn(
                f"pulse spacing {step * 1e3:.1f} mm violates the {bound * 1e3:.1f} mm bound",
                SamplingWarning,
                stacklevel=2,
            )
    return np.arange(n_pulses) * step


@dataclass(frozen=True)
class WobbleSpec:
    """Band-limited random deviations with the given RMS amplitudes [m].

    ``wavelength`` is the shortest along-track wavelength kept [m].
    """

    along_amp: float = 0.0
    cross_amp: float = 0.0
    wavelength: float = 5.0
    seed: int = 0
    gnss_sigma: float = 0.0
    duration: float = 20.0
    sample_rate: float = 10.0


def _band_limited(rng, n, ds, wavelength, rms):
    if rms == 0:
        return np.zeros(n)
    white = rng.standard_normal(n)
    spec = np.fft.rfft(white)
    spec[np.fft.rfftfreq(n, ds) > 1.0 / wavelength] = 0.0
    spec[0] = 0.0
    x = np.fft.irfft(spec, n)
    norm = math.sqrt(float(np.mean(x**2)))
    if norm == 0:
        raise ValueError("wavelength is too short for the track sampling")
    return x * (rms / norm)


def _log_from_offsets(base: TrackFit, t, along, cross, rng, gnss_sigma, source):
    pos = base.position(t) + along[:, None] * base.along[None, :] + cross[:, None] * base.left[None, :]
    up = np.zeros(len(t))
    if gnss_sigma > 0:
        pos = pos + rng.normal(0.0, gnss_sigma, pos.shape)
        up = up + rng.normal(0.0, gnss_sigma, len(t))
    return TrackLog(t, pos[:, 0], pos[:, 1], up, source)


def synth_wobble(base: TrackFit, spec: WobbleSpec) -> TrackLog:
    """Synthetic log around ``base`` with band-limited along/cross perturbations."""
    n = int(round(spec.duration * spec.sample_rate)) + 1
    t = np.arange(n) / spec.sample_rate
    rng = np.random.default_rng(spec.seed)
    ds = base.speed / spec.sample_rate
    along = _band_limited(rng, n, ds, spec.wavelength, spec.along_amp)
    cross = _band_limited(rng, n, ds, spec.wavelength, spec.cross_amp)
    return _log_from_offsets(base, t, along, cross, rng, spec.gnss_sigma, f"synthetic wobble seed={spec.seed}")


def sinusoidal_track(
    base: TrackFit, t, along_amp: float = 0.0, cross_amp: float = 0.0, wavelength: float = 5.0
) -> TrackLog:
    """Log with peak-amplitude sinusoidal deviations of the given along-track wavelength."""
    t = np.asarray(t, dtype=float)
    phase = 2.0 * np.pi * base.speed * t / wavelength
    along = along_amp * np.sin(phase)
    cross = cross_amp * np.sin(phase)
    return _log_from_offsets(base, t, along, cross, None, 0.0, "synthetic sinusoid")
