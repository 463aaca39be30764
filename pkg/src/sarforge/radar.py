"""System parameters, scene geometry and closed-form radar calculators.

All quantities are SI. The speed of light is the exact SI value, so derived
quantities differ slightly from values quoted with c rounded to 3e8.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

C = 299_792_458.0  # m/s


@dataclass(frozen=True)
class WaveformParams:
    """Sawtooth LFM/FMCW waveform and acquisition parameters.

    Attributes:
        f0: carrier (band-centre) frequency [Hz]
        beta: sweep bandwidth [Hz]
        tau_pd: chirp duration [s]
        f_p: effective pulse repetition frequency [Hz]
        f_s: ADC sample rate [samples/s]
    """

    f0: float = 5.9e9
    beta: float = 200e6
    tau_pd: float = 1.0e-3
    f_p: float = 75.0
    f_s: float = 100e3

    def __post_init__(self):
        for name in ("f0", "beta", "tau_pd", "f_p", "f_s"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"WaveformParams.{name} must be finite and > 0, got {value!r}")
        if self.n_fast < 2:
            raise ValueError("f_s * tau_pd must give at least 2 fast-time samples")

    @property
    def chirp_rate(self) -> float:
        """K = beta / tau_pd [Hz/s]."""
        return self.beta / self.tau_pd

    @property
    def wavelength(self) -> float:
        return C / self.f0

    @property
    def pri(self) -> float:
        return 1.0 / self.f_p

    @property
    def n_fast(self) -> int:
        return int(round(self.f_s * self.tau_pd))

    def fast_time(self, n_fast: Optional[int] = None) -> np.ndarray:
        """Fast-time sample instants, uniform over [-tau_pd/2, tau_pd/2] inclusive."""
        n = self.n_fast if n_fast is None else n_fast
        return np.linspace(-self.tau_pd / 2, self.tau_pd / 2, n)


@dataclass(frozen=True)
class AntennaParams:
    """Antenna gains [dBi] and beamwidths [rad].

    ``theta_r`` is the Rayleigh (peak-to-null) beamwidth used for the spatial
    sampling bound. When omitted it defaults to ``theta3db_tx / 2`` and
    ``theta_r_defaulted`` is set so callers can report it.
    """

    gain_tx: float = 13.2
    gain_rx: float = 9.5
    theta3db_tx: float = math.radians(40.0)
    theta3db_rx: float = math.radians(65.0)
    theta_r: Optional[float] = None
    theta_r_defaulted: bool = field(default=False, init=False)

    def __post_init__(self):
        for name in ("theta3db_tx", "theta3db_rx"):
            value = getattr(self, name)
            if not 0 < value < math.pi:
                raise ValueError(f"AntennaParams.{name} must lie in (0, pi), got {value!r}")
        if self.theta_r is None:
            object.__setattr__(self, "theta_r", self.theta3db_tx / 2)
            object.__setattr__(self, "theta_r_defaulted", True)
        if not self.theta_r > 0:
            raise ValueError(f"AntennaParams.theta_r must be > 0, got {self.theta_r!r}")


@dataclass(frozen=True, eq=False)
class PointScatterer:
    """Point target at crossrange ``x_t`` and downrange ``y_t`` (world frame, m).

    ``s_matrix`` is indexed ``[tx_pol][rx_pol]`` with H = 0 and V = 1, so
    ``s_matrix[0, 1]`` is the HV response (transmit H, receive V).
    """

    x_t: float
    y_t: float
    s_matrix: np.ndarray = field(default_factory=lambda: np.eye(2, dtype=complex))

    def __post_init__(self):
        s = np.array(self.s_matrix, dtype=complex)
        if s.shape != (2, 2):
            raise ValueError(f"s_matrix must be 2x2, got shape {s.shape}")
        if not np.all(np.isfinite(s)):
            raise ValueError("s_matrix must be finite")
        if not (math.isfinite(self.x_t) and math.isfinite(self.y_t)):
            raise ValueError("scatterer position must be finite")
        if not self.y_t > 0:
            raise ValueError(f"y_t must be > 0 (side-looking geometry), got {self.y_t!r}")
        s.flags.writeable = False
        object.__setattr__(self, "s_matrix", s)

    def __eq__(self, other):
        if not isinstance(other, PointScatterer):
            return NotImplemented
        return (self.x_t, self.y_t) == (other.x_t, other.y_t) and np.array_equal(
            self.s_matrix, other.s_matrix
        )

    def __hash__(self):
        return hash((self.x_t, self.y_t, self.s_matrix.tobytes()))


@dataclass(frozen=True)
class PlatformState:
    """Stop-and-go platform sample: along-track position of pulse ``n``."""

    x_n: float
    v_a: float
    n: int

    @classmethod
    def constant_velocity(cls, n: int, v_a: float, f_p: float) -> "PlatformState":
        return cls(x_n=n * v_a / f_p, v_a=v_a, n=n)


DEFAULT_WAVEFORM = WaveformParams()
DEFAULT_ANTENNA = AntennaParams()
DEFAULT_SPEED = 2.25  # m/s


def range_history(target: PointScatterer, x_n):
    """Slant range from platform position(s) ``x_n`` to ``target``."""
    return np.hypot(target.y_t, target.x_t - np.asarray(x_n, dtype=float))


def range_resolution(w: WaveformParams) -> float:
    return C / (2.0 * w.beta)


def crossrange_resolution(f0: float, theta3db: float) -> float:
    if not 0 < theta3db < math.pi:
        raise ValueError(f"theta3db must lie in (0, pi), got {theta3db!r}")
    return (C / f0) / (2.0 * theta3db)


def max_unambiguous_range(w: WaveformParams) -> float:
    """Range whose dechirped beat frequency 2*R*K/c reaches f_s/2."""
    return C * w.f_s * w.tau_pd / (4.0 * w.beta)


def beat_frequency(w: WaveformParams, r) -> float:
    """Magnitude of the dechirped beat frequency for range ``r`` [Hz]."""
    return 2.0 * np.asarray(r) * w.chirp_rate / C


def _check_rayleigh(theta_r: float):
    if not 0 < theta_r < math.pi / 2:
        raise ValueError(f"theta_r must lie in (0, pi/2), got {theta_r!r}")


def min_prf(v_a: float, f0: float, theta_r: float) -> float:
    """Strict lower bound on PRF that avoids crossrange aliasing."""
    if not v_a > 0:
        raise ValueError(f"v_a must be > 0, got {v_a!r}")
    _check_rayleigh(theta_r)
    return 4.0 * v_a * math.sin(theta_r) / (C / f0)


def max_spatial_step(f0: float, theta_r: float) -> float:
    """Strict upper bound on along-track sample spacing."""
    _check_rayleigh(theta_r)
    return (C / f0) / (4.0 * math.sin(theta_r))


def wavenumber_axis(w: WaveformParams, n_fast: Optional[int] = None) -> np.ndarray:
    """Round-trip wavenumber k_r = 4*pi*(f0 + K*t)/c on the fast-time grid [rad/m]."""
    n = w.n_fast if n_fast is None else n_fast
    if n < 2:
        raise ValueError("n_fast must be >= 2")
    return 4.0 * np.pi / C * (w.f0 + w.chirp_rate * w.fast_time(n))


def rvp_phase(w: WaveformParams, r):
    """Residual video phase K*4*pi*R^2/c^2 left by dechirping [rad]."""
    return w.chirp_rate * 4.0 * np.pi / C**2 * np.asarray(r, dtype=float) ** 2
