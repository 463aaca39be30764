"""Dechirped FMCW echo synthesis for polarimetric point-scatterer scenes.

The model is the stop-and-go dechirp phase
``exp(-j * k_r * R) * exp(+j * K * 4*pi/c^2 * R^2)`` summed over scatterers,
with unit amplitude per scatterer (propagation loss is not modelled unless
``range_taper`` is requested). Transmit polarisations are time-multiplexed:
with TDM on, every along-track position yields an H pulse then a V pulse, both
at the same position.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .radar import (
    AntennaParams,
    PointScatterer,
    WaveformParams,
    max_spatial_step,
    rvp_phase,
    wavenumber_axis,
)

H, V = 0, 1
POL_NAMES = {H: "H", V: "V"}
# Receive channel index -> receive polarisation. Channel 0 is V, channel 1 is H.
RX_POLS = (V, H)
N_CHANNELS = 2


class SamplingWarning(UserWarning):
    """Along-track spacing exceeds the crossrange Nyquist bound."""


@dataclass(frozen=True)
class Scene:
    scatterers: tuple
    reference_reflector: Optional[tuple] = None  # (index, rcs_dbsm)

    def __post_init__(self):
        scat = tuple(self.scatterers)
        if not scat:
            raise ValueError("scene must contain at least one scatterer")
        for s in scat:
            if not isinstance(s, PointScatterer):
                raise TypeError(f"expected PointScatterer, got {type(s).__name__}")
        object.__setattr__(self, "scatterers", scat)
        if self.reference_reflector is not None:
            idx, rcs = self.reference_reflector
            if not 0 <= int(idx) < len(scat):
                raise ValueError(f"reference reflector index {idx} out of range")
            object.__setattr__(self, "reference_reflector", (int(idx), float(rcs)))


@dataclass(frozen=True, eq=False)
class DataCube:
    """Complex baseband samples ``[n_pulses, n_fast, 2]`` plus per-pulse metadata.

    ``pulse_tx_pol`` holds 0 (H) or 1 (V) per pulse; channel 0 is V-receive and
    channel 1 is H-receive.
    """

    samples: np.ndarray
    pulse_positions: np.ndarray
    pulse_tx_pol: np.ndarray
    params: WaveformParams
    rvp_present: bool = False
    tdm: bool = False
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if samples.ndim != 3:
            raise ValueError(f"samples must be 3-D, got shape {samples.shape}")
        if not np.iscomplexobj(samples):
            samples = samples.astype(complex)
        n_pulses, n_fast, _ = samples.shape
        if n_pulses and n_fast != self.params.n_fast:
            raise ValueError(f"n_fast={n_fast} does not match round(f_s*tau_pd)={self.params.n_fast}")
        positions = np.asarray(self.pulse_positions, dtype=float)
        pols = np.asarray(self.pulse_tx_pol, dtype=np.uint8)
        if positions.shape != (n_pulses,) or pols.shape != (n_pulses,):
            raise ValueError("pulse_positions and pulse_tx_pol need one entry per pulse")
        if np.any(pols > 1):
            raise ValueError("pulse_tx_pol entries must be 0 (H) or 1 (V)")
        for arr in (samples, positions, pols):
            arr.flags.writeable = False
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "pulse_positions", positions)
        object.__setattr__(self, "pulse_tx_pol", pols)

    @property
    def n_pulses(self) -> int:
        return self.samples.shape[0]

    @property
    def n_fast(self) -> int:
        return self.samples.shape[1]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[2]

    def channel(self, rx_pol: int) -> np.ndarray:
        """Samples ``[n_pulses, n_fast]`` of the channel receiving ``rx_pol``."""
        return self.samples[:, :, RX_POLS.index(rx_pol)]

    def with_samples(self, samples, **changes) -> "DataCube":
        return replace(self, samples=samples, **changes)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-sample SNR relative to a unit-amplitude scatterer; ``inf`` disables noise."""

    snr_db: float
    seed: int = 0


def _scatterer_phasors(scatterer, positions, kr, w, include_rvp, beam_halfwidth, range_taper):
    """Per-pulse echo of one scatterer, ``[n_pos, n_fast]``, before polarimetric weighting."""
    r = np.hypot(scatterer.y_t, scatterer.x_t - positions)
    echo = np.exp(-1j * np.outer(r, kr))
    if include_rvp:
        echo *= np.exp(1j * rvp_phase(w, r))[:, None]
    gain = np.ones_like(r)
    if range_taper:
        gain = gain / r**2
    if beam_halfwidth is not None:
        look = np.abs(np.arctan2(scatterer.x_t - positions, scatterer.y_t))
        gain = np.where(look <= beam_halfwidth, gain, 0.0)
    return echo * gain[:, None]


def _simulate_block(scatterers, positions, tx_pols, w, include_rvp, beam_halfwidth, range_taper):
    kr = wavenumber_axis(w)
    out = np.zeros((len(positions), w.n_fast, N_CHANNELS), dtype=complex)
    for s in scatterers:
        # Column of S for each pulse's transmit polarisation, shape [n_pos, rx].
        alpha = s.s_matrix[tx_pols]
        if not np.any(alpha):
            continue
        echo = _scatterer_phasors(s, positions, kr, w, include_rvp, beam_halfwidth, range_taper)
        for ch, rx in enumerate(RX_POLS):
            a = alpha[:, rx]
            if np.any(a):
                out[:, :, ch] += echo * a[:, None]
    return out


def simulate_pulse(
    scene: Scene,
    x_n: float,
    tx_pol: int,
    w: WaveformParams,
    include_rvp: bool = False,
    beam_halfwidth: Optional[float] = None,
    range_taper: bool = False,
) -> np.ndarray:
    """Dechirped echo of one pulse at along-track position ``x_n``.

    Returns an ``[n_fast, 2]`` array (channel 0 = V receive, channel 1 = H receive).
    """
    if not isinstance(scene, Scene) or not scene.scatterers:
        raise ValueError("simulate_pulse needs a non-empty Scene")
    if not math.isfinite(x_n):
        raise ValueError("x_n must be finite")
    if tx_pol not in (H, V):
        raise ValueError(f"tx_pol must be H (0) or V (1), got {tx_pol!r}")
    pos = np.array([float(x_n)])
    pols = np.array([tx_pol])
    return _simulate_block(scene.scatterers, pos, pols, w, include_rvp, beam_halfwidth, range_taper)[0]


def constant_velocity_positions(v_a: float, f_p: float, n_positions: int, x_start: float = 0.0):
    """Stop-and-go positions ``x_start + n * v_a / f_p``."""
    return x_start + np.arange(n_positions) * (v_a / f_p)


def simulate_cube(
    scene: Scene,
    w: WaveformParams,
    positions: Optional[Sequence[float]] = None,
    *,
    v_a: Optional[float] = None,
    n_positions: Optional[int] = None,
    x_start: float = 0.0,
    tdm: bool = True,
    include_rvp: bool = False,
    beam_halfwidth: Optional[float] = None,
    range_taper: bool = False,
    antenna: Optional[AntennaParams] = None,
    workers: int = 1,
) -> DataCube:
    """Simulate a data cube along a track.

    The track is either an explicit sequence of along-track ``positions`` or a
    constant-velocity track given by ``v_a`` and ``n_positions`` (spacing
    ``v_a / f_p``). With ``tdm`` each position yields two pulses, H then V,
    sharing that position; otherwise every pulse transmits H.
    """
    if positions is None:
        if v_a is None or n_positions is None:
            raise ValueError("give either positions or (v_a, n_positions)")
        if v_a <= 0 or n_positions < 0:
            raise ValueError("v_a must be > 0 and n_positions >= 0")
        positions = constant_velocity_positions(v_a, w.f_p, n_positions, x_start)
    positions = np.asarray(positions, dtype=float).reshape(-1)
    if not np.all(np.isfinite(positions)):
        raise ValueError("track positions must be finite")

    if antenna is not None and len(positions) > 1:
        bound = max_spatial_step(w.f0, antenna.theta_r)
        step = np.max(np.abs(np.diff(positions)))
        if step >= bound:
            warnings.warn(
                f"pulse spacing {step * 1e3:.1f} mm violates the {bound * 1e3:.1f} mm bound",
                SamplingWarning,
                stacklevel=2,
            )

    if tdm:
        pulse_pos = np.repeat(positions, 2)
        pulse_pol = np.tile(np.array([H, V], dtype=np.uint8), len(positions))
    else:
        pulse_pos = positions
        pulse_pol = np.full(len(positions), H, dtype=np.uint8)

    n_pulses = len(pulse_pos)
    if n_pulses == 0:
        samples = np.zeros((0, w.n_fast, N_CHANNELS), dtype=complex)
    else:
        args = (w, include_rvp, beam_halfwidth, range_taper)
        chunks = np.array_split(np.arange(n_pulses), max(1, min(workers, n_pulses)))
        if len(chunks) == 1:
            samples = _simulate_block(scene.scatterers, pulse_pos, pulse_pol, *args)
        else:
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                parts = pool.map(
                    lambda idx: _simulate_block(scene.scatterers, pulse_pos[idx], pulse_pol[idx], *args),
                    chunks,
                )
                samples = np.concatenate(list(parts), axis=0)

    meta = {"beam_halfwidth": beam_halfwidth, "range_taper": range_taper}
    return DataCube(samples, pulse_pos, pulse_pol, w, rvp_present=include_rvp, tdm=tdm, metadata=meta)


def add_noise(cube: DataCube, noise: NoiseSpec) -> DataCube:
    """Add circular complex Gaussian noise of variance ``10**(-snr_db/10)`` per sample."""
    if math.isinf(noise.snr_db) and noise.snr_db > 0:
        return cube
    if not math.isfinite(noise.snr_db):
        raise ValueError(f"snr_db must be finite or +inf, got {noise.snr_db!r}")
    rng = np.random.default_rng(noise.seed)
    sigma = math.sqrt(10.0 ** (-noise.snr_db / 10.0) / 2.0)
    shape = cube.samples.shape
    n = sigma * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
    meta = dict(cube.metadata, noise_snr_db=noise.snr_db, noise_seed=noise.seed)
    return cube.with_samples(cube.samples + n, metadata=meta)
