"""TDM demultiplexing, quad-pol image sets, corner-reflector calibration and width measurement.

Labels follow transmit-then-receive order: ``HV`` is H transmit, V receive,
which is ``s_matrix[0, 1]`` of a scatterer.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .echo import H, V, DataCube
from .errors import MalformedTDM, NoTarget, WeakReference
from .radar import WaveformParams
from .rma import POL_LABELS, FocusConfig, SarImage, focus

MIN_REFERENCE_CONTRAST_DB = 20.0
MEDIAN_HALF_WINDOW = 32  # pixels either side of the reflector for the local median


def demux_tdm(cube: DataCube):
    """Split a strictly alternating H/V cube into ``(h_tx_cube, v_tx_cube)``.

    Each half keeps both receive channels. Under burst pairing both members of
    a pair are assigned the H pulse's position; the largest intra-pair
    position difference is recorded in the metadata.
    """
    pols = cube.pulse_tx_pol
    if not cube.tdm:
        raise MalformedTDM("cube was not acquired with TDM polarisation switching")
    if cube.n_pulses % 2 or np.any(pols[0::2] != H) or np.any(pols[1::2] != V):
        bad = np.flatnonzero(pols != np.tile([H, V], (cube.n_pulses + 1) // 2)[: cube.n_pulses])
        where = int(bad[0]) if bad.size else cube.n_pulses
        raise MalformedTDM(f"H/V alternation broken at pulse {where}")
    pos = cube.pulse_positions[0::2]
    skew = float(np.max(np.abs(cube.pulse_positions[1::2] - pos))) if len(pos) else 0.0
    meta = dict(cube.metadata, pair_offset_max=skew)
    halves = []
    for start, pol in ((0, H), (1, V)):
        halves.append(
            DataCube(
                cube.samples[start::2],
                pos,
                np.full(len(pos), pol, dtype=np.uint8),
                cube.params,
                rvp_present=cube.rvp_present,
                tdm=False,
                metadata=meta,
            )
        )
    return tuple(halves)


@dataclass(frozen=True)
class CalState:
    rcs_dbsm: float
    pixel: tuple  # (x, y) of the refined reflector peak, m
    channel: str
    cal_constant: float


@dataclass(frozen=True, eq=False)
class PolarimetricImageSet:
    hh: SarImage
    hv: SarImage
    vh: SarImage
    vv: SarImage
    cal_state: Optional[CalState] = None

    def __post_init__(self):
        ref = self.hh
        for img in (self.hv, self.vh, self.vv):
            if img.shape != ref.shape or (img.x0, img.dx, img.y0, img.dy) != (ref.x0, ref.dx, ref.y0, ref.dy):
                raise ValueError("all polarisation images must share identical axes")

    def __getitem__(self, label: str) -> SarImage:
        if label.upper() not in POL_LABELS:
            raise KeyError(label)
        return getattr(self, label.lower())

    def items(self):
        return [(label, self[label]) for label in POL_LABELS]


def form_quadpol(cubes, w: Optional[WaveformParams] = None, cfg: FocusConfig = FocusConfig(), workers: int = 4):
    """Focus all four transmit/receive combinations with one configuration.

    ``cubes`` is ``(h_tx_cube, v_tx_cube)`` as returned by demux_tdm, or a
    single TDM cube which is demultiplexed first.
    """
    if isinstance(cubes, DataCube):
        cubes = demux_tdm(cubes)
    h_cube, v_cube = cubes
    jobs = {
        "hh": (h_cube, H, H),
        "hv": (h_cube, H, V),
        "vh": (v_cube, V, H),
        "vv": (v_cube, V, V),
    }

    def run(job):
        cube, tx, rx = job
        return focus(cube, w, cfg, tx_pol=tx, rx_pol=rx)

    with ThreadPoolExecutor(max_workers=max(1, min(workers, 4))) as pool:
        images = dict(zip(jobs, pool.map(run, jobs.values())))
    return PolarimetricImageSet(**images)


def _refine(image: SarImage, x: float, y: float, half: int = 1):
    ix, iy = image.index_of(x, y)
    nx, ny = image.shape
    if not (0 <= ix < nx and 0 <= iy < ny):
        raise ValueError(f"point ({x}, {y}) lies outside the image")
    xs = slice(max(ix - half, 0), min(ix + half + 1, nx))
    ys = slice(max(iy - half, 0), min(iy + half + 1, ny))
    sub = np.abs(image.pixels[xs, ys])
    a, b = np.unravel_index(np.argmax(sub), sub.shape)
    return xs.start + a, ys.start + b


def calibrate(
    images: PolarimetricImageSet,
    reflector_xy,
    rcs_dbsm: float,
    channel: str = "HH",
    min_contrast_db: float = MIN_REFERENCE_CONTRAST_DB,
) -> PolarimetricImageSet:
    """Scale all channels so the reference reflector reads ``rcs_dbsm``.

    The given point is refined to the strongest pixel in its 3x3
    neighbourhood on ``channel``. Pixels are not modified: the single scalar
    is stored as every image's ``cal_constant`` (m^2 per unit ``|pixel|^2``),
    so calibrating again on the same reflector is a no-op.
    """
    ref = images[channel]
    ix, iy = _refine(ref, *reflector_xy)
    peak = float(np.abs(ref.pixels[ix, iy]) ** 2)
    h = MEDIAN_HALF_WINDOW
    nx, ny = ref.shape
    window = np.abs(ref.pixels[max(ix - h, 0):ix + h + 1, max(iy - h, 0):iy + h + 1]) ** 2
    floor = float(np.median(window))
    contrast = math.inf if floor == 0 else 10 * math.log10(peak / floor) if peak > 0 else -math.inf
    if contrast < min_contrast_db:
        raise WeakReference(
            f"reflector peak is {contrast:.1f} dB above the local median (< {min_contrast_db} dB)"
        )
    cal = 10 ** (rcs_dbsm / 10) / peak
    state = CalState(rcs_dbsm, (float(ref.x_axis[ix]), float(ref.y_axis[iy])), channel.upper(), cal)
    updated = {k.lower(): replace(img, cal_constant=cal) for k, img in images.items()}
    return PolarimetricImageSet(**updated, cal_state=state)


def read_rcs_dbsm(image: SarImage, x: float, y: float) -> float:
    """Calibrated intensity of the strongest pixel within 3x3 cells of ``(x, y)`` [dBsm]."""
    if image.cal_constant is None:
        raise ValueError("image is not calibrated")
    ix, iy = _refine(image, x, y)
    return 10 * math.log10(image.cal_constant * abs(image.pixels[ix, iy]) ** 2)


def measure_width(
    image: SarImage,
    region,
    threshold_db: float = 12.0,
    noise_margin_db: float = 15.0,
    min_separation: float = 0.15,
) -> float:
    """Crossrange extent of a target between its lateral extrema [m].

    ``region`` is ``(x_lo, x_hi, y_lo, y_hi)``. For every crossrange column
    the peak downrange intensity inside the region is taken; the lateral
    extrema are the outermost local maxima of that profile lying within
    ``threshold_db`` of its maximum, located to sub-cell precision with a
    parabola through the neighbouring columns. Maxima closer than
    ``min_separation`` [m] to a stronger one are sidelobes of it and are
    discarded. Raises NoTarget when the region maximum is not
    ``noise_margin_db`` above the image median.
    """
    x_lo, x_hi, y_lo, y_hi = region
    xs = np.flatnonzero((image.x_axis >= x_lo) & (image.x_axis <= x_hi))
    ys = np.flatnonzero((image.y_axis >= y_lo) & (image.y_axis <= y_hi))
    if xs.size == 0 or ys.size == 0:
        raise ValueError("region does not overlap the image")
    power = np.abs(image.pixels) ** 2
    prof = power[xs[0]:xs[-1] + 1, ys[0]:ys[-1] + 1].max(axis=1)
    top = float(prof.max())
    floor = float(np.median(power))
    if top <= 0 or top < floor * 10 ** (noise_margin_db / 10):
        raise NoTarget("no target above the noise floor in the region")

    padded = np.concatenate([[-np.inf], prof, [-np.inf]])
    is_max = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] >= padded[2:])
    cand = np.flatnonzero(is_max & (prof >= top * 10 ** (-threshold_db / 10)))
    kept = []
    for i in sorted(cand, key=lambda j: -prof[j]):
        if all(abs(i - k) * image.dx >= min_separation for k in kept):
            kept.append(i)
    cand = sorted(kept)

    def locate(i):
        if 0 < i < len(prof) - 1:
            a, b, c = (10 * np.log10(prof[i - 1:i + 2] + 1e-300))
            den = a - 2 * b + c
            if den < 0:
                return i + 0.5 * (a - c) / den
        return float(i)

    return (locate(cand[-1]) - locate(cand[0])) * image.dx
