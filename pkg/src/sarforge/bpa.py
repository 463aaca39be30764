"""Time-domain backprojection, used as an independent check on the RMA chain.

Every pulse is range-compressed by a zero-padded fast-time DFT referenced to
the chirp centre ``t = 0``. For pixel ``p`` and pulse ``n`` the compressed
profile is sampled at the beat frequency of ``R_p(x_n)`` by quadratic
(three-point Lagrange) interpolation and rotated by ``exp(+j k_c 2 R)``, with
``k_c = 2 pi f0 / c`` the one-way carrier wavenumber. Pulse positions need not
be uniform.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import numpy as np

from .echo import H, DataCube
from .radar import C, max_unambiguous_range, rvp_phase
from .rma import SarImage, pol_label

PROFILE_UPSAMPLE = 8


def range_profiles(cube: DataCube, data: np.ndarray, upsample: int = PROFILE_UPSAMPLE):
    """Range-compressed pulses on an fftshifted beat-frequency axis.

    Returns ``(profiles [n_pulses, m], f0_bin, df)`` where bin ``i`` holds
    frequency ``f0_bin + i * df``.
    """
    w = cube.params
    n = data.shape[1]
    dt = w.tau_pd / (n - 1)
    m = n * upsample
    spec = np.fft.fft(data, n=m, axis=1)
    f = np.fft.fftfreq(m, dt)
    # Reference the transform to t = 0 instead of the first sample at -tau/2.
    spec *= np.exp(-2j * np.pi * f * (-w.tau_pd / 2))[None, :]
    spec = np.fft.fftshift(spec, axes=1)
    f = np.fft.fftshift(f)
    return spec, float(f[0]), float(f[1] - f[0])


def _lagrange3(profiles_row, u):
    """Quadratic interpolation of a complex sequence at fractional indices ``u``."""
    m = profiles_row.shape[-1]
    i = np.clip(np.rint(u).astype(np.int64), 1, m - 2)
    t = u - i
    ym, y0, yp = profiles_row[i - 1], profiles_row[i], profiles_row[i + 1]
    return y0 + 0.5 * t * (yp - ym) + 0.5 * t * t * (yp - 2 * y0 + ym)


def backproject(
    cube: DataCube,
    x_axis,
    y_axis,
    tx_pol: int = H,
    rx_pol: int = H,
    workers: int = 1,
    positions: Optional[np.ndarray] = None,
    weighting: str = "uniform",
) -> SarImage:
    """Backproject one transmit/receive pair onto the grid ``x_axis x y_axis``.

    Both axes must be uniform. ``positions`` overrides the cube's per-pulse
    positions for the selected transmit polarisation (e.g. to supply surveyed
    positions for a cube whose header holds nominal ones). Contributions from
    ranges beyond R_max are skipped; pixels whose closest approach exceeds
    R_max are zero and flagged invalid in ``image.valid``.

    ``weighting="uniform"`` sums pulses with equal weight (the matched
    filter). ``"wavenumber"`` weights each pulse by ``sqrt(y_p^2 / R^3)``, the
    stationary-phase Jacobian between along-track position and crossrange
    wavenumber, which reproduces the uniform-in-k_x weighting of an RMA image.
    """
    if weighting not in ("uniform", "wavenumber"):
        raise ValueError(f"unknown weighting {weighting!r}")
    x_axis = np.asarray(x_axis, dtype=float)
    y_axis = np.asarray(y_axis, dtype=float)
    w = cube.params
    keep = cube.pulse_tx_pol == tx_pol if cube.tdm else np.ones(cube.n_pulses, dtype=bool)
    pos = cube.pulse_positions[keep] if positions is None else np.asarray(positions, dtype=float)
    data = cube.channel(rx_pol)[keep]
    if len(pos) != data.shape[0]:
        raise ValueError("positions must match the number of selected pulses")

    r_max = max_unambiguous_range(w)
    valid = np.broadcast_to(y_axis[None, :] <= r_max, (len(x_axis), len(y_axis))).copy()
    image = np.zeros((len(x_axis), len(y_axis)), dtype=complex)
    if data.shape[0]:
        profiles, f_first, df = range_profiles(cube, data)
        kc2 = 2.0 * (2.0 * np.pi * w.f0 / C)
        beat_per_m = 2.0 * w.chirp_rate / C
        yy = y_axis[None, :]

        def accumulate(idx):
            acc = np.zeros_like(image)
            for n in idx:
                r = np.hypot(yy, x_axis[:, None] - pos[n])
                u = (-beat_per_m * r - f_first) / df
                sample = _lagrange3(profiles[n], u)
                phase = kc2 * r
                if cube.rvp_present:
                    phase = phase - rvp_phase(w, r)
                contrib = sample * np.exp(1j * phase)
                if weighting == "wavenumber":
                    contrib = contrib * np.sqrt(yy**2 / r**3)
                acc += np.where(r <= r_max, contrib, 0.0)
            return acc

        chunks = np.array_split(np.arange(len(pos)), max(1, min(workers, len(pos))))
        if len(chunks) == 1:
            image = accumulate(chunks[0])
        else:
            with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
                for part in pool.map(accumulate, chunks):
                    image += part
        image = np.where(valid, image, 0.0)

    dx = x_axis[1] - x_axis[0] if len(x_axis) > 1 else 1.0
    dy = y_axis[1] - y_axis[0] if len(y_axis) > 1 else 1.0
    x0 = float(x_axis[0]) if len(x_axis) else 0.0
    y0 = float(y_axis[0]) if len(y_axis) else 0.0
    meta = {"algorithm": "bpa", "weighting": weighting, "invalid_pixels": int(np.count_nonzero(~valid))}
    return SarImage(image, x0, float(dx), y0, float(dy), pol_label=pol_label(tx_pol, rx_pol),
                    metadata=meta, valid=valid)
