"""Point-response measurements on focused images: peaks, mainlobe widths, sidelobes."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .rma import SarImage


def _parabolic_min(y, i):
    """Sub-sample location of the extremum of ``y`` near interior index ``i``."""
    if i <= 0 or i >= len(y) - 1:
        return float(i)
    a, b, c = y[i - 1], y[i], y[i + 1]
    den = a - 2 * b + c
    return float(i) if den == 0 else i + 0.5 * (a - c) / den


def _mainlobe(p, peak=None):
    """Indices of the first minima either side of the peak (a flat peak top is crossed)."""
    i = int(np.argmax(p)) if peak is None else int(peak)
    lo = hi = i
    while lo > 0 and p[lo - 1] == p[i]:
        lo -= 1
    while hi < len(p) - 1 and p[hi + 1] == p[i]:
        hi += 1
    while lo > 0 and p[lo - 1] < p[lo]:
        lo -= 1
    while hi < len(p) - 1 and p[hi + 1] < p[hi]:
        hi += 1
    return lo, hi


def null_to_null(profile, spacing: float, peak: int = None) -> float:
    """Mainlobe width between the first minima either side of ``peak``.

    ``profile`` is a magnitude or power sequence; the minima are refined with
    a parabola through the three samples around each discrete minimum.
    """
    p = np.asarray(profile, dtype=float)
    lo, hi = _mainlobe(p, peak)
    return (_parabolic_min(p, hi) - _parabolic_min(p, lo)) * spacing


def peak_sidelobe_db(profile, peak: int = None) -> float:
    """Highest sidelobe relative to the mainlobe peak of a magnitude profile [dB]."""
    p = np.abs(np.asarray(profile))
    i = int(np.argmax(p)) if peak is None else int(peak)
    lo, hi = _mainlobe(p, i)
    side = np.concatenate([p[:lo], p[hi + 1:]])
    if side.size == 0 or p[i] == 0:
        return -np.inf
    return 20 * np.log10(side.max() / p[i])


def local_peak(image: SarImage, x: float, y: float, half_x: float, half_y: float):
    """Strongest pixel within a box around ``(x, y)``; returns ``(ix, iy, x, y, |pixel|)``."""
    xa, ya = image.x_axis, image.y_axis
    sx = np.flatnonzero(np.abs(xa - x) <= half_x)
    sy = np.flatnonzero(np.abs(ya - y) <= half_y)
    if sx.size == 0 or sy.size == 0:
        raise ValueError(f"box around ({x}, {y}) misses the image grid")
    sub = np.abs(image.pixels[sx[0]:sx[-1] + 1, sy[0]:sy[-1] + 1])
    a, b = np.unravel_index(np.argmax(sub), sub.shape)
    ix, iy = sx[0] + a, sy[0] + b
    return int(ix), int(iy), float(xa[ix]), float(ya[iy]), float(sub[a, b])


def downrange_profile(image: SarImage, x_lo: float = -np.inf, x_hi: float = np.inf) -> np.ndarray:
    """Crossrange-integrated power versus downrange.

    For wide integration angles the point response is not separable (the
    wavenumber support is a curved arc), so a single cut through the peak is
    narrower than c/(2*beta). Integrating power over crossrange removes that
    coupling and leaves the bandwidth-limited downrange response.
    """
    sel = (image.x_axis >= x_lo) & (image.x_axis <= x_hi)
    return np.sum(np.abs(image.pixels[sel]) ** 2, axis=0)


def crossrange_profile(image: SarImage, y_lo: float = -np.inf, y_hi: float = np.inf) -> np.ndarray:
    sel = (image.y_axis >= y_lo) & (image.y_axis <= y_hi)
    return np.sum(np.abs(image.pixels[:, sel]) ** 2, axis=1)


def upsample_downrange(image: SarImage, factor: int, x_lo: float = -np.inf, x_hi: float = np.inf) -> SarImage:
    """Band-limited interpolation of an RMA image along downrange.

    RMA images occupy the non-negative k_y bins of their downrange transform
    (centred on the reference range), so zero-padding those bins interpolates
    exactly. Only columns with ``x_lo <= x <= x_hi`` are kept.
    """
    factor = int(factor)
    sel = np.flatnonzero((image.x_axis >= x_lo) & (image.x_axis <= x_hi))
    if sel.size == 0:
        raise ValueError("crossrange window misses the image")
    pix = image.pixels[sel[0]:sel[-1] + 1]
    if factor == 1:
        return replace(image, pixels=pix, x0=float(image.x_axis[sel[0]]), valid=None)
    m = pix.shape[1]
    spec = np.fft.fft(np.fft.ifftshift(pix, axes=1), axis=1)
    fine = np.fft.ifft(spec, n=m * factor, axis=1) * factor
    fine = np.fft.fftshift(fine, axes=1)
    r_centre = image.y0 + (m // 2) * image.dy
    dy = image.dy / factor
    y0 = r_centre - ((m * factor) // 2) * dy
    return replace(image, pixels=fine, x0=float(image.x_axis[sel[0]]), y0=y0, dy=dy, valid=None)


def measured_range_resolution(
    image: SarImage, x: float, y: float, half_x: float = 1.0, upsample: int = 1
) -> float:
    """Half the null-to-null width of the downrange profile around ``(x, y)``.

    ``upsample`` interpolates the image along downrange first (see
    upsample_downrange), for images formed without oversampling.
    """
    if upsample > 1:
        image = upsample_downrange(image, upsample, x - half_x, x + half_x)
    prof = downrange_profile(image, x - half_x, x + half_x)
    iy = int(np.argmin(np.abs(image.y_axis - y)))
    span = 3 * max(1, int(upsample))
    lo, hi = max(0, iy - span), min(len(prof), iy + span + 1)
    iy = lo + int(np.argmax(prof[lo:hi]))
    return null_to_null(prof, image.dy, iy) / 2
