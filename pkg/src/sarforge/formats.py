"""Binary cube/image/statistics files, track CSV and PGM raster export.

All multi-byte fields are little-endian. Layouts (byte offsets):

Cube (``SARCUBE1``), 64-byte header::

    0   magic        8s   b"SARCUBE1"
    8   n_pulses     u32
    12  n_fast       u32
    16  n_chan       u32
    20  f0, beta, tau_pd, f_p, f_s   5 x f64
    60  rvp_present  u8
    61  tdm          u8
    62  reserved     2 bytes, zero
    64  pulse_positions  f64[n_pulses]
        pulse_tx_pol     u8[n_pulses]   (0 = H, 1 = V)
        samples          complex64 (re, im float32) [n_pulses][n_fast][n_chan]

Image (``SARIMG01``), 64-byte header::

    0   magic        8s   b"SARIMG01"
    8   n_x, n_y     u32, u32
    16  x0, dx, y0, dy   4 x f64
    48  pol          u8   (0 HH, 1 HV, 2 VH, 3 VV, 255 unlabelled)
    49  cal_flag     u8
    50  reserved     6 bytes, zero
    56  cal_constant f64  (0 when cal_flag is 0)
    64  pixels       complex64 [n_x][n_y], crossrange rows

Track statistics (``SARSTAT1``)::

    0   magic        8s   b"SARSTAT1"
    8   v_fit, heading_fit, origin_east, origin_north, rmse   5 x f64
    48  n_samples    u32
    52  source_len   u32
    56  source       utf-8 bytes
        along_errors, cross_errors   f64[n_samples] each
        along_rates, cross_rates     f64[n_samples - 1] each
        4 histograms (along, cross, along-rate, cross-rate), each:
            n_bins u32, edges f64[n_bins + 1], counts i64[n_bins]
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .echo import DataCube
from .errors import BadMagic, FormatError, TrailingData, TruncatedFile, VersionMismatch
from .polarimetry import CalState, PolarimetricImageSet
from .radar import WaveformParams
from .rma import POL_LABELS, SarImage
from .trajectory import Histogram, TrackErrorStats, TrackLog

CUBE_MAGIC = b"SARCUBE1"
IMAGE_MAGIC = b"SARIMG01"
STATS_MAGIC = b"SARSTAT1"

CUBE_HEADER = struct.Struct("<8sIII5dBB2x")
IMAGE_HEADER = struct.Struct("<8sII4dBB6xd")
STATS_HEADER = struct.Struct("<8s5dII")
POL_CODES = {label: i for i, label in enumerate(POL_LABELS)}
NO_POL = 255
TRACK_HEADER = "t,east,north,up"

assert CUBE_HEADER.size == 64 and IMAGE_HEADER.size == 64


class _Reader:
    """Sequential reader that reports truncation with the failing byte offset."""

    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        end = self.pos + n
        if end > len(self.buf):
            raise TruncatedFile(f"expected {n} bytes, {len(self.buf) - self.pos} available", len(self.buf))
        out = self.buf[self.pos:end]
        self.pos = end
        return out

    def unpack(self, st: struct.Struct):
        return st.unpack(self.take(st.size))

    def array(self, dtype, count: int) -> np.ndarray:
        dt = np.dtype(dtype)
        return np.frombuffer(self.take(dt.itemsize * count), dtype=dt, count=count).copy()

    def finish(self):
        if self.pos != len(self.buf):
            raise TrailingData(f"{len(self.buf) - self.pos} unexpected trailing bytes", self.pos)


def _check_magic(buf: bytes, magic: bytes):
    if len(buf) < len(magic):
        if magic.startswith(buf[: len(magic)]):
            raise TruncatedFile("file shorter than its magic number", len(buf))
        raise BadMagic(f"expected {magic!r}", 0)
    head = buf[: len(magic)]
    if head == magic:
        return
    if head[:-1] == magic[:-1]:
        raise VersionMismatch(f"found format {head!r}, this reader supports {magic!r}", len(magic) - 1)
    stem = magic.rstrip(b"0123456789")
    if head[: len(stem)] == stem:
        raise VersionMismatch(f"found format {head!r}, this reader supports {magic!r}", len(stem))
    raise BadMagic(f"expected {magic!r}, found {head!r}", 0)


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        return fh.read()


def _write_bytes(path, payload: bytes):
    with open(path, "wb") as fh:
        fh.write(payload)


# -- cubes -----------------------------------------------------------------

def cube_to_bytes(cube: DataCube) -> bytes:
    w = cube.params
    header = CUBE_HEADER.pack(
        CUBE_MAGIC, cube.n_pulses, cube.n_fast if cube.n_pulses else w.n_fast, cube.n_channels,
        w.f0, w.beta, w.tau_pd, w.f_p, w.f_s, int(cube.rvp_present), int(cube.tdm),
    )
    return b"".join([
        header,
        cube.pulse_positions.astype("<f8").tobytes(),
        cube.pulse_tx_pol.astype("u1").tobytes(),
        np.ascontiguousarray(cube.samples, dtype="<c8").tobytes(),
    ])


def cube_from_bytes(buf: bytes) -> DataCube:
    _check_magic(buf, CUBE_MAGIC)
    r = _Reader(buf)
    _, n_pulses, n_fast, n_chan, f0, beta, tau_pd, f_p, f_s, rvp, tdm = r.unpack(CUBE_HEADER)
    try:
        w = WaveformParams(f0=f0, beta=beta, tau_pd=tau_pd, f_p=f_p, f_s=f_s)
    except ValueError as exc:
        raise FormatError(f"invalid waveform header: {exc}", 20) from None
    if n_fast != w.n_fast:
        raise FormatError(f"n_fast={n_fast} disagrees with round(f_s*tau_pd)={w.n_fast}", 12)
    positions = r.array("<f8", n_pulses)
    pols = r.array("u1", n_pulses)
    samples = r.array("<c8", n_pulses * n_fast * n_chan).reshape(n_pulses, n_fast, n_chan)
    r.finish()
    return DataCube(samples, positions, pols, w, rvp_present=bool(rvp), tdm=bool(tdm))


def write_cube(path, cube: DataCube):
    """Write ``cube``; samples are stored as complex64."""
    _write_bytes(path, cube_to_bytes(cube))


def read_cube(path) -> DataCube:
    return cube_from_bytes(_read_bytes(path))


def cubes_equal(a: DataCube, b: DataCube) -> bool:
    return (
        a.params == b.params
        and a.rvp_present == b.rvp_present
        and a.tdm == b.tdm
        and np.array_equal(a.pulse_positions, b.pulse_positions)
        and np.array_equal(a.pulse_tx_pol, b.pulse_tx_pol)
        and a.samples.shape == b.samples.shape
        and a.samples.astype("<c8").tobytes() == b.samples.astype("<c8").tobytes()
    )


# -- images ----------------------------------------------------------------

def image_to_bytes(image: SarImage) -> bytes:
    nx, ny = image.shape
    pol = NO_POL if image.pol_label is None else POL_CODES[image.pol_label]
    cal = image.cal_constant is not None
    header = IMAGE_HEADER.pack(
        IMAGE_MAGIC, nx, ny, image.x0, image.dx, image.y0, image.dy, pol, int(cal),
        image.cal_constant if cal else 0.0,
    )
    return header + np.ascontiguousarray(image.pixels, dtype="<c8").tobytes()


def image_from_bytes(buf: bytes) -> SarImage:
    _check_magic(buf, IMAGE_MAGIC)
    r = _Reader(buf)
    _, nx, ny, x0, dx, y0, dy, pol, cal_flag, cal = r.unpack(IMAGE_HEADER)
    if pol != NO_POL and pol >= len(POL_LABELS):
        raise FormatError(f"unknown polarisation code {pol}", 48)
    pixels = r.array("<c8", nx * ny).reshape(nx, ny)
    r.finish()
    label = None if pol == NO_POL else POL_LABELS[pol]
    return SarImage(pixels, x0, dx, y0, dy, pol_label=label, cal_constant=cal if cal_flag else None)


def write_image(path, image: SarImage):
    _write_bytes(path, image_to_bytes(image))


def read_image(path) -> SarImage:
    return image_from_bytes(_read_bytes(path))


def images_equal(a: SarImage, b: SarImage) -> bool:
    return image_to_bytes(a) == image_to_bytes(b)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return None
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_quadpol(directory, images: PolarimetricImageSet, metadata: dict = None):
    """Write ``hh.img``, ``hv.img``, ``vh.img``, ``vv.img`` and one ``quadpol.json`` sidecar."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for label, img in images.items():
        write_image(directory / f"{label.lower()}.img", img)
    cal = images.cal_state
    sidecar = {
        "format": "sarforge-quadpol-1",
        "images": {label: f"{label.lower()}.img" for label in POL_LABELS},
        "cal_state": None if cal is None else {
            "rcs_dbsm": cal.rcs_dbsm, "pixel": list(cal.pixel), "channel": cal.channel,
            "cal_constant": cal.cal_constant,
        },
        "metadata": _jsonable(dict(images.hh.metadata, **(metadata or {}))),
    }
    text = json.dumps(sidecar, indent=2, sort_keys=True) + "\n"
    (directory / "quadpol.json").write_text(text, encoding="utf-8")


def read_quadpol(directory) -> PolarimetricImageSet:
    directory = Path(directory)
    sidecar = json.loads((directory / "quadpol.json").read_text(encoding="utf-8"))
    imgs = {label.lower(): read_image(directory / name) for label, name in sidecar["images"].items()}
    cal = sidecar.get("cal_state")
    state = None
    if cal is not None:
        state = CalState(cal["rcs_dbsm"], tuple(cal["pixel"]), cal["channel"], cal["cal_constant"])
    return PolarimetricImageSet(**imgs, cal_state=state)


# -- track statistics --------------------------------------------------------

def stats_to_bytes(stats: TrackErrorStats) -> bytes:
    n = len(stats.along_errors)
    src = stats.source.encode("utf-8")
    parts = [
        STATS_HEADER.pack(STATS_MAGIC, stats.v_fit, stats.heading_fit, stats.origin[0], stats.origin[1],
                          stats.rmse, n, len(src)),
        src,
    ]
    for arr in (stats.along_errors, stats.cross_errors, stats.along_rates, stats.cross_rates):
        parts.append(np.asarray(arr, dtype="<f8").tobytes())
    for hist in (stats.along_hist, stats.cross_hist, stats.along_rate_hist, stats.cross_rate_hist):
        parts.append(struct.pack("<I", len(hist.counts)))
        parts.append(np.asarray(hist.edges, dtype="<f8").tobytes())
        parts.append(np.asarray(hist.counts, dtype="<i8").tobytes())
    return b"".join(parts)


def stats_from_bytes(buf: bytes) -> TrackErrorStats:
    _check_magic(buf, STATS_MAGIC)
    r = _Reader(buf)
    _, v, heading, e0, n0, rmse, n, n_src = r.unpack(STATS_HEADER)
    source = r.take(n_src).decode("utf-8")
    arrays = [r.array("<f8", n), r.array("<f8", n)]
    arrays += [r.array("<f8", max(n - 1, 0)), r.array("<f8", max(n - 1, 0))]
    hists = []
    for _ in range(4):
        (n_bins,) = r.unpack(struct.Struct("<I"))
        edges = r.array("<f8", n_bins + 1)
        counts = r.array("<i8", n_bins)
        hists.append(Histogram(edges, counts))
    r.finish()
    return TrackErrorStats(v, heading, (e0, n0), rmse, *arrays, *hists, source=source)


def write_stats(path, stats: TrackErrorStats):
    _write_bytes(path, stats_to_bytes(stats))


def read_stats(path) -> TrackErrorStats:
    return stats_from_bytes(_read_bytes(path))


# -- track CSV --------------------------------------------------------------

def write_track_csv(path, log: TrackLog):
    lines = [TRACK_HEADER]
    for row in zip(log.t, log.east, log.north, log.up):
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_track_csv(path, source: str = None) -> TrackLog:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    lines = text.split("\n")
    if not lines or lines[0].strip("\r") != TRACK_HEADER:
        raise FormatError(f"track CSV must start with header {TRACK_HEADER!r}", 0)
    rows = []
    offset = len(lines[0]) + 1
    for line in lines[1:]:
        if line.strip():
            try:
                values = [float(v) for v in line.split(",")]
            except ValueError:
                raise FormatError(f"non-numeric track row {line!r}", offset) from None
            if len(values) != 4:
                raise FormatError(f"track row needs 4 fields, got {len(values)}", offset)
            rows.append(values)
        offset += len(line.encode("utf-8")) + 1
    if len(rows) < 2:
        raise FormatError("track CSV needs at least 2 samples", offset)
    arr = np.array(rows)
    return TrackLog(arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], source or os.fspath(path))


# -- raster export -----------------------------------------------------------

def export_raster(image: SarImage, mode: str = "magnitude-dB", floor_db: float = -40.0,
                  ceil_db: float = 0.0, path=None) -> bytes:
    """8-bit binary PGM of ``image``; rows are downrange (far range on top), columns crossrange.

    ``magnitude-dB`` maps ``10*log10(power)`` (calibrated when available)
    clamped to ``[floor_db, ceil_db]`` linearly onto 0..255. ``phase`` maps
    ``[-pi, pi]`` onto 0..255 and ignores the dB limits.
    """
    if not ceil_db > floor_db:
        raise ValueError("ceil_db must exceed floor_db")
    if mode == "magnitude-dB":
        with np.errstate(divide="ignore"):
            db = 10.0 * np.log10(image.power())
        scaled = (np.clip(db, floor_db, ceil_db) - floor_db) / (ceil_db - floor_db)
    elif mode == "phase":
        scaled = (np.angle(image.pixels) + np.pi) / (2 * np.pi)
    else:
        raise ValueError(f"unknown raster mode {mode!r}")
    raster = np.rint(np.clip(scaled, 0.0, 1.0) * 255).astype(np.uint8)
    raster = np.ascontiguousarray(raster.T[::-1])
    rows, cols = raster.shape
    payload = f"P5\n{cols} {rows}\n255\n".encode("ascii") + raster.tobytes()
    if path is not None:
        _write_bytes(path, payload)
    return payload
