"""Command-line front end: ``sarforge <subcommand> [options]``.

Global options may also come from the environment: ``SARFORGE_CONFIG``,
``SARFORGE_OUT``, ``SARFORGE_THREADS`` and ``SARFORGE_SEED``. Command-line
flags take precedence over the environment, which takes precedence over the
config file. Failures print one line ``error: <Code>: <message>`` on stderr
and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import formats
from .bpa import backproject
from .config import RunConfig, load_config
from .echo import H, V, NoiseSpec, SamplingWarning, add_noise, simulate_cube
from .errors import ConfigError, SarForgeError
from .polarimetry import calibrate, demux_tdm, form_quadpol, read_rcs_dbsm
from .psf import local_peak, measured_range_resolution
from .radar import (
    crossrange_resolution,
    max_spatial_step,
    max_unambiguous_range,
    range_resolution,
)
from .rma import focus
from .trajectory import (
    GNSS_SIGMA,
    TrackFit,
    WobbleSpec,
    approximation_errors,
    fit_constant_velocity,
    pulse_positions,
    synth_wobble,
)

EXIT_ERROR = 1
EXIT_USAGE = 2
REPORT_UPSAMPLE = 8
ORACLE_MAG_TOL_DB = 1.0


class _Context:
    def __init__(self, args):
        env = os.environ
        self.config_path = args.config or env.get("SARFORGE_CONFIG")
        self.out = Path(args.out or env.get("SARFORGE_OUT") or ".")
        threads = args.threads if args.threads is not None else env.get("SARFORGE_THREADS")
        seed = args.seed if args.seed is not None else env.get("SARFORGE_SEED")
        try:
            self.threads = max(1, int(threads)) if threads is not None else 1
            seed = None if seed is None else int(seed)
        except ValueError:
            raise ConfigError("threads and seed must be integers") from None
        if seed is not None and not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        self.cfg: RunConfig = load_config(self.config_path, seed=seed)

    def output(self, name) -> Path:
        path = Path(name)
        path = path if path.is_absolute() else self.out / path
        path.parent.mkdir(parents=True, exist_ok=True)
        return path


def _track_fit(cfg: RunConfig):
    """Straight-line fit describing the platform track, plus the log it came from."""
    trk = cfg.track
    if trk.source == "file":
        path = Path(trk.file)
        path = path if path.is_absolute() else cfg.base_dir / path
        log = formats.read_track_csv(path)
        return fit_constant_velocity(log), log
    return TrackFit(trk.speed, 0.0, (0.0, 0.0)), None


def _positions(cfg: RunConfig):
    fit, log = _track_fit(cfg)
    w = cfg.waveform
    n = cfg.track.n_positions
    if n is None:
        n = int(math.floor((log.t[-1] - log.t[0]) * w.f_p)) + 1 if log is not None else 512
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SamplingWarning)
        x = pulse_positions(fit, w.f_p, int(n))
    start = cfg.track.x_start
    x = x + (-(x[-1] - x[0]) / 2 if start is None else start)
    return x, fit


def cmd_simulate(ctx: _Context, args) -> int:
    cfg = ctx.cfg
    positions, fit = _positions(cfg)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SamplingWarning)
        cube = simulate_cube(
            cfg.scene,
            cfg.waveform,
            positions,
            tdm=cfg.track.tdm,
            include_rvp=cfg.simulation.include_rvp,
            beam_halfwidth=cfg.beam_halfwidth,
            range_taper=cfg.simulation.range_taper,
            antenna=cfg.antenna,
            workers=ctx.threads,
        )
    for wmsg in caught:
        print(f"warning: {wmsg.message}", file=sys.stderr)
    cube = add_noise(cube, NoiseSpec(cfg.snr_db, seed=cfg.seed))
    path = ctx.output(args.cube or cfg.outputs.cube)
    formats.write_cube(path, cube)
    print(f"wrote {path} ({cube.n_pulses} pulses x {cube.n_fast} samples x {cube.n_channels} channels, "
          f"spacing {fit.speed / cfg.waveform.f_p * 1e3:.1f} mm)")
    return 0


def _image_dir(ctx: _Context, arg):
    return Path(arg) if arg else ctx.out / ctx.cfg.outputs.images


def _write_rasters(directory: Path, images):
    for label, img in images:
        pk = float(np.max(img.power()))
        ceil = 10 * math.log10(pk) if pk > 0 else 0.0
        formats.export_raster(img, "magnitude-dB", ceil - 40.0, ceil, path=directory / f"{label.lower()}.pgm")


def cmd_focus(ctx: _Context, args) -> int:
    cfg = ctx.cfg
    cube = formats.read_cube(args.cube)
    out_dir = _image_dir(ctx, args.images)
    if cube.tdm:
        images = form_quadpol(demux_tdm(cube), cube.params, cfg.focus, workers=ctx.threads)
        formats.write_quadpol(out_dir, images)
        written = images.items()
    else:
        out_dir.mkdir(parents=True, exist_ok=True)
        written = [(lbl, focus(cube, cube.params, cfg.focus, H, rx)) for lbl, rx in (("HH", H), ("HV", V))]
        for label, img in written:
            formats.write_image(out_dir / f"{label.lower()}.img", img)
    if cfg.outputs.raster:
        _write_rasters(out_dir, written)
    shape = written[0][1].shape
    print(f"wrote {len(written)} images ({shape[0]} x {shape[1]} pixels) to {out_dir}")
    return 0


def compare_oracle(cube, cfg: RunConfig, workers: int = 1):
    """Focus HH with RMA and wavenumber-weighted BPA and compare every scene target.

    Returns ``(rows, passed)``; each row holds the truth, both peak positions,
    the position differences in cells and the normalized magnitude difference.
    """
    if cube.tdm:
        cube = demux_tdm(cube)[0]
    rma = focus(cube, cube.params, cfg.focus)
    cell_x = abs(float(np.median(np.diff(cube.pulse_positions))))
    cell_y = range_resolution(cube.params)
    hx, hy = 4 * cell_x, 1.5 * cell_y
    rows = []
    for s in cfg.scene.scatterers:
        ix, iy, xr, yr, mr = local_peak(rma, s.x_t, s.y_t, hx, hy)
        xs = rma.x_axis[max(ix - 40, 0):ix + 41]
        ys = rma.y_axis[max(iy - 40, 0):iy + 41]
        patch = backproject(cube, xs, ys, H, H, workers=workers, weighting="wavenumber")
        _, _, xb, yb, mb = local_peak(patch, s.x_t, s.y_t, hx, hy)
        rows.append({"x": s.x_t, "y": s.y_t, "rma": (xr, yr, mr), "bpa": (xb, yb, mb)})
    top_r = max(r["rma"][2] for r in rows)
    top_b = max(r["bpa"][2] for r in rows)
    passed = True
    for r in rows:
        r["dx_cells"] = abs(r["rma"][0] - r["bpa"][0]) / cell_x
        r["dy_cells"] = abs(r["rma"][1] - r["bpa"][1]) / cell_y
        r["mag_db"] = 20 * math.log10((r["rma"][2] / top_r) / (r["bpa"][2] / top_b))
        r["ok"] = r["dx_cells"] <= 1 and r["dy_cells"] <= 1 and abs(r["mag_db"]) <= ORACLE_MAG_TOL_DB
        passed &= r["ok"]
    return rows, passed


def cmd_compare(ctx: _Context, args) -> int:
    cube = formats.read_cube(args.cube)
    rows, passed = compare_oracle(cube, ctx.cfg, ctx.threads)
    for r in rows:
        print(
            f"target ({r['x']:.3f}, {r['y']:.3f}): rma ({r['rma'][0]:.3f}, {r['rma'][1]:.3f}) "
            f"bpa ({r['bpa'][0]:.3f}, {r['bpa'][1]:.3f}) offset {r['dx_cells']:.2f}/{r['dy_cells']:.2f} cells "
            f"magnitude {r['mag_db']:+.2f} dB"
        )
    print(f"{'PASS' if passed else 'FAIL'} oracle equivalence ({len(rows)} targets)")
    return 0 if passed else EXIT_ERROR


def _write_histograms(path: Path, stats):
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["quantity", "bin_lo", "bin_hi", "count"])
    for name in ("along_hist", "cross_hist", "along_rate_hist", "cross_rate_hist"):
        hist = getattr(stats, name)
        for lo, hi, n in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
            writer.writerow([name[:-5], repr(float(lo)), repr(float(hi)), int(n)])
    path.write_text(buf.getvalue(), encoding="utf-8", newline="")


def cmd_analyze_track(ctx: _Context, args) -> int:
    cfg = ctx.cfg
    if args.log:
        log = formats.read_track_csv(args.log)
    elif cfg.track.source == "file":
        log = _track_fit(cfg)[1]
    else:
        wob = dict(cfg.track.wobble)
        wob.setdefault("gnss_sigma", GNSS_SIGMA)
        log = synth_wobble(TrackFit(cfg.track.speed, 0.0, (0.0, 0.0)), WobbleSpec(seed=cfg.seed, **wob))
        formats.write_track_csv(ctx.output("track.csv"), log)
    fit = fit_constant_velocity(log)
    stats = approximation_errors(log, fit, bin_width=args.bin_width, rate_bin_width=args.rate_bin_width)
    path = ctx.output(cfg.outputs.stats)
    formats.write_stats(path, stats)
    _write_histograms(ctx.output(Path(cfg.outputs.stats).with_suffix(".hist.csv")), stats)
    print(f"v_fit {stats.v_fit:.4f} m/s heading {math.degrees(stats.heading_fit):.2f} deg "
          f"rmse {stats.rmse:.4f} m ({len(log)} samples)")
    print(f"wrote {path}")
    return 0


def cmd_calibrate(ctx: _Context, args) -> int:
    images = formats.read_quadpol(args.imageset)
    if args.x is not None and args.y is not None and args.rcs_dbsm is not None:
        xy, rcs = (args.x, args.y), args.rcs_dbsm
    else:
        ref = ctx.cfg.scene.reference_reflector
        if ref is None:
            raise ConfigError("give --x, --y and --rcs-dbsm or set scene.reference in the config")
        s = ctx.cfg.scene.scatterers[ref[0]]
        xy, rcs = (s.x_t, s.y_t), ref[1]
        if args.rcs_dbsm is not None:
            rcs = args.rcs_dbsm
    cal = calibrate(images, xy, rcs, channel=args.channel, min_contrast_db=args.min_contrast_db)
    out_dir = Path(args.output) if args.output else ctx.out / "calibrated"
    formats.write_quadpol(out_dir, cal)
    print(f"calibration constant {cal.cal_state.cal_constant:.6e} from {cal.cal_state.channel} peak at "
          f"({cal.cal_state.pixel[0]:.3f}, {cal.cal_state.pixel[1]:.3f}); wrote {out_dir}")
    for i, s in enumerate(ctx.cfg.scene.scatterers):
        print(f"target {i} ({s.x_t:.3f}, {s.y_t:.3f}): {read_rcs_dbsm(cal[args.channel], s.x_t, s.y_t):.2f} dBsm")
    return 0


def _load_hh(run_dir: Path, images_name: str):
    directory = run_dir / images_name
    if (directory / "quadpol.json").exists():
        return formats.read_quadpol(directory).hh
    if (directory / "hh.img").exists():
        return formats.read_image(directory / "hh.img")
    return None


def build_report(run_dir: Path, cfg: RunConfig):
    """Predicted and measured quantities as ``[(name, predicted, measured, unit)]``."""
    w = cfg.waveform
    spacing = cfg.track.speed / w.f_p
    rows = [
        ("range_resolution", range_resolution(w), None, "m"),
        ("crossrange_resolution", crossrange_resolution(w.f0, cfg.antenna.theta3db_tx), None, "m"),
        ("max_unambiguous_range", max_unambiguous_range(w), None, "m"),
        ("pulse_spacing", spacing, None, "m"),
        ("max_pulse_spacing", max_spatial_step(w.f0, cfg.antenna.theta_r), None, "m"),
    ]
    hh = _load_hh(run_dir, cfg.outputs.images)
    if hh is not None:
        r_max = max_unambiguous_range(w)
        targets = [s for s in cfg.scene.scatterers if s.y_t <= r_max]
        measured = None
        for i, s in enumerate(targets):
            _, _, x, y, mag = local_peak(hh, s.x_t, s.y_t, 0.5, 1.5)
            rows.append((f"target{i}_x", s.x_t, x, "m"))
            rows.append((f"target{i}_y", s.y_t, y, "m"))
            rows.append((f"target{i}_peak_db", None, 20 * math.log10(mag) if mag > 0 else -math.inf, "dB"))
        if targets:
            s = max(targets, key=lambda t: local_peak(hh, t.x_t, t.y_t, 0.5, 1.5)[4])
            measured = measured_range_resolution(hh, s.x_t, s.y_t, upsample=REPORT_UPSAMPLE)
        rows[0] = ("range_resolution", range_resolution(w), measured, "m")
    stats_path = run_dir / cfg.outputs.stats
    if stats_path.exists():
        stats = formats.read_stats(stats_path)
        rows.append(("track_speed", None, stats.v_fit, "m/s"))
        rows.append(("track_rmse", None, stats.rmse, "m"))
    return rows


def cmd_report(ctx: _Context, args) -> int:
    run_dir = Path(args.run_dir) if args.run_dir else ctx.out
    rows = build_report(run_dir, ctx.cfg)
    fmt = lambda v: "" if v is None else f"{v:.6g}"
    lines = [f"{'quantity':<24}{'predicted':>14}{'measured':>14}  unit"]
    lines += [f"{n:<24}{fmt(p):>14}{fmt(m):>14}  {u}" for n, p, m, u in rows]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    report = run_dir / ctx.cfg.outputs.report
    report.write_text(text, encoding="utf-8")
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["quantity", "predicted", "measured", "unit"])
    writer.writerows([n, fmt(p), fmt(m), u] for n, p, m, u in rows)
    report.with_suffix(".csv").write_text(buf.getvalue(), encoding="utf-8", newline="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML run configuration (default: built-in defaults)")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--threads", type=int, help="cap on worker threads")
    common.add_argument("--seed", type=int, help="override the config seed")

    parser = argparse.ArgumentParser(prog="sarforge", description="FMCW SAR simulation and image formation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="simulate a data cube from the config")
    p.add_argument("--cube", help="cube file name (default: outputs.cube)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("focus", parents=[common], help="focus a cube into images")
    p.add_argument("cube")
    p.add_argument("--images", help="image directory (default: OUT/outputs.images)")
    p.set_defaults(func=cmd_focus)

    p = sub.add_parser("compare", parents=[common], help="compare RMA against backprojection")
    p.add_argument("cube")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("analyze-track", parents=[common], help="fit a track log and write error statistics")
    p.add_argument("log", nargs="?", help="track CSV (default: config track)")
    p.add_argument("--bin-width", type=float, default=0.05, help="error histogram bin width [m]")
    p.add_argument("--rate-bin-width", type=float, default=0.05, help="error-rate bin width [m/s]")
    p.set_defaults(func=cmd_analyze_track)

    p = sub.add_parser("calibrate", parents=[common], help="calibrate a quad-pol image set")
    p.add_argument("imageset", help="directory written by focus")
    p.add_argument("--x", type=float, help="reflector crossrange [m]")
    p.add_argument("--y", type=float, help="reflector downrange [m]")
    p.add_argument("--rcs-dbsm", type=float, help="reflector RCS [dBsm]")
    p.add_argument("--channel", default="HH", choices=["HH", "HV", "VH", "VV"])
    p.add_argument("--min-contrast-db", type=float, default=20.0)
    p.add_argument("--output", help="output directory (default: OUT/calibrated)")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("report", parents=[common], help="summarise predicted and measured quantities")
    p.add_argument("run_dir", nargs="?", help="run directory (default: --out)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = _Context(args)
        return args.func(ctx, args)
    except SarForgeError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_USAGE if isinstance(exc, ConfigError) else EXIT_ERROR
    except FileNotFoundError as exc:
        print(f"error: FileNotFound: {exc.filename}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
