"""Declarative run configuration (YAML) for the command-line front end.

Schema (every section and key optional; defaults are the reference C-band system)::

    seed: 0                      # single source of randomness for the run
    waveform:  {f0: 5.9e9, beta: 200e6, tau_pd: 1e-3, f_p: 75, f_s: 100e3}
    antenna:   {gain_tx: 13.2, gain_rx: 9.5, theta3db_tx_deg: 40,
                theta3db_rx_deg: 65, theta_r_deg: null}
    scene:
      scatterers:                # x crossrange, y downrange [m]
        - {x: 0.0, y: 15.0, s: [[1, 0], [0, 1]]}
      reference: {index: 0, rcs_dbsm: 4.41}
    track:
      source: synthetic          # or "file"
      file: null                 # track CSV when source is "file"
      speed: 2.25                # m/s, synthetic only
      n_positions: 512           # null: whole log duration for file tracks
      x_start: null              # null centres the aperture on x = 0
      tdm: true
      wobble: {along_amp: 0, cross_amp: 0, wavelength: 5, duration: 20,
               sample_rate: 10, gnss_sigma: 0.02}
    simulation: {include_rvp: false, beam_halfwidth_deg: 20, range_taper: false}
    focus:     {r_ref: null, window: none, window_alpha: 0.5, stolt_interp: linear,
                sinc_taps: 8, range_pad: 2, ky_extent: full,
                zero_pad_crossrange: 1, oversample: 1, compensate_rvp: true}
    noise:     {snr_db: .inf}
    outputs:   {cube: cube.sarcube, images: images, stats: track.sarstat,
                raster: true, report: report.txt}

Scattering-matrix entries may be numbers, ``[re, im]`` pairs or strings
such as ``"0.5-0.2j"``. Unknown keys anywhere raise ConfigError.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from .echo import Scene
from .errors import ConfigError
from .radar import AntennaParams, PointScatterer, WaveformParams
from .rma import FocusConfig


@dataclass(frozen=True)
class TrackConfig:
    source: str = "synthetic"
    file: Optional[str] = None
    speed: float = 2.25
    n_positions: Optional[int] = 512
    x_start: Optional[float] = None
    tdm: bool = True
    wobble: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SimulationConfig:
    include_rvp: bool = False
    beam_halfwidth_deg: Optional[float] = 20.0
    range_taper: bool = False


@dataclass(frozen=True)
class OutputConfig:
    cube: str = "cube.sarcube"
    images: str = "images"
    stats: str = "track.sarstat"
    raster: bool = True
    report: str = "report.txt"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    waveform: WaveformParams = field(default_factory=WaveformParams)
    antenna: AntennaParams = field(default_factory=AntennaParams)
    scene: Scene = field(default_factory=lambda: Scene((PointScatterer(0.0, 15.0),)))
    track: TrackConfig = field(default_factory=TrackConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    focus: FocusConfig = field(default_factory=FocusConfig)
    snr_db: float = math.inf
    outputs: OutputConfig = field(default_factory=OutputConfig)
    base_dir: Path = Path(".")

    @property
    def beam_halfwidth(self) -> Optional[float]:
        d = self.simulation.beam_halfwidth_deg
        return None if d is None else math.radians(d)


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``5.9e9`` (no exponent sign or dot) as a float."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


_TOP = {"seed", "waveform", "antenna", "scene", "track", "simulation", "focus", "noise", "outputs"}
_ANTENNA = {"gain_tx", "gain_rx", "theta3db_tx_deg", "theta3db_rx_deg", "theta_r_deg"}
_WOBBLE = {"along_amp", "cross_amp", "wavelength", "duration", "sample_rate", "gnss_sigma"}


def _names(cls):
    return {f.name for f in fields(cls) if f.init}


def _section(raw, name, allowed):
    value = raw.get(name, {}) if isinstance(raw, dict) else {}
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    unknown = sorted(set(value) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in '{name}': {', '.join(map(str, unknown))}")
    return value


def _build(cls, section_name, values):
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid '{section_name}' settings: {exc}") from None


def _complex(value, where):
    if isinstance(value, (list, tuple)) and len(value) != 2:
        raise ConfigError(f"{where}: complex pairs must be [re, im]")
    try:
        if isinstance(value, (list, tuple)):
            return complex(float(value[0]), float(value[1]))
        return complex(str(value).replace(" ", "")) if isinstance(value, str) else complex(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: cannot read {value!r} as a complex number") from None


def _scene(raw) -> Scene:
    sec = _section(raw, "scene", {"scatterers", "reference"})
    items = sec.get("scatterers") or [{"x": 0.0, "y": 15.0}]
    if not isinstance(items, list):
        raise ConfigError("scene.scatterers must be a list")
    scat = []
    for i, item in enumerate(items):
        where = f"scene.scatterers[{i}]"
        if not isinstance(item, dict):
            raise ConfigError(f"{where} must be a mapping")
        unknown = sorted(set(item) - {"x", "y", "s"})
        if unknown:
            raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
        if "x" not in item or "y" not in item:
            raise ConfigError(f"{where} needs both x and y")
        s = item.get("s", [[1, 0], [0, 1]])
        if not (isinstance(s, list) and len(s) == 2 and all(isinstance(r, list) and len(r) == 2 for r in s)):
            raise ConfigError(f"{where}.s must be a 2x2 nested list")
        matrix = np.array([[_complex(v, f"{where}.s") for v in row] for row in s])
        try:
            scat.append(PointScatterer(float(item["x"]), float(item["y"]), matrix))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: {exc}") from None
    ref = sec.get("reference")
    if ref is not None:
        if not isinstance(ref, dict) or set(ref) != {"index", "rcs_dbsm"}:
            raise ConfigError("scene.reference needs exactly 'index' and 'rcs_dbsm'")
        ref = (ref["index"], ref["rcs_dbsm"])
    try:
        return Scene(tuple(scat), ref)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"scene: {exc}") from None


def parse_config(raw, base_dir=".", seed: Optional[int] = None) -> RunConfig:
    """Validate a decoded config mapping and build a RunConfig.

    ``seed`` overrides the file's seed when given.
    """
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = sorted(set(raw) - _TOP)
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(map(str, unknown))}")

    waveform = _build(WaveformParams, "waveform", _section(raw, "waveform", _names(WaveformParams)))

    ant = _section(raw, "antenna", _ANTENNA)
    ant_kwargs = {k: ant[k] for k in ("gain_tx", "gain_rx") if k in ant}
    for key in ("theta3db_tx", "theta3db_rx", "theta_r"):
        if ant.get(f"{key}_deg") is not None:
            ant_kwargs[key] = math.radians(float(ant[f"{key}_deg"]))
    antenna = _build(AntennaParams, "antenna", ant_kwargs)

    trk = dict(_section(raw, "track", _names(TrackConfig)))
    wobble = trk.get("wobble") or {}
    if not isinstance(wobble, dict) or set(wobble) - _WOBBLE:
        raise ConfigError(f"track.wobble accepts only: {', '.join(sorted(_WOBBLE))}")
    trk["wobble"] = dict(wobble)
    track = _build(TrackConfig, "track", trk)
    if track.source not in ("synthetic", "file"):
        raise ConfigError(f"track.source must be 'synthetic' or 'file', got {track.source!r}")
    if track.source == "file" and not track.file:
        raise ConfigError("track.file is required when track.source is 'file'")
    if track.n_positions is not None and int(track.n_positions) < 1:
        raise ConfigError("track.n_positions must be >= 1")
    if not track.speed > 0:
        raise ConfigError("track.speed must be > 0")

    simulation = _build(SimulationConfig, "simulation", _section(raw, "simulation", _names(SimulationConfig)))
    focus = _build(FocusConfig, "focus", _section(raw, "focus", _names(FocusConfig)))
    noise = _section(raw, "noise", {"snr_db"})
    try:
        snr_db = float(noise.get("snr_db", math.inf))
    except (TypeError, ValueError):
        raise ConfigError("noise.snr_db must be a number") from None
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ConfigError("noise.snr_db must be finite or +inf")
    outputs = _build(OutputConfig, "outputs", _section(raw, "outputs", _names(OutputConfig)))

    file_seed = raw.get("seed", 0)
    if not isinstance(file_seed, int) or isinstance(file_seed, bool) or file_seed < 0:
        raise ConfigError("seed must be a non-negative integer")
    return RunConfig(
        seed=int(file_seed if seed is None else seed),
        waveform=waveform,
        antenna=antenna,
        scene=_scene(raw),
        track=track,
        simulation=simulation,
        focus=focus,
        snr_db=snr_db,
        outputs=outputs,
        base_dir=Path(base_dir),
    )


def load_config(path=None, seed: Optional[int] = None) -> RunConfig:
    """Read a YAML config file; ``None`` gives the all-defaults configuration."""
    if path is None:
        return parse_config({}, seed=seed)
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        raw = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return parse_config(raw, base_dir=path.parent, seed=seed)
