"""FMCW synthetic aperture radar simulation, focusing and analysis."""

from .bpa import backproject
from .echo import H, V, DataCube, NoiseSpec, Scene, add_noise, simulate_cube
from .errors import SarForgeError
from .polarimetry import PolarimetricImageSet, calibrate, demux_tdm, form_quadpol, measure_width
from .radar import AntennaParams, PointScatterer, WaveformParams
from .rma import FocusConfig, SarImage, focus

__all__ = [
    "H", "V",
    "AntennaParams", "DataCube", "FocusConfig", "NoiseSpec", "PointScatterer",
    "PolarimetricImageSet", "SarForgeError", "SarImage", "Scene", "WaveformParams",
    "add_noise", "backproject", "calibrate", "demux_tdm", "focus", "form_quadpol",
    "measure_width", "simulate_cube",
]
__version__ = "0.1.0"
