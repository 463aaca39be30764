"""Regenerate the golden files in tests/data.

Run from the repository root: ``python3 tests/make_golden.py``. The golden
files are checked in; regenerate only when a format version changes.
"""

from pathlib import Path

import numpy as np

from sarforge import formats
from sarforge.echo import DataCube
from sarforge.radar import WaveformParams
from sarforge.rma import SarImage
from sarforge.trajectory import TrackFit, WobbleSpec, approximation_errors, fit_constant_velocity, synth_wobble

DATA = Path(__file__).parent / "data"


def golden_cube() -> DataCube:
    rng = np.random.default_rng(2024)
    w = WaveformParams(f_s=8e3)
    samples = (rng.standard_normal((4, 8, 2)) + 1j * rng.standard_normal((4, 8, 2))).astype(np.complex64)
    return DataCube(samples, [0.0, 0.0, 0.03, 0.03], [0, 1, 0, 1], w, rvp_present=True, tdm=True)


def golden_image() -> SarImage:
    rng = np.random.default_rng(7)
    pix = (rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))).astype(np.complex64)
    return SarImage(pix, -0.06, 0.03, 17.5, 0.25, pol_label="HV", cal_constant=3.5e-4)


def golden_track():
    return synth_wobble(TrackFit(2.25, 0.3, (10.0, -5.0)), WobbleSpec(0.1, 0.2, seed=5, gnss_sigma=0.02, duration=3.0))


def golden_stats():
    log = golden_track()
    return approximation_errors(log, fit_constant_velocity(log))


def main():
    DATA.mkdir(exist_ok=True)
    formats.write_cube(DATA / "golden.sarcube", golden_cube())
    formats.write_image(DATA / "golden.sarimg", golden_image())
    formats.write_stats(DATA / "golden.sarstat", golden_stats())
    formats.write_track_csv(DATA / "golden_track.csv", golden_track())


if __name__ == "__main__":
    main()
