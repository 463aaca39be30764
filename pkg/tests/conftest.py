import math

import numpy as np
import pytest

from sarforge.echo import Scene, simulate_cube
from sarforge.radar import DEFAULT_SPEED, DEFAULT_WAVEFORM, PointScatterer

GATE = math.radians(20.0)


def centred_positions(n, spacing=DEFAULT_SPEED / DEFAULT_WAVEFORM.f_p):
    return (np.arange(n) - (n - 1) / 2) * spacing


def point_cube(targets, n=256, tdm=False, w=DEFAULT_WAVEFORM, **kwargs):
    """Cube of ``targets`` (list of (x, y) or (x, y, S)) on a centred reference track."""
    scat = []
    for t in targets:
        scat.append(PointScatterer(t[0], t[1], t[2]) if len(t) == 3 else PointScatterer(t[0], t[1]))
    kwargs.setdefault("beam_halfwidth", GATE)
    return simulate_cube(Scene(tuple(scat)), w, centred_positions(n), tdm=tdm, **kwargs)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Acceptance results, filled by tests/test_acceptance.py and printed in the summary.
ACCEPTANCE = {}


def record(number, name, passed, detail):
    ACCEPTANCE[number] = (name, bool(passed), detail)
    print(f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        name, passed, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {number} {name}: {detail}")
