import math

import numpy as np
import pytest

from circrect.camera import CameraParams, Extrinsics, Intrinsics
from circrect.synth import RigSpec, rotation_from_vector, synth_rig


def random_camera(rng, cid=0, width=640, height=480):
    intr = Intrinsics(
        rng.uniform(300, 900), rng.uniform(300, 900),
        rng.uniform(250, 390), rng.uniform(180, 300), rng.uniform(-1, 1),
    )
    R = rotation_from_vector(rng.normal(scale=0.4, size=3))
    return CameraParams(cid, intr, Extrinsics(R, rng.normal(scale=2.0, size=3)), width, height)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def ideal_rig():
    return synth_rig(RigSpec(n_cameras=8, radius=5.0, center=(1.0, -2.0)))


@pytest.fixture
def noisy_rig():
    return synth_rig(RigSpec(n_cameras=8, radius=5.0, center=(1.0, -2.0),
                             position_noise=0.05, rotation_noise=0.01, seed=7,
                             target=(1.0, 0.0, 0.0)))


@pytest.fixture
def arc_rig():
    return synth_rig(RigSpec(n_cameras=7, radius=5.0, arc_span=math.pi / 3,
                             position_noise=0.05, rotation_noise=0.01, seed=3,
                             target=(0.0, 0.0, 1.5)))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: s.split(None, 1)[1]):
        terminalreporter.write_line(line)
