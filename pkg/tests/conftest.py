import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from polarsc import construction as cons
from polarsc import fixedpoint as fp


@pytest.fixture(scope="session")
def flagship_code():
    """The flagship (1024, 854) code at 6.5 dB Es/No."""
    return cons.construct_frozen_set(10, 854, 6.5)


@pytest.fixture(scope="session")
def flagship_tree(flagship_code):
    return cons.build_shortcut_tree(flagship_code)


@pytest.fixture(scope="session")
def flagship_profile_q5(flagship_tree):
    return fp.AqProfile.uniform(flagship_tree, 5)


def random_fixed_llrs(rng, shape, width=5, zero_boost=0.25):
    """Quantized sign-magnitude values rich in zeros and magnitude ties."""
    cap = fp.mag_cap(width)
    mag = rng.integers(0, cap + 1, size=shape).astype(np.float64)
    mag[rng.random(shape) < zero_boost] = 0.0
    sign = np.where(rng.integers(0, 2, size=shape) == 1, -1.0, 1.0)
    return np.copysign(mag, sign)
