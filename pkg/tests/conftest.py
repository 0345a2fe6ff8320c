import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from services.bell_model import builtin_expression  # noqa: E402
from services.nondegeneracy import certificate_from_values  # noqa: E402
from services.tsirelson import SeesawConfig  # noqa: E402

# опубликованные значения для CGLMP при d = 3
CGLMP_CQ = 3.3050
CGLMP_C2 = 6.2071


@pytest.fixture
def cglmp3():
    return builtin_expression("cglmp3")


@pytest.fixture
def chsh():
    return builtin_expression("chsh")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def quick_cfg():
    return SeesawConfig(restarts=3, max_iters=60, tol=1e-9, inner_iters=50, seed=7)


@pytest.fixture
def full_cfg():
    return SeesawConfig(restarts=50, max_iters=500, tol=1e-9, inner_iters=200, seed=0)


@pytest.fixture
def cglmp_cert():
    return certificate_from_values("cglmp3", 3, CGLMP_CQ, CGLMP_C2)
