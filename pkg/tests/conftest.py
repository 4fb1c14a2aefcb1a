import itertools

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from cbx.space import Compactification, MetricSpace

settings.register_profile("cbx", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("cbx")


def metric_oracle(d) -> bool:
    """Independent axiom check by plain triple enumeration."""
    n = len(d)
    for i in range(n):
        if d[i][i] != 0:
            return False
    for i, j in itertools.product(range(n), repeat=2):
        if d[i][j] != d[j][i] or (i != j and d[i][j] <= 0):
            return False
    for i, j, k in itertools.product(range(n), repeat=3):
        if d[i][k] > d[i][j] + d[j][k]:
            return False
    return True


def euclidean_space(coords) -> MetricSpace:
    c = np.asarray(coords, dtype=float)
    d = np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(-1))
    return MetricSpace(tuple(f"p{i}" for i in range(len(c))), d)


@st.composite
def compactifications(draw, max_size=8):
    """Random points in the plane split into interior and boundary sets."""
    size = draw(st.integers(2, max_size))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    coords = rng.uniform(-2, 2, (size, 2))
    space = euclidean_space(coords)
    n_int = draw(st.integers(1, size - 1))
    perm = rng.permutation(size)
    interior = tuple(sorted(int(i) for i in perm[:n_int]))
    rest = [int(i) for i in perm[n_int:]]
    cuts = sorted(set(rng.integers(1, len(rest), size=draw(st.integers(0, 2))).tolist())) if len(rest) > 1 else []
    sets = [tuple(s) for s in np.split(np.array(rest), cuts)]
    return Compactification(space, interior, tuple(sets))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, msg = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {msg}")
