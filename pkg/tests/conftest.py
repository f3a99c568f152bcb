import contextlib
import time

import numpy as np
import pytest

from geolock.geometry import Anchor, AuthorizedRegion, Point3
from geolock.scenario import Scenario

_ACCEPTANCE_LINES = []


@contextlib.contextmanager
def criterion(number, title, limit_s=None):
    """Record one acceptance criterion as PASS/FAIL for the terminal summary."""
    start = time.perf_counter()
    info = {}
    try:
        yield info
        elapsed = time.perf_counter() - start
        if limit_s is not None:
            assert elapsed < limit_s, f"took {elapsed:.2f}s, limit {limit_s}s"
    except BaseException as exc:
        _ACCEPTANCE_LINES.append(f"FAIL  [{number}] {title}: {type(exc).__name__}: {exc}")
        raise
    else:
        detail = info.get("detail", "")
        _ACCEPTANCE_LINES.append(f"PASS  [{number}] {title} ({elapsed:.2f}s){'  ' + detail if detail else ''}")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)


def random_scenario(rng, n_anchors=None, password=None, radius=None):
    n = n_anchors or int(rng.integers(1, 9))
    anchors = [Anchor(f"a{i}", Point3.of(rng.uniform(-100, 100, 3))) for i in range(n)]
    center = Point3.of(rng.uniform(-50, 50, 3))
    return Scenario(
        anchors=anchors,
        region=AuthorizedRegion(center, float(radius if radius is not None else rng.uniform(0.5, 5.0))),
        password=password or rng.bytes(12).hex(),
        sigma_ticks=0.0,
    )


def off_region_points(rng, scenario, count):
    c = np.array(list(scenario.region.center))
    dirs = rng.normal(size=(count, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dist = rng.uniform(scenario.region.radius_m, 30.0, size=count)
    return c + dirs * dist[:, None]


@pytest.fixture
def rng():
    return np.random.default_rng(20261019)
