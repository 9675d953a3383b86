import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from posegaze.data import SynthConfig, synth_generate

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def small_manifest(tmp_path_factory):
    """Eight scenes: six train, two val."""
    out = tmp_path_factory.mktemp("synth8")
    return synth_generate(SynthConfig(count=8, val_fraction=0.25), 3, out)


@pytest.fixture(scope="session")
def small_samples(small_manifest):
    return [small_manifest.load(i) for i in range(len(small_manifest))]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# acceptance summary: one PASS/FAIL line per criterion

_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion this test belongs to")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    entry = _criteria.setdefault(n, {"title": title, "outcomes": [], "details": []})
    if call.when == "call":
        entry["outcomes"].append("failed" if call.excinfo else "passed")
        entry["details"] += [f"{item.name}: {v}" for k, v in item.user_properties if k == "detail"]
    elif call.excinfo is not None:
        skipped = call.excinfo.errisinstance(pytest.skip.Exception)
        entry["outcomes"].append("skipped" if skipped else "failed")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_criteria):
        entry = _criteria[n]
        outs = entry["outcomes"]
        if not outs:
            continue
        if "failed" in outs:
            status = "FAIL"
        elif all(o == "skipped" for o in outs):
            status = "SKIP"
        else:
            status = "PASS"
        tr.write_line(f"{status} criterion {n}: {entry['title']} ({outs.count('passed')}/{len(outs)} checks)")
        for detail in entry["details"]:
            tr.write_line(f"    {detail}")
