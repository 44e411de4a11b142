import os
import warnings

import numpy as np
import pytest
from hypothesis import settings

from fsgate._backend import available_backends
from fsgate.linmodel import ConvergenceWarning

settings.register_profile("default", deadline=None, max_examples=100)
settings.load_profile("default")

BACKENDS = available_backends()

_criteria = []


@pytest.fixture(params=sorted(BACKENDS))
def kern(request):
    return BACKENDS[request.param]


@pytest.fixture(autouse=True)
def _quiet_convergence():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def canonical_data_path():
    path = os.environ.get("FSGATE_CANONICAL_DATA")
    return path if path and os.path.isfile(path) else None


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if not item.name.startswith("test_criterion_"):
        return
    if rep.when == "call" or (rep.when == "setup" and rep.skipped):
        doc = (item.function.__doc__ or "").strip().splitlines()
        label = doc[0] if doc else item.name
        status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[rep.outcome]
        reason = ""
        if rep.skipped and isinstance(rep.longrepr, tuple):
            reason = f"  ({rep.longrepr[2]})"
        _criteria.append(f"[{status}] {label}{reason}")


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criteria, key=lambda s: s.split('] ', 1)[1]):
            terminalreporter.write_line(line)


def write_uci(d, path, updrs=7.0):
    """Write a dataset in the public file's layout: id, 26 features, UPDRS, class."""
    lines = []
    for i in range(d.n_rows):
        cells = [d.subjects[i]] + [repr(float(v)) for v in d.X[i]] + [repr(updrs), str(int(d.y[i]))]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n")
    return path


@pytest.fixture
def uci_file(tmp_path):
    from fsgate.dataset import synthesize

    def make(name="data.txt", **kw):
        kw.setdefault("n_subjects_per_class", 6)
        kw.setdefault("n_recordings", 4)
        return write_uci(synthesize(kw.pop("seed", 0), **kw), tmp_path / name)

    return make
