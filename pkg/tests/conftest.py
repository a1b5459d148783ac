import numpy as np
import pytest

from gsvsp import pipeline
from gsvsp.config import RunConfig


@pytest.fixture(scope="session")
def cfg():
    return RunConfig()


@pytest.fixture(scope="session")
def realizations(cfg):
    return pipeline.synthesize(cfg)


class _LogCache:
    def __init__(self, cfg, reals):
        self.cfg, self.reals, self._logs = cfg, reals, {}

    def __getitem__(self, mode):
        if mode not in self._logs:
            self._logs[mode] = pipeline.simulate(self.cfg, self.reals, mode)
        return self._logs[mode]


@pytest.fixture(scope="session")
def logs(cfg, realizations):
    return _LogCache(cfg, realizations)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    def record(number: int, passed: bool, detail: str):
        _ACCEPTANCE[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
