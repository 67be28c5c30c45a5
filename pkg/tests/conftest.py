import numpy as np
import pytest

from weekcast.layers import Sequential
from weekcast.data import WindowSample


class Net:
    """Minimal model wrapper around a layer stack, for layer-level checks."""

    def __init__(self, layers, input_shape, seed=0):
        self.net = Sequential(layers)
        self.input_shape = tuple(input_shape)
        self.out_shape = self.net.build(self.input_shape, np.random.default_rng(seed))

    def forward(self, x):
        return self.net.forward(x)

    def backward(self, dy):
        return self.net.backward(dy)

    def named_params(self):
        return self.net.named_params()


def random_sample(net, seed, target_low=0.0):
    rng = np.random.default_rng(seed)
    return WindowSample(rng.normal(size=net.input_shape), rng.uniform(target_low, 1.0, size=net.out_shape))


@pytest.fixture
def make_net():
    return Net


# acceptance criteria summary: one line per criterion after the run

_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _criteria.get(label, "PASS")
        _criteria[label] = "PASS" if prev == "PASS" and report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_criteria):
        terminalreporter.write_line(f"{_criteria[label]}  {label}")
