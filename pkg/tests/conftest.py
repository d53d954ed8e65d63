import numpy as np
import pytest

from glumarker.binning import default_binning_config
from glumarker.core_types import DayRecord, GlucoseRangeStats
from glumarker.features import build_examples, split_by_patient
from glumarker.synth import GeneratorConfig, generate


def make_day(pid="A", day=1, tir=0.6, tar=0.3, tbr=0.1, bolus=25.0, meal_bolus=12.0,
             corr=None, meal=150.0):
    return DayRecord(pid, day, GlucoseRangeStats(tir, tar, tbr), bolus, meal_bolus, corr, meal)


@pytest.fixture(scope="session")
def binning():
    return default_binning_config()


@pytest.fixture(scope="session")
def default_data():
    return generate(GeneratorConfig())


@pytest.fixture(scope="session")
def default_split(default_data, binning):
    return split_by_patient(build_examples(default_data, binning), (0.6, 0.2, 0.2), seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
