"""Shared fixtures: the default synthetic dataset and models trained on it."""

import numpy as np
import pytest

from kpidiag.data import NOMINAL, NUMERIC, Attribute, Dataset
from kpidiag.learners import train
from kpidiag.synth import GeneratorConfig, generate


@pytest.fixture(scope="session")
def default_ds():
    return generate(GeneratorConfig())


@pytest.fixture(scope="session")
def models(default_ds):
    """One model per algorithm, trained once on the default dataset."""
    cache = {}

    def get(algo):
        if algo not in cache:
            cache[algo] = train(algo, default_ds)
        return cache[algo]

    return get


def make_dataset(columns, labels, classes=("A", "B")):
    """Small dataset from numeric columns {name: values} plus a class column."""
    names = list(columns)
    attrs = [Attribute(n, NUMERIC) for n in names] + [Attribute("cls", NOMINAL, classes)]
    y = [classes.index(v) for v in labels]
    values = np.column_stack([np.asarray(columns[n], dtype=float) for n in names] + [y]) \
        if names else np.asarray(y, dtype=float)[:, None]
    return Dataset(attrs, values, class_index=len(attrs) - 1)


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance PASS/FAIL lines after the run."""
    import sys
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
