"""Generator determinism, prior fidelity, label consistency and signal."""

from collections import Counter

import numpy as np
import pytest
from scipy.stats import spearmanr

from kpidiag.data import write_arff
from kpidiag.errors import UsageError
from kpidiag.kpi import TABLE1, label_dataset, severity_max_array
from kpidiag.synth import (ATTRIBUTE_ORDER, BSC_ROSTER, HOT_BSCS, GeneratorConfig, describe,
                           generate, largest_remainder)


def test_default_class_counts(default_ds):
    counts = Counter(default_ds.classes[c] for c in default_ds.y)
    assert (counts["WARN"], counts["CR"], counts["NORM"]) == (966, 798, 336)


def test_largest_remainder_hand_cases():
    # 2100 * (.46, .38, .16) = (966, 798, 336) exactly
    assert largest_remainder(2100, (0.46, 0.38, 0.16)) == [966, 798, 336]
    # 10 * (.46, .38, .16) = (4.6, 3.8, 1.6): floors 4,3,1; leftovers go to the .8 and then
    # to the first of the tied .6 remainders
    assert largest_remainder(10, (0.46, 0.38, 0.16)) == [5, 4, 1]
    assert largest_remainder(1, (0, 0, 1)) == [0, 0, 1]
    assert largest_remainder(7, (1 / 3, 1 / 3, 1 / 3)) == [3, 2, 2]


def test_schema_shape(default_ds):
    assert default_ds.names[:-1] == list(ATTRIBUTE_ORDER)
    assert len(ATTRIBUTE_ORDER) == 25 and "RAB" in ATTRIBUTE_ORDER
    assert default_ds.names[-1] == "KPIAlarms" and default_ds.classes == ("NORM", "CR", "WARN")
    assert default_ds.attribute("BSC").domain == BSC_ROSTER


def test_deterministic_byte_identical():
    cfg = GeneratorConfig(n=300, seed=99)
    assert write_arff(generate(cfg)) == write_arff(generate(cfg))
    assert write_arff(generate(cfg)) != write_arff(generate(GeneratorConfig(n=300, seed=100)))


def test_single_norm_row():
    ds = generate(GeneratorConfig(n=1, priors=(0, 0, 1)))
    assert ds.n_instances == 1 and ds.classes[ds.y[0]] == "NORM"
    for kpi, name in zip(("dcr", "cssr", "tr", "hof"), ("TCHDropRate", "TCHSS", "TCHTR", "HOFR")):
        assert TABLE1.band(kpi).state(ds.cell(0, name)) == 0


@pytest.mark.parametrize("seed", [7, 11, 12345])
def test_label_consistency(seed):
    ds = generate(GeneratorConfig(seed=seed))
    drivers = [ds.column(n) for n in ("TCHDropRate", "TCHSS", "TCHTR", "HOFR")]
    assert np.array_equal(severity_max_array(*drivers), ds.y)
    assert label_dataset(ds) == ds


def test_companion_monotonicity(default_ds):
    rho = spearmanr(default_ds.column("TCHDropRate"), default_ds.column("TCHDrop")).statistic
    assert rho > 0.5


def test_hot_bscs_have_higher_fault_rates(default_ds):
    bsc = default_ds.column("BSC").astype(int)
    fault = default_ds.y != default_ds.classes.index("NORM")
    rates = {b: fault[bsc == j].mean() for j, b in enumerate(BSC_ROSTER)}
    average = fault.mean()
    for b in HOT_BSCS:
        assert rates[b] > average


def test_manifest():
    text = describe(GeneratorConfig())
    assert "input attributes: 25" in text
    assert "priors (WARN, CR, NORM): 0.46, 0.38, 0.16" in text
    assert "HOSR = 100 − HOFR ± noise" in text
    assert "WARN 966, CR 798, NORM 336" in text
    custom = describe(GeneratorConfig(n=10, priors=(0.5, 0.25, 0.25)))
    assert "priors (WARN, CR, NORM): 0.5, 0.25, 0.25" in custom


@pytest.mark.parametrize("kw", [
    {"n": 0}, {"priors": (0.5, 0.5, 0.5)}, {"priors": (1.0, 0.0)}, {"companion_noise": -1},
    {"boundary_jitter": 1.5}, {"bsc_roster": ()}, {"priors": (-0.1, 0.6, 0.5)},
])
def test_invalid_config(kw):
    with pytest.raises(UsageError):
        GeneratorConfig(**kw)
