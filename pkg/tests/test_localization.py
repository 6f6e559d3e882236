"""Count tables, location posteriors, rankings and NORM-gap explanations."""

import json
import re
from fractions import Fraction

import numpy as np
import pytest

from kpidiag.data import NOMINAL, Attribute, Dataset
from kpidiag.errors import ModelError, UsageError
from kpidiag.learners import TrainParams, train
from kpidiag.learners.rules import Condition, Rule, RuleModel
from kpidiag.learners.base import Schema
from kpidiag.localization import (LocalizationReport, apply_fixes, build_count_table,
                                  class_priors, localize, location_posterior, norm_gap,
                                  rank_locations, render_gaps, render_localization)
from kpidiag.synth import BSC_ROSTER, HOT_BSCS

CLASSES = ("NORM", "CR", "WARN")


def site_ds(rows, domain=("BSC2", "BSC5", "BSC21")):
    """rows of (bsc, class) labels."""
    attrs = [Attribute("BSC", NOMINAL, domain), Attribute("KPIAlarms", NOMINAL, CLASSES)]
    vals = [[domain.index(b), CLASSES.index(c)] for b, c in rows]
    return Dataset(attrs, np.asarray(vals, dtype=float).reshape(len(vals), 2), class_index=1)


def test_single_row_table():
    t = build_count_table(site_ds([("BSC2", "WARN")]), "BSC")
    assert [t.cell("BSC2", c) for c in ("WARN", "CR", "NORM")] == [2.0, 1.0, 1.0]
    assert t.cell("BSC5", "NORM") == 1.0


def test_column_sums(default_ds):
    counts = np.bincount(default_ds.y, minlength=3)
    for attr in ("BSC", "Period"):
        t = build_count_table(default_ds, attr)
        size = len(default_ds.attribute(attr).domain)
        assert np.array_equal(t.counts.sum(axis=0), counts + size)
        assert np.array_equal((t.counts - 1).sum(axis=0), counts)
        assert (t.counts >= 1).all()


def test_numeric_attribute_rejected(default_ds):
    with pytest.raises(UsageError):
        build_count_table(default_ds, "TCHDrop")


def test_uniform_posteriors():
    ds = site_ds([(b, c) for b in ("BSC2", "BSC5", "BSC21") for c in CLASSES])
    t = build_count_table(ds, "BSC")
    assert np.allclose(location_posterior(t, [1 / 3] * 3, "BSC5"), 1 / 3)
    prior = [0.16, 0.38, 0.46]
    assert np.allclose(location_posterior(t, prior, "BSC21"), prior)
    with pytest.raises(UsageError):
        location_posterior(t, prior, "BSC99")


def oracle_posterior(raw, totals, n_values):
    """Exact Bayes with Laplace priors and +1 smoothed likelihoods."""
    n = sum(totals)
    k = len(totals)
    scores = [Fraction(totals[c] + 1, n + k) * Fraction(raw[c] + 1, totals[c] + n_values)
              for c in range(k)]
    z = sum(scores)
    return [float(s / z) for s in scores]


def test_posterior_hand_oracle_80_47_3():
    # one BSC with raw (WARN 80, CR 47, NORM 3); the rest spread to reach (966, 798, 336)
    domain = BSC_ROSTER
    totals = {"WARN": 966, "CR": 798, "NORM": 336}
    rows = [("BSC21", "WARN")] * 80 + [("BSC21", "CR")] * 47 + [("BSC21", "NORM")] * 3
    rest = {"WARN": 886, "CR": 751, "NORM": 333}
    others = [b for b in domain if b != "BSC21"]
    for c, m in rest.items():
        rows += [(others[i % len(others)], c) for i in range(m)]
    ds = site_ds(rows, domain)
    t = build_count_table(ds, "BSC")
    post = location_posterior(t, class_priors(ds), "BSC21")
    expected = oracle_posterior([3, 47, 80], [totals["NORM"], totals["CR"], totals["WARN"]],
                                len(domain))
    assert np.allclose(post, expected, atol=1e-12, rtol=0)
    assert abs(post.sum() - 1) < 1e-9


def test_rank_examples():
    ds = site_ds([("BSC5", "WARN")] * 5 + [("BSC2", "NORM")] * 3 + [("BSC21", "NORM")] * 3
                 + [("BSC2", "CR")])
    ranking = rank_locations(ds, ["BSC"])
    assert ranking[0].value == "BSC5"
    assert sorted(r.value for r in ranking) == sorted(("BSC2", "BSC5", "BSC21"))
    one = site_ds([("BSC2", "WARN"), ("BSC2", "NORM")], domain=("BSC2",))
    assert [r.value for r in rank_locations(one, ["BSC"])] == ["BSC2"]


def test_rank_ties_keep_domain_order():
    ds = site_ds([("BSC2", "NORM"), ("BSC5", "NORM"), ("BSC21", "NORM")])
    assert [r.value for r in rank_locations(ds, ["BSC"])] == ["BSC2", "BSC5", "BSC21"]


def test_default_hot_bscs(default_ds):
    ranking = rank_locations(default_ds, ["BSC"])
    order = [r.value for r in ranking]
    median = len(order) // 2
    for b in HOT_BSCS:
        assert order.index(b) < median
    for r in ranking:
        assert abs(sum(r.posterior) - 1) < 1e-9
        assert r.fault == pytest.approx(1 - r.posterior[0])


def test_report_permutation_invariant(default_ds):
    perm = np.random.default_rng(1).permutation(default_ds.n_instances)
    a = localize(default_ds).to_json()
    b = localize(default_ds.subset(perm)).to_json()
    assert a == b


def test_report_json_and_render(default_ds):
    rep = localize(default_ds)
    d = json.loads(rep.to_json())
    assert d["timestamp"] is None and d["classes"] == list(CLASSES)
    assert LocalizationReport.from_dict(d).to_json() == rep.to_json()
    for values in d["posteriors"].values():
        for post in values.values():
            assert abs(sum(post) - 1) < 1e-9
    text = render_localization(rep)
    lines = text.splitlines()
    assert lines[0] == "Fault localization"
    assert lines[3].split() == ["WARN", "CR", "NORM"]
    assert lines[4].split() == ["(0.46)", "(0.38)", "(0.16)"]
    bsc21 = next(l for l in lines if l.strip().startswith("BSC21 ") and "." in l)
    assert all(re.fullmatch(r"\d+\.\d", c) for c in bsc21.split()[1:])
    assert "Fault ranking" in text


def test_empty_dataset_priors_only():
    rep = localize(site_ds([]))
    assert rep.tables == [] and rep.ranking == []
    assert np.allclose(rep.priors, 1 / 3)
    text = render_localization(rep)
    assert "(0.33)" in text and "Fault ranking" not in text


# -- NORM gap --------------------------------------------------------------

def gap_model(rules):
    attrs = [Attribute("TCHDropRate"), Attribute("HOFR"), Attribute("TCHTR"),
             Attribute("KPIAlarms", NOMINAL, CLASSES)]
    schema = Schema(attrs, 3)
    for r in rules:
        r.counts = np.ones(3)
        r.counts[r.klass] = 5
    return RuleModel(schema, TrainParams(), rules, "jrip")


def test_gap_single_condition():
    m = gap_model([Rule([Condition(0, "<=", 1.96)], 0), Rule([], 2)])
    x = [3.0, 5.0, 50.0, np.nan]
    gaps = norm_gap(x, m)
    assert len(gaps) == 1 and len(gaps[0].violated) == 1
    assert gaps[0].violated[0].text(m.schema) == "TCHDropRate <= 1.96"
    assert m.predict_indices(apply_fixes(x, gaps[0], m.schema)[None, :])[0] == 0
    assert "TCHDropRate <= 1.96" in render_gaps(gaps, m, x)


def test_gap_already_norm_and_errors():
    m = gap_model([Rule([Condition(0, "<=", 1.96)], 0), Rule([], 2)])
    assert norm_gap([1.0, 5.0, 50.0, np.nan], m) == []
    with pytest.raises(ModelError):
        norm_gap([1.0, 5.0, 50.0, np.nan], gap_model([Rule([Condition(0, ">", 1)], 1),
                                                      Rule([], 2)]))
    nb = train("nb", site_ds([("BSC2", "WARN"), ("BSC5", "NORM")]))
    with pytest.raises(ModelError):
        norm_gap([0.0, np.nan], nb)


def test_gap_minimal_rule_first_brute_force():
    # three NORM rules; the instance violates 2, 1 and 3 of their conditions
    r0 = Rule([Condition(0, "<=", 2), Condition(1, "<=", 10), Condition(2, "<=", 60)], 0)
    r1 = Rule([Condition(0, "<=", 5), Condition(1, "<=", 30), Condition(2, "<=", 40)], 0)
    r2 = Rule([Condition(0, "<=", 1), Condition(1, "<=", 5), Condition(2, "<=", 10)], 0)
    m = gap_model([r0, r1, r2, Rule([], 2)])
    x = np.array([4.0, 20.0, 50.0, np.nan])
    brute = sorted(range(3), key=lambda i: (sum(not c.holds(x[c.attr])
                                                for c in m.rules[i].conditions), i))
    gaps = norm_gap(x, m)
    assert [g.rule_index for g in gaps] == brute == [1, 0, 2]
    assert [len(g.violated) for g in gaps] == [1, 2, 3]


def test_gap_breaks_earlier_capturing_rule():
    # WARN rule fires first whenever HOFR > 20, even if the NORM rule is satisfied
    m = gap_model([Rule([Condition(1, ">", 20)], 2), Rule([Condition(0, "<=", 2)], 0),
                   Rule([], 1)])
    x = np.array([3.0, 25.0, 50.0, np.nan])
    (g,) = norm_gap(x, m)
    assert g.blocked == [0] and set(g.fixes) == {"TCHDropRate", "HOFR"}
    assert m.predict_indices(apply_fixes(x, g, m.schema)[None, :])[0] == 0


@pytest.mark.parametrize("algo", ["jrip", "part"])
def test_gap_soundness_sample(algo, default_ds, models):
    m = models(algo)
    X = default_ds.values.copy()
    X[:, default_ds.class_index] = np.nan
    pred = m.predict_indices(X)
    rows = np.flatnonzero(pred != 0)[:40]
    for i in rows:
        gaps = norm_gap(X[i], m)
        assert gaps
        for g in gaps:
            assert m.predict_indices(apply_fixes(X[i], g, m.schema)[None, :])[0] == 0
