"""Dataset model, ARFF/CSV round trips and stratified folds."""

import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kpidiag.data import (ALARM_DOMAIN, NOMINAL, NUMERIC, Attribute, Dataset, parse_arff,
                          parse_csv, read_dataset, schema_hints_for, stratified_folds,
                          write_arff, write_csv, write_dataset)
from kpidiag.errors import DataError, SchemaError, UsageError
from kpidiag.kpi import CLASS_DOMAIN
from kpidiag.synth import ATTRIBUTE_ORDER

MINIMAL = """@relation t
@attribute TCHDropRate numeric
@attribute KPIAlarms {NORM,CR,WARN}
@data
1.5,NORM
"""


def test_minimal_arff():
    ds = parse_arff(MINIMAL)
    assert ds.n_instances == 1 and ds.class_index == 1
    assert ds.cell(0, "TCHDropRate") == 1.5 and ds.cell(0, "KPIAlarms") == "NORM"


def header_only(names=ATTRIBUTE_ORDER):
    lines = ["@relation kpi"]
    for n in names:
        kind = "{a,b}" if n in ("Period", "BSC") else "numeric"
        lines.append(f"@attribute {n} {kind}")
    return "\n".join(lines + ["@data", ""])


def test_header_only_25_attributes():
    ds = parse_arff(header_only())
    assert len(ds.attributes) == 25 and ds.n_instances == 0
    assert ds.class_index is None


def test_arity_error_names_line():
    row = ",".join(["a", "b"] + ["1"] * 22)  # 24 cells
    with pytest.raises(DataError) as exc:
        parse_arff(header_only() + row + "\n")
    assert exc.value.line == 28


@pytest.mark.parametrize("text,line", [
    ("@relation r\n@attribute x numeric\n@data\nabc\n", 4),
    ("@relation r\n@attribute c {a,b}\n@data\nz\n", 4),
    ("@relation r\n@attribute x date\n@data\n", 2),
    ("@relation r\n@bogus\n", 2),
    ("@relation r\n@data\n", 2),
    ("@relation r\n@attribute x numeric\n@attribute x numeric\n", 3),
    ("@relation r\n@attribute c {a,a}\n", 2),
    ("@relation r\n@attribute x numeric\n@data\n'unterminated\n", 4),
    ("@relation r\n@attribute x numeric\n@data\ninf\n", 4),
])
def test_arff_golden_errors(text, line):
    with pytest.raises(DataError) as exc:
        parse_arff(text)
    assert exc.value.line == line


def test_arff_comments_case_and_missing():
    text = ("% comment\n@RELATION r\n@ATTRIBUTE 'my attr' REAL\n@attribute c {'x y',z}\n"
            "@DATA\n% inner\n?,'x y'\n2,?\n")
    ds = parse_arff(text)
    assert ds.names == ["my attr", "c"]
    assert ds.cell(0, "my attr") is None and ds.cell(0, "c") == "x y"
    assert ds.cell(1, "c") is None


def test_write_arff_missing_and_empty():
    attrs = [Attribute("x", NUMERIC), Attribute("c", NOMINAL, ("a", "b"))]
    ds = Dataset(attrs, [[math.nan, 1], [0.1234567, math.nan]])
    text = write_arff(ds)
    assert "?,b" in text and "0.123457,?" in text
    assert not any(line != line.rstrip() for line in text.splitlines())
    empty = write_arff(Dataset(attrs))
    assert empty.rstrip().endswith("@data")


def test_csv_inference():
    ds = parse_csv("a,b\n1,x\n2,y\n")
    assert ds.attribute("a").kind == NUMERIC
    assert ds.attribute("b").domain == ("x", "y")


def test_csv_errors():
    with pytest.raises(DataError):
        parse_csv("a,b\n1,x\n", schema_hints={"b": NUMERIC})
    with pytest.raises(DataError):
        parse_csv("a,b\n1\n")
    with pytest.raises(DataError):
        parse_csv("")
    with pytest.raises(DataError):
        parse_csv(",\n1,2\n")
    with pytest.raises(SchemaError):
        parse_csv("a\n1\n", schema_hints={"zz": NUMERIC})


def test_csv_quoting_and_class():
    ds = parse_csv('site,KPIAlarms\n"a,b",NORM\nc,WARN\n')
    assert ds.cell(0, "site") == "a,b" and ds.class_index == 1
    assert '"a,b"' in write_csv(ds)


def test_dataset_invariants():
    with pytest.raises(UsageError):
        Dataset([Attribute("x"), Attribute("x")])
    with pytest.raises(UsageError):
        Attribute("c", NOMINAL, ())
    with pytest.raises(SchemaError):
        Dataset([Attribute("x")], [[1.0]], class_index=0)
    with pytest.raises(DataError):
        Dataset([Attribute("c", NOMINAL, ("a",))], [[3.0]])


# -- round trips -----------------------------------------------------------

names = st.text(alphabet="abcXYZ_ ,'%{}", min_size=1, max_size=6)


@st.composite
def datasets(draw):
    n_attr = draw(st.integers(1, 5))
    attr_names = draw(st.lists(names, min_size=n_attr, max_size=n_attr, unique=True))
    attrs = []
    for name in attr_names:
        if draw(st.booleans()):
            dom = draw(st.lists(names.filter(lambda s: s != "?"), min_size=1, max_size=4,
                                unique=True))
            attrs.append(Attribute(name, NOMINAL, tuple(dom)))
        else:
            attrs.append(Attribute(name, NUMERIC))
    n = draw(st.integers(0, 8))
    rows = []
    for _ in range(n):
        row = []
        for a in attrs:
            if draw(st.integers(0, 5)) == 0:
                row.append(math.nan)
            elif a.is_nominal:
                row.append(float(draw(st.integers(0, len(a.domain) - 1))))
            else:
                # values representable at 6 significant digits
                row.append(float(format(draw(st.floats(-1e6, 1e6, allow_nan=False)), ".6g")))
        rows.append(row)
    nominal = [j for j, a in enumerate(attrs) if a.is_nominal]
    ci = draw(st.sampled_from(nominal)) if nominal and draw(st.booleans()) else None
    return Dataset(attrs, np.array(rows).reshape(n, len(attrs)), ci, relation="rel")


def canonical_class(ds):
    """ARFF restores the class only when it is the last attribute named KPIAlarms."""
    return Dataset(ds.attributes, ds.values, None, ds.relation)


@settings(max_examples=150)
@given(datasets())
def test_arff_round_trip(ds):
    back = parse_arff(write_arff(ds))
    assert canonical_class(back) == canonical_class(ds)
    assert write_arff(back) == write_arff(ds)


@settings(max_examples=150)
@given(datasets())
def test_csv_round_trip(ds):
    back = parse_csv(write_csv(ds), schema_hints=schema_hints_for(ds), relation="rel")
    assert canonical_class(back) == canonical_class(ds)
    assert write_csv(back) == write_csv(ds)


def test_csv_round_trip_exact_floats():
    ds = Dataset([Attribute("x")], [[0.1 + 0.2], [1e-300], [123456789.123]])
    assert parse_csv(write_csv(ds)).values.tolist() == ds.values.tolist()


def test_synthetic_round_trip_both_formats(default_ds, tmp_path):
    for suffix in ("arff", "csv"):
        path = tmp_path / f"d.{suffix}"
        write_dataset(default_ds, path)
        back = read_dataset(path)
        assert back.names == default_ds.names and back.class_index == default_ds.class_index
        assert back.classes == default_ds.classes
        for name in default_ds.names:
            assert [back.cell(i, name) for i in range(0, 2100, 7)] == \
                [default_ds.cell(i, name) for i in range(0, 2100, 7)]
    # ARFF keeps declared domains, so the encoded matrix is identical too
    write_dataset(default_ds, tmp_path / "e.arff")
    assert np.array_equal(read_dataset(tmp_path / "e.arff").values, default_ds.values)


def test_csv_class_keeps_alarm_order():
    assert ALARM_DOMAIN == CLASS_DOMAIN
    ds = parse_csv("x,KPIAlarms\n1,WARN\n2,NORM\n")
    assert ds.classes == ALARM_DOMAIN and ds.y.tolist() == [2, 0]
    other = parse_csv("x,KPIAlarms\n1,yes\n2,no\n")
    assert other.classes == ("yes", "no")


# -- folds -----------------------------------------------------------------

def labeled(counts):
    y = [c for c, m in enumerate(counts) for _ in range(m)]
    attrs = [Attribute("x"), Attribute("c", NOMINAL, tuple(f"k{i}" for i in range(len(counts))))]
    return Dataset(attrs, np.column_stack([np.arange(len(y)), y]), class_index=1)


def test_balanced_folds_one_each():
    ds = labeled([5, 5])
    folds = stratified_folds(ds, 5, seed=1)
    for f in folds:
        assert sorted(ds.y[f].tolist()) == [0, 1]
    assert folds == stratified_folds(ds, 5, seed=1)


def test_default_synthetic_fold_counts(default_ds):
    folds = stratified_folds(default_ds, 10, seed=7)
    expected = {"WARN": 96.6, "CR": 79.8, "NORM": 33.6}
    for f in folds:
        counts = Counter(default_ds.classes[c] for c in default_ds.y[f])
        for name, mean in expected.items():
            assert abs(counts[name] - mean) <= 1


@given(st.lists(st.integers(1, 30), min_size=1, max_size=4), st.integers(2, 10),
       st.integers(0, 2**32))
def test_fold_partition_and_bound(counts, k, seed):
    ds = labeled(counts)
    if k > ds.n_instances:
        with pytest.raises(UsageError):
            stratified_folds(ds, k, seed)
        return
    folds = stratified_folds(ds, k, seed)
    flat = [i for f in folds for i in f]
    assert sorted(flat) == list(range(ds.n_instances))
    for c, m in enumerate(counts):
        for f in folds:
            assert abs(int((ds.y[f] == c).sum()) - m / k) <= 1


def test_folds_reject_small_k():
    with pytest.raises(UsageError):
        stratified_folds(labeled([3, 3]), 1)
