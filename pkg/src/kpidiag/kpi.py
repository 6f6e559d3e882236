"""KPI severity bands and alarm labeling.

Two labeling modes are provided:

``severity-max``
    Each driver KPI is mapped to its band (NORM/CR/WARN) and the worst band
    wins. Thresholds are configurable.
``figure2``
    The fixed four-rule cascade used by the operator's original labeling
    script, evaluated first-match-wins::

        R1  DCR > 2  and CSSR >= 90 and DCR <= 4 and CSSR < 98     -> CR
        R2  TR > 60  and HOF > 10   and TR < 70  and HOF < 25      -> CR
        R3  (DCR > 4 or CSSR < 90) and (HOF >= 25 or TR > 70)      -> WARN
        R4  otherwise                                              -> NORM

The two modes disagree on some inputs (for example DCR=5 with every other
KPI normal is WARN under severity-max and NORM under figure2).
"""

from __future__ import annotations

import enum
import math
from collections import Counter
from dataclasses import dataclass, fields

import numpy as np

from .data import CLASS_NAME, NOMINAL, Attribute
from .errors import DataError, SchemaError, UsageError

DRIVERS = ("DCR", "CSSR", "TR", "HOF")
MODES = ("severity-max", "figure2")


class AlarmClass(enum.IntEnum):
    """Alarm severity, ordered NORM < CR < WARN."""

    NORM = 0
    CR = 1
    WARN = 2

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise UsageError(f"unknown alarm class {value!r}") from None


CLASS_DOMAIN = tuple(c.name for c in AlarmClass)
REPORT_ORDER = ("WARN", "CR", "NORM")


def display_order(classes):
    """Column order for count tables: WARN, CR, NORM when those are the classes."""
    classes = tuple(classes)
    if sorted(classes) == sorted(REPORT_ORDER):
        return [classes.index(c) for c in REPORT_ORDER]
    return list(range(len(classes)))


@dataclass(frozen=True)
class KpiBand:
    """Two boundaries splitting one KPI's line into NORM/CR/WARN.

    For a higher-is-worse KPI: ``v < cr`` is NORM, ``cr <= v < warn`` is CR,
    ``v >= warn`` is WARN. For a lower-is-worse KPI: ``v >= cr`` is NORM,
    ``warn <= v < cr`` is CR, ``v < warn`` is WARN.
    """

    cr: float
    warn: float
    higher_is_worse: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.cr) and math.isfinite(self.warn)):
            raise UsageError("band boundaries must be finite")
        if self.higher_is_worse and not self.cr < self.warn:
            raise UsageError(f"higher-is-worse band needs cr < warn, got {self.cr}/{self.warn}")
        if not self.higher_is_worse and not self.cr > self.warn:
            raise UsageError(f"lower-is-worse band needs cr > warn, got {self.cr}/{self.warn}")

    def state(self, value):
        if self.higher_is_worse:
            if value < self.cr:
                return AlarmClass.NORM
            return AlarmClass.CR if value < self.warn else AlarmClass.WARN
        if value >= self.cr:
            return AlarmClass.NORM
        return AlarmClass.CR if value >= self.warn else AlarmClass.WARN

    def states(self, values):
        v = np.asarray(values, dtype=float)
        if self.higher_is_worse:
            return (v >= self.cr).astype(int) + (v >= self.warn).astype(int)
        return (v < self.cr).astype(int) + (v < self.warn).astype(int)


@dataclass(frozen=True)
class KpiThresholds:
    dcr: KpiBand = KpiBand(2.0, 4.0, True)
    cssr: KpiBand = KpiBand(98.0, 90.0, False)
    tr: KpiBand = KpiBand(60.0, 70.0, True)
    hof: KpiBand = KpiBand(10.0, 15.0, True)

    def band(self, kpi):
        key = str(kpi).lower()
        if key.upper() not in DRIVERS:
            raise UsageError(f"unknown KPI role {kpi!r}; expected one of {', '.join(DRIVERS)}")
        return getattr(self, key)


TABLE1 = KpiThresholds()


@dataclass(frozen=True)
class KpiMapping:
    """Which dataset attribute carries each driver KPI."""

    dcr: str = "TCHDropRate"
    cssr: str = "TCHSS"
    tr: str = "TCHTR"
    hof: str = "HOFR"

    def __post_init__(self):
        names = [getattr(self, f.name) for f in fields(self)]
        if any(not n for n in names):
            raise UsageError("every driver role must be mapped")
        if len(set(names)) != len(names):
            raise UsageError("driver mapping must be injective")

    def attribute_for(self, kpi):
        if str(kpi).upper() not in DRIVERS:
            raise UsageError(f"unknown KPI role {kpi!r}")
        return getattr(self, str(kpi).lower())

    def as_tuple(self):
        return (self.dcr, self.cssr, self.tr, self.hof)


DEFAULT_MAPPING = KpiMapping()


@dataclass(frozen=True)
class DriverKpis:
    dcr: float
    cssr: float
    tr: float
    hof: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None or not math.isfinite(v):
                raise DataError(f"driver {f.name.upper()} must be finite, got {v!r}")


def classify_kpi(kpi, value, thresholds=TABLE1):
    """Band of a single driver KPI value."""
    band = thresholds.band(kpi)
    if value is None or not math.isfinite(value):
        raise DataError(f"{kpi} value must be finite, got {value!r}")
    return band.state(value)


def label_severity_max(drivers, thresholds=TABLE1):
    return max(thresholds.band(k).state(getattr(drivers, k.lower())) for k in DRIVERS)


def label_figure2(drivers):
    dcr, cssr, tr, hof = drivers.dcr, drivers.cssr, drivers.tr, drivers.hof
    if dcr > 2 and cssr >= 90 and dcr <= 4 and cssr < 98:
        return AlarmClass.CR
    if tr > 60 and hof > 10 and tr < 70 and hof < 25:
        return AlarmClass.CR
    if (dcr > 4 or cssr < 90) and (hof >= 25 or tr > 70):
        return AlarmClass.WARN
    return AlarmClass.NORM


def severity_max_array(dcr, cssr, tr, hof, thresholds=TABLE1):
    """Vectorised ``label_severity_max``; returns AlarmClass codes."""
    cols = [np.asarray(c, dtype=float) for c in (dcr, cssr, tr, hof)]
    for name, c in zip(DRIVERS, cols):
        if not np.isfinite(c).all():
            raise DataError(f"non-finite {name} value")
    return np.maximum.reduce([thresholds.band(k).states(c) for k, c in zip(DRIVERS, cols)])


def figure2_array(dcr, cssr, tr, hof):
    """Vectorised ``label_figure2``; returns AlarmClass codes."""
    dcr, cssr, tr, hof = (np.asarray(c, dtype=float) for c in (dcr, cssr, tr, hof))
    for name, c in zip(DRIVERS, (dcr, cssr, tr, hof)):
        if not np.isfinite(c).all():
            raise DataError(f"non-finite {name} value")
    r1 = (dcr > 2) & (cssr >= 90) & (dcr <= 4) & (cssr < 98)
    r2 = (tr > 60) & (hof > 10) & (tr < 70) & (hof < 25)
    r3 = ((dcr > 4) | (cssr < 90)) & ((hof >= 25) | (tr > 70))
    out = np.full(dcr.shape, int(AlarmClass.NORM))
    out[r3] = AlarmClass.WARN
    out[r1 | r2] = AlarmClass.CR
    return out


def class_frequencies(labels):
    """Histogram over every alarm class, zeros included."""
    counts = Counter(AlarmClass.parse(v) for v in labels)
    return {c: counts.get(c, 0) for c in AlarmClass}


def label_dataset(dataset, mapping=DEFAULT_MAPPING, thresholds=TABLE1, mode="severity-max",
                  class_name=CLASS_NAME):
    """Append (or overwrite) the alarm class column computed from the drivers."""
    if mode not in MODES:
        raise UsageError(f"unknown labeling mode {mode!r}; expected one of {', '.join(MODES)}")
    cols = []
    for role, name in zip(DRIVERS, mapping.as_tuple()):
        if name not in dataset.names:
            raise SchemaError(f"driver {role} mapped to missing attribute {name!r}")
        a = dataset.attribute(name)
        if a.is_nominal:
            raise SchemaError(f"driver {role} attribute {name!r} must be numeric")
        col = dataset.column(name)
        bad = np.flatnonzero(np.isnan(col))
        if bad.size:
            raise DataError(f"missing {role} value in row {int(bad[0]) + 1}",
                            line=int(bad[0]) + 1, column=name)
        cols.append(col)
    if mode == "severity-max":
        codes = severity_max_array(*cols, thresholds=thresholds)
    else:
        codes = figure2_array(*cols)
    # domain indices equal AlarmClass codes because CLASS_DOMAIN follows the enum order
    attr = Attribute(class_name, NOMINAL, CLASS_DOMAIN)
    return dataset.with_column(attr, codes.astype(float), as_class=True)


# ---------------------------------------------------------------------------
# threshold configuration files

_BAND_KEYS = {f"{k.lower()}.{b}" for k in DRIVERS for b in ("cr", "warn")}


def parse_config(text, base=TABLE1, base_mapping=DEFAULT_MAPPING):
    """Parse ``key=value`` threshold/mapping text.

    Recognised keys are ``<kpi>.cr`` / ``<kpi>.warn`` for kpi in dcr, cssr,
    tr, hof, and ``mapping.<kpi>=<attribute>``; keys are case-insensitive.
    Lines starting with ``#`` are comments. Returns ``(KpiThresholds, KpiMapping)``.
    """
    bands = {k.lower(): {"cr": base.band(k).cr, "warn": base.band(k).warn,
                         "hiw": base.band(k).higher_is_worse} for k in DRIVERS}
    mapping = {k.lower(): base_mapping.attribute_for(k) for k in DRIVERS}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"config line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key in seen:
            raise UsageError(f"config line {lineno}: duplicate key {key!r}")
        seen.add(key)
        if key in _BAND_KEYS:
            kpi, which = key.split(".")
            try:
                bands[kpi][which] = float(value)
            except ValueError:
                raise UsageError(f"config line {lineno}: {key} needs a number") from None
        elif key.startswith("mapping.") and key[len("mapping."):] in mapping:
            if not value:
                raise UsageError(f"config line {lineno}: empty attribute name")
            mapping[key[len("mapping."):]] = value
        else:
            raise UsageError(f"config line {lineno}: unknown key {key!r}")
    thresholds = KpiThresholds(**{k: KpiBand(b["cr"], b["warn"], b["hiw"])
                                  for k, b in bands.items()})
    return thresholds, KpiMapping(**mapping)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise UsageError(f"config {path} is not UTF-8 text") from None
    return parse_config(text)
