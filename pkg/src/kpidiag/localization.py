"""Fault localisation by location attributes, and NORM-gap explanations.

For each nominal location attribute (by default ``Period`` and ``BSC``) a
value x class table of Laplace-smoothed counts is built, and each value
gets the posterior ``p(c | v) ∝ prior(c) * cell(v, c) / Σ_v' cell(v', c)``.
Locations are ranked by fault posterior, the probability of any class
other than NORM.

:func:`norm_gap` works on a trained rule list: it reports, for each rule
concluding NORM, which of its conditions an instance violates, together
with concrete attribute values that make the rule list classify the
instance as NORM.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ModelError, UsageError
from .kpi import display_order
from .learners.rules import RuleModel

DEFAULT_LOCATIONS = ("Period", "BSC")
NORMAL_CLASS = "NORM"


# ---------------------------------------------------------------------------
# count tables and posteriors


@dataclass
class CountTable:
    """Smoothed counts: ``counts[v, c] = #(value v, class c) + 1``."""

    attribute: str
    values: tuple
    classes: tuple
    counts: np.ndarray

    def cell(self, value, klass):
        return float(self.counts[self.values.index(value), self.classes.index(klass)])

    def likelihoods(self):
        """p(v | c) per column."""
        return self.counts / self.counts.sum(axis=0, keepdims=True)

    def to_dict(self):
        return {"attribute": self.attribute, "values": list(self.values),
                "classes": list(self.classes), "counts": self.counts.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["attribute"], tuple(d["values"]), tuple(d["classes"]),
                   np.asarray(d["counts"], dtype=float))


def _labeled(dataset):
    if dataset.class_index is None:
        raise UsageError("dataset has no class attribute")
    return dataset.y


def build_count_table(dataset, attribute):
    """Smoothed value x class count table of nominal ``attribute``."""
    attr = dataset.attribute(attribute)
    if not attr.is_nominal:
        raise UsageError(f"attribute {attribute!r} is numeric; discretise it before localising")
    y = _labeled(dataset)
    x = dataset.column(attribute)
    keep = (y >= 0) & ~np.isnan(x)
    counts = np.ones((len(attr.domain), len(dataset.classes)))
    np.add.at(counts, (x[keep].astype(int), y[keep]), 1.0)
    return CountTable(attr.name, attr.domain, tuple(dataset.classes), counts)


def class_priors(dataset):
    """Laplace-smoothed class priors ``(count + 1) / (N + |C|)``."""
    y = _labeled(dataset)
    k = len(dataset.classes)
    counts = np.bincount(y[y >= 0], minlength=k).astype(float)
    return (counts + 1.0) / (counts.sum() + k)


def location_posterior(table, priors, value):
    """Posterior over classes for one value of ``table``'s attribute."""
    if value not in table.values:
        raise UsageError(f"{value!r} is not a value of {table.attribute!r}")
    v = table.values.index(value)
    score = np.asarray(priors, dtype=float) * table.likelihoods()[v]
    return score / score.sum()


def fault_posterior(posterior, classes):
    """Probability of every class except NORM."""
    classes = tuple(classes)
    if NORMAL_CLASS not in classes:
        raise UsageError(f"class domain has no {NORMAL_CLASS} class")
    return float(1.0 - posterior[classes.index(NORMAL_CLASS)])


@dataclass
class RankedLocation:
    attribute: str
    value: str
    fault: float
    posterior: list

    def to_dict(self):
        return {"attribute": self.attribute, "value": self.value, "fault": self.fault,
                "posterior": list(self.posterior)}


def rank_locations(dataset, attributes=DEFAULT_LOCATIONS):
    """Values of ``attributes`` sorted by fault posterior, highest first.

    Ties keep attribute order, then domain order.
    """
    priors = class_priors(dataset)
    out = []
    for name in attributes:
        table = build_count_table(dataset, name)
        for value in table.values:
            post = location_posterior(table, priors, value)
            out.append(RankedLocation(name, value, fault_posterior(post, table.classes),
                                      post.tolist()))
    return sorted(out, key=lambda r: -r.fault)


# ---------------------------------------------------------------------------
# report


def dataset_id(dataset):
    """Row-order independent identifier: relation name plus a content hash."""
    h = hashlib.sha256(repr(dataset.schema_dict()).encode())
    for row in sorted(np.ascontiguousarray(r).tobytes() for r in dataset.values):
        h.update(row)
    return f"{dataset.relation}:{h.hexdigest()[:16]}"


@dataclass
class LocalizationReport:
    classes: tuple
    class_counts: list
    priors: list
    tables: list = field(default_factory=list)
    ranking: list = field(default_factory=list)
    dataset: str = ""
    timestamp: str | None = None

    def posteriors(self):
        """{attribute: {value: posterior list}} from the tables."""
        out = {}
        for t in self.tables:
            out[t.attribute] = {v: location_posterior(t, self.priors, v).tolist()
                                for v in t.values}
        return out

    def to_dict(self):
        return {"dataset": self.dataset, "timestamp": self.timestamp,
                "classes": list(self.classes), "class_counts": list(self.class_counts),
                "priors": list(self.priors), "tables": [t.to_dict() for t in self.tables],
                "posteriors": self.posteriors(),
                "ranking": [r.to_dict() for r in self.ranking]}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["classes"]), list(d["class_counts"]), list(d["priors"]),
                   [CountTable.from_dict(t) for t in d["tables"]],
                   [RankedLocation(r["attribute"], r["value"], r["fault"], r["posterior"])
                    for r in d["ranking"]], d["dataset"], d["timestamp"])

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"


def localize(dataset, attributes=DEFAULT_LOCATIONS, timestamp=None):
    """Count tables, posteriors and ranking for ``attributes`` of ``dataset``.

    An empty dataset yields a report with priors only.
    """
    y = _labeled(dataset)
    k = len(dataset.classes)
    counts = np.bincount(y[y >= 0], minlength=k).astype(float)
    priors = class_priors(dataset)
    tables, ranking = [], []
    if dataset.n_instances:
        tables = [build_count_table(dataset, a) for a in attributes]
        ranking = rank_locations(dataset, attributes)
    return LocalizationReport(tuple(dataset.classes), counts.tolist(), priors.tolist(),
                              tables, ranking, dataset_id(dataset), timestamp)


def render_localization(report):
    order = display_order(report.classes)
    names = [report.classes[c] for c in order]
    w = max(8, max(len(n) for n in names) + 2)
    lw = max([16] + [len(v) + 4 for t in report.tables for v in t.values])
    lines = ["Fault localization", "", f"{'Attribute':<{lw}}{'Class':>{w}}",
             " " * lw + "".join(f"{n:>{w}}" for n in names),
             " " * lw + "".join(f"{'(' + format(report.priors[c], '.2f') + ')':>{w}}"
                                for c in order), ""]
    for t in report.tables:
        lines.append(t.attribute)
        for v, value in enumerate(t.values):
            lines.append(f"  {value:<{lw - 2}}"
                         + "".join(f"{t.counts[v, c]:>{w}.1f}" for c in order))
        lines.append("")
    if report.ranking:
        lines.append("Fault ranking (posterior of any non-NORM class)")
        for i, r in enumerate(report.ranking, 1):
            lines.append(f"  {i:>3}. {r.attribute:<8} {r.value:<{lw - 2}} {r.fault:.4f}")
        lines.append("")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# NORM-gap explanations


class _Box:
    """Per-attribute feasible region: numeric (lo, hi] or a set of nominal codes."""

    def __init__(self, schema):
        self.schema = schema
        self.lo = {}
        self.hi = {}
        self.allowed = {}

    def copy(self):
        b = _Box(self.schema)
        b.lo, b.hi = dict(self.lo), dict(self.hi)
        b.allowed = {a: set(s) for a, s in self.allowed.items()}
        return b

    def _domain(self, a):
        return self.allowed.get(a, set(range(len(self.schema.attributes[a].domain))))

    def add(self, cond):
        """Intersect with ``cond``; False when the region becomes empty."""
        a = cond.attr
        if cond.op == "=":
            self.allowed[a] = self._domain(a) & {int(cond.value)}
            return bool(self.allowed[a])
        if cond.op == "<=":
            self.hi[a] = min(self.hi.get(a, math.inf), cond.value)
        else:
            self.lo[a] = max(self.lo.get(a, -math.inf), cond.value)
        return self.lo.get(a, -math.inf) < self.hi.get(a, math.inf)

    def negate(self, cond):
        """Intersect with the complement of ``cond`` (value known)."""
        a = cond.attr
        if cond.op == "=":
            self.allowed[a] = self._domain(a) - {int(cond.value)}
            return bool(self.allowed[a])
        flipped = type(cond)(a, ">" if cond.op == "<=" else "<=", cond.value)
        return self.add(flipped)

    def project(self, a, x):
        """Closest value to ``x`` inside the region of attribute ``a``."""
        if self.schema.attributes[a].is_nominal:
            dom = sorted(self._domain(a))
            if not math.isnan(x) and int(x) in dom:
                return x
            return float(dom[0])
        lo, hi = self.lo.get(a, -math.inf), self.hi.get(a, math.inf)
        if not math.isnan(x) and lo < x <= hi:
            return x
        if not math.isnan(x) and x > hi:
            return hi
        if math.isinf(lo):
            return hi if math.isfinite(hi) else 0.0
        return _just_above(lo, hi)


def _just_above(lo, hi):
    """A short decimal strictly inside (lo, hi], close to lo."""
    for digits in range(2, 17):
        step = 10.0 ** (math.floor(math.log10(abs(lo))) - digits) if lo else 10.0 ** -digits
        v = float(format(lo + step, ".15g"))
        if lo < v <= hi:
            return v
    return hi if math.isfinite(hi) else math.nextafter(lo, math.inf)


@dataclass
class RuleGap:
    """How one NORM rule could be made to fire.

    ``violated`` are the rule's conditions the instance fails; ``fixes``
    maps attribute names to suggested values, covering those conditions and
    any earlier non-NORM rule that would otherwise still match first.
    """

    rule_index: int
    violated: list
    fixes: dict
    blocked: list

    def to_dict(self, schema):
        return {"rule": self.rule_index,
                "violated": [c.text(schema) for c in self.violated],
                "fixes": dict(self.fixes), "blocked_rules": list(self.blocked)}


def _rule_gap(model, i, x):
    schema = model.schema
    rules = model.rules
    norm = schema.classes.index(NORMAL_CLASS)
    box = _Box(schema)
    for c in rules[i].conditions:
        if not box.add(c):
            return None
    violated = [c for c in rules[i].conditions if not c.holds(x[c.attr])]
    x_new = x.copy()
    blocked = []
    for _ in range(len(rules) + 1):
        for a in set(box.lo) | set(box.hi) | set(box.allowed):
            x_new[a] = box.project(a, x_new[a])
        hit = next((j for j in range(i) if rules[j].klass != norm
                    and rules[j].mask(x_new[None, :])[0]), None)
        if hit is None:
            break
        # break the earliest capturing rule with the cheapest feasible negation
        best = None
        for c in rules[hit].conditions:
            trial = box.copy()
            if not trial.negate(c):
                continue
            moved = trial.project(c.attr, x_new[c.attr])
            cost = abs(moved - x_new[c.attr]) if not schema.attributes[c.attr].is_nominal else 0.0
            if best is None or cost < best[0]:
                best = (cost, trial)
        if best is None:
            return None
        box = best[1]
        blocked.append(hit)
    else:
        return None
    if model.predict_indices(x_new[None, :])[0] != norm:
        return None
    fixes = {}
    for a in range(len(schema.attributes)):
        if a == schema.class_index:
            continue
        old, new = x[a], x_new[a]
        if (math.isnan(old) and not math.isnan(new)) or (not math.isnan(old) and old != new):
            attr = schema.attributes[a]
            fixes[attr.name] = attr.domain[int(new)] if attr.is_nominal else float(new)
    return RuleGap(i, violated, fixes, sorted(set(blocked)))


def norm_gap(instance, model):
    """NORM rules ranked by how many of their conditions ``instance`` violates.

    Returns an empty list when the model already predicts NORM. Each entry
    is a :class:`RuleGap`; the first has the fewest violated conditions
    (ties by rule position). Rules that cannot be made to fire are left out.
    """
    if not isinstance(model, RuleModel):
        raise ModelError("NORM-gap explanations need a rule model (jrip or part)")
    classes = model.schema.classes
    if NORMAL_CLASS not in classes:
        raise ModelError(f"model classes lack {NORMAL_CLASS}")
    norm = classes.index(NORMAL_CLASS)
    if not any(r.klass == norm for r in model.rules):
        raise ModelError("model has no rule concluding NORM")
    x = model.schema.encode(instance)
    if model.predict_indices(x[None, :])[0] == norm:
        return []
    gaps = [g for i, r in enumerate(model.rules) if r.klass == norm
            for g in [_rule_gap(model, i, x)] if g is not None]
    return sorted(gaps, key=lambda g: (len(g.violated), g.rule_index))


def apply_fixes(instance, gap, schema):
    """Encoded copy of ``instance`` with ``gap.fixes`` applied."""
    x = schema.encode(instance).copy()
    for name, value in gap.fixes.items():
        j = [a.name for a in schema.attributes].index(name)
        attr = schema.attributes[j]
        x[j] = attr.domain.index(value) if attr.is_nominal else float(value)
    return x


def render_gaps(gaps, model, instance):
    """Operator-facing text for one instance's NORM gaps."""
    s = model.schema
    x = s.encode(instance)
    if not gaps:
        return "already NORM\n"
    lines = []
    for g in gaps:
        lines.append(f"rule {g.rule_index + 1}: {len(g.violated)} violated condition(s)")
        for c in g.violated:
            a = s.attributes[c.attr]
            v = x[c.attr]
            cur = "?" if math.isnan(v) else (a.domain[int(v)] if a.is_nominal
                                             else format(v, ".6g"))
            lines.append(f"  {c.text(s)}   (now {cur})")
        if g.blocked:
            lines.append("  also breaks earlier rule(s): "
                         + ", ".join(str(b + 1) for b in g.blocked))
        fixes = ", ".join(f"{k} = {v if isinstance(v, str) else format(v, '.6g')}"
                          for k, v in g.fixes.items())
        lines.append(f"  set {fixes}")
    return "\n".join(lines) + "\n"
