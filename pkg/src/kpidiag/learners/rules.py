"""Ordered rule lists shared by the RIPPER and PART learners."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .base import Model, laplace

OPS = ("<=", ">", "=")


@dataclass(frozen=True)
class Condition:
    attr: int
    op: str
    value: float  # threshold, or nominal domain index for "="

    def mask(self, X):
        x = X[:, self.attr]
        with np.errstate(invalid="ignore"):
            if self.op == "<=":
                m = x <= self.value
            elif self.op == ">":
                m = x > self.value
            else:
                m = x == self.value
        return m & ~np.isnan(x)

    def holds(self, value):
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return False
        if self.op == "<=":
            return value <= self.value
        if self.op == ">":
            return value > self.value
        return value == self.value

    def text(self, schema):
        a = schema.attributes[self.attr]
        if self.op == "=":
            return f"{a.name} = {a.domain[int(self.value)]}"
        return f"{a.name} {self.op} {format(self.value, '.6g')}"

    def to_list(self):
        return [self.attr, self.op, self.value]


@dataclass
class Rule:
    conditions: list
    klass: int
    counts: np.ndarray = field(default=None)

    @property
    def is_default(self):
        return not self.conditions

    def mask(self, X):
        m = np.ones(X.shape[0], dtype=bool)
        for c in self.conditions:
            m &= c.mask(X)
        return m

    def covered(self):
        return float(self.counts.sum())

    def misclassified(self):
        return float(self.counts.sum() - self.counts[self.klass])

    def to_dict(self):
        return {"conditions": [c.to_list() for c in self.conditions], "class": self.klass,
                "counts": np.asarray(self.counts, dtype=float).tolist()}

    @classmethod
    def from_dict(cls, d):
        conds = [Condition(int(a), op, float(v)) for a, op, v in d["conditions"]]
        return cls(conds, int(d["class"]), np.asarray(d["counts"], dtype=float))


def rule_distribution(rule):
    """Laplace estimate of the rule's coverage.

    When the coverage does not favour the rule's own class (typically a rule
    that first-matches no training row) that class is topped up until it is
    the most probable, so prediction agrees with first-match semantics.
    """
    counts = np.asarray(rule.counts, dtype=float).copy()
    k = rule.klass
    best = counts.max()
    if counts[k] < best or np.argmax(counts) != k:
        counts[k] = best + 1.0
    return laplace(counts)


def first_match(rules, X):
    """Index of the first rule matching each row (-1 when none does)."""
    out = np.full(X.shape[0], -1)
    for i, r in enumerate(rules):
        m = (out < 0) & r.mask(X)
        out[m] = i
    return out


def assign_counts(rules, X, y, n_classes):
    """Set each rule's class counts to the training rows it first-matches."""
    which = first_match(rules, X)
    for i, r in enumerate(rules):
        r.counts = np.bincount(y[which == i], minlength=n_classes).astype(float)


class RuleModel(Model):
    """First-match rule list; the last rule has no conditions."""

    def __init__(self, schema, params, rules, algorithm):
        super().__init__(schema, params)
        self.rules = rules
        self.algorithm = algorithm

    def match(self, X):
        return first_match(self.rules, np.atleast_2d(X))

    def predict_proba(self, X):
        X = np.atleast_2d(X)
        table = np.array([rule_distribution(r) for r in self.rules])
        return table[self.match(X)]

    def render(self):
        return render_ordered(self) if self.algorithm == "jrip" else render_decision_list(self)

    def body(self):
        return {"rules": [r.to_dict() for r in self.rules]}

    @classmethod
    def from_body(cls, schema, params, body, algorithm):
        return cls(schema, params, [Rule.from_dict(r) for r in body["rules"]], algorithm)


def _fmt_count(v):
    return f"{v:.1f}"


def render_ordered(model):
    """``(a <= v) and (b > w) => Class=X (covered/misclassified)`` per line."""
    s = model.schema
    lines = ["JRIP rules:", "===========", ""]
    for r in model.rules:
        conds = " and ".join(f"({c.text(s)})" for c in r.conditions)
        head = f"{conds} " if conds else ""
        lines.append(f"{head}=> {s.class_name}={s.classes[r.klass]} "
                     f"({_fmt_count(r.covered())}/{_fmt_count(r.misclassified())})")
    lines += ["", f"Number of Rules : {len(model.rules)}"]
    return "\n".join(lines) + "\n"


def render_decision_list(model):
    """Stacked ``cond AND`` lines ending ``: CLASS (covered[/misclassified])``."""
    s = model.schema
    lines = ["PART decision list", "------------------", ""]
    for r in model.rules:
        wrong = r.misclassified()
        tally = _fmt_count(r.covered()) + (f"/{_fmt_count(wrong)}" if wrong > 0 else "")
        tail = f": {s.classes[r.klass]} ({tally})"
        if r.is_default:
            lines.append(tail)
        else:
            texts = [c.text(s) for c in r.conditions]
            for t in texts[:-1]:
                lines.append(f"{t} AND")
            lines.append(texts[-1] + tail)
        lines.append("")
    lines.append(f"Number of Rules  : \t{len(model.rules)}")
    return "\n".join(lines) + "\n"
