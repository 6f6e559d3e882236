"""Shared pieces for every learner: schema binding, parameters, entropy."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, fields
from statistics import NormalDist

import numpy as np

from ..data import Attribute, Dataset
from ..errors import ModelError, UsageError

ALGORITHMS = ("j48", "jrip", "part", "nb", "bayesnet")
ALIASES = {"naive-bayes": "nb", "naivebayes": "nb", "tree": "j48", "ripper": "jrip",
           "bn": "bayesnet"}


def canonical_algorithm(name):
    key = str(name).lower()
    key = ALIASES.get(key, key)
    if key not in ALGORITHMS:
        raise UsageError(f"unknown algorithm {name!r}; valid algorithms: {', '.join(ALGORITHMS)}")
    return key


@dataclass(frozen=True)
class TrainParams:
    """Training knobs shared by all learners (each reads what it needs).

    ``grow_ratio`` is the grow:prune split used by the rule learner, so the
    default 2 means two thirds grow, one third prune.
    """

    confidence: float = 0.25
    min_leaf: int = 2
    grow_ratio: float = 2.0
    optimizations: int = 1
    structure: str = "naive"
    seed: int = 1

    def __post_init__(self):
        if not 0.0 < self.confidence < 1.0:
            raise UsageError("confidence must be in (0, 1)")
        if int(self.min_leaf) != self.min_leaf or self.min_leaf < 1:
            raise UsageError("min_leaf must be a positive integer")
        if not self.grow_ratio > 0:
            raise UsageError("grow_ratio must be positive")
        if int(self.optimizations) != self.optimizations or self.optimizations < 0:
            raise UsageError("optimizations must be a nonnegative integer")
        if self.structure not in ("naive", "tan"):
            raise UsageError("structure must be 'naive' or 'tan'")

    @classmethod
    def from_overrides(cls, overrides):
        """Build from ``{"name": "text"}`` pairs, e.g. parsed ``k=v`` options."""
        types = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in overrides.items():
            if key not in types:
                raise UsageError(f"unknown parameter {key!r}; known: {', '.join(types)}")
            conv = {"float": float, "int": int, "str": str}[types[key]]
            try:
                kwargs[key] = conv(value)
            except ValueError:
                raise UsageError(f"parameter {key} expects {types[key]}, got {value!r}") from None
        return cls(**kwargs)

    def to_dict(self):
        return asdict(self)


class Schema:
    """Attribute list plus class position a model was trained on."""

    def __init__(self, attributes, class_index):
        self.attributes = tuple(attributes)
        self.class_index = class_index

    @classmethod
    def of(cls, dataset):
        if dataset.class_index is None:
            raise UsageError("dataset has no class attribute")
        return cls(dataset.attributes, dataset.class_index)

    @property
    def classes(self):
        return self.attributes[self.class_index].domain

    @property
    def class_name(self):
        return self.attributes[self.class_index].name

    @property
    def n_classes(self):
        return len(self.classes)

    @property
    def feature_indices(self):
        return [j for j in range(len(self.attributes)) if j != self.class_index]

    def to_dict(self):
        return {"attributes": [a.to_dict() for a in self.attributes],
                "class_index": self.class_index}

    @classmethod
    def from_dict(cls, d):
        return cls([Attribute.from_dict(a) for a in d["attributes"]], d["class_index"])

    def fingerprint(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def __eq__(self, other):
        return isinstance(other, Schema) and self.attributes == other.attributes \
            and self.class_index == other.class_index

    def check(self, dataset):
        """Raise ModelError unless ``dataset`` carries this schema's attributes."""
        if not isinstance(dataset, Dataset):
            raise ModelError("expected a Dataset")
        mine = {a.name: a for a in self.attributes}
        for j, a in enumerate(self.attributes):
            if j == self.class_index:
                continue
            if a.name not in dataset.names:
                raise ModelError(f"dataset lacks attribute {a.name!r} the model was trained on")
            other = dataset.attribute(a.name)
            if other != a:
                raise ModelError(f"attribute {a.name!r} differs from the training schema")
        extra = [n for n in dataset.names if n not in mine]
        if extra:
            raise ModelError(f"dataset has attributes unknown to the model: {', '.join(extra)}")

    def align(self, dataset):
        """Value matrix of ``dataset`` reordered to this schema (class column nan)."""
        self.check(dataset)
        X = np.full((dataset.n_instances, len(self.attributes)), np.nan)
        for j, a in enumerate(self.attributes):
            if j != self.class_index:
                X[:, j] = dataset.column(a.name)
        return X

    def encode(self, instance):
        """One encoded row from a mapping of decoded cells or an encoded sequence."""
        if isinstance(instance, dict):
            unknown = set(instance) - {a.name for a in self.attributes}
            if unknown:
                raise ModelError(f"unknown attributes: {', '.join(sorted(unknown))}")
            row = np.full(len(self.attributes), np.nan)
            for j, a in enumerate(self.attributes):
                v = instance.get(a.name)
                if v is None or j == self.class_index:
                    continue
                if a.is_nominal:
                    if v not in a.domain:
                        raise ModelError(f"value {v!r} outside domain of {a.name!r}")
                    row[j] = a.domain.index(v)
                else:
                    row[j] = float(v)
            return row
        row = np.asarray(instance, dtype=float)
        if row.shape != (len(self.attributes),):
            raise ModelError(f"instance has {row.size} cells, schema has {len(self.attributes)}")
        return row


# ---------------------------------------------------------------------------
# information measures


def entropy(counts):
    """Shannon entropy in bits of a nonnegative count vector."""
    c = np.asarray(counts, dtype=float)
    total = c.sum()
    if total <= 0:
        return 0.0
    p = c[c > 0] / total
    return float(-(p * np.log2(p)).sum())


def entropy_rows(counts):
    """Row-wise entropy (bits) of a 2-D count matrix."""
    c = np.asarray(counts, dtype=float)
    total = c.sum(axis=1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(total > 0, c / total, 0.0)
        terms = np.where(p > 0, p * np.log2(np.where(p > 0, p, 1.0)), 0.0)
    return -terms.sum(axis=1)


def laplace(counts):
    c = np.asarray(counts, dtype=float)
    return (c + 1.0) / (c.sum() + c.size)


def nice_threshold(lo, hi):
    """Midpoint of (lo, hi), shortened to 6 significant digits when still strictly inside."""
    mid = (lo + hi) / 2.0
    short = float(format(mid, ".6g"))
    return short if lo <= short < hi else mid


def log2_binom(n, k):
    if k < 0 or k > n:
        return 0.0
    return (math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)) / math.log(2)


def pessimistic_error(n, errors, confidence):
    """Upper confidence bound on the error count of a leaf (normal approximation).

    With ``f = errors / n`` and ``z`` the standard normal quantile at
    ``1 - confidence``::

        U = (f + z²/2n + z·sqrt(f/n − f²/n + z²/4n²)) / (1 + z²/n)

    and the returned estimate is ``n · U``.
    """
    if n <= 0:
        return 0.0
    z = NormalDist().inv_cdf(1.0 - confidence)
    f = errors / n
    num = f + z * z / (2 * n) + z * math.sqrt(max(f / n - f * f / n + z * z / (4 * n * n), 0.0))
    return n * num / (1 + z * z / n)


def argmax_first(p):
    """Index of the largest entry; ties go to the lowest index."""
    return int(np.argmax(p))


def normalize_log(logp):
    """Normalised probabilities from row-wise log scores."""
    logp = np.atleast_2d(np.asarray(logp, dtype=float))
    m = logp.max(axis=1, keepdims=True)
    e = np.exp(logp - m)
    return e / e.sum(axis=1, keepdims=True)


class Model:
    """Common surface: ``predict_proba`` over an encoded value matrix."""

    algorithm = ""

    def __init__(self, schema, params):
        self.schema = schema
        self.params = params

    @property
    def classes(self):
        return self.schema.classes

    def predict_proba(self, X):
        raise NotImplementedError

    def predict_indices(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def render(self):
        raise NotImplementedError

    def body(self):
        raise NotImplementedError

    @classmethod
    def from_body(cls, schema, params, body):
        raise NotImplementedError
