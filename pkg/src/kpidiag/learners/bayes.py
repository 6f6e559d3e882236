"""Naive Bayes and discretised Bayesian network classifiers.

Both models score classes in log space and skip missing attribute values.

Naive Bayes uses Laplace-smoothed priors and nominal likelihoods, and a
Gaussian density with per-class mean and (population) standard deviation
for numeric attributes. The standard deviation is floored at
``1e-3 * range`` of the attribute (``1e-3`` when the range is zero).

The Bayesian network first discretises numeric attributes with the
Fayyad-Irani MDL criterion, then uses either the naive structure (class is
the only parent) or a tree-augmented one where each attribute but the root
also depends on one other attribute, chosen by a maximum spanning tree over
class-conditional mutual information.
"""

from __future__ import annotations

import math

import numpy as np

from ..kpi import display_order
from .base import (Model, Schema, TrainParams, entropy, entropy_rows, nice_threshold,
                   normalize_log)
from .tree import _training_arrays

SIGMA_FLOOR = 1e-3
_LOG_SQRT_2PI = 0.5 * math.log(2 * math.pi)


def _counts_table(v, y, n_values, n_classes):
    """(class x value) raw counts over rows where ``v`` is known."""
    known = ~np.isnan(v)
    t = np.zeros((n_classes, n_values))
    np.add.at(t, (y[known], v[known].astype(int)), 1.0)
    return t


def _fmt(v):
    return f"{v:.1f}"


def _table_header(schema, title, prior_counts):
    order = display_order(schema.classes)
    priors = (prior_counts + 1.0) / (prior_counts.sum() + prior_counts.size)
    names = [schema.classes[c] for c in order]
    width = max(8, max(len(n) for n in names) + 2)
    lines = [title, "", f"{'Attribute':<24}{'Class':<{width}}",
             " " * 24 + "".join(f"{n:>{width}}" for n in names),
             " " * 24 + "".join(f"{'(' + format(priors[c], '.2f') + ')':>{width}}"
                                for c in order), ""]
    return lines, order, width


# ---------------------------------------------------------------------------
# Naive Bayes


class NaiveBayesModel(Model):
    """Per-attribute class-conditional estimates plus smoothed priors.

    ``nominal`` maps attribute index to a raw (class x value) count table;
    ``numeric`` maps attribute index to ``(mean, sigma, weight)`` arrays over
    classes.
    """

    algorithm = "nb"

    def __init__(self, schema, params, class_counts, nominal, numeric):
        super().__init__(schema, params)
        self.class_counts = np.asarray(class_counts, dtype=float)
        self.nominal = nominal
        self.numeric = numeric

    @property
    def priors(self):
        c = self.class_counts
        return (c + 1.0) / (c.sum() + c.size)

    def log_likelihood_tables(self):
        return {a: np.log((t + 1.0) / (t.sum(axis=1, keepdims=True) + t.shape[1]))
                for a, t in self.nominal.items()}

    def predict_proba(self, X):
        X = np.atleast_2d(X)
        logp = np.tile(np.log(self.priors), (X.shape[0], 1))
        tables = self.log_likelihood_tables()
        # attribute order fixes the summation order, so reloaded models agree bit for bit
        for a in sorted(set(tables) | set(self.numeric)):
            x = X[:, a]
            known = ~np.isnan(x)
            if a in tables:
                logp[known] += tables[a][:, x[known].astype(int)].T
            else:
                mean, sigma, _ = self.numeric[a]
                z = (x[known, None] - mean[None, :]) / sigma[None, :]
                logp[known] += -0.5 * z * z - np.log(sigma)[None, :] - _LOG_SQRT_2PI
        return normalize_log(logp)

    def render(self):
        s = self.schema
        lines, order, width = _table_header(s, "Naive Bayes Classifier", self.class_counts)
        for a in s.feature_indices:
            attr = s.attributes[a]
            lines.append(attr.name)
            if a in self.nominal:
                t = self.nominal[a] + 1.0
                for v, value in enumerate(attr.domain):
                    lines.append(f"  {value:<22}" + "".join(f"{_fmt(t[c, v]):>{width}}"
                                                            for c in order))
                lines.append(f"  {'[total]':<22}" + "".join(f"{_fmt(t[c].sum()):>{width}}"
                                                          for c in order))
            else:
                mean, sigma, weight = self.numeric[a]
                for label, arr in (("mean", mean), ("std. dev.", sigma), ("weight sum", weight)):
                    lines.append(f"  {label:<22}" + "".join(
                        f"{format(arr[c], '.4f'):>{width}}" for c in order))
            lines.append("")
        return "\n".join(lines) + "\n"

    def body(self):
        return {"class_counts": self.class_counts.tolist(),
                "nominal": {str(a): t.tolist() for a, t in self.nominal.items()},
                "numeric": {str(a): [m.tolist(), s.tolist(), w.tolist()]
                            for a, (m, s, w) in self.numeric.items()}}

    @classmethod
    def from_body(cls, schema, params, body):
        nominal = {int(a): np.asarray(t, dtype=float) for a, t in body["nominal"].items()}
        numeric = {int(a): tuple(np.asarray(v, dtype=float) for v in mv)
                   for a, mv in body["numeric"].items()}
        return cls(schema, params, body["class_counts"], nominal, numeric)


def gaussian_estimates(x, y, n_classes):
    """Per-class mean, floored sigma and known weight for one numeric column."""
    known = ~np.isnan(x)
    xk, yk = x[known], y[known]
    span = float(xk.max() - xk.min()) if xk.size else 0.0
    floor = SIGMA_FLOOR * span if span > 0 else SIGMA_FLOOR
    pooled_mean = float(xk.mean()) if xk.size else 0.0
    pooled_sd = float(xk.std()) if xk.size else 0.0
    mean = np.full(n_classes, pooled_mean)
    sigma = np.full(n_classes, pooled_sd)
    weight = np.zeros(n_classes)
    for c in range(n_classes):
        xc = xk[yk == c]
        weight[c] = xc.size
        if xc.size:
            mean[c] = xc.mean()
            sigma[c] = xc.std()
    return mean, np.maximum(sigma, floor), weight


def train_naive_bayes(dataset, params=TrainParams()):
    schema = Schema.of(dataset)
    X, y, _ = _training_arrays(dataset)
    k = schema.n_classes
    nominal, numeric = {}, {}
    for a in schema.feature_indices:
        attr = schema.attributes[a]
        if attr.is_nominal:
            nominal[a] = _counts_table(X[:, a], y, len(attr.domain), k)
        else:
            numeric[a] = gaussian_estimates(X[:, a], y, k)
    counts = np.bincount(y, minlength=k).astype(float)
    return NaiveBayesModel(schema, params, counts, nominal, numeric)


# ---------------------------------------------------------------------------
# MDL discretisation


def _mdl_accept(counts, left, right):
    """Fayyad-Irani acceptance test for one binary cut."""
    n = counts.sum()
    h, h1, h2 = entropy(counts), entropy(left), entropy(right)
    n1, n2 = left.sum(), right.sum()
    gain = h - (n1 * h1 + n2 * h2) / n
    k, k1, k2 = (int((c > 0).sum()) for c in (counts, left, right))
    delta = math.log2(3 ** k - 2) - (k * h - k1 * h1 - k2 * h2)
    return gain > (math.log2(n - 1) + delta) / n


def mdl_cut_points(x, y, n_classes):
    """Sorted cut points for one numeric column (missing values ignored).

    Each cut is the midpoint between two consecutive distinct values; a value
    equal to a cut falls in the lower bin.
    """
    known = ~np.isnan(x)
    order = np.argsort(x[known], kind="stable")
    xs = x[known][order]
    ys = y[known][order]
    onehot = np.zeros((xs.size, n_classes))
    onehot[np.arange(xs.size), ys] = 1.0
    cuts = []
    stack = [(0, xs.size)]
    while stack:
        lo, hi = stack.pop()
        if hi - lo < 2:
            continue
        seg = onehot[lo:hi]
        cum = np.cumsum(seg, axis=0)[:-1]
        total = cum[-1] + seg[-1]
        boundary = np.flatnonzero(xs[lo:hi - 1] < xs[lo + 1:hi])
        if boundary.size == 0 or (total > 0).sum() < 2:
            continue
        left = cum[boundary]
        right = total - left
        nl = left.sum(axis=1)
        ent = (nl * entropy_rows(left) + (hi - lo - nl) * entropy_rows(right)) / (hi - lo)
        j = int(np.argmin(ent))
        i = boundary[j]
        if not _mdl_accept(total, left[j], right[j]):
            continue
        cuts.append(nice_threshold(xs[lo + i], xs[lo + i + 1]))
        stack.append((lo + i + 1, hi))
        stack.append((lo, lo + i + 1))
    return sorted(cuts)


def apply_cuts(x, cuts):
    """Bin indices (float, nan for missing) of ``x`` under ``cuts``."""
    out = np.searchsorted(np.asarray(cuts, dtype=float), x, side="left").astype(float)
    out[np.isnan(x)] = np.nan
    return out


def bin_labels(cuts):
    edges = [-math.inf] + list(cuts) + [math.inf]
    return [f"({format(edges[i], '.6g')}-{format(edges[i + 1], '.6g')}]"
            for i in range(len(edges) - 1)]


# ---------------------------------------------------------------------------
# Bayesian network


def conditional_mutual_information(a, b, y, na, nb, n_classes):
    """I(A; B | C) in bits from empirical counts over rows with both known."""
    known = ~np.isnan(a) & ~np.isnan(b)
    if not known.any():
        return 0.0
    t = np.zeros((n_classes, na, nb))
    np.add.at(t, (y[known], a[known].astype(int), b[known].astype(int)), 1.0)
    n = t.sum()
    pc = t.sum(axis=(1, 2), keepdims=True)
    pa = t.sum(axis=2, keepdims=True)
    pb = t.sum(axis=1, keepdims=True)
    nz = t > 0
    ratio = np.where(nz, t * pc / np.where(pa * pb > 0, pa * pb, 1.0), 1.0)
    return float((t[nz] / n * np.log2(ratio[nz])).sum())


def max_spanning_tree(weights):
    """Prim's algorithm from node 0; returns ``parent`` (-1 for the root).

    Among equal weights the lowest (new node, tree node) index pair wins.
    """
    m = weights.shape[0]
    parent = [-1] * m
    if m == 0:
        return parent
    in_tree = [0]
    best_w = weights[0].astype(float).copy()
    best_p = [0] * m
    while len(in_tree) < m:
        cand = None
        for v in range(m):
            if v in in_tree:
                continue
            if cand is None or best_w[v] > best_w[cand] + 1e-12:
                cand = v
        parent[cand] = best_p[cand]
        in_tree.append(cand)
        for v in range(m):
            if v not in in_tree and weights[cand, v] > best_w[v] + 1e-12:
                best_w[v] = weights[cand, v]
                best_p[v] = cand
    return parent


class BayesNetModel(Model):
    """Discretised network over class plus at most one attribute parent each.

    ``parents`` maps attribute index to its attribute parent (or None).
    ``cpts`` holds raw counts: (class x value) when there is no attribute
    parent, otherwise (class x parent value x value). ``naive`` always holds
    the (class x value) counts, used when the parent value is missing.
    """

    algorithm = "bayesnet"

    def __init__(self, schema, params, class_counts, cuts, parents, cpts, naive):
        super().__init__(schema, params)
        self.class_counts = np.asarray(class_counts, dtype=float)
        self.cuts = cuts
        self.parents = parents
        self.cpts = cpts
        self.naive = naive

    def n_values(self, a):
        attr = self.schema.attributes[a]
        return len(attr.domain) if attr.is_nominal else len(self.cuts[a]) + 1

    def encode(self, X):
        Z = np.array(X, dtype=float, copy=True)
        for a, cuts in self.cuts.items():
            Z[:, a] = apply_cuts(X[:, a], cuts)
        return Z

    def probabilities(self, a):
        """Smoothed CPT of attribute ``a``; the last axis sums to 1."""
        t = self.cpts[a]
        return (t + 1.0) / (t.sum(axis=-1, keepdims=True) + t.shape[-1])

    def edges(self):
        return [(p, a) for a, p in self.parents.items() if p is not None]

    def predict_proba(self, X):
        Z = self.encode(np.atleast_2d(X))
        prior = self.class_counts
        logp = np.tile(np.log((prior + 1.0) / (prior.sum() + prior.size)), (Z.shape[0], 1))
        for a in self.schema.feature_indices:
            v = Z[:, a]
            known = ~np.isnan(v)
            naive = np.log((self.naive[a] + 1.0)
                           / (self.naive[a].sum(axis=1, keepdims=True) + self.naive[a].shape[1]))
            p = self.parents[a]
            if p is None:
                logp[known] += naive[:, v[known].astype(int)].T
                continue
            pv = Z[:, p]
            both = known & ~np.isnan(pv)
            only = known & np.isnan(pv)
            cpt = np.log(self.probabilities(a))
            logp[both] += cpt[:, pv[both].astype(int), v[both].astype(int)].T
            logp[only] += naive[:, v[only].astype(int)].T
        return normalize_log(logp)

    def render(self):
        s = self.schema
        title = "Bayes Network Classifier (" + ("TAN" if self.edges() else "naive") + ")"
        lines, order, width = _table_header(s, title, self.class_counts)
        for a in s.feature_indices:
            attr = s.attributes[a]
            p = self.parents[a]
            head = attr.name + (f" | {s.attributes[p].name}" if p is not None else "")
            lines.append(head)
            values = attr.domain if attr.is_nominal else bin_labels(self.cuts[a])
            t = self.naive[a] + 1.0
            for v, value in enumerate(values):
                lines.append(f"  {value:<22}" + "".join(f"{_fmt(t[c, v]):>{width}}"
                                                        for c in order))
            lines.append("")
        return "\n".join(lines) + "\n"

    def body(self):
        return {"class_counts": self.class_counts.tolist(),
                "cuts": {str(a): list(c) for a, c in self.cuts.items()},
                "parents": {str(a): p for a, p in self.parents.items()},
                "cpts": {str(a): t.tolist() for a, t in self.cpts.items()},
                "naive": {str(a): t.tolist() for a, t in self.naive.items()}}

    @classmethod
    def from_body(cls, schema, params, body):
        return cls(schema, params, body["class_counts"],
                   {int(a): [float(x) for x in c] for a, c in body["cuts"].items()},
                   {int(a): (None if p is None else int(p)) for a, p in body["parents"].items()},
                   {int(a): np.asarray(t, dtype=float) for a, t in body["cpts"].items()},
                   {int(a): np.asarray(t, dtype=float) for a, t in body["naive"].items()})


def train_bayes_net(dataset, params=TrainParams()):
    schema = Schema.of(dataset)
    X, y, _ = _training_arrays(dataset)
    k = schema.n_classes
    feats = schema.feature_indices
    cuts = {a: mdl_cut_points(X[:, a], y, k) for a in feats
            if not schema.attributes[a].is_nominal}
    model = BayesNetModel(schema, params, np.bincount(y, minlength=k).astype(float),
                          cuts, {}, {}, {})
    Z = model.encode(X)
    sizes = {a: model.n_values(a) for a in feats}
    parents = {a: None for a in feats}
    if params.structure == "tan" and len(feats) > 1:
        m = len(feats)
        w = np.zeros((m, m))
        for i in range(m):
            for j in range(i + 1, m):
                a, b = feats[i], feats[j]
                w[i, j] = w[j, i] = conditional_mutual_information(
                    Z[:, a], Z[:, b], y, sizes[a], sizes[b], k)
        for i, p in enumerate(max_spanning_tree(w)):
            if p >= 0:
                parents[feats[i]] = feats[p]
    cpts, naive = {}, {}
    for a in feats:
        naive[a] = _counts_table(Z[:, a], y, sizes[a], k)
        p = parents[a]
        if p is None:
            cpts[a] = naive[a]
        else:
            both = ~np.isnan(Z[:, a]) & ~np.isnan(Z[:, p])
            t = np.zeros((k, sizes[p], sizes[a]))
            np.add.at(t, (y[both], Z[both, p].astype(int), Z[both, a].astype(int)), 1.0)
            cpts[a] = t
    model.parents, model.cpts, model.naive = parents, cpts, naive
    return model
