"""C4.5-style decision tree.

Numeric attributes split in two at midpoints between consecutive distinct
values; nominal attributes split multiway. The split with the best gain
ratio is chosen among candidates whose information gain is at least the
average gain of all candidates. Instances with a missing split value are
sent down every branch with weight proportional to the branch's known
weight. After growing, subtrees are replaced by leaves whenever the leaf's
pessimistic error estimate does not exceed the subtree's.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError
from .base import (Model, Schema, TrainParams, entropy, entropy_rows, laplace,
                   nice_threshold, pessimistic_error)

_EPS = 1e-10


@dataclass
class Split:
    attr: int
    threshold: float | None  # None for a nominal multiway split
    gain: float
    ratio: float


def _onehot_weights(y, w, n_classes):
    out = np.zeros((y.size, n_classes))
    out[np.arange(y.size), y] = w
    return out


def _numeric_candidate(x, y, w, n_classes, min_leaf, total_w):
    known = ~np.isnan(x)
    kw = w[known].sum()
    if kw < 2 * min_leaf:
        return None
    xs = x[known]
    order = np.argsort(xs, kind="stable")
    xs = xs[order]
    oh = _onehot_weights(y[known][order], w[known][order], n_classes)
    cum = np.cumsum(oh, axis=0)[:-1]
    if cum.shape[0] == 0:
        return None
    boundary = xs[:-1] < xs[1:]
    left_w = cum.sum(axis=1)
    right_w = kw - left_w
    valid = boundary & (left_w >= min_leaf - _EPS) & (right_w >= min_leaf - _EPS)
    if not valid.any():
        return None
    tot = cum[-1] + oh[-1]
    h_all = entropy(tot)
    right = tot - cum
    h_split = (left_w * entropy_rows(cum) + right_w * entropy_rows(right)) / kw
    gains = np.where(valid, h_all - h_split, -np.inf)
    i = int(np.argmax(gains))
    gain_known = gains[i]
    if gain_known <= _EPS:
        return None
    missing_w = total_w - kw
    gain = kw / total_w * gain_known
    split_info = entropy([left_w[i], right_w[i], missing_w])
    if split_info <= _EPS:
        return None
    return gain, split_info, nice_threshold(xs[i], xs[i + 1])


def _nominal_candidate(x, y, w, n_values, n_classes, min_leaf, total_w):
    known = ~np.isnan(x)
    kw = w[known].sum()
    if kw < 2 * min_leaf:
        return None
    table = np.zeros((n_values, n_classes))
    np.add.at(table, (x[known].astype(int), y[known]), w[known])
    branch_w = table.sum(axis=1)
    if (branch_w >= min_leaf - _EPS).sum() < 2:
        return None
    h_split = (branch_w * entropy_rows(table)).sum() / kw
    gain_known = entropy(table.sum(axis=0)) - h_split
    if gain_known <= _EPS:
        return None
    gain = kw / total_w * gain_known
    split_info = entropy(np.append(branch_w, total_w - kw))
    if split_info <= _EPS:
        return None
    return gain, split_info, None


def best_split(X, y, w, attrs, schema, min_leaf):
    """Gain-ratio split over ``attrs`` or None when nothing qualifies."""
    total_w = w.sum()
    n_classes = schema.n_classes
    cands = []
    for a in attrs:
        attr = schema.attributes[a]
        if attr.is_nominal:
            c = _nominal_candidate(X[:, a], y, w, len(attr.domain), n_classes, min_leaf, total_w)
        else:
            c = _numeric_candidate(X[:, a], y, w, n_classes, min_leaf, total_w)
        if c is not None:
            cands.append((a,) + c)
    if not cands:
        return None
    avg = sum(c[1] for c in cands) / len(cands)
    best = None
    for a, gain, split_info, thr in cands:
        if gain < avg - 1e-12:
            continue
        ratio = gain / split_info
        if best is None or ratio > best.ratio + 1e-12:
            best = Split(a, thr, gain, ratio)
    return best


def partition(X, w, split, schema):
    """Child (row selector, weights) pairs; missing values spread by branch weight."""
    x = X[:, split.attr]
    known = ~np.isnan(x)
    if split.threshold is None:
        n_branches = len(schema.attributes[split.attr].domain)
        masks = [known & (x == v) for v in range(n_branches)]
    else:
        masks = [known & (x <= split.threshold), known & (x > split.threshold)]
    branch_w = np.array([w[m].sum() for m in masks])
    kw = branch_w.sum()
    fractions = branch_w / kw if kw > 0 else np.full(len(masks), 1.0 / len(masks))
    missing = ~known
    children = []
    for m, frac in zip(masks, fractions):
        sel = m | (missing & (frac > 0))
        cw = np.where(m, w, w * frac)[sel]
        children.append((np.flatnonzero(sel), cw))
    return children, fractions


class Node:
    __slots__ = ("attr", "threshold", "children", "counts", "dist", "fractions")

    def __init__(self, counts, dist=None):
        self.attr = None
        self.threshold = None
        self.children = []
        self.counts = np.asarray(counts, dtype=float)
        self.dist = self.counts if dist is None else np.asarray(dist, dtype=float)
        self.fractions = None

    @property
    def is_leaf(self):
        return not self.children

    def make_leaf(self):
        self.attr = None
        self.threshold = None
        self.children = []
        self.fractions = None

    def leaves(self):
        if self.is_leaf:
            yield self
        else:
            for c in self.children:
                yield from c.leaves()

    def size(self):
        return 1 + sum(c.size() for c in self.children)

    def to_dict(self):
        d = {"counts": self.counts.tolist()}
        if self.dist is not self.counts:
            d["dist"] = self.dist.tolist()
        if not self.is_leaf:
            d.update(attr=self.attr, threshold=self.threshold, fractions=self.fractions.tolist(),
                     children=[c.to_dict() for c in self.children])
        return d

    @classmethod
    def from_dict(cls, d):
        node = cls(d["counts"], d.get("dist"))
        if "children" in d:
            node.attr = d["attr"]
            node.threshold = d["threshold"]
            node.fractions = np.asarray(d["fractions"], dtype=float)
            node.children = [cls.from_dict(c) for c in d["children"]]
        return node


def class_counts(y, w, n_classes):
    return np.bincount(y, weights=w, minlength=n_classes).astype(float)


def leaf_error(counts, confidence):
    n = counts.sum()
    return pessimistic_error(n, n - counts.max(), confidence) if n > 0 else 0.0


def subtree_error(node, confidence):
    return sum(leaf_error(l.counts, confidence) for l in node.leaves())


def grow(X, y, w, schema, params, attrs=None, parent_counts=None):
    """Unpruned tree on rows ``X``/``y`` with instance weights ``w``."""
    attrs = schema.feature_indices if attrs is None else attrs
    counts = class_counts(y, w, schema.n_classes)
    if counts.sum() <= _EPS:
        return Node(counts, parent_counts)
    node = Node(counts)
    if (counts > _EPS).sum() <= 1 or counts.sum() < 2 * params.min_leaf:
        return node
    split = best_split(X, y, w, attrs, schema, params.min_leaf)
    if split is None:
        return node
    children, fractions = partition(X, w, split, schema)
    node.attr, node.threshold, node.fractions = split.attr, split.threshold, fractions
    node.children = [grow(X[rows], y[rows], cw, schema, params, attrs, counts)
                     for rows, cw in children]
    return node


def prune(node, confidence):
    """Bottom-up subtree replacement; returns the node's pessimistic error."""
    if node.is_leaf:
        return leaf_error(node.counts, confidence)
    sub = sum(prune(c, confidence) for c in node.children)
    as_leaf = leaf_error(node.counts, confidence)
    if as_leaf <= sub + 1e-9:
        node.make_leaf()
        return as_leaf
    return sub


def route(node, X):
    """Leaf reached by every row of ``X``; missing values follow the heaviest branch."""
    out = [None] * X.shape[0]
    stack = [(node, np.arange(X.shape[0]))]
    while stack:
        nd, rs = stack.pop()
        if nd.is_leaf:
            for r in rs:
                out[r] = nd
            continue
        x = X[rs, nd.attr]
        missing = np.isnan(x)
        heavy = int(np.argmax(nd.fractions))
        if nd.threshold is None:
            branch = np.where(missing, heavy, np.nan_to_num(x, nan=0.0)).astype(int)
        else:
            branch = np.where(missing, heavy, np.where(x <= nd.threshold, 0, 1))
        for b, child in enumerate(nd.children):
            sel = rs[branch == b]
            if sel.size:
                stack.append((child, sel))
    return out


class TreeModel(Model):
    algorithm = "j48"

    def __init__(self, schema, params, root):
        super().__init__(schema, params)
        self.root = root

    @property
    def n_leaves(self):
        return sum(1 for _ in self.root.leaves())

    @property
    def size(self):
        return self.root.size()

    def predict_proba(self, X):
        X = np.atleast_2d(X)
        return np.array([laplace(leaf.dist) for leaf in route(self.root, X)]).reshape(
            X.shape[0], self.schema.n_classes)

    def render(self):
        cls_attr = self.schema.attributes[self.schema.class_index]
        lines = []

        def label(nd):
            counts = nd.dist if nd.counts.sum() <= _EPS else nd.counts
            k = int(np.argmax(counts))
            covered = nd.counts.sum()
            wrong = covered - nd.counts[k] if covered > 0 else 0.0
            return f"{cls_attr.domain[k]} ({covered:.1f}/{wrong:.1f})"

        def walk(nd, depth):
            attr = self.schema.attributes[nd.attr]
            if nd.threshold is None:
                tests = [f"{attr.name} = {v}" for v in attr.domain]
            else:
                t = format(nd.threshold, ".6g")
                tests = [f"{attr.name} <= {t}", f"{attr.name} > {t}"]
            for test, child in zip(tests, nd.children):
                prefix = "|   " * depth + test
                if child.is_leaf:
                    lines.append(f"{prefix}: {label(child)}")
                else:
                    lines.append(prefix)
                    walk(child, depth + 1)

        lines.append("J48 pruned tree")
        lines.append("------------------")
        lines.append("")
        if self.root.is_leaf:
            lines.append(f": {label(self.root)}")
        else:
            walk(self.root, 0)
        lines += ["", f"Number of Leaves  : \t{self.n_leaves}", "",
                  f"Size of the tree : \t{self.size}"]
        return "\n".join(lines) + "\n"

    def body(self):
        return {"root": self.root.to_dict()}

    @classmethod
    def from_body(cls, schema, params, body):
        return cls(schema, params, Node.from_dict(body["root"]))


def _training_arrays(dataset):
    if dataset.class_index is None:
        raise UsageError("dataset has no class attribute")
    if dataset.n_instances == 0:
        raise UsageError("cannot train on an empty dataset")
    y = dataset.y
    keep = y >= 0
    if not keep.any():
        raise UsageError("every instance has a missing class")
    return dataset.values[keep], y[keep], np.ones(int(keep.sum()))


def train_tree(dataset, params=TrainParams()):
    schema = Schema.of(dataset)
    X, y, w = _training_arrays(dataset)
    root = grow(X, y, w, schema, params)
    prune(root, params.confidence)
    return TreeModel(schema, params, root)
