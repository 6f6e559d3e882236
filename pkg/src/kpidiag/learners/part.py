"""PART decision lists: one rule per partial C4.5 tree.

Each round grows a partial tree on the instances not yet covered: subsets
are expanded in order of increasing class entropy, expansion stops at the
first child that does not end up a leaf, and a node whose children are all
leaves is collapsed when its pessimistic error is no worse. The leaf with
the most training weight becomes the next rule and the tree is discarded.
"""

from __future__ import annotations

import numpy as np

from .base import Schema, TrainParams, entropy
from .rules import Condition, Rule, RuleModel, assign_counts
from .tree import _EPS, _training_arrays, best_split, class_counts, leaf_error, partition


class _PNode:
    __slots__ = ("counts", "children", "conditions", "expanded")

    def __init__(self, counts, conditions):
        self.counts = counts
        self.children = None  # None means leaf
        self.conditions = conditions
        self.expanded = True


def _branch_conditions(split, schema, n_children):
    if split.threshold is None:
        return [Condition(split.attr, "=", float(v)) for v in range(n_children)]
    return [Condition(split.attr, "<=", split.threshold),
            Condition(split.attr, ">", split.threshold)]


def _expand(X, y, w, schema, params, conditions):
    counts = class_counts(y, w, schema.n_classes)
    node = _PNode(counts, conditions)
    if counts.sum() <= _EPS or (counts > _EPS).sum() <= 1 or counts.sum() < 2 * params.min_leaf:
        return node
    split = best_split(X, y, w, schema.feature_indices, schema, params.min_leaf)
    if split is None:
        return node
    parts, _ = partition(X, w, split, schema)
    conds = _branch_conditions(split, schema, len(parts))
    subsets = []
    for (rows, cw), cond in zip(parts, conds):
        ent = entropy(class_counts(y[rows], cw, schema.n_classes))
        subsets.append((ent, rows, cw, cond))
    children = []
    for _, rows, cw, cond in sorted(subsets, key=lambda s: s[0]):
        if cw.sum() <= _EPS:
            continue
        child = _expand(X[rows], y[rows], cw, schema, params, conditions + [cond])
        children.append(child)
        if child.children is not None:
            break
    else:
        # every non-empty subset expanded to a leaf: try collapsing
        sub = sum(leaf_error(c.counts, params.confidence) for c in children)
        if leaf_error(counts, params.confidence) <= sub + 1e-9:
            return node
    node.children = children
    return node


def _best_leaf(node):
    best = None
    stack = [node]
    while stack:
        nd = stack.pop(0)
        if nd.children is None:
            if best is None or nd.counts.sum() > best.counts.sum() + 1e-12:
                best = nd
        else:
            stack.extend(nd.children)
    return best


def train_part(dataset, params=TrainParams()):
    schema = Schema.of(dataset)
    X_all, y_all, w_all = _training_arrays(dataset)
    remaining = np.ones(y_all.size, dtype=bool)
    rules = []
    while remaining.any():
        X, y, w = X_all[remaining], y_all[remaining], w_all[remaining]
        tree = _expand(X, y, w, schema, params, [])
        leaf = _best_leaf(tree)
        klass = int(np.argmax(leaf.counts))
        rule = Rule(leaf.conditions, klass)
        covered = rule.mask(X)
        if not rule.conditions or not covered.any():
            rules.append(Rule([], int(np.argmax(class_counts(y, w, schema.n_classes)))))
            break
        rules.append(rule)
        idx = np.flatnonzero(remaining)
        remaining[idx[covered]] = False
    if not rules or rules[-1].conditions:
        rules.append(Rule([], int(np.argmax(class_counts(y_all, w_all, schema.n_classes)))))
    assign_counts(rules, X_all, y_all, schema.n_classes)
    return RuleModel(schema, params, rules, "part")
