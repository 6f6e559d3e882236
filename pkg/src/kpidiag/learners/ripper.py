"""RIPPER ordered rule learner.

Classes are handled from least to most frequent; the most frequent one is
left to the default rule. For each class the positives are that class and
the negatives every instance still undecided. Rules are grown with FOIL
gain, pruned on a held-out third by ``(p - n) / (p + n)``, and added until
the ruleset's description length passes the best seen by more than 64 bits
or a rule errs on more than half of its prune coverage. Optimisation passes
then try a replacement and a revision for each rule and keep whichever
variant gives the shortest description length.

Description length is ``0.5 * theory bits + exception bits`` where a rule
of ``k`` conditions costs ``log2 k (+ 2 log2 log2 k) + S(t, k, k/t)`` over
a universe of ``t`` possible conditions, and exceptions cost
``log2(|D| + 1) + log2 C(cover, fp) + log2 C(uncover, fn)``.
"""

from __future__ import annotations

import math

import numpy as np

from ..rng import SplitMix64
from .base import Schema, TrainParams, log2_binom, nice_threshold
from .rules import Condition, Rule, RuleModel, assign_counts
from .tree import _training_arrays

DL_SLACK = 64.0
THEORY_WEIGHT = 0.5


def foil_gain(p, n, P, N):
    """FOIL information gain of a refinement covering ``p``/``n`` of ``P``/``N``."""
    if p <= 0:
        return 0.0
    return p * (math.log2(p / (p + n)) - math.log2(P / (P + N)))


def _conds_mask(conds, X):
    m = np.ones(X.shape[0], dtype=bool)
    for c in conds:
        m &= c.mask(X)
    return m


def best_condition(X, pos, schema, min_cover=1):
    """The single condition with the largest FOIL gain on rows ``X``.

    Ties go to the lowest attribute index, then ``<=`` before ``>``, then the
    smallest threshold. Returns ``(condition, gain)`` or ``None``.
    """
    P = float(pos.sum())
    N = float(pos.size - P)
    if P == 0:
        return None
    base = math.log2(P / (P + N))
    best, best_gain = None, 1e-12
    for a in schema.feature_indices:
        attr = schema.attributes[a]
        x = X[:, a]
        known = ~np.isnan(x)
        if not known.any():
            continue
        xk, pk = x[known], pos[known]
        if attr.is_nominal:
            vals = xk.astype(int)
            p = np.bincount(vals, weights=pk, minlength=len(attr.domain))
            t = np.bincount(vals, minlength=len(attr.domain)).astype(float)
            cands = [("=", float(v), p[v], t[v]) for v in range(len(attr.domain))]
            ps, ts = p, t
            ops = None
        else:
            order = np.argsort(xk, kind="stable")
            xs, ps_sorted = xk[order], pk[order].astype(float)
            cp = np.cumsum(ps_sorted)[:-1]
            ct = np.arange(1, xs.size, dtype=float)
            boundary = xs[:-1] < xs[1:]
            if not boundary.any():
                continue
            Pk, Tk = ps_sorted.sum(), float(xs.size)
            idx = np.flatnonzero(boundary)
            ps = np.concatenate([cp[idx], Pk - cp[idx]])
            ts = np.concatenate([ct[idx], Tk - ct[idx]])
            ops = idx
        with np.errstate(divide="ignore", invalid="ignore"):
            gains = np.where((ps > 0) & (ts >= min_cover),
                             ps * (np.log2(ps / np.maximum(ts, 1e-300)) - base), -np.inf)
        if gains.size == 0:
            continue
        i = int(np.argmax(gains))
        if gains[i] > best_gain:
            best_gain = float(gains[i])
            if attr.is_nominal:
                best = Condition(a, "=", cands[i][1])
            else:
                k = i % ops.size
                thr = nice_threshold(xs[ops[k]], xs[ops[k] + 1])
                best = Condition(a, "<=" if i < ops.size else ">", thr)
    return None if best is None else (best, best_gain)


def grow_rule(X, pos, schema, conds=(), min_cover=1):
    """Add FOIL-best conditions until no negatives are covered."""
    conds = list(conds)
    cov = _conds_mask(conds, X)
    while True:
        p = pos[cov].sum()
        if p == 0 or p == cov.sum():
            return conds
        found = best_condition(X[cov], pos[cov], schema, min_cover)
        if found is None:
            return conds
        cond = found[0]
        conds.append(cond)
        cov &= cond.mask(X)


def prune_worth(conds, X, pos):
    m = _conds_mask(conds, X)
    p = float(pos[m].sum())
    n = float(m.sum() - p)
    return (p - n) / (p + n) if p + n > 0 else 0.0


def prune_rule(conds, X, pos):
    """Keep the prefix with the best ``(p - n) / (p + n)``; ties keep more conditions."""
    if len(conds) <= 1:
        return list(conds)
    best_len, best_v = len(conds), prune_worth(conds, X, pos)
    for k in range(len(conds) - 1, 0, -1):
        v = prune_worth(conds[:k], X, pos)
        if v > best_v + 1e-12:
            best_len, best_v = k, v
    return list(conds[:best_len])


def _subset_dl(t, k, p):
    bits = 0.0
    if k > 0 and p > 0:
        bits -= k * math.log2(p)
    if t - k > 0 and p < 1:
        bits -= (t - k) * math.log2(1 - p)
    return bits


def theory_dl(n_conditions, n_possible):
    k = n_conditions
    if k == 0:
        return 0.0
    bits = math.log2(k)
    if k > 1:
        bits += 2.0 * math.log2(bits)
    t = max(float(n_possible), float(k))
    return THEORY_WEIGHT * (bits + _subset_dl(t, k, k / t))


def exception_dl(cover, uncover, fp, fn):
    return math.log2(cover + uncover + 1) + log2_binom(cover, fp) + log2_binom(uncover, fn)


def ruleset_dl(ruleset, X, pos, n_possible):
    covered = np.zeros(X.shape[0], dtype=bool)
    theory = 0.0
    for conds in ruleset:
        covered |= _conds_mask(conds, X)
        theory += theory_dl(len(conds), n_possible)
    cover = int(covered.sum())
    fp = int((covered & ~pos).sum())
    fn = int((~covered & pos).sum())
    return theory + exception_dl(cover, X.shape[0] - cover, fp, fn)


def possible_conditions(X, schema):
    total = 0
    for a in schema.feature_indices:
        attr = schema.attributes[a]
        if attr.is_nominal:
            total += len(attr.domain)
        else:
            x = X[:, a]
            total += 2 * np.unique(x[~np.isnan(x)]).size
    return max(total, 1)


def _split(idx, pos, rng, ratio):
    """Stratified grow/prune split of row indices ``idx``."""
    grow, prune = [], []
    frac = ratio / (ratio + 1.0)
    for group in (idx[pos[idx]], idx[~pos[idx]]):
        g = rng.shuffle([int(i) for i in group])
        cut = int(len(g) * frac + 0.5)
        if g and cut == 0:
            cut = 1
        grow += g[:cut]
        prune += g[cut:]
    return np.array(sorted(grow), dtype=int), np.array(sorted(prune), dtype=int)


class _ClassLearner:
    def __init__(self, X, pos, schema, params, n_possible, rng):
        self.X, self.pos, self.schema = X, pos, schema
        self.params, self.n_possible, self.rng = params, n_possible, rng
        self.min_cover = 1

    def dl(self, ruleset):
        return ruleset_dl(ruleset, self.X, self.pos, self.n_possible)

    def covered(self, ruleset):
        m = np.zeros(self.X.shape[0], dtype=bool)
        for conds in ruleset:
            m |= _conds_mask(conds, self.X)
        return m

    def grow_and_prune(self, idx, start=()):
        g, p = _split(idx, self.pos, self.rng, self.params.grow_ratio)
        if g.size == 0:
            return None, g, p
        conds = grow_rule(self.X[g], self.pos[g], self.schema, start, self.min_cover)
        if p.size:
            conds = prune_rule(conds, self.X[p], self.pos[p])
        return conds, g, p

    def irep(self, ruleset, dl_min):
        ruleset = list(ruleset)
        remaining = ~self.covered(ruleset)
        while self.pos[remaining].any():
            conds, g, p = self.grow_and_prune(np.flatnonzero(remaining))
            if not conds:
                break
            rows = p if p.size and _conds_mask(conds, self.X[p]).any() else g
            m = _conds_mask(conds, self.X[rows])
            err = float((m & ~self.pos[rows]).sum()) / max(int(m.sum()), 1)
            if err > 0.5:
                break
            candidate = ruleset + [conds]
            dl = self.dl(candidate)
            if dl > dl_min + DL_SLACK:
                break
            newly = _conds_mask(conds, self.X) & remaining
            if not (newly & self.pos).any():
                break
            ruleset = candidate
            dl_min = min(dl_min, dl)
            remaining &= ~newly
        return ruleset, dl_min

    def optimise(self, ruleset):
        ruleset = list(ruleset)
        for i in range(len(ruleset)):
            before = self.covered(ruleset[:i])
            idx = np.flatnonzero(~before)
            replacement, _, _ = self.grow_and_prune(idx)
            revision, _, _ = self.grow_and_prune(idx, ruleset[i])
            options = [ruleset[i]] + [o for o in (replacement, revision) if o]
            dls = [self.dl(ruleset[:i] + [o] + ruleset[i + 1:]) for o in options]
            ruleset[i] = options[int(np.argmin(dls))]
        return ruleset

    def reduce(self, ruleset):
        ruleset = list(ruleset)
        for i in range(len(ruleset) - 1, -1, -1):
            without = ruleset[:i] + ruleset[i + 1:]
            if self.dl(without) < self.dl(ruleset) - 1e-9:
                ruleset = without
        return ruleset

    def learn(self):
        ruleset, dl_min = self.irep([], self.dl([]))
        for _ in range(self.params.optimizations):
            ruleset = self.optimise(ruleset)
            ruleset, _ = self.irep(ruleset, min(dl_min, self.dl(ruleset)))
        return self.reduce(ruleset)


def class_order(y, n_classes):
    """Classes present in ``y`` from least to most frequent (ties by index)."""
    counts = np.bincount(y, minlength=n_classes)
    return sorted((c for c in range(n_classes) if counts[c] > 0), key=lambda c: (counts[c], c))


def train_ripper(dataset, params=TrainParams()):
    schema = Schema.of(dataset)
    X, y, _ = _training_arrays(dataset)
    rng = SplitMix64(params.seed)
    order = class_order(y, schema.n_classes)
    n_possible = possible_conditions(X, schema)
    undecided = np.ones(y.size, dtype=bool)
    rules = []
    for c in order[:-1]:
        Xd = X[undecided]
        pos = y[undecided] == c
        learner = _ClassLearner(Xd, pos, schema, params, n_possible, rng)
        ruleset = learner.learn()
        new_rules = [Rule(conds, c) for conds in ruleset]
        rules += new_rules
        covered = np.zeros(y.size, dtype=bool)
        for r in new_rules:
            covered |= r.mask(X)
        undecided &= ~covered
    rules.append(Rule([], order[-1]))
    assign_counts(rules, X, y, schema.n_classes)
    return RuleModel(schema, params, rules, "jrip")
