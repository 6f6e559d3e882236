"""Classifier evaluation: confusion matrices, scalar and per-class metrics,
stratified cross-validation and multi-learner comparison tables.

All metrics are computed from one pooled set of held-out predictions.
Per-class statistics are one-vs-rest; weighted averages weight each class
by its support in the truth. A statistic whose denominator is zero is
reported as 0 and its name is listed in the class's ``undefined`` field.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .data import stratified_folds
from .errors import UsageError
from .learners import TrainParams, canonical_algorithm, train

DISPLAY_NAMES = {"j48": "J48", "jrip": "JRip", "part": "PART", "nb": "NaiveBayes",
                 "bayesnet": "BayesNet"}
CLASS_METRICS = ("tp_rate", "fp_rate", "precision", "recall", "f_measure", "mcc",
                 "roc_area", "prc_area")


# ---------------------------------------------------------------------------
# confusion matrix


@dataclass
class ConfusionMatrix:
    """Counts indexed ``(actual, predicted)`` over ``classes``."""

    classes: tuple
    matrix: np.ndarray

    def __post_init__(self):
        self.classes = tuple(self.classes)
        self.matrix = np.asarray(self.matrix, dtype=np.int64)
        k = len(self.classes)
        if self.matrix.shape != (k, k):
            raise UsageError(f"confusion matrix must be {k}x{k}")
        if (self.matrix < 0).any():
            raise UsageError("confusion counts must be nonnegative")

    @property
    def total(self):
        return int(self.matrix.sum())

    @property
    def correct(self):
        return int(np.trace(self.matrix))

    @property
    def accuracy(self):
        if self.total == 0:
            raise UsageError("empty confusion matrix")
        return self.correct / self.total

    def to_dict(self):
        return {"classes": list(self.classes), "matrix": self.matrix.tolist()}

    def to_text(self):
        k = len(self.classes)
        letters = [chr(ord("a") + i) if i < 26 else f"c{i}" for i in range(k)]
        width = max(6, len(str(self.matrix.max() if self.matrix.size else 0)) + 1)
        lines = ["".join(f"{l:>{width}}" for l in letters) + "   <-- classified as"]
        for i in range(k):
            lines.append("".join(f"{v:>{width}}" for v in self.matrix[i])
                         + f" |{letters[i]:>{width - 2}} = {self.classes[i]}")
        return "\n".join(lines)


def _to_indices(seq, classes):
    out = []
    for v in seq:
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            if not 0 <= v < len(classes):
                raise UsageError(f"class index {v} out of range")
            out.append(int(v))
        else:
            try:
                out.append(classes.index(v))
            except ValueError:
                raise UsageError(f"unknown class {v!r}") from None
    return np.asarray(out, dtype=int)


def confusion(truth, predicted, classes=None):
    """Confusion matrix of two equally long class sequences.

    Entries may be class labels or indices into ``classes``. Without
    ``classes`` the labels are taken in order of first appearance in
    ``truth`` and then ``predicted``.
    """
    truth, predicted = list(truth), list(predicted)
    if len(truth) != len(predicted):
        raise UsageError(f"length mismatch: {len(truth)} truths, {len(predicted)} predictions")
    if not truth:
        raise UsageError("need at least one prediction")
    if classes is None:
        classes = list(dict.fromkeys(truth + predicted))
    classes = tuple(classes)
    t = _to_indices(truth, list(classes))
    p = _to_indices(predicted, list(classes))
    m = np.zeros((len(classes), len(classes)), dtype=np.int64)
    np.add.at(m, (t, p), 1)
    return ConfusionMatrix(classes, m)


def kappa(cm, with_flag=False):
    """Cohen's kappa; when chance agreement is 1 the value is 0 and degenerate.

    Returns the value, or ``(value, degenerate)`` when ``with_flag``.
    """
    m = cm.matrix if isinstance(cm, ConfusionMatrix) else np.asarray(cm)
    n = m.sum()
    if n <= 0:
        raise UsageError("kappa of an empty confusion matrix")
    # (n*agree - chance) / (n^2 - chance) on raw counts; exact for integer matrices
    if np.issubdtype(m.dtype, np.integer):
        n, agree = int(n), int(np.trace(m))
        chance = sum(int(r) * int(c) for r, c in zip(m.sum(axis=1), m.sum(axis=0)))
    else:
        agree = float(np.trace(m))
        chance = float((m.sum(axis=0) * m.sum(axis=1)).sum())
    if chance >= n * n:
        return (0.0, True) if with_flag else 0.0
    k = float((n * agree - chance) / (n * n - chance))
    return (k, False) if with_flag else k


def mae_rmse(prob_vectors, truth):
    """Mean absolute and root mean squared error of probability vectors.

    Per instance the error vector is ``onehot(truth) - p``; both errors
    average its absolute (squared) entries over classes and instances.
    """
    P = np.asarray(prob_vectors, dtype=float)
    t = np.asarray(truth, dtype=int)
    if P.ndim != 2 or P.shape[0] != t.size or P.shape[0] == 0:
        raise UsageError("need one probability vector per truth value")
    if (P < -1e-12).any() or np.abs(P.sum(axis=1) - 1.0).max() > 1e-6:
        raise UsageError("probability vectors must be nonnegative and sum to 1")
    if t.min() < 0 or t.max() >= P.shape[1]:
        raise UsageError("truth index out of range")
    E = -P.copy()
    E[np.arange(t.size), t] += 1.0
    k = P.shape[1]
    mae = float(np.abs(E).sum(axis=1).mean() / k)
    rmse = float(math.sqrt((E * E).sum(axis=1).mean() / k))
    return mae, rmse


# ---------------------------------------------------------------------------
# ranking metrics


def roc_area(scores, positive):
    """Area under the ROC curve via the Mann-Whitney statistic with midranks.

    Returns None when either group is empty.
    """
    s = np.asarray(scores, dtype=float)
    pos = np.asarray(positive, dtype=bool)
    n_pos = int(pos.sum())
    n_neg = pos.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def pr_curve(scores, positive):
    """(recall, precision) points at each distinct threshold, best score first.

    The curve starts at recall 0 with the precision of the first threshold.
    """
    s = np.asarray(scores, dtype=float)
    pos = np.asarray(positive, dtype=bool)
    n_pos = int(pos.sum())
    if n_pos == 0:
        return None
    order = np.argsort(-s, kind="stable")
    s, pos = s[order], pos[order]
    tp = np.cumsum(pos)
    fp = np.cumsum(~pos)
    last = np.r_[np.flatnonzero(s[:-1] != s[1:]), s.size - 1]
    recall = tp[last] / n_pos
    precision = tp[last] / (tp[last] + fp[last])
    return np.r_[0.0, recall], np.r_[precision[0], precision]


def prc_area(scores, positive):
    """Trapezoid area under the precision-recall curve (None without positives)."""
    curve = pr_curve(scores, positive)
    if curve is None:
        return None
    r, p = curve
    return float(np.sum((r[1:] - r[:-1]) * (p[1:] + p[:-1]) / 2.0))


# ---------------------------------------------------------------------------
# per-class statistics


@dataclass
class ClassStats:
    label: str
    support: int
    tp_rate: float = 0.0
    fp_rate: float = 0.0
    precision: float = 0.0
    recall: float = 0.0
    f_measure: float = 0.0
    mcc: float = 0.0
    roc_area: float = 0.0
    prc_area: float = 0.0
    undefined: list = field(default_factory=list)

    @property
    def defined(self):
        return self.support > 0

    def to_dict(self):
        return asdict(self)


def _ratio(num, den, name, undefined):
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def class_stats(cm, prob_vectors, truth, c):
    """One-vs-rest statistics of class index ``c``."""
    m = cm.matrix
    n = m.sum()
    tp = int(m[c, c])
    fn = int(m[c].sum() - tp)
    fp = int(m[:, c].sum() - tp)
    tn = int(n - tp - fn - fp)
    st = ClassStats(cm.classes[c], tp + fn)
    und = st.undefined
    if st.support == 0:
        und.append("class absent")
    st.tp_rate = st.recall = _ratio(tp, tp + fn, "recall", und)
    st.fp_rate = _ratio(fp, fp + tn, "fp_rate", und)
    st.precision = _ratio(tp, tp + fp, "precision", und)
    if st.precision + st.recall > 0:
        st.f_measure = 2 * st.precision * st.recall / (st.precision + st.recall)
    else:
        und.append("f_measure")
    marg = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if marg == 0:
        und.append("mcc")
    else:
        st.mcc = (tp * tn - fp * fn) / math.sqrt(marg)
    P = np.asarray(prob_vectors, dtype=float)
    positive = np.asarray(truth) == c
    roc = roc_area(P[:, c], positive)
    prc = prc_area(P[:, c], positive)
    if roc is None:
        und.append("roc_area")
    else:
        st.roc_area = roc
    if prc is None:
        und.append("prc_area")
    else:
        st.prc_area = prc
    return st


def weighted_average(stats):
    """Support-weighted mean of every metric over classes present in the truth."""
    present = [s for s in stats if s.defined]
    total = sum(s.support for s in present)
    if total == 0:
        return {m: 0.0 for m in CLASS_METRICS}
    return {m: sum(getattr(s, m) * s.support for s in present) / total for m in CLASS_METRICS}


def per_class_stats(cm, prob_vectors, truth):
    """(list of ClassStats in class order, weighted-average dict)."""
    truth = np.asarray(truth, dtype=int)
    stats = [class_stats(cm, prob_vectors, truth, c) for c in range(len(cm.classes))]
    return stats, weighted_average(stats)


# ---------------------------------------------------------------------------
# reports


@dataclass
class EvalReport:
    algorithm: str
    confusion: ConfusionMatrix
    kappa: float
    kappa_degenerate: bool
    mae: float
    rmse: float
    per_class: list
    weighted: dict
    folds: list = field(default_factory=list)
    k: int = 0
    seed: int = 0
    params: dict = field(default_factory=dict)
    seconds: float = 0.0  # wall clock; informational, left out of to_dict

    @property
    def n(self):
        return self.confusion.total

    @property
    def correct(self):
        return self.confusion.correct

    @property
    def incorrect(self):
        return self.n - self.correct

    @property
    def accuracy(self):
        return self.confusion.accuracy

    def to_dict(self, include_timing=False):
        d = {"algorithm": self.algorithm, "k": self.k, "seed": self.seed, "params": self.params,
             "instances": self.n, "correct": self.correct, "incorrect": self.incorrect,
             "accuracy": self.accuracy, "kappa": self.kappa,
             "kappa_degenerate": self.kappa_degenerate, "mae": self.mae, "rmse": self.rmse,
             "confusion": self.confusion.to_dict(),
             "per_class": [s.to_dict() for s in self.per_class],
             "weighted": dict(self.weighted), "folds": list(self.folds)}
        if include_timing:
            d["seconds"] = self.seconds
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(algorithm=d["algorithm"],
                   confusion=ConfusionMatrix(d["confusion"]["classes"], d["confusion"]["matrix"]),
                   kappa=d["kappa"], kappa_degenerate=d["kappa_degenerate"], mae=d["mae"],
                   rmse=d["rmse"], per_class=[ClassStats(**s) for s in d["per_class"]],
                   weighted=dict(d["weighted"]), folds=list(d["folds"]), k=d["k"],
                   seed=d["seed"], params=dict(d["params"]), seconds=d.get("seconds", 0.0))

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def to_text(self):
        name = DISPLAY_NAMES.get(self.algorithm, self.algorithm)
        lines = [f"=== {name}: stratified {self.k}-fold cross-validation (seed {self.seed}) ===",
                 "",
                 f"Correctly Classified Instances    {self.correct:>8}  {100 * self.accuracy:9.4f} %",
                 f"Incorrectly Classified Instances  {self.incorrect:>8}  "
                 f"{100 * self.incorrect / self.n:9.4f} %",
                 f"Kappa statistic                   {self.kappa:>8.4f}"
                 + ("  (degenerate)" if self.kappa_degenerate else ""),
                 f"Mean absolute error               {self.mae:>8.4f}",
                 f"Root mean squared error           {self.rmse:>8.4f}",
                 f"Total Number of Instances         {self.n:>8}",
                 "",
                 "=== Detailed Accuracy By Class ===",
                 "",
                 _class_header()]
        for s in self.per_class:
            lines.append(_class_row(s.to_dict(), s.label))
        lines.append(_class_row(self.weighted, "Weighted Avg."))
        lines += ["", "=== Confusion Matrix ===", "", self.confusion.to_text(), ""]
        return "\n".join(lines)


def _class_header():
    return ("".join(f"{h:>10}" for h in ("TP Rate", "FP Rate", "Precision", "Recall",
                                          "F-Measure", "MCC", "ROC Area", "PRC Area"))
            + "  Class")


def _class_row(values, label):
    return "".join(f"{values[m]:>10.3f}" for m in CLASS_METRICS) + f"  {label}"


def evaluate_predictions(algorithm, classes, truth, prob_vectors, **extra):
    """EvalReport from pooled truth indices and probability vectors."""
    P = np.asarray(prob_vectors, dtype=float)
    truth = np.asarray(truth, dtype=int)
    pred = np.argmax(P, axis=1)
    cm = confusion(truth.tolist(), pred.tolist(), classes)
    kv, degenerate = kappa(cm, with_flag=True)
    mae, rmse = mae_rmse(P, truth)
    stats, weighted = per_class_stats(cm, P, truth)
    return EvalReport(algorithm, cm, kv, degenerate, mae, rmse, stats, weighted, **extra)


def cross_validate(algorithm, dataset, params=None, k=10, seed=7):
    """Stratified k-fold cross-validation with pooled held-out metrics.

    Instances with a missing class are left out before folding.
    """
    algorithm = canonical_algorithm(algorithm)
    params = params if params is not None else TrainParams()
    if dataset.class_index is None:
        raise UsageError("dataset has no class attribute")
    labeled = np.flatnonzero(dataset.y >= 0)
    data = dataset.subset(labeled) if labeled.size < dataset.n_instances else dataset
    folds = stratified_folds(data, k, seed)
    n_classes = len(data.classes)
    P = np.zeros((data.n_instances, n_classes))
    fold_rows = []
    start = time.perf_counter()
    for i, test in enumerate(folds):
        mask = np.zeros(data.n_instances, dtype=bool)
        mask[test] = True
        model = train(algorithm, data.subset(np.flatnonzero(~mask)), params)
        P[test] = model.predict_proba(data.values[test])
        pred = np.argmax(P[test], axis=1)
        correct = int((pred == data.y[test]).sum())
        fold_rows.append({"fold": i, "instances": len(test), "correct": correct,
                          "accuracy": correct / len(test) if test else 0.0})
    seconds = time.perf_counter() - start
    return evaluate_predictions(algorithm, data.classes, data.y, P, folds=fold_rows, k=k,
                                seed=seed, params=params.to_dict(), seconds=seconds)


# ---------------------------------------------------------------------------
# comparison


@dataclass
class Comparison:
    reports: list

    def to_dict(self, include_timing=False):
        return {"algorithms": [r.algorithm for r in self.reports],
                "reports": [r.to_dict(include_timing) for r in self.reports]}

    @classmethod
    def from_dict(cls, d):
        return cls([EvalReport.from_dict(r) for r in d["reports"]])

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1) + "\n"

    def to_text(self):
        names = [DISPLAY_NAMES.get(r.algorithm, r.algorithm) for r in self.reports]
        w = max([16] + [len(n) + 2 for n in names])
        lines = ["Performance measure results", "",
                 f"{'Classifier':<{w}}{'Correctly classified':>22}{'Incorrectly classified':>24}"
                 f"{'Kappa statistics':>18}"]
        for n, r in zip(names, self.reports):
            lines.append(f"{n:<{w}}{r.correct:>22}{r.incorrect:>24}{r.kappa:>18.4f}")
        lines += ["", f"{'Classifier':<{w}}{'Mean absolute error':>21}"
                      f"{'Root mean squared error':>25}{'Accuracy':>11}"]
        for n, r in zip(names, self.reports):
            lines.append(f"{n:<{w}}{r.mae:>21.4f}{r.rmse:>25.4f}{100 * r.accuracy:>10.2f}%")
        lines += ["", "Comparison of final statistics (weighted average)", "",
                  f"{'Classifier':<{w}}" + _class_header()[:-7]]
        for n, r in zip(names, self.reports):
            lines.append(f"{n:<{w}}" + "".join(f"{r.weighted[m]:>10.3f}" for m in CLASS_METRICS))
        return "\n".join(lines) + "\n"


def compare(algorithms, dataset, params=None, k=10, seed=7):
    """Cross-validate each algorithm in the given order."""
    algos = [canonical_algorithm(a) for a in algorithms]
    if not algos:
        raise UsageError("no algorithms to compare")
    return Comparison([cross_validate(a, dataset, params, k, seed) for a in algos])
