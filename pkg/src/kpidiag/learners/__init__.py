"""Classifier families sharing one train / predict / render / save contract.

>>> from kpidiag.synth import generate, GeneratorConfig
>>> ds = generate(GeneratorConfig(n=300))
>>> model = train("j48", ds)
>>> label, probs = predict(model, ds.values[0])
"""

from __future__ import annotations

import json

import numpy as np

from ..errors import ModelError
from .base import ALGORITHMS, Model, Schema, TrainParams, canonical_algorithm
from .bayes import BayesNetModel, NaiveBayesModel, train_bayes_net, train_naive_bayes
from .part import train_part
from .ripper import train_ripper
from .rules import RuleModel
from .tree import TreeModel, train_tree

FORMAT_VERSION = 1

_TRAINERS = {"j48": train_tree, "jrip": train_ripper, "part": train_part,
             "nb": train_naive_bayes, "bayesnet": train_bayes_net}

__all__ = ["ALGORITHMS", "FORMAT_VERSION", "Model", "TrainParams", "canonical_algorithm",
           "train", "predict", "predict_dataset", "render_model", "save_model", "load_model",
           "dumps_model", "loads_model"]


def train(algorithm, dataset, params=None):
    """Fit ``algorithm`` (a name from ``ALGORITHMS`` or an alias) on ``dataset``."""
    key = canonical_algorithm(algorithm)
    return _TRAINERS[key](dataset, params if params is not None else TrainParams())


def predict(model, instance):
    """Class label and probability vector for one instance.

    ``instance`` is either a mapping of attribute name to decoded value
    (missing keys are missing values) or an encoded row in schema order.
    """
    row = model.schema.encode(instance)
    p = model.predict_proba(row[None, :])[0]
    return model.classes[int(np.argmax(p))], p


def predict_dataset(model, dataset):
    """(predicted class indices, probability matrix) for every row of ``dataset``."""
    X = model.schema.align(dataset)
    P = model.predict_proba(X)
    return np.argmax(P, axis=1), P


def render_model(model):
    return model.render()


def dumps_model(model):
    doc = {"algorithm": model.algorithm, "version": FORMAT_VERSION,
           "schema": model.schema.to_dict(), "schema_fingerprint": model.schema.fingerprint(),
           "params": model.params.to_dict(), "model": model.body()}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def loads_model(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"model artifact is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ModelError("model artifact must be a JSON object")
    missing = [k for k in ("algorithm", "version", "schema", "params", "model") if k not in doc]
    if missing:
        raise ModelError(f"model artifact lacks fields: {', '.join(missing)}")
    if doc["version"] != FORMAT_VERSION:
        raise ModelError(f"unsupported model version {doc['version']!r}; "
                         f"expected {FORMAT_VERSION}")
    algo = doc["algorithm"]
    if algo not in ALGORITHMS:
        raise ModelError(f"unknown algorithm {algo!r} in model artifact")
    try:
        schema = Schema.from_dict(doc["schema"])
        params = TrainParams(**doc["params"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model artifact: {exc}") from None
    if "schema_fingerprint" in doc and doc["schema_fingerprint"] != schema.fingerprint():
        raise ModelError("schema fingerprint does not match the stored schema")
    body = doc["model"]
    try:
        if algo == "j48":
            return TreeModel.from_body(schema, params, body)
        if algo in ("jrip", "part"):
            return RuleModel.from_body(schema, params, body, algo)
        if algo == "nb":
            return NaiveBayesModel.from_body(schema, params, body)
        return BayesNetModel.from_body(schema, params, body)
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelError(f"malformed {algo} model body: {exc}") from None


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_model(model))


def load_model(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ModelError(f"cannot read model {path}: {exc.strerror}") from None
    return loads_model(text)
