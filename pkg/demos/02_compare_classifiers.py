"""
Comparing the five classifiers
==============================

Cross-validates the tree, rule and Bayes learners on the default synthetic
dataset and prints the comparison table, then shows the learned rule list.

Run with ``python demos/02_compare_classifiers.py`` (about ten seconds).
"""

from kpidiag.evaluation import compare
from kpidiag.learners import render_model, train
from kpidiag.synth import GeneratorConfig, generate

ds = generate(GeneratorConfig(seed=7))

# stratified 10-fold cross-validation with one shared fold assignment
comparison = compare(["j48", "jrip", "part", "nb", "bayesnet"], ds, k=10, seed=7)
print(comparison.to_text())

# the labels are a deterministic function of four KPIs, so the rule learner
# recovers a compact rule set that ends in a WARN default
model = train("jrip", ds)
print(render_model(model))

# naive Bayes sees the same attributes but smooths across the band edges
print("\n".join(train("nb", ds).render().splitlines()[:14]))
