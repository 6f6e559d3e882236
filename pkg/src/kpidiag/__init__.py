"""Automated troubleshooting of mobile-network KPI data.

Modules
-------
kpi
    Severity bands and alarm labeling (severity-max and the fixed cascade).
data
    ``Dataset``, ARFF/CSV readers and writers, stratified folds.
synth
    Seeded generator of labeled cell-level KPI datasets.
learners
    C4.5-style tree, RIPPER, PART, naive Bayes and discretised Bayes nets.
evaluation
    Confusion-matrix and probabilistic metrics, cross-validation, comparison.
localization
    Count-table fault localization and NORM-gap explanations.
cli
    The ``kpidiag`` command.
"""

__version__ = "0.1.0"
