"""
Where are the faults, and what would make a cell normal?
========================================================

Builds per-BSC and per-period count tables, ranks locations by the posterior
probability of a non-normal alarm, and asks a rule model which condition
changes would turn one alarmed cell back to NORM.

Run with ``python demos/03_localize_and_explain.py``.
"""

import numpy as np

from kpidiag.learners import train
from kpidiag.localization import apply_fixes, localize, norm_gap, render_gaps, \
    render_localization
from kpidiag.synth import GeneratorConfig, generate

ds = generate(GeneratorConfig(seed=7))

# the generator skews a couple of BSCs toward faults; they should rank high
report = localize(ds, ["BSC"])
print(render_localization(report))

# pick the first cell the rule model calls WARN and explain it
model = train("jrip", ds)
X = ds.values.copy()
X[:, ds.class_index] = np.nan
pred = model.predict_indices(X)
row = int(np.flatnonzero(pred == model.classes.index("WARN"))[0])
gaps = norm_gap(X[row], model)
print(f"row {row + 1} is predicted WARN; closest NORM rules:")
print(render_gaps(gaps, model, X[row]))

# applying the cheapest fix really does flip the prediction
fixed = apply_fixes(X[row], gaps[0], model.schema)
print("after fixes:", model.classes[model.predict_indices(fixed[None, :])[0]])
