"""
Labeling KPI records and inspecting a synthetic dataset
=======================================================

Walks from raw driver KPI values to labeled alarm classes, then generates
the default synthetic cell dataset and looks at its class balance.

Run with ``python demos/01_label_and_inspect.py``.
"""

from collections import Counter

from kpidiag.data import write_arff
from kpidiag.kpi import TABLE1, DriverKpis, label_figure2, label_severity_max
from kpidiag.synth import GeneratorConfig, describe, generate

# each driver KPI falls into a NORM / CR / WARN band; the record label is the
# worst band over the four drivers
healthy = DriverKpis(dcr=1.2, cssr=99.1, tr=40.0, hof=4.0)
shaky = DriverKpis(dcr=2.8, cssr=99.0, tr=45.0, hof=6.0)
broken = DriverKpis(dcr=5.0, cssr=95.0, tr=50.0, hof=5.0)
for name, rec in (("healthy", healthy), ("shaky", shaky), ("broken", broken)):
    print(f"{name:8s} severity-max={label_severity_max(rec).name:4s} "
          f"figure2={label_figure2(rec).name}")

# the rule cascade only raises WARN when a call-quality fault and a
# handover/traffic fault coincide, so it can be milder than severity-max
print("DCR band edges:", TABLE1.dcr.cr, TABLE1.dcr.warn)

# the default generator: 2100 cells, priors 0.46 / 0.38 / 0.16
config = GeneratorConfig()
ds = generate(config)
print()
print(describe(config))
counts = Counter(ds.classes[c] for c in ds.y)
print("class counts:", {c: counts[c] for c in ("WARN", "CR", "NORM")})

# first lines of the ARFF rendering
print()
print("\n".join(write_arff(ds).splitlines()[:6]))
