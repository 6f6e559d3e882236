"""Seeded generator of cell-level KPI datasets.

Every row is built in four steps:

1. a target alarm class is drawn (class counts are the largest-remainder
   rounding of ``n * priors``, rows shuffled);
2. the four driver KPIs are sampled inside the bands that make the
   severity-max label equal the target class, by default from narrow strips
   next to a band boundary (``boundary_jitter``), so the noisy companions
   of a driver often look like the neighbouring class;
3. companion KPIs are computed as noisy linear functions of a driver, and
   nuisance KPIs are drawn independently;
4. the day and BSC are drawn from rosters, fault rows favouring a few
   designated hot spots.

All ranges and formulas live in the module-level tables below and are
echoed verbatim by :func:`describe`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import CLASS_NAME, NOMINAL, NUMERIC, Attribute, Dataset
from .errors import UsageError
from .kpi import CLASS_DOMAIN, DEFAULT_MAPPING, DRIVERS, AlarmClass
from .rng import SplitMix64

BSC_ROSTER = ("BSC2", "BSC5", "BSC411", "BSC1", "BSC21", "BSC25", "BSC55", "BSC18",
              "BSC05", "BSC11", "BSC19", "BSC10", "BSC293")
DATE_RANGE = tuple(f"{d:02d}/06/2014" for d in range(13, 27))
HOT_BSCS = ("BSC21", "BSC11")
HOT_DAYS = ("16/06/2014", "20/06/2014")
HOT_BSC_WEIGHT = 3.0
HOT_DAY_WEIGHT = 2.0

# Driver sampling grid, in hundredths, inclusive: {driver: {state: (lo, hi)}}.
# Each range sits inside the matching default threshold band.
DRIVER_RANGES = {
    "DCR": {AlarmClass.NORM: (0, 199), AlarmClass.CR: (200, 399), AlarmClass.WARN: (400, 1200)},
    "CSSR": {AlarmClass.NORM: (9800, 10000), AlarmClass.CR: (9000, 9799),
             AlarmClass.WARN: (7000, 8999)},
    "TR": {AlarmClass.NORM: (2000, 5999), AlarmClass.CR: (6000, 6999),
           AlarmClass.WARN: (7000, 9500)},
    "HOF": {AlarmClass.NORM: (0, 999), AlarmClass.CR: (1000, 1499),
            AlarmClass.WARN: (1500, 3500)},
}

# Boundary jitter: with probability ``boundary_jitter`` a driver is drawn from a
# strip of this width (hundredths) at one of its range's ends that touches a
# neighbouring band, so companions of near-threshold drivers look like the
# neighbouring class.
EDGE_WIDTH = {"DCR": 10, "CSSR": 40, "TR": 60, "HOF": 40}


def _edge_strips(kpi, state):
    lo, hi = DRIVER_RANGES[kpi][state]
    others = [r for s, r in DRIVER_RANGES[kpi].items() if s != state]
    w = EDGE_WIDTH[kpi] - 1
    strips = []
    if any(o_hi + 1 == lo for _, o_hi in others):
        strips.append((lo, min(lo + w, hi)))
    if any(o_lo - 1 == hi for o_lo, _ in others):
        strips.append((max(hi - w, lo), hi))
    return strips


# Companion attributes: value = intercept + slope * driver + noise * scale * z,
# z standard normal, clipped to [lo, hi], rounded to 2 decimals.
COMPANIONS = (
    # name, driver, intercept, slope, scale, lo, hi
    ("SDCCHCR", "CSSR", 50.0, -0.5, 1.5, 0.0, 100.0),
    ("TCHAccessRate", "CSSR", 0.0, 1.0, 2.0, 0.0, 100.0),
    ("TCHDrop", "DCR", 0.0, 1.5, 0.8, 0.0, math.inf),
    ("TCHCR", "TR", 0.0, 0.1, 1.0, 0.0, 100.0),
    ("HandoverSuccess", "HOF", 100.0, -1.0, 3.0, 0.0, 100.0),
    ("SDCCHDR", "DCR", 0.0, 40.0, 25.0, 0.0, math.inf),
    ("SDCCHDropSuddLostCon", "DCR", 0.0, 0.6, 0.4, 0.0, math.inf),
    ("TCHAssignmentFailureRate", "CSSR", 80.0, -0.8, 1.5, 0.0, 100.0),
    ("TCHCongestionRate", "TR", 0.0, 1.0 / 12.0, 0.8, 0.0, 100.0),
    ("SDCCHDrops", "DCR", 0.0, 3.0, 2.0, 0.0, math.inf),
    ("HOSR", "HOF", 100.0, -1.0, 2.0, 0.0, 100.0),
)

# Nuisance attributes drawn independently of the class: name -> (lo, hi, integer?)
NUISANCE = {
    "Id": (1000, 9999, True),
    "TCHSeizureAttempts": (5.0, 500.0, False),
    "TCHAvailability": (88.0, 100.0, False),
    "SDCCHDropsExcessiveTA": (0, 50, True),
    "RAN": (85.0, 100.0, False),
    "RAB": (0.0, 100.0, False),
    "SDCCHAavailabilityRate": (90.0, 100.0, False),
}

# HF = round(HOFR * TCHSeizureAttempts / 10 * (1 + 0.1 * noise * z)), floored at 0.
HF_RULE = "HF = round(HOFR * TCHSeizureAttempts / 10 * (1 + 0.1 * noise * z)), >= 0"

# Column order: the published header list with RAB inserted after RAN.
ATTRIBUTE_ORDER = (
    "Period", "BSC", "Id", "SDCCHCR", "TCHSeizureAttempts", "TCHAccessRate",
    "TCHAvailability", "TCHDrop", "TCHCR", "TCHTR", "HandoverSuccess",
    "SDCCHDropsExcessiveTA", "RAN", "RAB", "SDCCHDR", "SDCCHAavailabilityRate", "HF",
    "SDCCHDropSuddLostCon", "TCHAssignmentFailureRate", "TCHDropRate",
    "TCHCongestionRate", "HOFR", "TCHSS", "SDCCHDrops", "HOSR",
)
DRIVER_ATTRS = dict(zip(DRIVERS, DEFAULT_MAPPING.as_tuple()))

# In WARN rows, probability that a driver outside the warning subset is Critical.
WARN_REST_CR = 0.5

PRIOR_ORDER = (AlarmClass.WARN, AlarmClass.CR, AlarmClass.NORM)


@dataclass(frozen=True)
class GeneratorConfig:
    n: int = 2100
    seed: int = 7
    priors: tuple = (0.46, 0.38, 0.16)  # WARN, CR, NORM
    companion_noise: float = 0.5
    boundary_jitter: float = 1.0
    bsc_roster: tuple = BSC_ROSTER
    date_range: tuple = DATE_RANGE
    relation: str = "kpi_alarms"
    hot_bscs: tuple = field(default=HOT_BSCS)

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise UsageError("n must be a positive integer")
        if len(self.priors) != 3 or any(p < 0 or not math.isfinite(p) for p in self.priors):
            raise UsageError("priors must be three nonnegative numbers (WARN, CR, NORM)")
        if abs(sum(self.priors) - 1.0) > 1e-9:
            raise UsageError(f"priors must sum to 1, got {sum(self.priors)!r}")
        if not math.isfinite(self.companion_noise) or self.companion_noise < 0:
            raise UsageError("companion_noise must be >= 0")
        if not 0.0 <= self.boundary_jitter <= 1.0:
            raise UsageError("boundary_jitter must be in [0, 1]")
        if not self.bsc_roster or len(set(self.bsc_roster)) != len(self.bsc_roster):
            raise UsageError("bsc_roster must be non-empty and duplicate-free")
        if not self.date_range or len(set(self.date_range)) != len(self.date_range):
            raise UsageError("date_range must be non-empty and duplicate-free")


def largest_remainder(n, weights):
    """Integer counts summing to ``n`` proportional to ``weights``."""
    quotas = [n * w for w in weights]
    counts = [math.floor(q + 1e-9) for q in quotas]
    remainders = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in remainders[: n - sum(counts)]:
        counts[i] += 1
    return counts


def class_counts(config):
    """{AlarmClass: count} for ``config``."""
    return dict(zip(PRIOR_ORDER, largest_remainder(config.n, config.priors)))


def _grid(rng, lo, hi):
    return (lo + rng.below(hi - lo + 1)) / 100.0


def _nonempty_subset(rng, k=4):
    mask = 1 + rng.below((1 << k) - 1)
    return [bool(mask >> i & 1) for i in range(k)]


def _driver_states(rng, target):
    if target == AlarmClass.NORM:
        return [AlarmClass.NORM] * 4
    picked = _nonempty_subset(rng)
    if target == AlarmClass.CR:
        return [AlarmClass.CR if p else AlarmClass.NORM for p in picked]
    return [AlarmClass.WARN if p else
            (AlarmClass.CR if rng.random() < WARN_REST_CR else AlarmClass.NORM)
            for p in picked]


def _weighted(rng, items, weights):
    total = sum(weights)
    u = rng.random() * total
    acc = 0.0
    for item, w in zip(items, weights):
        acc += w
        if u < acc:
            return item
    return items[-1]


def _q(v, digits=2):
    return float(format(round(v, digits), ".6g"))


def schema(config=GeneratorConfig()):
    attrs = []
    for name in ATTRIBUTE_ORDER:
        if name == "Period":
            attrs.append(Attribute(name, NOMINAL, tuple(config.date_range)))
        elif name == "BSC":
            attrs.append(Attribute(name, NOMINAL, tuple(config.bsc_roster)))
        else:
            attrs.append(Attribute(name, NUMERIC))
    attrs.append(Attribute(CLASS_NAME, NOMINAL, CLASS_DOMAIN))
    return attrs


def generate(config=GeneratorConfig()):
    """Generate a labeled dataset; deterministic in ``config``."""
    rng = SplitMix64(config.seed)
    targets = []
    for cls, count in class_counts(config).items():
        targets += [cls] * count
    rng.shuffle(targets)

    bsc_fault_w = [HOT_BSC_WEIGHT if b in config.hot_bscs else 1.0 for b in config.bsc_roster]
    day_fault_w = [HOT_DAY_WEIGHT if d in HOT_DAYS else 1.0 for d in config.date_range]
    flat_bsc = [1.0] * len(config.bsc_roster)
    flat_day = [1.0] * len(config.date_range)
    col = {name: i for i, name in enumerate(ATTRIBUTE_ORDER)}
    noise = config.companion_noise

    rows = np.empty((config.n, len(ATTRIBUTE_ORDER) + 1))
    for i, target in enumerate(targets):
        row = rows[i]
        states = _driver_states(rng, target)
        drivers = {}
        for kpi, state in zip(DRIVERS, states):
            span = DRIVER_RANGES[kpi][state]
            if config.boundary_jitter > 0 and rng.random() < config.boundary_jitter:
                strips = _edge_strips(kpi, state)
                span = strips[rng.below(len(strips))]
            drivers[kpi] = _grid(rng, *span)
            row[col[DRIVER_ATTRS[kpi]]] = drivers[kpi]
        for name, (lo, hi, integer) in NUISANCE.items():
            if integer:
                row[col[name]] = float(lo + rng.below(hi - lo + 1))
            else:
                row[col[name]] = _q(rng.uniform(lo, hi))
        for name, driver, intercept, slope, scale, lo, hi in COMPANIONS:
            v = intercept + slope * drivers[driver] + noise * scale * rng.normal()
            row[col[name]] = _q(min(max(v, lo), hi))
        hf = drivers["HOF"] * row[col["TCHSeizureAttempts"]] / 10.0 * (1 + 0.1 * noise * rng.normal())
        row[col["HF"]] = float(max(round(hf), 0))
        fault = target != AlarmClass.NORM
        day = _weighted(rng, range(len(config.date_range)), day_fault_w if fault else flat_day)
        bsc = _weighted(rng, range(len(config.bsc_roster)), bsc_fault_w if fault else flat_bsc)
        row[col["Period"]] = day
        row[col["BSC"]] = bsc
        row[-1] = int(target)
    attrs = schema(config)
    return Dataset(attrs, rows, class_index=len(attrs) - 1, relation=config.relation)


def describe(config=GeneratorConfig()):
    """Plain-text manifest of every distribution and formula used."""
    counts = class_counts(config)
    inputs = [a for a in schema(config) if a.name != CLASS_NAME]
    lines = [
        "KPI dataset generation manifest",
        f"instances: {config.n}",
        f"seed: {config.seed}",
        "random stream: SplitMix64 (64-bit seed)",
        f"priors (WARN, CR, NORM): {', '.join(repr(p) for p in config.priors)}",
        "class counts (largest remainder): "
        + ", ".join(f"{c.name} {counts[c]}" for c in PRIOR_ORDER),
        f"companion noise: {config.companion_noise!r}",
        f"boundary jitter: {config.boundary_jitter!r}",
        f"input attributes: {len(inputs)}",
        "  " + ", ".join(a.name for a in inputs),
        f"class attribute: {CLASS_NAME} {{{','.join(CLASS_DOMAIN)}}}",
        "",
        "drivers (uniform on a 0.01 grid, inclusive ranges):",
    ]
    for kpi in DRIVERS:
        parts = [f"{s.name} [{lo / 100:g}, {hi / 100:g}]"
                 for s, (lo, hi) in DRIVER_RANGES[kpi].items()]
        lines.append(f"  {DRIVER_ATTRS[kpi]} ({kpi}): " + "; ".join(parts))
    lines.append("boundary jitter: with that probability a driver is drawn from the strip of")
    lines.append("  width " + ", ".join(f"{DRIVER_ATTRS[k]} {EDGE_WIDTH[k] / 100:g}" for k in DRIVERS)
                 + " at a range end touching a neighbouring band (end chosen uniformly)")
    lines += [
        "driver states by class:",
        "  NORM: all four drivers in NORM ranges",
        "  CR: uniform non-empty subset in CR ranges, rest NORM",
        "  WARN: uniform non-empty subset in WARN ranges, rest NORM or CR with equal odds",
        "",
        "companions (z ~ N(0,1), clipped, rounded to 0.01):",
    ]
    for name, driver, intercept, slope, scale, lo, hi in COMPANIONS:
        d = DRIVER_ATTRS[driver]
        if intercept and slope == -1.0:
            body = f"{intercept:g} − {d}"
        elif intercept:
            body = f"{intercept:g} {'−' if slope < 0 else '+'} {abs(slope):.6g} * {d}"
        else:
            body = f"{slope:.6g} * {d}"
        hi_txt = "inf" if math.isinf(hi) else f"{hi:g}"
        lines.append(f"  {name} = {body} ± noise * {scale:g} * z  in [{lo:g}, {hi_txt}]")
    lines.append(f"  {HF_RULE}")
    lines.append("nuisance (independent of class):")
    for name, (lo, hi, integer) in NUISANCE.items():
        kind = "integer" if integer else "uniform"
        lines.append(f"  {name}: {kind} [{lo:g}, {hi:g}]")
    lines += [
        "locations:",
        f"  Period roster: {', '.join(config.date_range)}",
        f"  BSC roster: {', '.join(config.bsc_roster)}",
        f"  fault rows weight BSCs {', '.join(config.hot_bscs)} x{HOT_BSC_WEIGHT:g}, "
        f"days {', '.join(HOT_DAYS)} x{HOT_DAY_WEIGHT:g}; NORM rows uniform",
    ]
    return "\n".join(lines) + "\n"
