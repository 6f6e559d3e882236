"""Tabular dataset model with ARFF/CSV readers and writers.

Cells are stored in a float matrix: numeric attributes hold their value,
nominal attributes hold the index into the attribute's domain, and ``nan``
marks a missing cell.
"""

from __future__ import annotations

import csv
import hashlib
import io
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, SchemaError, UsageError
from .rng import SplitMix64

NUMERIC = "numeric"
NOMINAL = "nominal"
CLASS_NAME = "KPIAlarms"
ALARM_DOMAIN = ("NORM", "CR", "WARN")


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str = NUMERIC
    domain: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.name:
            raise UsageError("attribute name must be non-empty")
        if self.kind not in (NUMERIC, NOMINAL):
            raise UsageError(f"unknown attribute kind {self.kind!r}")
        object.__setattr__(self, "domain", tuple(str(v) for v in self.domain))
        if self.kind == NOMINAL:
            if not self.domain:
                raise UsageError(f"nominal attribute {self.name!r} has an empty domain")
            if len(set(self.domain)) != len(self.domain):
                raise UsageError(f"nominal attribute {self.name!r} has duplicate values")
        elif self.domain:
            raise UsageError(f"numeric attribute {self.name!r} cannot declare a domain")

    @property
    def is_nominal(self):
        return self.kind == NOMINAL

    def index_of(self, value):
        try:
            return self.domain.index(value)
        except ValueError:
            raise DataError(f"value {value!r} not in domain of {self.name!r}") from None

    def to_dict(self):
        d = {"name": self.name, "kind": self.kind}
        if self.is_nominal:
            d["domain"] = list(self.domain)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["name"], d["kind"], tuple(d.get("domain", ())))


class Dataset:
    """An ordered set of instances over a fixed schema.

    Parameters
    ----------
    attributes : sequence of Attribute
    values : array-like, shape (n_instances, n_attributes)
        Numeric cells, nominal domain indices, ``nan`` for missing.
    class_index : int or None
        Position of the (nominal) class attribute.
    relation : str
        ARFF relation name, kept for round trips.
    """

    def __init__(self, attributes, values=None, class_index=None, relation="data"):
        self.attributes = tuple(attributes)
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise UsageError("attribute names must be unique")
        m = len(self.attributes)
        if values is None:
            values = np.empty((0, m))
        arr = np.array(values, dtype=float)
        if arr.size == 0:
            arr = arr.reshape(0, m)
        if arr.ndim != 2 or arr.shape[1] != m:
            raise DataError(f"value matrix shape {arr.shape} does not match {m} attributes")
        for j, a in enumerate(self.attributes):
            col = arr[:, j]
            known = col[~np.isnan(col)]
            if np.isinf(known).any():
                raise DataError("non-finite value", column=a.name)
            if a.is_nominal and known.size:
                if (known != np.floor(known)).any() or known.min() < 0 or known.max() >= len(a.domain):
                    raise DataError("nominal index out of range", column=a.name)
        if class_index is not None:
            class_index = int(class_index)
            if not 0 <= class_index < m:
                raise UsageError(f"class index {class_index} out of range")
            if not self.attributes[class_index].is_nominal:
                raise SchemaError("class attribute must be nominal", column=names[class_index])
        arr.setflags(write=False)
        self.values = arr
        self.class_index = class_index
        self.relation = relation
        self._names = {n: i for i, n in enumerate(names)}

    # -- basic accessors -------------------------------------------------

    def __len__(self):
        return self.values.shape[0]

    @property
    def n_instances(self):
        return self.values.shape[0]

    @property
    def names(self):
        return [a.name for a in self.attributes]

    def index_of(self, name):
        try:
            return self._names[name]
        except KeyError:
            raise SchemaError(f"no attribute named {name!r}") from None

    def attribute(self, name):
        return self.attributes[self.index_of(name)]

    def column(self, name):
        return self.values[:, self.index_of(name)]

    @property
    def class_attribute(self):
        if self.class_index is None:
            raise UsageError("dataset has no class attribute")
        return self.attributes[self.class_index]

    @property
    def classes(self):
        return self.class_attribute.domain

    @property
    def y(self):
        """Class indices as ints; -1 where the class is missing."""
        col = self.values[:, self.class_index] if self.class_index is not None else None
        if col is None:
            raise UsageError("dataset has no class attribute")
        return np.where(np.isnan(col), -1, col).astype(int)

    @property
    def feature_indices(self):
        return [j for j in range(len(self.attributes)) if j != self.class_index]

    def cell(self, row, name):
        """Decoded cell: float, nominal string, or None when missing."""
        j = self.index_of(name)
        v = self.values[row, j]
        if math.isnan(v):
            return None
        a = self.attributes[j]
        return a.domain[int(v)] if a.is_nominal else float(v)

    # -- derivation ------------------------------------------------------

    def subset(self, indices):
        return Dataset(self.attributes, self.values[np.asarray(indices, dtype=int)],
                       self.class_index, self.relation)

    def with_class(self, name):
        return Dataset(self.attributes, self.values, self.index_of(name), self.relation)

    def with_column(self, attribute, column, as_class=False):
        """Return a copy with ``attribute`` appended, or replaced if the name exists."""
        column = np.asarray(column, dtype=float)
        if column.shape != (self.n_instances,):
            raise DataError("column length does not match instance count")
        attrs = list(self.attributes)
        vals = np.array(self.values, dtype=float)
        if attribute.name in self._names:
            j = self._names[attribute.name]
            attrs[j] = attribute
            vals[:, j] = column
        else:
            attrs.append(attribute)
            vals = np.column_stack([vals, column])
            j = len(attrs) - 1
        ci = j if as_class else self.class_index
        return Dataset(attrs, vals, ci, self.relation)

    def schema_dict(self):
        return {"attributes": [a.to_dict() for a in self.attributes],
                "class_index": self.class_index}

    def fingerprint(self):
        h = hashlib.sha256()
        h.update(repr(self.schema_dict()).encode())
        h.update(np.ascontiguousarray(self.values).tobytes())
        return h.hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.attributes == other.attributes
                and self.class_index == other.class_index
                and self.relation == other.relation
                and self.values.shape == other.values.shape
                and bool(np.array_equal(self.values, other.values, equal_nan=True)))

    def __repr__(self):
        return (f"Dataset(relation={self.relation!r}, n={self.n_instances}, "
                f"attributes={len(self.attributes)}, class_index={self.class_index})")


def dataset_from_records(attributes, records, class_name=None, relation="data"):
    """Build a dataset from rows of decoded cells (floats, strings, None)."""
    attributes = tuple(attributes)
    rows = []
    for rec in records:
        if len(rec) != len(attributes):
            raise DataError(f"record has {len(rec)} cells, schema has {len(attributes)}")
        row = []
        for a, v in zip(attributes, rec):
            if v is None:
                row.append(math.nan)
            elif a.is_nominal:
                row.append(float(a.index_of(str(v))))
            else:
                row.append(float(v))
        rows.append(row)
    ds = Dataset(attributes, np.array(rows, dtype=float).reshape(len(rows), len(attributes)),
                 relation=relation)
    if class_name is not None:
        ds = ds.with_class(class_name)
    return ds


# ---------------------------------------------------------------------------
# ARFF

_NEEDS_QUOTE = re.compile(r"[\s,'\"{}%\\]")


def _quote(token):
    if token == "" or token == "?" or _NEEDS_QUOTE.search(token):
        return "'" + token.replace("\\", "\\\\").replace("'", "\\'") + "'"
    return token


def format_number(v):
    """Canonical numeric text: up to 6 significant digits."""
    s = format(float(v), ".6g")
    return "0" if s == "-0" else s


def _split_fields(text, lineno):
    """Split a comma-separated ARFF line honouring single/double quotes."""
    fields, buf, quote, was_quoted = [], [], None, False
    i = 0
    while i < len(text):
        ch = text[i]
        if quote:
            if ch == "\\" and i + 1 < len(text):
                buf.append(text[i + 1])
                i += 2
                continue
            if ch == quote:
                quote = None
            else:
                buf.append(ch)
        elif ch in "'\"":
            if "".join(buf).strip():
                raise DataError("unexpected quote", line=lineno)
            buf, quote, was_quoted = [], ch, True
        elif ch == ",":
            fields.append(("".join(buf) if was_quoted else "".join(buf).strip(), was_quoted))
            buf, was_quoted = [], False
        else:
            if was_quoted and not ch.isspace():
                raise DataError("text after closing quote", line=lineno)
            buf.append(ch)
        i += 1
    if quote:
        raise DataError("unterminated quote", line=lineno)
    fields.append(("".join(buf) if was_quoted else "".join(buf).strip(), was_quoted))
    return fields


def _read_name(rest, lineno):
    rest = rest.strip()
    if not rest:
        raise DataError("missing name", line=lineno)
    if rest[0] in "'\"":
        q = rest[0]
        end = 1
        buf = []
        while end < len(rest) and rest[end] != q:
            if rest[end] == "\\" and end + 1 < len(rest):
                end += 1
            buf.append(rest[end])
            end += 1
        if end >= len(rest):
            raise DataError("unterminated quoted name", line=lineno)
        return "".join(buf), rest[end + 1:].strip()
    parts = rest.split(None, 1)
    return parts[0], (parts[1].strip() if len(parts) > 1 else "")


def parse_arff(stream):
    """Parse the supported ARFF subset.

    Accepts ``@relation``, ``@attribute <name> numeric|real|integer``,
    ``@attribute <name> {v1,...}``, ``@data``, ``%`` comments and ``?`` for
    missing cells. Keywords are case-insensitive. The last attribute becomes
    the class when it is named ``KPIAlarms``.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    relation = "data"
    attributes = []
    rows = []
    in_data = False
    seen_relation = False
    for lineno, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            low = line.lower()
            if low.startswith("@relation"):
                if seen_relation or attributes:
                    raise DataError("misplaced @relation", line=lineno)
                relation, _ = _read_name(line[len("@relation"):], lineno)
                seen_relation = True
            elif low.startswith("@attribute"):
                name, rest = _read_name(line[len("@attribute"):], lineno)
                if any(a.name == name for a in attributes):
                    raise DataError(f"duplicate attribute {name!r}", line=lineno)
                if rest.lower() in ("numeric", "real", "integer"):
                    attributes.append(Attribute(name, NUMERIC))
                elif rest.startswith("{") and rest.endswith("}"):
                    inner = rest[1:-1]
                    values = [v for v, _ in _split_fields(inner, lineno)] if inner.strip() else []
                    try:
                        attributes.append(Attribute(name, NOMINAL, tuple(values)))
                    except UsageError as exc:
                        raise DataError(str(exc), line=lineno) from None
                else:
                    raise DataError(f"unsupported attribute type {rest!r}", line=lineno)
            elif low.startswith("@data"):
                if not attributes:
                    raise DataError("@data before any @attribute", line=lineno)
                in_data = True
            else:
                raise DataError(f"malformed header line {line!r}", line=lineno)
            continue
        fields = _split_fields(line, lineno)
        if len(fields) != len(attributes):
            raise DataError(f"row has {len(fields)} cells, expected {len(attributes)}",
                            line=lineno)
        row = []
        for a, (tok, quoted) in zip(attributes, fields):
            if tok == "?" and not quoted:
                row.append(math.nan)
            elif a.is_nominal:
                if tok not in a.domain:
                    raise DataError(f"value {tok!r} outside domain of {a.name!r}", line=lineno)
                row.append(float(a.domain.index(tok)))
            else:
                try:
                    v = float(tok)
                except ValueError:
                    raise DataError(f"cannot parse {tok!r} as a number for {a.name!r}",
                                    line=lineno) from None
                if not math.isfinite(v):
                    raise DataError(f"non-finite number for {a.name!r}", line=lineno)
                row.append(v)
        rows.append(row)
    if not attributes:
        raise DataError("no @attribute declarations found")
    values = np.array(rows, dtype=float).reshape(len(rows), len(attributes))
    class_index = len(attributes) - 1 if attributes[-1].name == CLASS_NAME \
        and attributes[-1].is_nominal else None
    return Dataset(attributes, values, class_index, relation)


def write_arff(dataset):
    """Canonical ARFF text for ``dataset``."""
    out = [f"@relation {_quote(dataset.relation)}", ""]
    for a in dataset.attributes:
        if a.is_nominal:
            out.append(f"@attribute {_quote(a.name)} {{{','.join(_quote(v) for v in a.domain)}}}")
        else:
            out.append(f"@attribute {_quote(a.name)} numeric")
    out += ["", "@data"]
    for row in dataset.values:
        cells = []
        for a, v in zip(dataset.attributes, row):
            if math.isnan(v):
                cells.append("?")
            elif a.is_nominal:
                cells.append(_quote(a.domain[int(v)]))
            else:
                cells.append(format_number(v))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# CSV


def _is_number(tok):
    try:
        return math.isfinite(float(tok))
    except ValueError:
        return False


def parse_csv(stream, schema_hints=None, class_name=CLASS_NAME, relation="data"):
    """Parse comma-separated text with a header row.

    ``schema_hints`` maps a column name to ``"numeric"``, ``"nominal"`` or a
    full :class:`Attribute` (which fixes the nominal domain order).
    Unhinted columns are numeric when every non-empty cell parses as a
    number, nominal otherwise with domain in first-appearance order. The
    column named ``class_name``, if present and nominal, becomes the class;
    when its values all lie in ``ALARM_DOMAIN`` it keeps that domain order
    so class indices survive a CSV round trip.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    schema_hints = dict(schema_hints or {})
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty input: header row required", line=1) from None
    if not header or all(not h for h in header):
        raise DataError("empty header", line=1)
    if len(set(header)) != len(header) or any(not h for h in header):
        raise DataError("header names must be unique and non-empty", line=1)
    body = []
    for rec in reader:
        lineno = reader.line_num
        if not rec:
            continue
        if len(rec) != len(header):
            raise DataError(f"row has {len(rec)} cells, expected {len(header)}", line=lineno)
        body.append((lineno, rec))
    for h in schema_hints:
        if h not in header:
            raise SchemaError(f"hint for unknown column {h!r}")

    attributes = []
    for j, name in enumerate(header):
        hint = schema_hints.get(name)
        cells = [rec[j] for _, rec in body if rec[j] != ""]
        if hint is None and name == class_name and cells and set(cells) <= set(ALARM_DOMAIN):
            hint = Attribute(name, NOMINAL, ALARM_DOMAIN)
        if isinstance(hint, Attribute):
            attributes.append(hint)
        elif hint == NUMERIC or (hint is None and all(_is_number(c) for c in cells)):
            attributes.append(Attribute(name, NUMERIC))
        elif hint in (NOMINAL, None):
            domain = list(dict.fromkeys(cells)) or ["?"]
            attributes.append(Attribute(name, NOMINAL, tuple(domain)))
        else:
            raise UsageError(f"unknown hint {hint!r} for column {name!r}")

    values = np.full((len(body), len(header)), math.nan)
    for i, (lineno, rec) in enumerate(body):
        for j, (a, tok) in enumerate(zip(attributes, rec)):
            if tok == "":
                continue
            if a.is_nominal:
                if tok not in a.domain:
                    raise DataError(f"value {tok!r} outside domain", line=lineno, column=a.name)
                values[i, j] = a.domain.index(tok)
            else:
                if not _is_number(tok):
                    raise DataError(f"cannot parse {tok!r} as a number", line=lineno,
                                    column=a.name)
                values[i, j] = float(tok)
    ds = Dataset(attributes, values, relation=relation)
    if class_name in header and ds.attribute(class_name).is_nominal:
        ds = ds.with_class(class_name)
    return ds


def write_csv(dataset):
    """CSV text; numbers use the shortest exact repr, empty cells are missing."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(dataset.names)
    for row in dataset.values:
        out = []
        for a, v in zip(dataset.attributes, row):
            if math.isnan(v):
                out.append("")
            elif a.is_nominal:
                out.append(a.domain[int(v)])
            else:
                out.append(repr(float(v)) if v != int(v) or abs(v) >= 1e16 else str(int(v)))
        w.writerow(out)
    return buf.getvalue()


def schema_hints_for(dataset):
    """Hints that make ``parse_csv(write_csv(ds))`` reproduce ``ds``'s schema."""
    return {a.name: a for a in dataset.attributes}


# ---------------------------------------------------------------------------
# files


def read_dataset(path, class_name=CLASS_NAME):
    path = str(path)
    with open(path, encoding="utf-8", newline="") as fh:
        if path.lower().endswith(".csv"):
            return parse_csv(fh, class_name=class_name)
        ds = parse_arff(fh)
    if ds.class_index is None and class_name in ds.names and ds.attribute(class_name).is_nominal:
        ds = ds.with_class(class_name)
    return ds


def write_dataset(dataset, path):
    path = str(path)
    text = write_csv(dataset) if path.lower().endswith(".csv") else write_arff(dataset)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# folds


def stratified_folds(dataset, k, seed=0):
    """Split instance indices into ``k`` class-stratified folds.

    Instances of each class are shuffled with a seeded SplitMix64 stream and
    dealt round-robin, classes concatenated in declaration order, so that
    per-class counts across folds differ by at most one.
    """
    k = int(k)
    n = dataset.n_instances
    if k < 2:
        raise UsageError("k must be at least 2")
    if k > n:
        raise UsageError(f"k={k} exceeds the instance count {n}")
    y = dataset.y
    rng = SplitMix64(seed)
    order = []
    for c in sorted(set(y.tolist()), key=lambda c: (c < 0, c)):
        members = [int(i) for i in np.flatnonzero(y == c)]
        order.extend(rng.shuffle(members))
    folds = [[] for _ in range(k)]
    for pos, idx in enumerate(order):
        folds[pos % k].append(idx)
    return [sorted(f) for f in folds]
