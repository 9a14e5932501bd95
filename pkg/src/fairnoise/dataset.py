"""Tabular datasets for fairness experiments: loading, validation, transforms.

A dataset is a feature table plus two binary side columns, the ground-truth
label ``Y`` and the protected attribute ``A``.  Feature columns are either
continuous (float64) or discrete; discrete columns keep their raw category
values and are stored as integer codes into a per-column ordered category
set, so later noise injection can resample on the original domain.

CSV interface
-------------
UTF-8, header row, comma separator, no quoting of numerics.  Column roles
come from a sidecar schema of ``key=value`` lines::

    label=<col>
    protected=<col>
    kind.<col>=continuous|discrete     # optional, inferred when absent
    drop.<col>=true                    # optional, remove a column
    filter.<col>=<value-to-remove>     # optional, remove matching rows
    positive=<v1>[,<v2>...]            # optional, binarise protected at load

Missing values (empty cells) are rejected; use ``filter.<col>`` to strip
rows with sentinel values upstream, mirroring how unknown categories are
usually filtered out of the common benchmark datasets.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CONTINUOUS = "continuous"
DISCRETE = "discrete"

_FLOAT_FMT = ".17g"


class DataError(ValueError):
    """Raised for malformed files, schemas, or invalid dataset operations."""


def _fmt_float(x: float) -> str:
    return format(float(x), _FLOAT_FMT)


@dataclass(frozen=True)
class FeatureKind:
    """Column type tag; discrete columns carry their ordered category set."""

    tag: str
    categories: tuple = ()

    def __post_init__(self):
        if self.tag not in (CONTINUOUS, DISCRETE):
            raise DataError(f"unknown feature kind {self.tag!r}")
        if self.tag == DISCRETE and not self.categories:
            raise DataError("discrete column needs a non-empty category set")
        if self.tag == CONTINUOUS and self.categories:
            raise DataError("continuous column must not carry categories")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int


@dataclass(frozen=True)
class Dataset:
    """Immutable feature table with labels and a protected attribute.

    ``columns[j]`` is float64 for continuous columns and int64 category
    codes for discrete ones; ``protected`` is likewise a code vector into
    ``protected_values``.  A dataset is pipeline-ready only when the
    protected attribute is binary; multi-valued protected columns exist
    solely as input to :func:`binarize_protected`.
    """

    columns: tuple
    kinds: tuple
    names: tuple
    labels: np.ndarray
    protected: np.ndarray
    protected_values: tuple = (0, 1)
    label_name: str = "label"
    protected_name: str = "protected"

    def __post_init__(self):
        n = len(self.labels)
        if n < 1 or len(self.columns) < 1:
            raise DataError("dataset needs at least one row and one feature")
        if len(self.columns) != len(self.kinds) or len(self.columns) != len(self.names):
            raise DataError("columns, kinds and names must align")
        if len(self.protected) != n:
            raise DataError("labels and protected must have equal length")
        if not np.isin(self.labels, (0, 1)).all():
            raise DataError("label column not binary")
        if len(self.protected_values) < 1:
            raise DataError("protected column needs at least one value")
        if self.protected.min() < 0 or self.protected.max() >= len(self.protected_values):
            raise DataError("protected codes out of range")
        for name, kind, col in zip(self.names, self.kinds, self.columns):
            if len(col) != n:
                raise DataError(f"column {name!r} has wrong length")
            if kind.tag == CONTINUOUS:
                if not np.isfinite(col).all():
                    raise DataError(f"non-finite value in continuous column {name!r}")
            else:
                if col.min() < 0 or col.max() >= len(kind.categories):
                    raise DataError(f"category code out of range in column {name!r}")

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def n_features(self) -> int:
        return len(self.columns)

    @property
    def protected_is_binary(self) -> bool:
        return len(self.protected_values) == 2

    def require_binary_protected(self):
        if not self.protected_is_binary:
            raise DataError("protected column not binary")

    @staticmethod
    def build(columns, kinds, names, labels, protected, protected_values=(0, 1),
              label_name="label", protected_name="protected") -> "Dataset":
        """Validate, copy and freeze arrays into a Dataset."""
        cols = []
        for kind, col in zip(kinds, columns):
            dtype = np.float64 if kind.tag == CONTINUOUS else np.int64
            arr = np.asarray(col, dtype=dtype).copy()
            arr.setflags(write=False)
            cols.append(arr)
        lab = np.asarray(labels, dtype=np.int64).copy()
        lab.setflags(write=False)
        prot = np.asarray(protected, dtype=np.int64).copy()
        prot.setflags(write=False)
        return Dataset(tuple(cols), tuple(kinds), tuple(names), lab, prot,
                       tuple(protected_values), label_name, protected_name)

    def take(self, indices) -> "Dataset":
        """Row subset (new dataset, original order of ``indices``)."""
        idx = np.asarray(indices, dtype=np.int64)
        return Dataset.build(
            [col[idx] for col in self.columns], self.kinds, self.names,
            self.labels[idx], self.protected[idx], self.protected_values,
            self.label_name, self.protected_name,
        )

    def replace_columns(self, columns, kinds=None, names=None) -> "Dataset":
        return Dataset.build(
            columns, kinds or self.kinds, names or self.names,
            self.labels, self.protected, self.protected_values,
            self.label_name, self.protected_name,
        )

    def raw_column(self, j) -> np.ndarray:
        """Column ``j`` in its original value domain (categories decoded)."""
        kind = self.kinds[j]
        if kind.tag == CONTINUOUS:
            return self.columns[j]
        return np.asarray(kind.categories, dtype=object)[self.columns[j]]


@dataclass
class Schema:
    """Column-role declaration for :func:`load_csv`."""

    label: str
    protected: str
    kinds: dict = field(default_factory=dict)
    drop: tuple = ()
    filters: dict = field(default_factory=dict)
    positive: tuple = ()

    @staticmethod
    def from_file(path) -> "Schema":
        entries = {}
        drop = []
        filters = {}
        kinds = {}
        positive = ()
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read schema: {exc}") from None
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise DataError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            key = key.strip()
            value = value.strip()
            if key == "label" or key == "protected":
                entries[key] = value
            elif key.startswith("kind."):
                kinds[key[5:]] = value
            elif key.startswith("drop."):
                if value.lower() == "true":
                    drop.append(key[5:])
            elif key.startswith("filter."):
                filters[key[7:]] = value
            elif key == "positive":
                positive = tuple(v.strip() for v in value.split(","))
            else:
                raise DataError(f"{path}:{lineno}: unknown schema key {key!r}")
        if "label" not in entries or "protected" not in entries:
            raise DataError(f"{path}: schema must name a label and a protected column")
        return Schema(entries["label"], entries["protected"], kinds, tuple(drop), filters, positive)


def _parse_float(cell, name, row):
    try:
        value = float(cell)
    except ValueError:
        raise DataError(f"column {name!r}, row {row}: {cell!r} is not numeric") from None
    if not math.isfinite(value):
        raise DataError(f"column {name!r}, row {row}: non-finite value {cell!r}")
    return value


def _parse_binary(cells, name):
    out = np.empty(len(cells), dtype=np.int64)
    for i, cell in enumerate(cells):
        if cell == "0":
            out[i] = 0
        elif cell == "1":
            out[i] = 1
        else:
            raise DataError(f"{name} column not binary (saw {cell!r})")
    return out


def _all_numeric(cells) -> bool:
    for cell in cells:
        try:
            float(cell)
        except ValueError:
            return False
    return True


def load_csv(path, schema) -> Dataset:
    """Load and validate a CSV against a schema (object or sidecar path)."""
    if not isinstance(schema, Schema):
        schema = Schema.from_file(schema)
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = list(reader)
    if not rows:
        raise DataError(f"{path}: no data rows")
    for want in (schema.label, schema.protected):
        if want not in header:
            raise DataError(f"{path}: column {want!r} not in header")
    width = len(header)
    for i, row in enumerate(rows, 2):
        if len(row) != width:
            raise DataError(f"{path}:{i}: expected {width} cells, got {len(row)}")
        for cell in row:
            if cell == "":
                raise DataError(f"{path}:{i}: missing value")

    cells = {name: [row[j] for row in rows] for j, name in enumerate(header)}

    # Row filters run before any validation so sentinel rows never trip it.
    keep = np.ones(len(rows), dtype=bool)
    for col, value in schema.filters.items():
        if col not in cells:
            raise DataError(f"filter names unknown column {col!r}")
        keep &= np.array([c != value for c in cells[col]])
    if not keep.any():
        raise DataError("row filters removed every row")
    if not keep.all():
        cells = {name: [c for c, k in zip(col, keep) if k] for name, col in cells.items()}

    feature_names = [
        name for name in header
        if name not in (schema.label, schema.protected) and name not in schema.drop
    ]
    if not feature_names:
        raise DataError("schema leaves no feature columns")
    for declared in schema.kinds:
        if declared not in header:
            raise DataError(f"kind declared for unknown column {declared!r}")

    labels = _parse_binary(cells[schema.label], "label")

    raw_protected = cells[schema.protected]
    if schema.positive:
        positive = set(schema.positive)
        seen = set(raw_protected)
        if not positive & seen:
            raise DataError("positive set matches no rows")
        if seen <= positive:
            raise DataError("positive set matches all rows")
        protected = np.array([1 if c in positive else 0 for c in raw_protected], dtype=np.int64)
        protected_values = (0, 1)
    else:
        protected = _parse_binary(raw_protected, "protected")
        protected_values = (0, 1)

    columns = []
    kinds = []
    for name in feature_names:
        declared = schema.kinds.get(name)
        if declared is None:
            declared = CONTINUOUS if _all_numeric(cells[name]) else DISCRETE
        if declared == CONTINUOUS:
            col = np.array([_parse_float(c, name, i + 2) for i, c in enumerate(cells[name])])
            kinds.append(FeatureKind(CONTINUOUS))
        elif declared == DISCRETE:
            categories, codes = np.unique(np.asarray(cells[name], dtype=object), return_inverse=True)
            col = codes.astype(np.int64)
            kinds.append(FeatureKind(DISCRETE, tuple(categories)))
        else:
            raise DataError(f"kind.{name} must be continuous or discrete, got {declared!r}")
        columns.append(col)

    return Dataset.build(columns, kinds, tuple(feature_names), labels, protected,
                         protected_values, schema.label, schema.protected)


def write_csv(ds: Dataset, path):
    """Write a dataset back out; floats use 17 significant digits."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(ds.names) + [ds.protected_name, ds.label_name])
        raw = [ds.raw_column(j) for j in range(ds.n_features)]
        prot_values = np.asarray(ds.protected_values, dtype=object)[ds.protected]
        for i in range(ds.n_rows):
            row = []
            for j, kind in enumerate(ds.kinds):
                row.append(_fmt_float(raw[j][i]) if kind.tag == CONTINUOUS else str(raw[j][i]))
            row.append(str(prot_values[i]))
            row.append(str(ds.labels[i]))
            writer.writerow(row)


def split(ds: Dataset, spec: SplitSpec):
    """Deterministic train/test partition; sizes floor(N*f) clamped to >= 1."""
    if not 0.0 < spec.train_fraction < 1.0:
        raise DataError("train_fraction must lie in (0, 1)")
    ds.require_binary_protected()
    for arr, what in ((ds.labels, "label"), (ds.protected, "protected")):
        if len(np.unique(arr)) < 2:
            raise DataError(f"both {what} values must be present before splitting")
    n = ds.n_rows
    n_train = int(math.floor(n * spec.train_fraction))
    n_train = max(1, min(n - 1, n_train))
    if n < 2:
        raise DataError("cannot split a single-row dataset")
    perm = np.random.default_rng(spec.seed).permutation(n)
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])
    return ds.take(train_idx), ds.take(test_idx)


def balance_classes(ds: Dataset, seed: int) -> Dataset:
    """Equalise label counts by uniform down-sampling of the majority label."""
    counts = np.bincount(ds.labels, minlength=2)
    if counts[0] == 0 or counts[1] == 0:
        raise DataError("both label values must be present to balance")
    if counts[0] == counts[1]:
        return ds.take(np.arange(ds.n_rows))
    majority = int(counts[1] > counts[0])
    keep_n = int(counts[1 - majority])
    rng = np.random.default_rng(seed)
    major_idx = np.flatnonzero(ds.labels == majority)
    minor_idx = np.flatnonzero(ds.labels != majority)
    sampled = rng.choice(major_idx, size=keep_n, replace=False)
    return ds.take(np.sort(np.concatenate([minor_idx, sampled])))


def binarize_protected(ds: Dataset, positive_set) -> Dataset:
    """Collapse the protected attribute to 1 for members of ``positive_set``."""
    positive_set = set(positive_set)
    values = ds.protected_values
    membership = np.array([v in positive_set for v in values], dtype=np.int64)
    present = np.unique(ds.protected)
    hit = membership[present]
    if hit.all():
        raise DataError("positive set matches all rows")
    if not hit.any():
        raise DataError("positive set matches no rows")
    return Dataset.build(
        ds.columns, ds.kinds, ds.names, ds.labels, membership[ds.protected],
        (0, 1), ds.label_name, ds.protected_name,
    )


# Fixed generator constants; the acceptance numbers depend on them, so any
# change here invalidates the recorded expectations.
SYNTH_CAT_BASE = (0.4, 0.3, 0.3)
SYNTH_CAT_TILT = 0.15
SYNTH_CAT_EFFECT = (-1.0, 0.0, 1.0)
SYNTH_W0 = -1.2
SYNTH_W1 = 1.2
SYNTH_W2 = 0.8
SYNTH_WCAT = 0.4
SYNTH_WGROUP = 1.0
SYNTH_SD2_SLOPE = 0.75


def synth_biased(n: int, bias: float, group_ratio: float, seed: int) -> Dataset:
    """Synthetic two-group classification data with tunable group bias.

    Generative model (all draws from one seeded generator, in this order):

    1. ``a_i ~ Bernoulli(group_ratio)`` is the protected attribute.
    2. ``x1_i ~ N(bias * (a_i - 1/2), 1)`` -- group means differ by ``bias``.
    3. ``x2_i ~ N(bias * (a_i - 1/2), (1 + 0.75 * bias * a_i)^2)`` -- same
       mean gap, plus a group-1 variance inflation.  Mean-centring cannot
       remove a variance gap, so linear decorrelation leaves a measurable
       residual unfairness, as it does on real data.
    4. ``c_i`` is drawn from ``("c0", "c1", "c2")`` with group-tilted
       probabilities ``(0.4 -/+ 0.15*bias, 0.3, 0.3 +/- 0.15*bias)``
       (group 1 shifts mass from c0 to c2).
    5. ``logit_i = -1.2 + 1.2*x1 + 0.8*x2 + 0.4*g(c) + 1.0*bias*(a - 1/2)``
       with ``g = (-1, 0, +1)`` over the categories;
       ``y_i ~ Bernoulli(sigmoid(logit_i))``.  The negative intercept keeps
       the positive class around a third of the data, so decision
       thresholds sit away from the score median where variance gaps
       actually move selection rates.

    At ``bias=0`` the groups are exchangeable, so any model trained on a
    draw is demographically fair up to sampling error; at ``bias=1`` a
    performance-only model exploits the group signal.
    """
    if n < 100:
        raise DataError("synthetic generator needs n >= 100")
    if not 0.0 <= bias <= 1.0:
        raise DataError("bias must lie in [0, 1]")
    if not 0.0 < group_ratio < 1.0:
        raise DataError("group_ratio must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    a = (rng.random(n) < group_ratio).astype(np.int64)
    centred = a - 0.5
    x1 = rng.normal(bias * centred, 1.0)
    sd2 = 1.0 + SYNTH_SD2_SLOPE * bias * a
    x2 = rng.normal(bias * centred, sd2)
    tilt = SYNTH_CAT_TILT * bias * (2 * a - 1)
    probs = np.empty((n, 3))
    probs[:, 0] = SYNTH_CAT_BASE[0] - tilt
    probs[:, 1] = SYNTH_CAT_BASE[1]
    probs[:, 2] = SYNTH_CAT_BASE[2] + tilt
    cdf = np.cumsum(probs, axis=1)
    cat = (rng.random(n)[:, None] >= cdf).sum(axis=1).astype(np.int64)
    effect = np.asarray(SYNTH_CAT_EFFECT)[cat]
    logit = (SYNTH_W0 + SYNTH_W1 * x1 + SYNTH_W2 * x2 + SYNTH_WCAT * effect
             + SYNTH_WGROUP * bias * centred)
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-logit))).astype(np.int64)
    kinds = (
        FeatureKind(CONTINUOUS),
        FeatureKind(CONTINUOUS),
        FeatureKind(DISCRETE, ("c0", "c1", "c2")),
    )
    return Dataset.build((x1, x2, cat), kinds, ("x1", "x2", "cat"), y, a)
