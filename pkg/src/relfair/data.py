"""Tabular data handling: CSV loading, train-fitted encoding, splits.

Raw records are kept as typed Python values (`Dataset`); models consume the
numeric `EncodedDataset` built by :func:`encode`, which fits its one-hot
vocabularies and z-score statistics on the training split only.  The sensitive
attribute rides along for evaluation but is stripped from the training path:
training code receives a :class:`TrainView`, which has no ``s`` field at all.
"""

import csv
import dataclasses
import importlib.resources
import os

import numpy as np
import yaml

FEATURE_KINDS = ("categorical", "continuous")
FEATURE_ROLES = ("input", "label", "sensitive")

DEFAULT_MISSING_TOKENS = ("?", "")


@dataclasses.dataclass(frozen=True)
class FeatureSchema:
    name: str
    kind: str
    role: str = "input"

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.role not in FEATURE_ROLES:
            raise ValueError(f"feature {self.name!r}: unknown role {self.role!r}")


def _check_schema(schema):
    schema = tuple(schema)
    names = [f.name for f in schema]
    if len(set(names)) != len(names):
        raise ValueError("duplicate feature names in schema")
    labels = [f for f in schema if f.role == "label"]
    if len(labels) != 1:
        raise ValueError(f"schema needs exactly one label feature, got {len(labels)}")
    if sum(f.role == "sensitive" for f in schema) > 1:
        raise ValueError("schema allows at most one sensitive feature")
    return schema


@dataclasses.dataclass(frozen=True)
class Dataset:
    """Raw typed rows in schema order; labels already mapped to {0,1}."""

    rows: tuple
    schema: tuple
    n_dropped: int = 0

    def __post_init__(self):
        object.__setattr__(self, "schema", _check_schema(self.schema))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))
        arity = len(self.schema)
        for r in self.rows:
            if len(r) != arity:
                raise ValueError(f"row arity {len(r)} != schema arity {arity}")

    @property
    def n(self):
        return len(self.rows)

    def feature_index(self, name):
        for i, f in enumerate(self.schema):
            if f.name == name:
                return i
        raise KeyError(f"no feature named {name!r}")

    def column(self, name):
        i = self.feature_index(name)
        return [r[i] for r in self.rows]

    def input_features(self):
        return tuple(f for f in self.schema if f.role == "input")


@dataclasses.dataclass(frozen=True)
class TrainView:
    """What the training path is allowed to see: features and labels only."""

    X: np.ndarray
    y: np.ndarray

    @property
    def n(self):
        return len(self.y)


@dataclasses.dataclass(frozen=True)
class EncodedDataset:
    X: np.ndarray
    y: np.ndarray
    s: object  # np.ndarray of group codes, or None
    column_map: dict  # feature name -> range of encoded columns
    feature_names: tuple

    @property
    def n(self):
        return len(self.y)

    @property
    def n_columns(self):
        return self.X.shape[1]

    def train_view(self):
        return TrainView(X=self.X, y=self.y)


@dataclasses.dataclass(frozen=True)
class RelatedFeatureSet:
    features: tuple
    column_groups: tuple  # per feature, tuple of encoded column indices
    lambda0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(
            self, "column_groups", tuple(tuple(g) for g in self.column_groups)
        )
        lam = np.asarray(self.lambda0, dtype=float)
        object.__setattr__(self, "lambda0", lam)
        k = len(self.features)
        if k < 1:
            raise ValueError("related feature set must name at least one feature")
        if len(self.column_groups) != k or len(lam) != k:
            raise ValueError("features, column_groups and lambda0 must align")
        if np.any(lam < 0) or abs(lam.sum() - 1.0) > 1e-8:
            raise ValueError("lambda0 must lie on the probability simplex")

    @property
    def k(self):
        return len(self.features)


# ---------------------------------------------------------------------------
# loading


def _parse_value(feature, raw, line_no):
    if feature.kind == "continuous":
        try:
            return float(raw)
        except ValueError:
            raise ValueError(
                f"line {line_no}: cannot parse {raw!r} as number for "
                f"column {feature.name!r}"
            ) from None
    return raw


def _map_binary(raw, positive, column, line_no):
    if positive is not None:
        return 1 if raw == positive else 0
    if raw in ("0", "1"):
        return int(raw)
    raise ValueError(
        f"line {line_no}: column {column!r} value {raw!r} is not binary and "
        "no positive value was declared"
    )


def load_csv(
    path,
    schema,
    *,
    label_positive=None,
    sensitive_positive=None,
    missing_tokens=DEFAULT_MISSING_TOKENS,
    comment_prefix=None,
):
    """Read a headered CSV into a Dataset, dropping rows with missing values.

    Cell whitespace is stripped (several public census extracts pad values
    with a leading space).  Sensitive values are mapped to integer group
    codes: 0/1 against ``sensitive_positive`` when given, otherwise codes
    assigned by sorted distinct value.
    """
    schema = _check_schema(schema)
    if not os.path.exists(path):
        raise FileNotFoundError(f"dataset file not found: {path}")
    missing_tokens = set(missing_tokens)

    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        positions = {}
        for f in schema:
            if f.name not in header:
                raise ValueError(f"{path}: column {f.name!r} missing from header")
            positions[f.name] = header.index(f.name)

        raw_rows = []
        n_dropped = 0
        for line_no, cells in enumerate(reader, start=2):
            if not cells:
                continue
            if comment_prefix and cells[0].lstrip().startswith(comment_prefix):
                continue
            if len(cells) != len(header):
                raise ValueError(
                    f"{path}: line {line_no} has {len(cells)} fields, "
                    f"expected {len(header)}"
                )
            cells = [c.strip() for c in cells]
            picked = [cells[positions[f.name]] for f in schema]
            if any(v in missing_tokens for v in picked):
                n_dropped += 1
                continue
            raw_rows.append((line_no, picked))

    if not raw_rows:
        raise ValueError(f"{path}: no usable rows after dropping missing values")

    sensitive_codes = None
    sens_idx = next(
        (i for i, f in enumerate(schema) if f.role == "sensitive"), None
    )
    if sens_idx is not None and sensitive_positive is None:
        values = sorted({picked[sens_idx] for _, picked in raw_rows})
        sensitive_codes = {v: i for i, v in enumerate(values)}

    rows = []
    for line_no, picked in raw_rows:
        row = []
        for i, f in enumerate(schema):
            if f.role == "label":
                row.append(_map_binary(picked[i], label_positive, f.name, line_no))
            elif f.role == "sensitive":
                if sensitive_positive is not None:
                    row.append(
                        _map_binary(picked[i], sensitive_positive, f.name, line_no)
                    )
                else:
                    row.append(sensitive_codes[picked[i]])
            else:
                row.append(_parse_value(f, picked[i], line_no))
        rows.append(tuple(row))

    return Dataset(rows=tuple(rows), schema=schema, n_dropped=n_dropped)


# ---------------------------------------------------------------------------
# splitting


def split(dataset, ratios=(5, 2, 3), seed=0):
    """Deterministic shuffled partition with sizes proportional to ratios."""
    if any(r <= 0 for r in ratios):
        raise ValueError("split ratios must be positive")
    n = dataset.n
    if n < len(ratios):
        raise ValueError(f"cannot split {n} rows into {len(ratios)} parts")
    order = np.random.default_rng(seed).permutation(n)
    total = sum(ratios)
    bounds = [int(round(n * sum(ratios[: i + 1]) / total)) for i in range(len(ratios))]
    bounds[-1] = n
    parts = []
    start = 0
    for stop in bounds:
        idx = order[start:stop]
        parts.append(
            Dataset(
                rows=tuple(dataset.rows[i] for i in idx),
                schema=dataset.schema,
                n_dropped=0,
            )
        )
        start = stop
    return tuple(parts)


# ---------------------------------------------------------------------------
# encoding


class _Encoder:
    """One-hot + z-score transform with statistics fitted on one dataset."""

    def __init__(self, train):
        self.schema = train.schema
        self.plan = []  # (feature, vocabulary or (mean, std), kept-mask)
        for f in train.input_features():
            col = train.column(f.name)
            if f.kind == "categorical":
                vocab = sorted(set(col))
                block = np.zeros((train.n, len(vocab)))
                lookup = {v: j for j, v in enumerate(vocab)}
                for i, v in enumerate(col):
                    block[i, lookup[v]] = 1.0
                keep = block.std(axis=0) > 0.0
                self.plan.append((f, ("cat", vocab, keep)))
            else:
                arr = np.asarray(col, dtype=float)
                mean, std = arr.mean(), arr.std()
                keep = np.array([std > 0.0])
                self.plan.append((f, ("cont", (mean, std), keep)))

    def column_map(self):
        out = {}
        start = 0
        for f, (_, _, keep) in self.plan:
            width = int(keep.sum())
            out[f.name] = range(start, start + width)
            start += width
        return out

    def apply(self, dataset):
        blocks = []
        for f, (tag, fit, keep) in self.plan:
            col = dataset.column(f.name)
            if tag == "cat":
                vocab = fit
                lookup = {v: j for j, v in enumerate(vocab)}
                block = np.zeros((dataset.n, len(vocab)))
                for i, v in enumerate(col):
                    j = lookup.get(v)  # unseen category -> all-zero group
                    if j is not None:
                        block[i, j] = 1.0
            else:
                mean, std = fit
                arr = np.asarray(col, dtype=float)
                block = ((arr - mean) / std if std > 0.0 else arr * 0.0)[:, None]
            blocks.append(block[:, keep])
        X = np.concatenate(blocks, axis=1) if blocks else np.zeros((dataset.n, 0))

        label_idx = next(i for i, f in enumerate(self.schema) if f.role == "label")
        y = np.array([r[label_idx] for r in dataset.rows], dtype=float)
        sens_idx = next(
            (i for i, f in enumerate(self.schema) if f.role == "sensitive"), None
        )
        s = None
        if sens_idx is not None:
            s = np.array([r[sens_idx] for r in dataset.rows], dtype=int)
        return EncodedDataset(
            X=X,
            y=y,
            s=s,
            column_map=self.column_map(),
            feature_names=tuple(f.name for f, _ in self.plan),
        )


def encode(train, others=()):
    """Encode train plus any sibling splits with train-fitted statistics.

    Returns one EncodedDataset per input, train first.  Columns constant on
    the training split are dropped from every split.
    """
    for d in others:
        if d.schema != train.schema:
            raise ValueError("all datasets passed to encode must share a schema")
    enc = _Encoder(train)
    return [enc.apply(d) for d in (train, *others)]


# ---------------------------------------------------------------------------
# related features


def resolve_related(schema, encoded, names, lambda0=None):
    """Bind related-feature names to their encoded column groups."""
    schema = _check_schema(schema)
    if not names:
        raise ValueError("related feature list is empty")
    by_name = {f.name: f for f in schema}
    groups = []
    for name in names:
        f = by_name.get(name)
        if f is None:
            raise ValueError(f"related feature {name!r} not in schema")
        if f.role != "input":
            raise ValueError(
                f"related feature {name!r} has role {f.role!r}; only input "
                "features may be regularized"
            )
        cols = tuple(encoded.column_map[name])
        if not cols:
            raise ValueError(
                f"related feature {name!r} has no encoded columns "
                "(constant on the training split)"
            )
        groups.append(cols)
    k = len(names)
    lam = np.full(k, 1.0 / k) if lambda0 is None else np.asarray(lambda0, float)
    return RelatedFeatureSet(
        features=tuple(names), column_groups=tuple(groups), lambda0=lam
    )


def drop_features(dataset, names):
    """Remove input features by name (the remove-related baseline)."""
    names = set(names)
    missing = names - {f.name for f in dataset.schema}
    if missing:
        raise ValueError(f"cannot drop unknown feature(s): {sorted(missing)}")
    keep = [
        i
        for i, f in enumerate(dataset.schema)
        if f.name not in names or f.role != "input"
    ]
    dropped_inputs = [
        f.name for f in dataset.schema if f.name in names and f.role == "input"
    ]
    if len(dropped_inputs) != len(names):
        raise ValueError("only input features can be dropped")
    return Dataset(
        rows=tuple(tuple(r[i] for i in keep) for r in dataset.rows),
        schema=tuple(dataset.schema[i] for i in keep),
        n_dropped=dataset.n_dropped,
    )


# ---------------------------------------------------------------------------
# dataset config files


@dataclasses.dataclass(frozen=True)
class DatasetConfig:
    name: str
    csv: str
    schema: tuple
    label_positive: object
    sensitive_positive: object
    related: tuple
    missing_tokens: tuple

    def __post_init__(self):
        object.__setattr__(self, "schema", _check_schema(self.schema))


def _reject_unknown(mapping, allowed, where):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        raise ValueError(f"unknown key(s) {unknown} in {where}")


def parse_dataset_config(doc, where="dataset config"):
    if not isinstance(doc, dict):
        raise ValueError(f"{where}: expected a mapping at top level")
    _reject_unknown(
        doc,
        {"name", "csv", "columns", "label", "sensitive", "related", "missing"},
        where,
    )
    for key in ("name", "csv", "columns", "label", "related"):
        if key not in doc:
            raise ValueError(f"{where}: missing required key {key!r}")

    schema = []
    for i, col in enumerate(doc["columns"]):
        _reject_unknown(col, {"name", "kind"}, f"{where}: columns[{i}]")
        schema.append(FeatureSchema(name=col["name"], kind=col["kind"], role="input"))

    label = doc["label"]
    _reject_unknown(label, {"name", "positive"}, f"{where}: label")
    schema.append(FeatureSchema(name=label["name"], kind="categorical", role="label"))
    label_positive = label.get("positive")
    if label_positive is not None:
        label_positive = str(label_positive)

    sensitive_positive = None
    if "sensitive" in doc and doc["sensitive"] is not None:
        sens = doc["sensitive"]
        _reject_unknown(sens, {"name", "positive"}, f"{where}: sensitive")
        schema.append(
            FeatureSchema(name=sens["name"], kind="categorical", role="sensitive")
        )
        if sens.get("positive") is not None:
            sensitive_positive = str(sens["positive"])

    related = tuple(doc["related"])
    input_names = {f.name for f in schema if f.role == "input"}
    for name in related:
        if name not in input_names:
            raise ValueError(f"{where}: related feature {name!r} is not an input column")

    missing = tuple(str(t) for t in doc.get("missing", DEFAULT_MISSING_TOKENS))
    return DatasetConfig(
        name=str(doc["name"]),
        csv=str(doc["csv"]),
        schema=tuple(schema),
        label_positive=label_positive,
        sensitive_positive=sensitive_positive,
        related=related,
        missing_tokens=missing,
    )


def load_dataset_config(path):
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    return parse_dataset_config(doc, where=str(path))


def builtin_config(name):
    """Load one of the dataset configs shipped inside the package."""
    resource = importlib.resources.files("relfair") / "configs" / f"{name}.yaml"
    try:
        text = resource.read_text()
    except FileNotFoundError:
        raise ValueError(f"no builtin dataset config named {name!r}") from None
    return parse_dataset_config(yaml.safe_load(text), where=f"builtin config {name!r}")


def load_from_config(cfg, data_dir="."):
    """Load the CSV a DatasetConfig points at (relative paths join data_dir)."""
    path = cfg.csv
    if not os.path.isabs(path):
        path = os.path.join(data_dir, path)
    return load_csv(
        path,
        cfg.schema,
        label_positive=cfg.label_positive,
        sensitive_positive=cfg.sensitive_positive,
        missing_tokens=cfg.missing_tokens,
    )
