"""Dataset ingestion, reduction to the qubit budget, scaling and subsampling.

Raw inputs are delimiter-separated text files described by a small schema
(delimiter, header flag, label column, categorical columns, dropped
columns). Schemas for the four study datasets are built in; arbitrary
files can supply a JSON descriptor instead.

The preparation pipeline is: stratified subsample -> PCA/LDA fitted on the
training rows only -> min-max scaling to [0, pi] fitted on the training
rows. Reduced splits can be cached to plain numeric CSV.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

DATASET_NAMES = ("kdd", "covertype", "glass", "rice", "synthetic")

DEFAULT_OUT_DIMS = 7
DEFAULT_TRAIN_CAP = 400
DEFAULT_TEST_CAP = 250

_LDA_RIDGE = 1e-6


@dataclass(frozen=True)
class DatasetSchema:
    delimiter: str = ","
    has_header: bool = False
    label_column: int = -1
    categorical_columns: frozenset = frozenset()
    drop_columns: frozenset = frozenset()
    strip_label_suffix: str = ""

    @classmethod
    def from_file(cls, path) -> "DatasetSchema":
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls(
            delimiter=raw.get("delimiter", ","),
            has_header=bool(raw.get("has_header", False)),
            label_column=int(raw.get("label_column", -1)),
            categorical_columns=frozenset(raw.get("categorical_columns", [])),
            drop_columns=frozenset(raw.get("drop_columns", [])),
            strip_label_suffix=raw.get("strip_label_suffix", ""),
        )


# Column layouts of the usual UCI distributions of the study datasets.
BUILTIN_SCHEMAS = {
    # kddcup.data_10_percent: 41 features + label, protocol/service/flag
    # categorical, labels end with a period.
    "kdd": DatasetSchema(
        label_column=41,
        categorical_columns=frozenset({1, 2, 3}),
        strip_label_suffix=".",
    ),
    # covtype.data: 54 numeric features + integer label.
    "covertype": DatasetSchema(label_column=54),
    # glass.data: Id, 9 numeric features, integer label.
    "glass": DatasetSchema(label_column=10, drop_columns=frozenset({0})),
    # rice CSV export: header, 7 numeric features + class string.
    "rice": DatasetSchema(has_header=True, label_column=7),
    "synthetic": DatasetSchema(label_column=-1),
}


@dataclass
class Dataset:
    name: str
    features: np.ndarray
    labels: np.ndarray
    n_classes: int
    label_names: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ValueError("features and labels must align")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain missing or non-finite values")
        if len(self.labels) and (
            self.labels.min() < 0 or self.labels.max() >= self.n_classes
        ):
            raise ValueError("labels must be dense in [0, n_classes)")

    def __len__(self) -> int:
        return len(self.labels)


def load_and_encode(path, name: str, schema: DatasetSchema | None = None) -> Dataset:
    """Read a delimited text file, one-hot encode categorical columns and
    map labels to dense indices."""
    if schema is None:
        if name not in BUILTIN_SCHEMAS:
            raise ValueError(
                f"no built-in schema for {name!r}; pass one explicitly"
            )
        schema = BUILTIN_SCHEMAS[name]

    rows = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=schema.delimiter)
        for line_no, row in enumerate(reader, start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if schema.has_header and line_no == 1:
                continue
            rows.append((line_no, [cell.strip() for cell in row]))
    if not rows:
        raise ValueError(f"{path}: no data rows")

    width = len(rows[0][1])
    label_col = schema.label_column % width
    feature_cols = [
        c for c in range(width) if c != label_col and c not in schema.drop_columns
    ]

    raw_labels = []
    columns = {c: [] for c in feature_cols}
    for line_no, row in rows:
        if len(row) != width:
            raise ValueError(f"{path}:{line_no}: expected {width} columns, got {len(row)}")
        label = row[label_col]
        if schema.strip_label_suffix and label.endswith(schema.strip_label_suffix):
            label = label[: -len(schema.strip_label_suffix)]
        raw_labels.append(label)
        for c in feature_cols:
            columns[c].append(row[c])

    blocks = []
    for c in feature_cols:
        values = columns[c]
        if c in schema.categorical_columns:
            categories = sorted(set(values))
            lookup = {v: i for i, v in enumerate(categories)}
            block = np.zeros((len(values), len(categories)))
            for r, v in enumerate(values):
                block[r, lookup[v]] = 1.0
            blocks.append(block)
        else:
            try:
                blocks.append(np.array([float(v) for v in values])[:, None])
            except ValueError as exc:
                raise ValueError(
                    f"{path}: column {c} is not numeric ({exc}); "
                    f"declare it categorical in the schema"
                ) from exc

    label_names = sorted(set(raw_labels))
    mapping = {v: i for i, v in enumerate(label_names)}
    labels = np.array([mapping[v] for v in raw_labels], dtype=int)
    return Dataset(
        name=name,
        features=np.hstack(blocks),
        labels=labels,
        n_classes=len(label_names),
        label_names=label_names,
    )


def make_synthetic(
    n_samples: int = 200,
    n_features: int = 3,
    n_classes: int = 2,
    seed: int = 0,
    class_sep: float = 3.0,
) -> Dataset:
    """Gaussian blobs with unit spread around class centers on a sphere of
    radius ``class_sep``; balanced classes, deterministic per seed."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 915)))
    centers = rng.normal(size=(n_classes, n_features))
    centers *= class_sep / np.linalg.norm(centers, axis=1, keepdims=True)
    labels = np.arange(n_samples) % n_classes
    labels = rng.permutation(labels)
    features = centers[labels] + rng.normal(size=(n_samples, n_features))
    return Dataset(
        name="synthetic",
        features=features,
        labels=labels,
        n_classes=n_classes,
        label_names=[str(c) for c in range(n_classes)],
    )


# ---------------------------------------------------------------------------
# reduction


@dataclass
class PcaBasis:
    mean: np.ndarray
    components: np.ndarray   # rows, descending eigenvalue order
    eigenvalues: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) @ self.components.T


@dataclass
class LdaBasis:
    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) @ self.components.T


def _fix_signs(components: np.ndarray) -> np.ndarray:
    for row in components:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1
    return components


def pca_fit_transform(X, out_dims: int):
    """Project onto the top eigenvectors of the covariance matrix."""
    X = np.asarray(X, dtype=float)
    m, d = X.shape
    if m < 2:
        raise ValueError("pca needs at least 2 samples")
    if not 1 <= out_dims <= d:
        raise ValueError(f"out_dims must be in [1, {d}], got {out_dims}")
    mean = X.mean(axis=0)
    centered = X - mean
    cov = centered.T @ centered / (m - 1)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(evals, kind="stable")[::-1]
    components = _fix_signs(evecs[:, order[:out_dims]].T.copy())
    basis = PcaBasis(mean=mean, components=components, eigenvalues=evals[order[:out_dims]])
    return centered @ components.T, basis


def lda_fit_transform(X, y, out_dims: int):
    """Project onto the leading generalized eigenvectors of (S_B, S_W).

    S_W carries a small ridge so the generalized problem stays definite.
    out_dims is capped by n_classes - 1, which is why a binary dataset
    cannot be reduced to more than one discriminant direction.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    m, d = X.shape
    classes = np.unique(y)
    max_dims = min(d, len(classes) - 1)
    if len(classes) < 2:
        raise ValueError("lda needs at least 2 classes")
    if out_dims > max_dims:
        raise ValueError(
            f"lda can produce at most {max_dims} dimensions for "
            f"{len(classes)} classes (requested {out_dims})"
        )
    mean = X.mean(axis=0)
    s_w = np.zeros((d, d))
    s_b = np.zeros((d, d))
    for c in classes:
        rows = X[y == c]
        if len(rows) < 2:
            raise ValueError(f"class {c} has fewer than 2 samples")
        mu = rows.mean(axis=0)
        centered = rows - mu
        s_w += centered.T @ centered
        gap = (mu - mean)[:, None]
        s_b += len(rows) * (gap @ gap.T)
    s_w += _LDA_RIDGE * np.eye(d)
    evals, evecs = scipy.linalg.eigh(s_b, s_w)
    order = np.argsort(evals, kind="stable")[::-1]
    components = _fix_signs(evecs[:, order[:out_dims]].T.copy())
    basis = LdaBasis(mean=mean, components=components, eigenvalues=evals[order[:out_dims]])
    return (X - mean) @ components.T, basis


# ---------------------------------------------------------------------------
# scaling


@dataclass
class FeatureScaler:
    lo: float
    hi: float
    col_min: np.ndarray
    col_max: np.ndarray

    @classmethod
    def fit(cls, X, lo: float, hi: float) -> "FeatureScaler":
        if hi <= lo:
            raise ValueError("need hi > lo")
        X = np.asarray(X, dtype=float)
        return cls(lo=lo, hi=hi, col_min=X.min(axis=0), col_max=X.max(axis=0))

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        span = self.col_max - self.col_min
        out = np.empty_like(X)
        constant = span <= 0
        mid = 0.5 * (self.lo + self.hi)
        with np.errstate(invalid="ignore", divide="ignore"):
            scaled = (X - self.col_min) / span * (self.hi - self.lo) + self.lo
        out[:, :] = np.where(constant, mid, scaled)
        # clamp so held-out rows cannot leave the fitted range
        return np.clip(out, self.lo, self.hi)


def scale_features(X, lo: float, hi: float) -> np.ndarray:
    """Per-column min-max scaling of a single matrix to [lo, hi]."""
    return FeatureScaler.fit(X, lo, hi).transform(X)


# ---------------------------------------------------------------------------
# subsampling


def _largest_remainder(weights: np.ndarray, total: int, caps: np.ndarray) -> np.ndarray:
    """Integer allocation proportional to weights, capped, summing to total."""
    weights = np.asarray(weights, dtype=float)
    caps = np.asarray(caps, dtype=int)
    if caps.sum() < total:
        raise ValueError("caps cannot satisfy the requested total")
    raw = weights / max(weights.sum(), 1e-300) * total
    alloc = np.minimum(np.floor(raw).astype(int), caps)
    remainders = raw - alloc
    while alloc.sum() < total:
        open_slots = alloc < caps
        remainders_masked = np.where(open_slots, remainders, -np.inf)
        j = int(np.argmax(remainders_masked))
        alloc[j] += 1
        remainders[j] -= 1.0
    return alloc


def subsample(
    ds: Dataset,
    n_train: int = DEFAULT_TRAIN_CAP,
    n_test: int = DEFAULT_TEST_CAP,
    seed: int = 0,
    stratify: bool = True,
):
    """Disjoint train/test index sets, capped at (n_train, n_test).

    Smaller datasets are split in the same n_train:n_test proportion.
    Stratification keeps per-class shares and, when capacity allows, at
    least one training sample per class.
    """
    m = len(ds)
    if m < 2:
        raise ValueError("dataset too small to split")
    if m >= n_train + n_test:
        take_train, take_test = n_train, n_test
    else:
        take_train = int(round(m * n_train / (n_train + n_test)))
        take_train = min(max(take_train, 1), m - 1)
        take_test = m - take_train

    rng = np.random.default_rng(np.random.SeedSequence((seed, 407)))
    if not stratify:
        perm = rng.permutation(m)
        return np.sort(perm[:take_train]), np.sort(perm[take_train : take_train + take_test])

    class_indices = []
    sizes = []
    for c in range(ds.n_classes):
        idx = np.nonzero(ds.labels == c)[0]
        if idx.size:
            class_indices.append(rng.permutation(idx))
            sizes.append(idx.size)
    sizes = np.array(sizes)

    train_quota = _largest_remainder(sizes, take_train, sizes)
    if take_train >= len(sizes):
        # keep every class visible during training when capacity allows
        for j in range(len(sizes)):
            while train_quota[j] == 0:
                donor = int(np.argmax(train_quota))
                if train_quota[donor] <= 1:
                    break
                train_quota[donor] -= 1
                train_quota[j] += 1
    remaining = sizes - train_quota
    test_quota = _largest_remainder(remaining, take_test, remaining)

    train_idx = []
    test_idx = []
    for idx, q_tr, q_te in zip(class_indices, train_quota, test_quota):
        train_idx.extend(idx[:q_tr])
        test_idx.extend(idx[q_tr : q_tr + q_te])
    return np.sort(np.array(train_idx, dtype=int)), np.sort(np.array(test_idx, dtype=int))


# ---------------------------------------------------------------------------
# end-to-end preparation


@dataclass
class PreparedData:
    train_X: np.ndarray
    train_y: np.ndarray
    test_X: np.ndarray
    test_y: np.ndarray
    n_dims: int
    n_classes: int
    label_names: list


def prepare(
    ds: Dataset,
    preprocessing: str,
    out_dims: int = DEFAULT_OUT_DIMS,
    seed: int = 0,
    n_train: int = DEFAULT_TRAIN_CAP,
    n_test: int = DEFAULT_TEST_CAP,
    lo: float = 0.0,
    hi: float = math.pi,
    stratify: bool = True,
) -> PreparedData:
    """Subsample, reduce (fit on train only) and scale (fit on train only)."""
    if preprocessing not in ("pca", "lda"):
        raise ValueError(f"unknown preprocessing {preprocessing!r}")
    tr, te = subsample(ds, n_train=n_train, n_test=n_test, seed=seed, stratify=stratify)
    train_X, train_y = ds.features[tr], ds.labels[tr]
    test_X, test_y = ds.features[te], ds.labels[te]

    d = train_X.shape[1]
    if preprocessing == "pca":
        dims = min(out_dims, d)
        train_R, basis = pca_fit_transform(train_X, dims)
    else:
        dims = min(out_dims, d, len(np.unique(train_y)) - 1)
        if dims < 1:
            raise ValueError("lda cannot produce any dimensions for this split")
        train_R, basis = lda_fit_transform(train_X, train_y, dims)
    test_R = basis.transform(test_X)

    scaler = FeatureScaler.fit(train_R, lo, hi)
    return PreparedData(
        train_X=scaler.transform(train_R),
        train_y=train_y,
        test_X=scaler.transform(test_R),
        test_y=test_y,
        n_dims=dims,
        n_classes=ds.n_classes,
        label_names=list(ds.label_names),
    )


def save_split_cache(prep: PreparedData, path) -> None:
    """Plain numeric CSV cache: split,label,f0..f{k-1} with a JSON header line."""
    header = {
        "n_dims": prep.n_dims,
        "n_classes": prep.n_classes,
        "label_names": prep.label_names,
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        fh.write("split,label," + ",".join(f"f{i}" for i in range(prep.n_dims)) + "\n")
        for split, X, y in (("train", prep.train_X, prep.train_y), ("test", prep.test_X, prep.test_y)):
            for row, label in zip(X, y):
                fh.write(f"{split},{label}," + ",".join(repr(v) for v in row) + "\n")


def load_split_cache(path) -> PreparedData:
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline().lstrip("# ").strip())
        fh.readline()  # column names
        rows = {"train": ([], []), "test": ([], [])}
        for line in fh:
            parts = line.strip().split(",")
            if not parts or parts == [""]:
                continue
            rows[parts[0]][0].append([float(v) for v in parts[2:]])
            rows[parts[0]][1].append(int(parts[1]))
    return PreparedData(
        train_X=np.array(rows["train"][0]),
        train_y=np.array(rows["train"][1], dtype=int),
        test_X=np.array(rows["test"][0]),
        test_y=np.array(rows["test"][1], dtype=int),
        n_dims=int(header["n_dims"]),
        n_classes=int(header["n_classes"]),
        label_names=list(header["label_names"]),
    )
