"""Classification datasets: CSV loading, splits, min-max scaling, synthetic sets."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np


class DatasetError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """``labels`` hold class indices 1..c."""

    features: np.ndarray
    labels: np.ndarray
    c: int
    name: str = "data"
    class_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] < 1:
            raise DatasetError("features must be a non-empty n x d matrix")
        if y.shape != (X.shape[0],):
            raise DatasetError("labels must have one entry per row")
        if not np.all(np.isfinite(X)):
            raise DatasetError("non-finite feature value")
        if y.min() < 1 or y.max() > self.c:
            raise DatasetError(f"labels must lie in [1, {self.c}]")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if not self.class_names:
            object.__setattr__(self, "class_names", tuple(str(k) for k in range(1, self.c + 1)))

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def one_hot(self) -> np.ndarray:
        out = np.zeros((self.n, self.c))
        out[np.arange(self.n), self.labels - 1] = 1.0
        return out

    def subset(self, rows, suffix: str = "") -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return replace(self, features=self.features[rows], labels=self.labels[rows],
                       name=self.name + suffix)


@dataclass(frozen=True, eq=False)
class Split:
    train: Dataset
    test: Dataset


def load_csv(path, label_column: int | str = -1, has_header: bool = True,
             name: str | None = None) -> Dataset:
    """Read a CSV with one label column; labels are numbered by first appearance."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    header = None
    if has_header and rows:
        header, rows = rows[0], rows[1:]
    if not rows:
        raise DatasetError(f"{path}: no data rows")
    width = len(rows[0])
    if isinstance(label_column, str):
        if header is None or label_column not in header:
            raise DatasetError(f"{path}: no column named {label_column!r}")
        col = header.index(label_column)
    else:
        col = label_column % width
    feats, labels, names = [], [], {}
    for lineno, row in enumerate(rows, 2 if header else 1):
        if len(row) != width:
            raise DatasetError(f"{path}:{lineno}: expected {width} cells, got {len(row)}")
        values = []
        for j, cell in enumerate(row):
            if j == col:
                continue
            cell = cell.strip()
            if cell == "" or cell == "?":
                raise DatasetError(f"{path}:{lineno}: missing value in column {j + 1}")
            try:
                values.append(float(cell))
            except ValueError:
                raise DatasetError(f"{path}:{lineno}: non-numeric value {cell!r} in column {j + 1}") from None
        label = row[col].strip()
        labels.append(names.setdefault(label, len(names) + 1))
        feats.append(values)
    if len(names) < 2:
        raise DatasetError(f"{path}: need at least two classes, found {len(names)}")
    return Dataset(np.array(feats), np.array(labels), len(names), name or path.stem,
                   tuple(names))


def save_csv(dataset: Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{j + 1}" for j in range(dataset.d)] + ["label"])
        for row, label in zip(dataset.features, dataset.labels):
            w.writerow([repr(float(v)) for v in row] + [dataset.class_names[label - 1]])


def _check_classes(source: Dataset, train: Dataset):
    missing = set(np.unique(source.labels)) - set(np.unique(train.labels))
    if missing:
        raise DatasetError(f"classes {sorted(missing)} missing from the training part")


def split(dataset: Dataset, train_fraction: float, rng: np.random.Generator,
          stratify: bool = False) -> Split:
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must be in (0, 1)")
    if stratify:
        train_rows, test_rows = [], []
        for k in np.unique(dataset.labels):
            rows = rng.permutation(np.flatnonzero(dataset.labels == k))
            cut = int(round(train_fraction * len(rows)))
            train_rows.extend(rows[:cut])
            test_rows.extend(rows[cut:])
        train_rows, test_rows = np.sort(train_rows), np.sort(test_rows)
    else:
        order = rng.permutation(dataset.n)
        cut = int(round(train_fraction * dataset.n))
        train_rows, test_rows = order[:cut], order[cut:]
    if len(train_rows) == 0 or len(test_rows) == 0:
        raise DatasetError("split leaves an empty part")
    out = Split(dataset.subset(train_rows, "/train"), dataset.subset(test_rows, "/test"))
    _check_classes(dataset, out.train)
    return out


def kfold(dataset: Dataset, k: int, rng: np.random.Generator) -> list[Split]:
    if not 2 <= k <= dataset.n:
        raise ValueError(f"need 2 <= k <= n, got k={k}, n={dataset.n}")
    folds = np.array_split(rng.permutation(dataset.n), k)
    splits = []
    for i, test_rows in enumerate(folds):
        train_rows = np.concatenate([f for j, f in enumerate(folds) if j != i])
        s = Split(dataset.subset(train_rows, f"/fold{i + 1}-train"),
                  dataset.subset(test_rows, f"/fold{i + 1}-test"))
        _check_classes(dataset, s.train)
        splits.append(s)
    return splits


def minmax_params(features: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column minimum and range, as used by ``apply_minmax``."""
    lo = features.min(axis=0)
    return lo, features.max(axis=0) - lo


def apply_minmax(features: np.ndarray, lo: np.ndarray, span: np.ndarray) -> np.ndarray:
    # constant columns map to 0; values outside the fitted range are not clipped
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (np.asarray(features, dtype=np.float64) - lo) / safe, 0.0)


def normalize_minmax(s: Split) -> Split:
    """Scale features to [0, 1] with the training min/max; constant features become 0."""
    lo, span = minmax_params(s.train.features)
    return Split(replace(s.train, features=apply_minmax(s.train.features, lo, span)),
                 replace(s.test, features=apply_minmax(s.test.features, lo, span)))


def make_blobs(n: int, d: int, c: int, separation: float, rng: np.random.Generator,
               noise: float = 1.0) -> Dataset:
    """Gaussian clusters whose centres are at least ``separation`` apart."""
    if n < c or c < 2 or d < 1:
        raise ValueError("need n >= c >= 2 and d >= 1")
    box = max(separation, 1.0) * max(1.0, c ** (1.0 / d))
    for _ in range(10_000):
        centers = rng.uniform(-box, box, size=(c, d))
        gaps = np.linalg.norm(centers[:, None] - centers[None, :], axis=2)
        if gaps[np.triu_indices(c, 1)].min() >= separation:
            break
        box *= 1.01
    labels = np.arange(n) % c + 1
    labels = rng.permutation(labels)
    X = centers[labels - 1] + noise * rng.standard_normal((n, d))
    return Dataset(X, labels, c, f"blobs-{n}x{d}-c{c}")


def make_two_moons(n: int, noise: float, rng: np.random.Generator) -> Dataset:
    if n < 2:
        raise ValueError("need n >= 2")
    n_top = (n + 1) // 2
    t_top = rng.uniform(0, np.pi, n_top)
    t_bot = rng.uniform(0, np.pi, n - n_top)
    top = np.column_stack([np.cos(t_top), np.sin(t_top)])
    bot = np.column_stack([1 - np.cos(t_bot), 0.5 - np.sin(t_bot)])
    X = np.vstack([top, bot]) + noise * rng.standard_normal((n, 2))
    y = np.r_[np.ones(n_top, dtype=np.int64), np.full(n - n_top, 2)]
    order = rng.permutation(n)
    return Dataset(X[order], y[order], 2, f"moons-{n}")
