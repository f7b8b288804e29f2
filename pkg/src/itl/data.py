"""Datasets: CSV ingestion, standardization, splits and synthetic generators."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.stats import norm


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        X = np.asarray(X, float)
        if X.shape[0] == 0:
            raise DataError("cannot standardize an empty dataset")
        scale = X.std(axis=0)  # population std
        bad = np.flatnonzero(~(scale > 0))
        if bad.size:
            raise DataError(f"constant feature column(s) {bad.tolist()} cannot be standardized")
        return cls(X.mean(axis=0), scale)

    @classmethod
    def identity(cls, d: int) -> "Standardizer":
        return cls(np.zeros(d), np.ones(d))

    @property
    def dim(self) -> int:
        return len(self.mean)

    def transform(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        if X.shape[1] != self.dim:
            raise DataError(f"expected {self.dim} features, got {X.shape[1]}")
        return (X - self.mean) / self.scale

    def inverse(self, Z) -> np.ndarray:
        return np.asarray(Z, float) * self.scale + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["mean"], float), np.asarray(d["scale"], float))


@dataclass(frozen=True)
class Dataset:
    """Raw-unit features ``X`` plus the standardizer to apply to them.

    ``y`` holds regression targets, +-1 labels, or ``None`` (unsupervised).
    """

    X: np.ndarray
    y: Optional[np.ndarray]
    standardizer: Standardizer
    feature_names: tuple = ()
    index: Optional[np.ndarray] = field(default=None, compare=False)

    def __post_init__(self):
        X = np.asarray(self.X, float)
        if X.ndim != 2:
            raise DataError("X must be a 2-D array")
        if not np.isfinite(X).all():
            raise DataError("non-finite feature values")
        object.__setattr__(self, "X", X)
        if self.y is not None:
            y = np.asarray(self.y, float)
            if y.shape != (X.shape[0],):
                raise DataError("y length does not match X")
            if not np.isfinite(y).all():
                raise DataError("non-finite target values")
            object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    @property
    def Z(self) -> np.ndarray:
        """Standardized features."""
        return self.standardizer.transform(self.X)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        base = self.index if self.index is not None else np.arange(self.n)
        return replace(self, X=self.X[idx], y=None if self.y is None else self.y[idx], index=base[idx])

    def with_labels_pm1(self) -> "Dataset":
        """Map a two-valued target column onto {-1, +1} (larger value -> +1)."""
        vals = np.unique(self.y)
        if vals.size != 2:
            raise DataError(f"expected exactly two classes, found {vals.size}")
        return replace(self, y=np.where(self.y == vals[1], 1.0, -1.0))


def make_dataset(X, y=None, standardize: bool = True, feature_names=()) -> Dataset:
    X = np.atleast_2d(np.asarray(X, float))
    if X.shape[0] == 0:
        raise DataError("empty dataset")
    st = Standardizer.fit(X) if standardize else Standardizer.identity(X.shape[1])
    return Dataset(X, y, st, tuple(feature_names))


def read_csv_matrix(path, has_header: bool = True):
    """Read a rectangular numeric CSV. Returns ``(header, rows)``."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    header = None
    if has_header and rows:
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
    width = len(header) if header is not None else (len(rows[0]) if rows else 0)
    out = np.empty((len(rows), width))
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"row {i + 1}: expected {width} columns, got {len(r)}")
        for j, c in enumerate(r):
            try:
                out[i, j] = float(c)
            except ValueError:
                raise DataError(f"non-numeric cell {c!r} at row {i + 1}, column {j + 1}") from None
    if not np.isfinite(out).all():
        i, j = np.argwhere(~np.isfinite(out))[0]
        raise DataError(f"non-finite cell at row {i + 1}, column {j + 1}")
    return header, out


def load_csv(path, target_column=None, has_header: bool = True, task: str = "qr",
             standardize: bool = True) -> Dataset:
    """Load a dataset from CSV.

    ``target_column`` is a header name or a 0-based index; ``None`` means no
    target (level-set estimation). For ``task='csc'`` the target is mapped to
    {-1, +1}. Features are standardized over all rows.
    """
    header, M = read_csv_matrix(path, has_header)
    if M.shape[0] == 0:
        raise DataError(f"{path}: no data rows")
    names = header or [f"x{j}" for j in range(M.shape[1])]
    y = None
    if target_column is not None:
        if isinstance(target_column, str) and not target_column.lstrip("-").isdigit():
            if target_column not in names:
                raise DataError(f"target column {target_column!r} not found in header")
            tj = names.index(target_column)
        else:
            tj = int(target_column)
            if not -M.shape[1] <= tj < M.shape[1]:
                raise DataError(f"target column index {tj} out of range")
            tj %= M.shape[1]
        y = M[:, tj]
        M = np.delete(M, tj, axis=1)
        names = [c for k, c in enumerate(names) if k != tj]
    ds = make_dataset(M, y, standardize, names)
    if task == "csc":
        ds = ds.with_labels_pm1()
    return ds


def split(ds: Dataset, train_fraction: float = 0.7, seed: int = 0, standardize: bool = True):
    """Seeded shuffle split; the standardizer is refit on the train part."""
    if not 0 < train_fraction < 1:
        raise DataError("train_fraction must lie in (0, 1)")
    n_train = int(round(train_fraction * ds.n))
    if n_train == 0 or n_train == ds.n:
        raise DataError(f"split of n={ds.n} at {train_fraction} leaves an empty side")
    perm = np.random.default_rng(seed).permutation(ds.n)
    train, test = ds.subset(perm[:n_train]), ds.subset(perm[n_train:])
    st = Standardizer.fit(train.X) if standardize else Standardizer.identity(ds.d)
    return replace(train, standardizer=st), replace(test, standardizer=st)


# ---------------------------------------------------------------- synthetic

SINE_X_MAX = 1.5


def sine_signal(x):
    x = np.asarray(x, float)
    return np.sin(2 * np.pi * x) * (1 + np.sin(2 * np.pi * x / 3))


def sine_noise_std(x):
    """Linear decrease from 1.2 at x = 0 to 0.2 at x = 1.5."""
    return 1.2 - (1.0 / SINE_X_MAX) * np.asarray(x, float)


def sine_quantile(x, theta):
    """Analytic conditional quantile of the sine benchmark."""
    return sine_signal(x) + sine_noise_std(x) * norm.ppf(theta)


def gen_sine(n: int, seed: int = 0, standardize: bool = True) -> Dataset:
    if n < 1:
        raise DataError("n must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, SINE_X_MAX, size=n)
    y = sine_signal(x) + sine_noise_std(x) * rng.standard_normal(n)
    return make_dataset(x[:, None], y, standardize, ("x",))


BLOB_CENTER = np.array([2.0, 2.0])


def gen_blobs(n: int, seed: int = 0, standardize: bool = True) -> Dataset:
    """Isotropic unit-variance 2-D Gaussian around ``BLOB_CENTER``."""
    if n < 2:
        raise DataError("n must be >= 2")
    rng = np.random.default_rng(seed)
    X = BLOB_CENTER + rng.standard_normal((n, 2))
    return make_dataset(X, None, standardize, ("x0", "x1"))


def gen_two_moons(n: int, noise: float = 0.4, seed: int = 0, standardize: bool = True) -> Dataset:
    from sklearn.datasets import make_moons

    if n < 2:
        raise DataError("n must be >= 2")
    X, lab = make_moons(n_samples=n, noise=noise, random_state=seed)
    return make_dataset(X, np.where(lab == 1, 1.0, -1.0), standardize, ("x0", "x1"))


GENERATORS = {"sine": gen_sine, "blobs": gen_blobs, "two-moons": gen_two_moons}
