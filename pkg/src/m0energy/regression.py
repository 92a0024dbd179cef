"""Zero-intercept multi-linear model fitting and validation metrics.

fit() solves  min ||e - C @ beta||^2  with no constant term, via least
squares on the raw counter matrix.  Metrics:

    MAPE  mean(|pred - actual| * 100 / actual)
    RESD  population standard deviation of the signed relative errors
          (pred - actual) * 100 / actual
    R^2   1 - SSres / SStot

k-fold cross-validation shuffles rows with a seeded generator (the seed is
recorded in the result), splits them into k folds whose sizes differ by at
most one, and scores each fold with a model fitted on the other k-1.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetError, DegenerateDesignError

COUNTER_NAMES = ("c1", "c2", "c3", "c4", "c5", "c6")
CSV_HEADER = ["c1", "c2", "c3", "c4", "c5", "c6", "energy_nj"]
MIN_ROWS = 7  # one more row than coefficients


@dataclass
class RegressionDataset:
    counts: np.ndarray   # (n, 6) non-negative event counts
    energies: np.ndarray  # (n,) measured energy in nJ, all > 0
    name: str = ""

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        self.energies = np.asarray(self.energies, dtype=float)
        if self.counts.ndim != 2 or self.counts.shape[1] != 6:
            raise DatasetError("counter matrix must be n x 6")
        if self.energies.shape != (self.counts.shape[0],):
            raise DatasetError("need one energy per counter row")
        if np.any(self.counts < 0):
            raise DatasetError("counters must be non-negative")
        if np.any(self.energies <= 0):
            raise DatasetError("energies must be positive")
        if np.any(~self.counts.any(axis=1)):
            raise DatasetError("dataset contains an all-zero counter row")

    def __len__(self):
        return self.counts.shape[0]

    def subset(self, indices):
        return RegressionDataset(self.counts[indices], self.energies[indices],
                                 self.name)


@dataclass
class FitResult:
    beta: tuple
    mape: float
    resd: float
    r2: float
    warnings: list = field(default_factory=list)


@dataclass
class FoldScore:
    fold: int
    r2: float
    mape: float


@dataclass
class CVResult:
    mean_r2: float
    sd_r2: float
    folds: list
    k: int
    seed: int


def load_dataset(path, name=None):
    """Read a `c1,..,c6,energy_nj` CSV; errors carry the offending line."""
    counts = []
    energies = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetError("%s: empty file" % path) from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise DatasetError("%s: header must be %s" % (path, ",".join(CSV_HEADER)))
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 7:
                raise DatasetError("%s: line %d: expected 7 fields, got %d"
                                   % (path, lineno, len(row)))
            try:
                values = [float(x) for x in row]
            except ValueError:
                raise DatasetError("%s: line %d: non-numeric value" % (path, lineno)) from None
            counts.append(values[:6])
            energies.append(values[6])
    if not counts:
        raise DatasetError("%s: no data rows" % path)
    return RegressionDataset(np.array(counts), np.array(energies),
                             name or str(path))


def save_dataset(path, dataset):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row, e in zip(dataset.counts, dataset.energies):
            writer.writerow([("%d" % v) if float(v).is_integer() else repr(float(v))
                             for v in row] + [repr(float(e))])


def _dependent_columns(counts, rank):
    # a column is flagged when dropping it does not reduce the rank
    cols = []
    for j in range(counts.shape[1]):
        reduced = np.delete(counts, j, axis=1)
        if np.linalg.matrix_rank(reduced) == rank:
            cols.append(COUNTER_NAMES[j])
    return cols


def fit(dataset):
    """Zero-intercept least squares over the six counters."""
    n = len(dataset)
    if n < MIN_ROWS:
        raise DatasetError("need at least %d rows for a 6-coefficient fit, got %d"
                           % (MIN_ROWS, n))
    counts = dataset.counts
    rank = np.linalg.matrix_rank(counts)
    if rank < 6:
        raise DegenerateDesignError(rank, _dependent_columns(counts, rank))
    beta, _, _, _ = np.linalg.lstsq(counts, dataset.energies, rcond=None)
    pred = counts @ beta
    warnings = ["negative coefficient %s = %.6g" % (COUNTER_NAMES[i], b)
                for i, b in enumerate(beta) if b < 0]
    return FitResult(tuple(float(b) for b in beta),
                     mape(pred, dataset.energies),
                     resd(pred, dataset.energies),
                     r2(pred, dataset.energies),
                     warnings)


def _check_pair(pred, actual, positive_actual):
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape or pred.ndim != 1 or pred.size == 0:
        raise ValueError("pred and actual must be equal-length nonempty vectors")
    if positive_actual and np.any(actual <= 0):
        raise ValueError("actual values must be positive")
    return pred, actual


def mape(pred, actual):
    """Mean absolute percentage error."""
    pred, actual = _check_pair(pred, actual, positive_actual=True)
    return float(np.mean(np.abs(pred - actual) * 100.0 / actual))


def resd(pred, actual):
    """Population SD of the signed relative percentage errors."""
    pred, actual = _check_pair(pred, actual, positive_actual=True)
    errors = (pred - actual) * 100.0 / actual
    return float(np.std(errors))


def r2(pred, actual):
    """Coefficient of determination, 1 - SSres/SStot."""
    pred, actual = _check_pair(pred, actual, positive_actual=False)
    ss_res = float(np.sum((actual - pred) ** 2))
    ss_tot = float(np.sum((actual - np.mean(actual)) ** 2))
    if ss_tot == 0:
        raise ValueError("R^2 undefined for constant actual values")
    return 1.0 - ss_res / ss_tot


def fold_indices(n, k, seed):
    """Shuffled row indices split into k folds with sizes differing by <= 1."""
    if k < 2:
        raise DatasetError("k must be at least 2, got %d" % k)
    if k > n:
        raise DatasetError("k=%d exceeds dataset size %d" % (k, n))
    rng = np.random.default_rng(seed)
    return np.array_split(rng.permutation(n), k)


def kfold_cv(dataset, k=10, seed=0):
    """k-fold cross-validation; returns per-fold and aggregate R^2.

    A fold with constant actual values (always the case for leave-one-out)
    has no defined R^2 and is scored nan, which propagates to the mean.
    """
    folds = fold_indices(len(dataset), k, seed)
    all_idx = np.arange(len(dataset))
    scores = []
    for i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(all_idx, test_idx, assume_unique=False)
        model = fit(dataset.subset(train_idx))
        pred = dataset.counts[test_idx] @ np.array(model.beta)
        actual = dataset.energies[test_idx]
        ss_tot = float(np.sum((actual - np.mean(actual)) ** 2))
        fold_r2 = r2(pred, actual) if ss_tot > 0 else float("nan")
        scores.append(FoldScore(i, fold_r2, mape(pred, actual)))
    r2s = np.array([s.r2 for s in scores])
    return CVResult(float(np.mean(r2s)), float(np.std(r2s)), scores, k, seed)
