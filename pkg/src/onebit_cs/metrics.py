"""Empirical performance measures between a recovered signal and ground truth.

Scale never matters: both vectors are normalized before comparison, matching
the sign measurement's invariance to amplitude.  False-positive and
false-negative rates are computed over the true-zero and true-nonzero site
classes respectively; an empty class is reported as absent (None), not zero.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = ["TrialMetrics", "MetricsSummary", "ZeroVector", "compute_metrics", "aggregate", "default_zero_tol"]


class ZeroVector(Exception):
    """A vector with zero norm cannot be compared directionally."""


@dataclass(frozen=True)
class TrialMetrics:
    mse: float
    direction_cosine: float
    overlap_m: float
    fp: Optional[float]
    fn_: Optional[float]
    support_size_est: int


@dataclass(frozen=True)
class MetricsSummary:
    """Per-field arithmetic mean / sample std (n-1) / standard error."""

    count: int
    mean: dict
    std: dict
    stderr: dict


def default_zero_tol(n: int) -> float:
    """Support-estimation threshold, scaled to the sqrt(N) norm convention.

    The shrinkage-based recoverers produce exact zeros, so this rarely
    matters; it pins down the FP/FN definition for outputs that do not.
    """
    return 1e-9 * math.sqrt(n)


def compute_metrics(x0: np.ndarray, x_hat: np.ndarray,
                    zero_tol: Optional[float] = None) -> TrialMetrics:
    """Compare a recovered vector against the true signal.

    mse is the squared distance between the unit-normalized vectors, equal to
    2 (1 - cosine); fp and fn count support mistakes above/below ``zero_tol``
    (default ``1e-9 sqrt(N)``).
    """
    x0 = np.asarray(x0, dtype=float)
    x_hat = np.asarray(x_hat, dtype=float)
    if x0.shape != x_hat.shape:
        raise ValueError(f"shape mismatch: {x0.shape} vs {x_hat.shape}")
    n0 = np.linalg.norm(x0)
    nh = np.linalg.norm(x_hat)
    if n0 == 0.0 or nh == 0.0:
        raise ZeroVector("cannot compare a zero-norm vector")
    if zero_tol is None:
        zero_tol = default_zero_tol(x0.size)
    cosine = float(x0 @ x_hat / (n0 * nh))
    mse = float(np.sum((x_hat / nh - x0 / n0) ** 2))
    overlap = float(x0 @ x_hat / x0.size)
    true_zero = x0 == 0.0
    est_nonzero = np.abs(x_hat) > zero_tol
    nz_class = int(true_zero.sum())
    nn_class = x0.size - nz_class
    fp = float((true_zero & est_nonzero).sum() / nz_class) if nz_class else None
    fn = float((~true_zero & ~est_nonzero).sum() / nn_class) if nn_class else None
    return TrialMetrics(mse=mse, direction_cosine=cosine, overlap_m=overlap,
                        fp=fp, fn_=fn, support_size_est=int(est_nonzero.sum()))


_FIELDS = ("mse", "direction_cosine", "overlap_m", "fp", "fn_")


def aggregate(records: Sequence[TrialMetrics]) -> MetricsSummary:
    """Arithmetic mean, sample standard deviation (n-1 denominator, 0 for a
    single record), and standard error per metric field.

    Absent fp/fn values are skipped; each field's statistics run over the
    records where it is present.
    """
    if not records:
        raise ValueError("aggregate requires at least one record")
    mean, std, err = {}, {}, {}
    for name in _FIELDS:
        vals = np.array([getattr(r, name) for r in records
                         if getattr(r, name) is not None], dtype=float)
        if vals.size == 0:
            mean[name] = std[name] = err[name] = None
            continue
        mean[name] = float(vals.mean())
        std[name] = float(vals.std(ddof=1)) if vals.size > 1 else 0.0
        err[name] = std[name] / math.sqrt(vals.size)
    return MetricsSummary(count=len(records), mean=mean, std=std, stderr=err)
