"""Pre-processing strategy: least-squares removal of the protected signal.

Each feature column is replaced by its residual against the centred
protected attribute.  For a column z and centred attribute ``d = A - mean(A)``
the fitted coefficient is the one-variable least-squares solution
``beta = (d @ z) / (d @ d)`` and the output column is ``z - d * beta``, which
is exactly orthogonal to ``d`` on the fitting data.  Discrete columns pass
through one-hot expansion first and every indicator is residualised as an
ordinary numeric column, so the transformed dataset is fully continuous and
no longer contains the protected attribute anywhere in its features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fairnoise.dataset import CONTINUOUS, Dataset, FeatureKind


class StrategyError(ValueError):
    pass


def _fingerprint(ds: Dataset) -> tuple:
    return tuple((name, kind.tag, kind.categories) for name, kind in zip(ds.names, ds.kinds))


def _design(ds: Dataset):
    """Expand a dataset into numeric columns (one-hot for discrete)."""
    columns = []
    names = []
    for name, kind, col in zip(ds.names, ds.kinds, ds.columns):
        if kind.tag == CONTINUOUS:
            columns.append(col.astype(np.float64))
            names.append(name)
        else:
            for slot, value in enumerate(kind.categories):
                columns.append((col == slot).astype(np.float64))
                names.append(f"{name}={value}")
    return columns, tuple(names)


@dataclass(frozen=True)
class CorrelationRemover:
    beta: np.ndarray
    protected_mean: float
    output_names: tuple
    fingerprint: tuple


def fit_correlation_remover(ds: Dataset) -> CorrelationRemover:
    ds.require_binary_protected()
    a = ds.protected.astype(np.float64)
    a_mean = float(a.mean())
    d = a - a_mean
    denom = float(d @ d)
    if denom <= 0.0:
        raise StrategyError("constant protected column")
    columns, names = _design(ds)
    beta = np.array([float(d @ z) / denom for z in columns])
    return CorrelationRemover(beta, a_mean, names, _fingerprint(ds))


def transform(cr: CorrelationRemover, ds: Dataset) -> Dataset:
    """Residualise every expanded column; labels and protected are untouched."""
    if _fingerprint(ds) != cr.fingerprint:
        raise StrategyError("dataset columns do not match the fitted remover")
    columns, names = _design(ds)
    d = ds.protected.astype(np.float64) - cr.protected_mean
    residuals = [z - d * b for z, b in zip(columns, cr.beta)]
    kinds = tuple(FeatureKind(CONTINUOUS) for _ in residuals)
    return Dataset.build(residuals, kinds, names, ds.labels, ds.protected,
                         ds.protected_values, ds.label_name, ds.protected_name)
