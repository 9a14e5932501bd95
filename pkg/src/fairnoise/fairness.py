"""Group fairness metrics over binary predictions.

All four metrics compare positive-outcome rates between the two protected
groups and live in [0, 1]:

* ``dp`` -- demographic parity: |P{f=1 | A=0} - P{f=1 | A=1}|
* ``fp`` -- false positive difference, the same gap restricted to Y=0
* ``tp`` -- true positive difference, restricted to Y=1
* ``eo`` -- equalized odds, scored as max(fp, tp): zero exactly when both
  label slices are balanced, which is the all-y condition collapsed to the
  worse slice

Rates with an empty denominator are flagged undefined and metrics raise on
them rather than propagating NaN; callers that sweep noisy replicates treat
such draws as discarded repetitions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fairnoise import kernels

METRICS = ("dp", "eo", "fp", "tp")


class FairnessError(ValueError):
    pass


class EmptyCellError(FairnessError):
    """A required (label, group) cell has no rows."""


@dataclass(frozen=True)
class GroupRates:
    """Counts and positive-outcome mass per (Y, A) cell and per group.

    ``pos`` holds expected positives: integer-valued for hard predictions,
    fractional when the predictor is randomised and its per-row positive
    probabilities are aggregated directly.
    """

    n: np.ndarray          # (2, 2) int64, indexed [y, a]
    pos: np.ndarray        # (2, 2) float64
    n_group: np.ndarray    # (2,) int64
    pos_group: np.ndarray  # (2,) float64

    def cell_defined(self, y: int, a: int) -> bool:
        return self.n[y, a] > 0

    def group_defined(self, a: int) -> bool:
        return self.n_group[a] > 0

    def cell_rate(self, y: int, a: int) -> float:
        if not self.cell_defined(y, a):
            raise EmptyCellError(f"empty (Y={y}, A={a}) cell")
        return float(self.pos[y, a] / self.n[y, a])

    def group_rate(self, a: int) -> float:
        if not self.group_defined(a):
            raise EmptyCellError("empty protected group")
        return float(self.pos_group[a] / self.n_group[a])


def _validate_binary(name, arr):
    arr = np.asarray(arr)
    if arr.ndim != 1:
        raise FairnessError(f"{name} must be one-dimensional")
    if not np.isin(arr, (0, 1)).all():
        raise FairnessError(f"{name} must be binary")
    return arr.astype(np.int64)


def group_rates(preds, labels, protected) -> GroupRates:
    """Exact integer counting of predictions into (Y, A) cells."""
    preds = _validate_binary("preds", preds)
    return group_expected_rates(preds.astype(np.float64), labels, protected)


def group_expected_rates(positive_probs, labels, protected) -> GroupRates:
    """Cell aggregation of per-row positive probabilities.

    For 0/1 probabilities this coincides with :func:`group_rates`; for a
    randomised predictor it aggregates the exact expected positives, which
    marginalises the randomisation instead of sampling it.
    """
    probs = np.asarray(positive_probs, dtype=np.float64)
    labels = _validate_binary("labels", labels)
    protected = _validate_binary("protected", protected)
    if not (len(probs) == len(labels) == len(protected)):
        raise FairnessError("preds, labels and protected must have equal length")
    if len(probs) == 0:
        raise FairnessError("empty inputs")
    if (probs < 0).any() or (probs > 1).any():
        raise FairnessError("positive probabilities must lie in [0, 1]")
    counts, sums = kernels.cell_sums(labels, protected, probs)
    n = counts.reshape(2, 2)
    pos = sums.reshape(2, 2)
    return GroupRates(n, pos, n.sum(axis=0), pos.sum(axis=0))


def demographic_parity(gr: GroupRates) -> float:
    return abs(gr.group_rate(0) - gr.group_rate(1))


def false_positive_diff(gr: GroupRates) -> float:
    return abs(gr.cell_rate(0, 0) - gr.cell_rate(0, 1))


def true_positive_diff(gr: GroupRates) -> float:
    return abs(gr.cell_rate(1, 0) - gr.cell_rate(1, 1))


def equalized_odds(gr: GroupRates) -> float:
    return max(false_positive_diff(gr), true_positive_diff(gr))


_METRIC_FUNCS = {
    "dp": demographic_parity,
    "fp": false_positive_diff,
    "tp": true_positive_diff,
    "eo": equalized_odds,
}


def metric_value(metric: str, gr: GroupRates) -> float:
    try:
        fn = _METRIC_FUNCS[metric]
    except KeyError:
        raise FairnessError(f"unknown metric {metric!r}") from None
    return fn(gr)
