"""Pure-numpy implementations of the hot kernels.

These are the reference semantics for :mod:`fairnoise._ckern`; the compiled
module must reproduce them bit for bit.  Both backends accumulate running
sums in input order and evaluate the same per-candidate expressions, so the
outputs are identical down to IEEE rounding, not merely close.
"""

import numpy as np

BACKEND = "python"


def best_split(values, pos_weight, weight):
    """Best binary split of a column already sorted by ``values``.

    Candidate boundaries sit between positions ``i`` and ``i+1``.  A boundary
    is valid when the value actually changes there and both sides carry
    positive weight.  The score of a boundary is the weighted Gini impurity
    sum of the two sides; lower is better.

    Returns ``(i, score)`` for the first boundary attaining the minimum
    score, or ``(-1, inf)`` when no valid boundary exists.
    """
    n = values.shape[0]
    if n < 2:
        return -1, np.inf
    cw = np.cumsum(weight)
    cp = np.cumsum(pos_weight)
    total_w = cw[n - 1]
    total_p = cp[n - 1]

    wl = cw[: n - 1]
    pl = cp[: n - 1]
    wr = total_w - wl
    pr = total_p - pl

    valid = (values[: n - 1] != values[1:]) & (wl > 0.0) & (wr > 0.0)
    if not valid.any():
        return -1, np.inf

    with np.errstate(divide="ignore", invalid="ignore"):
        r1l = pl / wl
        r0l = (wl - pl) / wl
        r1r = pr / wr
        r0r = (wr - pr) / wr
        score = wl * (1.0 - r1l * r1l - r0l * r0l) + wr * (1.0 - r1r * r1r - r0r * r0r)
    score = np.where(valid, score, np.inf)
    idx = int(np.argmin(score))
    return idx, float(score[idx])


def cell_sums(labels, protected, probs):
    """Per-(label, group) row counts and positive-probability sums.

    Cell index is ``2 * y + a``; returns ``(counts[4], sums[4])``.
    """
    idx = 2 * labels + protected
    counts = np.bincount(idx, minlength=4).astype(np.int64)
    sums = np.bincount(idx, weights=probs, minlength=4)
    return counts, sums


def discrete_replace(codes, cdf, u_replace, u_category, p_replace):
    """Resample cells of an integer-coded column.

    Cell ``i`` is replaced when ``u_replace[i] < p_replace``; the replacement
    code is drawn by inverting the cumulative distribution ``cdf`` at
    ``u_category[i]`` (first index whose cdf exceeds the uniform draw).
    """
    m = cdf.shape[0]
    drawn = np.minimum(np.searchsorted(cdf, u_category, side="right"), m - 1)
    return np.where(u_replace < p_replace, drawn, codes).astype(np.int64)
