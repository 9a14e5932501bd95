"""Naive Bayes on raw columns: Gaussian likelihoods for continuous features,
Laplace-smoothed categorical likelihoods for discrete ones.

Unlike the margin learners this model does not one-hot anything; it keeps
per-column class-conditional statistics.  Continuous columns are still
z-scored with training statistics before the Gaussians are fit, matching
the standardisation contract of the other learners.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fairnoise.dataset import CONTINUOUS, DISCRETE, Dataset
from fairnoise.models.encoding import ModelsError

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class ColumnStats:
    name: str
    tag: str
    # continuous: standardisation constants and per-class Gaussian moments
    mean: float = 0.0
    std: float = 1.0
    class_mean: tuple = ()
    class_var: tuple = ()
    # discrete: per-class category log-probabilities and the unseen floor
    categories: tuple = ()
    class_logp: tuple = ()    # two tuples of per-category log-probs
    class_floor: tuple = ()   # log-prob assigned to unseen categories


@dataclass(frozen=True)
class NaiveBayesParams:
    log_prior: tuple
    stats: tuple
    protected_as_feature: bool
    protected_stats: "ColumnStats | None" = None


def _discrete_stats(name, codes, categories, y, sw, alpha):
    logp = []
    floor = []
    m = len(categories)
    for c in (0, 1):
        wc = sw * (y == c)
        counts = np.bincount(codes, weights=wc, minlength=m)
        denom = counts.sum() + alpha * m
        logp.append(tuple(np.log((counts + alpha) / denom)))
        floor.append(math.log(alpha / denom))
    return ColumnStats(name, DISCRETE, categories=tuple(categories),
                       class_logp=tuple(logp), class_floor=tuple(floor))


def _continuous_stats(name, col, y, sw, var_floor):
    mean = float(col.mean())
    std = float(col.std()) or 1.0
    z = (col - mean) / std
    cmean = []
    cvar = []
    for c in (0, 1):
        wc = sw * (y == c)
        wtot = wc.sum()
        mu = float((wc * z).sum() / wtot)
        var = float((wc * (z - mu) ** 2).sum() / wtot)
        cmean.append(mu)
        cvar.append(max(var, var_floor))
    return ColumnStats(name, CONTINUOUS, mean=mean, std=std,
                       class_mean=tuple(cmean), class_var=tuple(cvar))


def fit_naive_bayes(ds: Dataset, sample_weight, include_protected,
                    alpha=1.0, var_floor=1e-9) -> NaiveBayesParams:
    y = ds.labels
    sw = sample_weight / sample_weight.sum()
    w1 = float((sw * y).sum())
    prior = (max(1.0 - w1, 1e-12), max(w1, 1e-12))
    stats = []
    for name, kind, col in zip(ds.names, ds.kinds, ds.columns):
        if kind.tag == CONTINUOUS:
            stats.append(_continuous_stats(name, col, y, sw, var_floor))
        else:
            stats.append(_discrete_stats(name, col, kind.categories, y, sw, alpha))
    protected_stats = None
    if include_protected:
        ds.require_binary_protected()
        protected_stats = _discrete_stats(ds.protected_name, ds.protected, (0, 1), y, sw, alpha)
    return NaiveBayesParams((math.log(prior[0]), math.log(prior[1])), tuple(stats),
                            include_protected, protected_stats)


def _gauss_logpdf(z, mu, var):
    return -0.5 * (_LOG_2PI + np.log(var) + (z - mu) ** 2 / var)


def _column_loglik(st: ColumnStats, col, kind, c):
    if st.tag == CONTINUOUS:
        if kind is not None and kind.tag != CONTINUOUS:
            raise ModelsError(f"column {st.name!r}: expected continuous values")
        z = (np.asarray(col, dtype=np.float64) - st.mean) / st.std
        return _gauss_logpdf(z, st.class_mean[c], st.class_var[c])
    table = np.asarray(st.class_logp[c])
    if kind is None:           # protected column: codes index the table directly
        return table[col]
    # match by category value so datasets with differing category sets work;
    # values unseen at fit time get the smoothing floor
    slot_of = {str(v): i for i, v in enumerate(st.categories)}
    remap = np.array([slot_of.get(str(v), -1) for v in kind.categories], dtype=np.int64)
    slots = remap[col]
    out = np.where(slots >= 0, table[np.clip(slots, 0, None)], st.class_floor[c])
    return out


def nb_scores(params: NaiveBayesParams, ds: Dataset) -> np.ndarray:
    if ds.n_features != len(params.stats):
        raise ModelsError(
            f"dataset has {ds.n_features} feature columns, model expects {len(params.stats)}"
        )
    joint = [np.full(ds.n_rows, params.log_prior[c]) for c in (0, 1)]
    for st, kind, col in zip(params.stats, ds.kinds, ds.columns):
        for c in (0, 1):
            joint[c] = joint[c] + _column_loglik(st, col, kind, c)
    if params.protected_as_feature:
        for c in (0, 1):
            joint[c] = joint[c] + _column_loglik(params.protected_stats, ds.protected, None, c)
    # posterior P(y=1 | x) without leaving log space until the last step
    diff = joint[0] - joint[1]
    return 1.0 / (1.0 + np.exp(np.clip(diff, -700, 700)))
