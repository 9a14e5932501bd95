"""Seeded noise injection of strength k for feature columns.

One scalar ``k`` drives both mechanisms: continuous columns receive additive
draws from the Laplace distribution with scale ``k``, and discrete cells are
resampled with probability ``k/100`` from the empirical category
distribution of the column being perturbed (so the column's marginal is
preserved in expectation; at ``k >= 100`` every cell is a fresh draw).
``k = 0`` is the identity for both.

Streams are derived, not shared: the generator for column ``j`` of
repetition ``r`` at grid position ``i`` is seeded from
``SeedSequence(master_seed, spawn_key=(i, r, channel, j))``, which makes the
whole perturbation grid reproducible cell by cell and safe to evaluate in
parallel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from fairnoise import kernels
from fairnoise.dataset import CONTINUOUS, Dataset


class NoiseError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    """Noise strength and the root seed of the derived streams."""

    k: float
    master_seed: int

    def __post_init__(self):
        if self.k < 0:
            raise NoiseError("noise strength k must be non-negative")


# Channel tags keep the per-column feature streams, the randomised-predictor
# stream and the protected-attribute stream statistically independent.
CHANNEL_COLUMN = 0
CHANNEL_PREDICTOR = 1
CHANNEL_ATTRIBUTE = 2


class NoiseStream:
    """Factory for the independent generators of one (k index, repetition)."""

    def __init__(self, master_seed: int, k_index: int = 0, repetition: int = 0):
        self.master_seed = master_seed
        self.k_index = k_index
        self.repetition = repetition

    def _generator(self, channel: int, index: int = 0) -> np.random.Generator:
        seq = np.random.SeedSequence(
            self.master_seed, spawn_key=(self.k_index, self.repetition, channel, index)
        )
        return np.random.Generator(np.random.PCG64(seq))

    def column(self, index: int) -> np.random.Generator:
        return self._generator(CHANNEL_COLUMN, index)

    def predictor(self) -> np.random.Generator:
        return self._generator(CHANNEL_PREDICTOR)

    def attribute(self) -> np.random.Generator:
        return self._generator(CHANNEL_ATTRIBUTE)


def laplace_pdf(x: float, k: float) -> float:
    """Density (1/2k) * exp(-|x|/k) of the zero-centred Laplace distribution."""
    if k <= 0:
        raise NoiseError("laplace_pdf needs k > 0")
    return math.exp(-abs(x) / k) / (2.0 * k)


def laplace_cdf(x: float, k: float) -> float:
    if x < 0:
        return 0.5 * math.exp(x / k)
    return 1.0 - 0.5 * math.exp(-x / k)


def laplace_interval_prob(a: float, b: float, k: float) -> float:
    """P{eps_k in [a, b]} via the Laplace CDF; accepts infinite endpoints."""
    if k <= 0:
        raise NoiseError("laplace_interval_prob needs k > 0")
    if not a < b:
        raise NoiseError("interval needs a < b")
    lo = 0.0 if a == -math.inf else laplace_cdf(a, k)
    hi = 1.0 if b == math.inf else laplace_cdf(b, k)
    return hi - lo


def perturb_continuous(column, spec: NoiseSpec, gen: np.random.Generator):
    """Add independent Laplace(0, k) draws element-wise; k=0 is the identity."""
    column = np.asarray(column, dtype=np.float64)
    if not np.isfinite(column).all():
        raise NoiseError("continuous column contains non-finite values")
    if spec.k == 0:
        return column
    return column + gen.laplace(0.0, spec.k, size=column.shape)


def perturb_discrete(column, spec: NoiseSpec, gen: np.random.Generator, n_categories=None):
    """Resample each cell with probability min(k/100, 1).

    Replacements are drawn from the empirical category distribution of the
    column itself, so common categories stay common under heavy noise.
    """
    codes = np.asarray(column, dtype=np.int64)
    if codes.size == 0:
        raise NoiseError("discrete column is empty")
    if n_categories is None:
        n_categories = int(codes.max()) + 1
    if codes.min() < 0 or codes.max() >= n_categories:
        raise NoiseError("category code out of range")
    if spec.k == 0:
        return codes
    p_replace = min(spec.k / 100.0, 1.0)
    counts = np.bincount(codes, minlength=n_categories).astype(np.float64)
    cdf = np.cumsum(counts / codes.size)
    u_replace = gen.random(codes.size)
    u_category = gen.random(codes.size)
    return kernels.discrete_replace(codes, cdf, u_replace, u_category, p_replace)


def perturb_dataset(ds: Dataset, spec: NoiseSpec, stream: NoiseStream,
                    flip_protected: bool = False) -> Dataset:
    """Perturb every feature column; labels are never touched.

    The protected attribute is left alone unless ``flip_protected`` is set,
    in which case each entry flips independently with probability ``k``
    (``k`` read as a rate in [0, 1]); that mode drives the attribute-noise
    bias bounds and is off everywhere else.
    """
    if spec.k == 0 and not flip_protected:
        return ds
    columns = []
    for j, (kind, col) in enumerate(zip(ds.kinds, ds.columns)):
        gen = stream.column(j)
        if kind.tag == CONTINUOUS:
            columns.append(perturb_continuous(col, spec, gen))
        else:
            columns.append(perturb_discrete(col, spec, gen, len(kind.categories)))
    protected = ds.protected
    if flip_protected:
        if not 0.0 <= spec.k <= 1.0:
            raise NoiseError("protected flipping reads k as a rate in [0, 1]")
        ds.require_binary_protected()
        flips = stream.attribute().random(ds.n_rows) < spec.k
        protected = np.where(flips, 1 - ds.protected, ds.protected)
    return Dataset.build(columns, ds.kinds, ds.names, ds.labels, protected,
                         ds.protected_values, ds.label_name, ds.protected_name)
