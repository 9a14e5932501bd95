"""Robustness estimation over a grid of noise strengths.

For a fitted strategy ``f``, metric ``M`` and evaluation data ``X``, the
robustness ratio at strength ``k`` is estimated from ``K`` independent noise
repetitions:

    R_k = (1/K) * sum_j  M(f, X~_j) / max(M(f, X), delta_floor)

``R_k = 1`` means the strategy's fairness is unaffected by noise, values
below 1 mean it becomes fairer, values above 1 less fair.  At ``k = 0`` the
perturbation is the identity, so ``R_0 = 1`` exactly.  The division floor
guards the degenerate perfectly-fair-on-clean-data case and raises a flag
whenever it binds.

Metrics are evaluated dataset-wise per repetition (group metrics are
undefined on single rows) on the strategy's exact per-row positive
probabilities, so randomised strategies need no prediction sampling and the
estimates are pure functions of ``(master_seed, k index, repetition)``.
The (k, repetition) grid is embarrassingly parallel; aggregation happens in
fixed grid order so threaded and serial runs emit identical bytes.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from fairnoise import fairness, models
from fairnoise.dataset import Dataset
from fairnoise.fairness import FairnessError
from fairnoise.noise import NoiseSpec, NoiseStream, perturb_dataset
from fairnoise.strategies import FittedStrategy, fit_strategy

DELTA_FLOOR = 1e-6
MAX_DISCARD_FRACTION = 0.01
STABLE_BAND = 0.05


class RobustnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    strategies: tuple
    metrics: tuple
    learner: str
    k_grid: tuple
    repetitions: int
    master_seed: int
    delta_floor: float = DELTA_FLOOR
    fit_on_noisy: bool = False
    seed: int = 0                      # model-fitting seed
    hyper: "dict | None" = None
    expgrad_options: "dict | None" = None
    jobs: int = 1

    def __post_init__(self):
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if len(self.k_grid) == 0 or self.k_grid[0] != 0:
            raise ValueError("k grid must start at 0")
        if any(b <= a for a, b in zip(self.k_grid, self.k_grid[1:])):
            raise ValueError("k grid must be strictly increasing")


def default_k_grid(k_max: float = 10.0, points: int = 21) -> tuple:
    return tuple(np.linspace(0.0, k_max, points))


@dataclass
class RobustnessCurve:
    strategy: str
    metric: str
    learner: str
    k_grid: tuple
    estimates: np.ndarray        # R_k per grid point
    values: np.ndarray           # (len(k_grid), K) per-repetition metric values
    discarded: np.ndarray        # per grid point
    base_metric: float
    floor_bound: bool
    repetitions: int

    @property
    def behavior(self) -> str:
        """Reported label from the final grid point: stable / fairer / less_fair."""
        final = self.estimates[-1]
        if abs(final - 1.0) <= STABLE_BAND:
            return "stable"
        return "fairer" if final < 1.0 else "less_fair"


def prediction_robustness(model, ds: Dataset, spec: NoiseSpec, repetitions: int) -> float:
    """Mean hard-label flip rate of a trained model under K noise repetitions."""
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    base = models.predictions(model, ds)
    total = 0.0
    for j in range(repetitions):
        noisy = perturb_dataset(ds, spec, NoiseStream(spec.master_seed, 0, j))
        total += float(np.abs(models.predictions(model, noisy) - base).mean())
    return total / repetitions


def _metric_or_none(metric, probs, labels, protected):
    try:
        gr = fairness.group_expected_rates(probs, labels, protected)
        return fairness.metric_value(metric, gr)
    except FairnessError:
        return None


def robustness_ratio(strategy: FittedStrategy, metric: str, ds: Dataset,
                     spec: NoiseSpec, repetitions: int,
                     delta_floor: float = DELTA_FLOOR, k_index: int = 0):
    """R_k estimate for one strategy/metric at one noise strength.

    Returns ``(estimate, per_repetition_values, discarded, base_value,
    floor_bound)``; repetitions whose metric is undefined are discarded and
    counted.
    """
    base_probs = strategy.positive_probability(ds)
    base = _metric_or_none(metric, base_probs, ds.labels, ds.protected)
    if base is None:
        raise RobustnessError(f"metric {metric} undefined on the clean dataset")
    floor_bound = base < delta_floor
    denom = max(base, delta_floor)
    values = np.full(repetitions, np.nan)
    discarded = 0
    for j in range(repetitions):
        noisy = perturb_dataset(ds, spec, NoiseStream(spec.master_seed, k_index, j))
        value = _metric_or_none(metric, strategy.positive_probability(noisy),
                                noisy.labels, noisy.protected)
        if value is None:
            discarded += 1
        else:
            values[j] = value
    kept = values[~np.isnan(values)]
    if kept.size == 0:
        raise RobustnessError("every repetition was discarded")
    estimate = float(np.sum(kept / denom) / kept.size)
    return estimate, values, discarded, base, floor_bound


@dataclass
class SweepResult:
    config: SweepConfig
    curves: dict = field(default_factory=dict)   # (strategy, metric) -> RobustnessCurve
    total_discarded: int = 0

    def fairness_rows(self):
        """Raw per-repetition rows: (strategy, metric, learner, k, rep, value)."""
        for (strategy, metric), curve in self.curves.items():
            for i, k in enumerate(curve.k_grid):
                for j in range(curve.repetitions):
                    value = curve.values[i, j]
                    if not np.isnan(value):
                        yield strategy, metric, curve.learner, k, j, value

    def ratio_rows(self):
        for (strategy, metric), curve in self.curves.items():
            for i, k in enumerate(curve.k_grid):
                yield strategy, metric, curve.learner, k, curve.estimates[i]


def _constraint_for(metric: str):
    # the in/post-processing strategies optimise dp when evaluated under dp
    # and eo otherwise (eo subsumes the fp / tp slices)
    return "dp" if metric == "dp" else "eo"


def sweep(config: SweepConfig, train: Dataset, test: Dataset) -> SweepResult:
    """Fairness and robustness curves for every (strategy, metric) pair."""
    if config.fit_on_noisy:
        return fit_on_noisy_sweep(config, train, test)
    fits = {}
    for strategy in config.strategies:
        constraints = {None} if strategy in ("baseline", "correlation_remover") \
            else {_constraint_for(m) for m in config.metrics}
        for constraint in constraints:
            fits[(strategy, constraint)] = fit_strategy(
                strategy, train, config.learner, constraint=constraint,
                seed=config.seed, hyper=config.hyper,
                expgrad_options=config.expgrad_options,
            )

    n_k = len(config.k_grid)
    n_rep = config.repetitions
    cells = [(i, j) for i in range(n_k) for j in range(n_rep)]

    def run_cell(cell):
        i, j = cell
        spec = NoiseSpec(config.k_grid[i], config.master_seed)
        noisy = perturb_dataset(test, spec, NoiseStream(config.master_seed, i, j))
        out = {}
        for key, fitted in fits.items():
            out[key] = fitted.positive_probability(noisy)
        return i, j, noisy.labels, noisy.protected, out

    if config.jobs > 1:
        with ThreadPoolExecutor(max_workers=config.jobs) as pool:
            cell_results = list(pool.map(run_cell, cells))
    else:
        cell_results = [run_cell(c) for c in cells]
    by_cell = {(i, j): (labels, protected, probs)
               for i, j, labels, protected, probs in cell_results}

    result = SweepResult(config)
    for strategy in config.strategies:
        for metric in config.metrics:
            constraint = None if strategy in ("baseline", "correlation_remover") \
                else _constraint_for(metric)
            fitted = fits[(strategy, constraint)]
            base_probs = fitted.positive_probability(test)
            base = _metric_or_none(metric, base_probs, test.labels, test.protected)
            if base is None:
                raise RobustnessError(
                    f"metric {metric} undefined on clean data for {strategy}")
            denom = max(base, config.delta_floor)
            values = np.full((n_k, n_rep), np.nan)
            discarded = np.zeros(n_k, dtype=np.int64)
            for i in range(n_k):
                for j in range(n_rep):
                    labels, protected, probs = by_cell[(i, j)]
                    value = _metric_or_none(metric, probs[(strategy, constraint)],
                                            labels, protected)
                    if value is None:
                        discarded[i] += 1
                    else:
                        values[i, j] = value
            kept_counts = n_rep - discarded
            if (kept_counts == 0).any():
                raise RobustnessError(f"every repetition discarded for {strategy}/{metric}")
            with np.errstate(invalid="ignore"):
                estimates = np.nansum(values / denom, axis=1) / kept_counts
            curve = RobustnessCurve(
                strategy, metric, config.learner, tuple(config.k_grid),
                estimates, values, discarded, base,
                bool(base < config.delta_floor), n_rep,
            )
            result.curves[(strategy, metric)] = curve
            result.total_discarded += int(discarded.sum())

    total_cells = len(config.strategies) * len(config.metrics) * n_k * n_rep
    if result.total_discarded > MAX_DISCARD_FRACTION * total_cells:
        raise RobustnessError(
            f"{result.total_discarded} of {total_cells} repetitions discarded; "
            "the noise configuration is emptying metric cells")
    return result


def curve_slope(curve: RobustnessCurve, k_lo: float, k_hi: float):
    """Min and max finite-difference slope of R_k over a grid window.

    Stencil: central differences at interior grid points, one-sided at the
    window edges.
    """
    k = np.asarray(curve.k_grid)
    r = curve.estimates
    inside = np.flatnonzero((k >= k_lo - 1e-12) & (k <= k_hi + 1e-12))
    if inside.size < 2:
        raise ValueError("window must cover at least two grid points")
    if k_lo < k[0] - 1e-12 or k_hi > k[-1] + 1e-12:
        raise ValueError("window outside the k grid")
    slopes = []
    for pos, i in enumerate(inside):
        if pos == 0:
            j = inside[1]
            slopes.append((r[j] - r[i]) / (k[j] - k[i]))
        elif pos == inside.size - 1:
            j = inside[pos - 1]
            slopes.append((r[i] - r[j]) / (k[i] - k[j]))
        else:
            lo, hi = inside[pos - 1], inside[pos + 1]
            slopes.append((r[hi] - r[lo]) / (k[hi] - k[lo]))
    return float(min(slopes)), float(max(slopes))


def fit_on_noisy_sweep(config: SweepConfig, train: Dataset, test: Dataset) -> SweepResult:
    """Sweep variant that refits every strategy on the perturbed training set.

    The default pipeline perturbs only the evaluation inputs of strategies
    fit on clean data; this variant instead refits per (k, repetition) and
    is correspondingly slower.  Exposed behind ``fit_on_noisy`` for
    sensitivity studies.
    """
    result = SweepResult(config)
    n_k, n_rep = len(config.k_grid), config.repetitions
    for strategy in config.strategies:
        for metric in config.metrics:
            constraint = None if strategy in ("baseline", "correlation_remover") \
                else _constraint_for(metric)
            clean_fit = fit_strategy(strategy, train, config.learner,
                                     constraint=constraint, seed=config.seed,
                                     hyper=config.hyper,
                                     expgrad_options=config.expgrad_options)
            base = _metric_or_none(metric, clean_fit.positive_probability(test),
                                   test.labels, test.protected)
            if base is None:
                raise RobustnessError(
                    f"metric {metric} undefined on clean data for {strategy}")
            denom = max(base, config.delta_floor)
            values = np.full((n_k, n_rep), np.nan)
            discarded = np.zeros(n_k, dtype=np.int64)
            for i in range(n_k):
                spec = NoiseSpec(config.k_grid[i], config.master_seed)
                for j in range(n_rep):
                    noisy_train = perturb_dataset(
                        train, spec, NoiseStream(config.master_seed, i, 2 * j))
                    noisy_test = perturb_dataset(
                        test, spec, NoiseStream(config.master_seed, i, 2 * j + 1))
                    fitted = fit_strategy(strategy, noisy_train, config.learner,
                                          constraint=constraint, seed=config.seed,
                                          hyper=config.hyper,
                                          expgrad_options=config.expgrad_options)
                    value = _metric_or_none(metric, fitted.positive_probability(noisy_test),
                                            noisy_test.labels, noisy_test.protected)
                    if value is None:
                        discarded[i] += 1
                    else:
                        values[i, j] = value
            kept_counts = n_rep - discarded
            if (kept_counts == 0).any():
                raise RobustnessError(f"every repetition discarded for {strategy}/{metric}")
            estimates = np.nansum(values / denom, axis=1) / kept_counts
            result.curves[(strategy, metric)] = RobustnessCurve(
                strategy, metric, config.learner, tuple(config.k_grid),
                estimates, values, discarded, base,
                bool(base < config.delta_floor), n_rep)
            result.total_discarded += int(discarded.sum())
    return result
