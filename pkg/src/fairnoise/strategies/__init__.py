"""The four bias-handling strategies behind one evaluation surface.

* ``baseline`` -- performance-only model; the protected attribute is just
  another feature, so this is the worst-case comparison point.
* ``correlation_remover`` -- pre-processing: train on residualised features
  with the protected attribute removed.
* ``expgrad`` -- in-processing: exponentiated-gradient mixture satisfying a
  rate constraint within slack.
* ``threshold_optimizer`` -- post-processing: per-group randomized
  thresholds on top of a performance-only model.

A fitted strategy exposes ``positive_probability(ds)``: the exact per-row
probability of a positive decision with any internal randomisation
marginalised out.  Deterministic strategies return 0/1 vectors, so the same
code path evaluates every strategy, and fairness metrics computed from these
probabilities are reproducible without sampling error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fairnoise import models
from fairnoise.dataset import Dataset
from fairnoise.models import TrainedModel
from fairnoise.strategies.expgrad import ExpGradState, fit_expgrad, mixture_scores
from fairnoise.strategies.remover import (CorrelationRemover, StrategyError,
                                          fit_correlation_remover, transform)
from fairnoise.strategies.threshold import (ThresholdPolicy,
                                            fit_threshold_optimizer,
                                            policy_positive_probability,
                                            randomized_predict,
                                            sample_predictions)

STRATEGIES = ("baseline", "correlation_remover", "expgrad", "threshold_optimizer")

__all__ = [
    "STRATEGIES", "StrategyError", "CorrelationRemover", "ExpGradState",
    "ThresholdPolicy", "fit_baseline", "fit_correlation_remover", "transform",
    "fit_expgrad", "mixture_scores", "fit_threshold_optimizer",
    "policy_positive_probability", "randomized_predict", "sample_predictions",
    "fit_strategy", "FittedStrategy",
]


@dataclass(frozen=True)
class FittedStrategy:
    """Uniform wrapper used by the robustness sweep and the CLI."""

    name: str
    constraint: "str | None"
    payload: object

    def positive_probability(self, ds: Dataset) -> np.ndarray:
        if self.name == "baseline":
            return models.predictions(self.payload, ds).astype(np.float64)
        if self.name == "correlation_remover":
            cr, model = self.payload
            return models.predictions(model, transform(cr, ds)).astype(np.float64)
        if self.name == "expgrad":
            return (mixture_scores(self.payload, ds) >= 0.5).astype(np.float64)
        policy = self.payload
        scores = models.scores(policy.model, ds)
        return policy_positive_probability(policy, scores, ds.protected)


def fit_baseline(ds: Dataset, learner: str, seed: int = 0, hyper=None) -> TrainedModel:
    """Performance-only model with the protected attribute as a feature."""
    return models.train(ds, learner, hyper=hyper, seed=seed, include_protected=True)


def fit_strategy(name: str, train_ds: Dataset, learner: str, constraint=None,
                 seed: int = 0, hyper=None, expgrad_options=None) -> FittedStrategy:
    if name == "baseline":
        return FittedStrategy(name, None, fit_baseline(train_ds, learner, seed, hyper))
    if name == "correlation_remover":
        cr = fit_correlation_remover(train_ds)
        model = models.train(transform(cr, train_ds), learner, hyper=hyper, seed=seed)
        return FittedStrategy(name, None, (cr, model))
    if constraint not in ("dp", "eo"):
        raise StrategyError(f"{name} needs a dp or eo constraint, got {constraint!r}")
    if name == "expgrad":
        state = fit_expgrad(train_ds, learner, constraint, seed=seed, hyper=hyper,
                            **(expgrad_options or {}))
        return FittedStrategy(name, constraint, state)
    if name == "threshold_optimizer":
        base = fit_baseline(train_ds, learner, seed, hyper)
        policy = fit_threshold_optimizer(base, train_ds, constraint)
        return FittedStrategy(name, constraint, policy)
    raise StrategyError(f"unknown strategy {name!r}")
