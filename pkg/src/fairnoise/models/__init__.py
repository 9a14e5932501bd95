"""Five from-scratch base learners behind one train/score/predict surface.

Every learner emits scores in [0, 1]; the hard label is ``score >= 0.5``
(ties predict 1, an arbitrary but documented rule).  Training is
deterministic given (data, hyperparameters, seed).  Default hyperparameters
are fixed here and echoed into run summaries so recorded numbers stay
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from fairnoise.dataset import Dataset
from fairnoise.models import bayes, linear, tree
from fairnoise.models.encoding import FeatureEncoder, ModelsError, fit_encoder

LEARNERS = ("logreg", "linear_svm", "naive_bayes", "sgd_linear", "decision_tree")

DEFAULT_HYPER = MappingProxyType({
    "logreg": MappingProxyType({"lr": 0.2, "epochs": 500, "tol": 1e-7, "l2": 0.0}),
    "linear_svm": MappingProxyType({"lr": 0.5, "epochs": 300, "l2": 1e-3}),
    "naive_bayes": MappingProxyType({"alpha": 1.0, "var_floor": 1e-9}),
    "sgd_linear": MappingProxyType({"lr": 0.1, "epochs": 25, "batch": 32, "l2": 0.0}),
    "decision_tree": MappingProxyType({"max_depth": 6, "min_samples_split": 2}),
})


@dataclass(frozen=True)
class TrainedModel:
    learner: str
    encoder: "FeatureEncoder | None"
    params: object
    hyper: dict
    seed: int

    @property
    def include_protected(self) -> bool:
        if self.encoder is not None:
            return self.encoder.include_protected
        return self.params.protected_as_feature


def resolve_hyper(learner: str, hyper=None) -> dict:
    if learner not in LEARNERS:
        raise ModelsError(f"unknown learner {learner!r}")
    merged = dict(DEFAULT_HYPER[learner])
    for key, value in (hyper or {}).items():
        if key not in merged:
            raise ModelsError(f"unknown hyperparameter {key!r} for {learner}")
        merged[key] = value
    return merged


def train(ds: Dataset, learner: str, hyper=None, seed: int = 0,
          include_protected: bool = False, sample_weight=None) -> TrainedModel:
    """Fit one base learner on a dataset.

    ``include_protected`` feeds the protected attribute to the learner as an
    ordinary feature (what a performance-only model would do);
    ``sample_weight`` supports cost-reweighted retraining.
    """
    hp = resolve_hyper(learner, hyper)
    y = ds.labels
    if len(np.unique(y)) < 2:
        raise ModelsError("degenerate training set: single label value")
    if sample_weight is None:
        sw = np.ones(ds.n_rows)
    else:
        sw = np.asarray(sample_weight, dtype=np.float64)
        if sw.shape != (ds.n_rows,) or (sw < 0).any() or sw.sum() <= 0:
            raise ModelsError("sample_weight must be non-negative with positive total")

    if learner == "naive_bayes":
        params = bayes.fit_naive_bayes(ds, sw, include_protected, **hp)
        return TrainedModel(learner, None, params, hp, seed)

    encoder = fit_encoder(ds, include_protected)
    X = encoder.transform(ds)
    yf = y.astype(np.float64)
    if learner == "logreg":
        params = linear.fit_logreg(X, yf, sw, **hp)
    elif learner == "linear_svm":
        params = linear.fit_svm(X, yf, sw, **hp)
    elif learner == "sgd_linear":
        params = linear.fit_sgd(X, yf, sw, seed, **hp)
    else:
        params = tree.fit_tree(X, yf, sw, **hp)
    return TrainedModel(learner, encoder, params, hp, seed)


def scores(model: TrainedModel, ds: Dataset) -> np.ndarray:
    """Vectorised scores for every row of a dataset."""
    if model.learner == "naive_bayes":
        return bayes.nb_scores(model.params, ds)
    X = model.encoder.transform(ds)
    if model.learner == "decision_tree":
        return tree.tree_scores(model.params, X)
    return linear.linear_scores(model.params, X)


def predictions(model: TrainedModel, ds: Dataset) -> np.ndarray:
    return (scores(model, ds) >= 0.5).astype(np.int64)


def score(model: TrainedModel, row) -> float:
    """Score one raw feature row (protected value last when the model uses it)."""
    if model.learner == "naive_bayes":
        return float(_nb_score_row(model, row))
    x = model.encoder.transform_row(row)
    if model.learner == "decision_tree":
        return float(tree.tree_scores(model.params, x[None, :])[0])
    return float(linear.linear_scores(model.params, x[None, :])[0])


def predict(model: TrainedModel, row) -> int:
    return int(score(model, row) >= 0.5)


def _nb_score_row(model, row):
    from fairnoise.dataset import CONTINUOUS, DISCRETE, Dataset, FeatureKind

    params = model.params
    cells = list(row)
    expected = len(params.stats) + (1 if params.protected_as_feature else 0)
    if len(cells) != expected:
        raise ModelsError(f"row has {len(cells)} cells, model expects {expected}")
    protected = int(cells[-1]) if params.protected_as_feature else 0
    columns = []
    kinds = []
    for st, cell in zip(params.stats, cells):
        if st.tag == CONTINUOUS:
            columns.append(np.array([float(cell)]))
            kinds.append(FeatureKind(CONTINUOUS))
        else:
            # single-category probe column; value matching (or the smoothing
            # floor for unseen values) happens inside the scorer
            columns.append(np.array([0], dtype=np.int64))
            kinds.append(FeatureKind(DISCRETE, (cell,)))
    probe = Dataset.build(columns, tuple(kinds), tuple(st.name for st in params.stats),
                          np.array([0]), np.array([protected]))
    return bayes.nb_scores(params, probe)[0]
