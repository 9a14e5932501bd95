"""In-processing strategy: exponentiated-gradient reduction.

Fair classification under a rate constraint is reduced to a saddle-point
game between a cost-sensitive learner and a dual player.  Each iteration:

1. best response: retrain the base learner on examples relabelled and
   weighted by the current Lagrangian costs;
2. re-mix: every predictor gets weight proportional to
   ``exp(-eta * mean Lagrangian loss over the rounds played so far)``,
   renormalised to the simplex (equal exponents therefore give the uniform
   mixture, and a predictor that keeps violating the constraints decays
   exponentially);
3. evaluate the mixture's signed constraint violations; the mixture's rates
   are linear in the weights, so they are the weight-averaged per-predictor
   rates;
4. dual step: ``lambda <- lambda * exp(eta * violation)``, rescaled whenever
   the total dual mass exceeds a fixed ceiling.

The loop stops when the mixture's worst violation drops to the slack
``eps_tol`` or after ``max_iter`` rounds; running out of rounds is not an
error, the mixture is returned with ``converged=False``.

Base learners do not see the protected attribute: the constraint is
enforced entirely through the reweighting, which keeps the deployed
predictor group-blind (and is what lets its fairness survive when feature
noise washes out everything except a hypothetical group term).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from fairnoise import models
from fairnoise.dataset import Dataset
from fairnoise.strategies.remover import StrategyError

DEFAULT_ETA = 2.0
DEFAULT_MAX_ITER = 50
DEFAULT_EPS_TOL = 0.01
DEFAULT_DUAL_BOUND = 100.0


@dataclass(frozen=True)
class _ConstraintSet:
    """Signed rate constraints: one (cell, sign) component per entry.

    A component measures ``sign * (rate(cell) - rate(base slice))`` where the
    base slice pools both groups of the same label slice (or all rows for
    demographic parity).
    """

    kind: str
    cell_masks: tuple      # row masks, one per component
    base_masks: tuple

    @property
    def n_components(self) -> int:
        return len(self.cell_masks)

    def violations(self, positive: np.ndarray) -> np.ndarray:
        out = np.empty(self.n_components)
        for j in range(0, self.n_components, 2):
            cell = self.cell_masks[j]
            base = self.base_masks[j]
            gap = float((positive * cell).sum() / cell.sum()
                        - (positive * base).sum() / base.sum())
            out[j] = gap
            out[j + 1] = -gap
        return out

    def row_costs(self, lambdas: np.ndarray) -> np.ndarray:
        """Per-row coefficient of predicting positive, from the dual weights."""
        n = len(self.cell_masks[0])
        cost = np.zeros(n)
        for j, (cell, base) in enumerate(zip(self.cell_masks, self.base_masks)):
            sign = 1.0 if j % 2 == 0 else -1.0
            if lambdas[j] == 0.0:
                continue
            cost += sign * lambdas[j] * (cell / cell.sum() - base / base.sum())
        return cost


def build_constraints(kind: str, labels, protected) -> _ConstraintSet:
    labels = np.asarray(labels)
    protected = np.asarray(protected)
    cells = []
    bases = []
    if kind == "dp":
        everyone = np.ones(len(labels), dtype=bool)
        slices = [(everyone, protected == 0), (everyone, protected == 1)]
    elif kind == "eo":
        slices = []
        for y in (0, 1):
            in_y = labels == y
            for a in (0, 1):
                slices.append((in_y, in_y & (protected == a)))
    else:
        raise StrategyError(f"constraint must be dp or eo, got {kind!r}")
    for base, cell in slices:
        if not cell.any():
            raise StrategyError("a constraint cell is empty")
        for _ in ("+", "-"):
            cells.append(cell.astype(np.float64))
            bases.append(base.astype(np.float64))
    return _ConstraintSet(kind, tuple(cells), tuple(bases))


@dataclass(frozen=True)
class _ConstantPredictor:
    """Trivial best response when every example prefers the same label."""

    value: float


@dataclass
class ExpGradState:
    constraint: str
    learner: str
    predictors: list
    weights: np.ndarray
    lambdas: np.ndarray
    converged: bool
    iterations: int
    eta: float = DEFAULT_ETA
    eps_tol: float = DEFAULT_EPS_TOL
    max_iter: int = DEFAULT_MAX_ITER
    max_violation: list = field(default_factory=list)
    weight_history: list = field(default_factory=list)


def _predictor_scores(predictor, ds: Dataset) -> np.ndarray:
    if isinstance(predictor, _ConstantPredictor):
        return np.full(ds.n_rows, predictor.value)
    return models.scores(predictor, ds)


def mixture_scores(state: ExpGradState, ds: Dataset) -> np.ndarray:
    """Weight-averaged scores of the mixture."""
    out = np.zeros(ds.n_rows)
    for weight, predictor in zip(state.weights, state.predictors):
        out += weight * _predictor_scores(predictor, ds)
    return out


def _mix_weights(losses: np.ndarray, eta: float) -> np.ndarray:
    shifted = -eta * (losses - losses.min())
    w = np.exp(shifted)
    return w / w.sum()


def _iteration_seed(seed: int, t: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=(t,)).generate_state(1)[0])


def fit_expgrad(ds: Dataset, learner: str, constraint: str,
                eps_tol: float = DEFAULT_EPS_TOL, eta: float = DEFAULT_ETA,
                max_iter: int = DEFAULT_MAX_ITER, seed: int = 0,
                dual_bound: float = DEFAULT_DUAL_BOUND, hyper=None,
                include_protected: bool = False) -> ExpGradState:
    if eps_tol <= 0:
        raise StrategyError("eps_tol must be positive")
    ds.require_binary_protected()
    constraints = build_constraints(constraint, ds.labels, ds.protected)
    n = ds.n_rows
    y = ds.labels.astype(np.float64)
    base_cost = (1.0 - 2.0 * y) / n   # error cost of predicting positive

    lambdas = np.ones(constraints.n_components)
    predictors = []
    errors = []
    gvecs = []
    cum_loss = []   # per predictor: summed Lagrangian loss since it joined
    rounds = []     # per predictor: number of rounds it has been scored
    state = ExpGradState(constraint, learner, predictors, np.zeros(0), lambdas,
                         False, 0, eta=eta, eps_tol=eps_tol, max_iter=int(max_iter))

    for t in range(int(max_iter)):
        cost = base_cost + constraints.row_costs(lambdas)
        relabel = (cost < 0).astype(np.int64)
        weight = np.abs(cost)
        if weight.sum() <= 0 or len(np.unique(relabel)) < 2:
            predictor = _ConstantPredictor(float(relabel.max()))
        else:
            relabelled = Dataset.build(ds.columns, ds.kinds, ds.names, relabel,
                                       ds.protected, ds.protected_values,
                                       ds.label_name, ds.protected_name)
            predictor = models.train(relabelled, learner, hyper=hyper,
                                     seed=_iteration_seed(seed, t),
                                     include_protected=include_protected,
                                     sample_weight=weight / weight.mean())
        predictors.append(predictor)
        hard = (_predictor_scores(predictor, ds) >= 0.5).astype(np.float64)
        errors.append(float(np.abs(hard - y).mean()))
        gvecs.append(constraints.violations(hard))
        cum_loss.append(0.0)
        rounds.append(0)

        lagrangian = np.asarray(errors) + np.asarray(gvecs) @ lambdas
        for i in range(len(cum_loss)):
            cum_loss[i] += lagrangian[i]
            rounds[i] += 1
        weights = _mix_weights(np.asarray(cum_loss) / np.asarray(rounds), eta)
        state.weights = weights
        state.weight_history.append(weights.copy())

        # mixture rates are linear in the weights
        gamma = weights @ np.asarray(gvecs)
        worst = float(gamma.max())
        state.max_violation.append(worst)
        state.iterations = t + 1
        if worst <= eps_tol:
            state.converged = True
            break
        lambdas = lambdas * np.exp(eta * (gamma - eps_tol))
        total = lambdas.sum()
        if total > dual_bound:
            lambdas = lambdas * (dual_bound / total)
        state.lambdas = lambdas

    return state
