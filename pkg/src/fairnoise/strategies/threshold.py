"""Post-processing strategy: randomized per-group score thresholds.

A fitted policy holds, for each protected group ``a``, two thresholds
``t0[a] <= t1[a]`` and band probabilities ``p0[a] + p1[a] = 1`` over the base
model's score ``s``:

* ``s > t1[a]``        -> positive with probability 1
* ``t0[a] <= s <= t1[a]`` -> positive with probability ``p0[a]``
* ``s < t0[a]``        -> positive with probability 0

Randomising between two thresholds realises any convex combination of their
operating points, so the fit works in operating-point space: build each
group's staircase of threshold points, take its upper concave envelope, and
pick a target point that (a) both groups can reach exactly with a
two-threshold mix and (b) maximises accuracy under the base rates.  Exactly
reachable common points are the crossings of the two envelopes, each group's
envelope vertices that happen to lie on the other envelope, the trivial
all-negative/all-positive corners, and crossings of one group's point-pair
chords with the other group's envelope (which recovers accuracy when one
group's curve dominates the other everywhere).  Restricting the search to
these constructed intersections is what keeps the realised per-group rates
equal to machine precision instead of merely close.

The equalized-odds fit matches (false positive rate, true positive rate)
pairs; the demographic-parity fit matches selection rates, where the search
is one-dimensional and every rate is exactly reachable on both envelopes.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fairnoise import models
from fairnoise.dataset import Dataset
from fairnoise.models import TrainedModel
from fairnoise.strategies.remover import StrategyError

_EPS = 1e-12
_CHORD_POINTS = 48


@dataclass(frozen=True)
class ThresholdPolicy:
    constraint: str
    t0: tuple
    t1: tuple
    p0: tuple
    p1: tuple
    model: "TrainedModel | None" = None

    def __post_init__(self):
        for a in (0, 1):
            if self.t1[a] < self.t0[a]:
                raise StrategyError("upper threshold below lower threshold")
            if not (0.0 <= self.p0[a] <= 1.0 and 0.0 <= self.p1[a] <= 1.0):
                raise StrategyError("band probabilities must lie in [0, 1]")
            if abs(self.p0[a] + self.p1[a] - 1.0) > 1e-12:
                raise StrategyError("band probabilities must sum to 1")


def policy_positive_probability(policy: ThresholdPolicy, scores, groups) -> np.ndarray:
    """P{F = 1 | score, group} under the piecewise law above."""
    s = np.asarray(scores, dtype=np.float64)
    g = np.asarray(groups, dtype=np.int64)
    t0 = np.asarray(policy.t0)[g]
    t1 = np.asarray(policy.t1)[g]
    p0 = np.asarray(policy.p0)[g]
    return np.where(s > t1, 1.0, np.where(s >= t0, p0, 0.0))


def sample_predictions(policy: ThresholdPolicy, scores, groups, gen) -> np.ndarray:
    """One Bernoulli realisation of the randomized predictor per row."""
    p = policy_positive_probability(policy, scores, groups)
    return (gen.random(len(p)) < p).astype(np.int64)


def randomized_predict(policy: ThresholdPolicy, score: float, group: int, gen) -> int:
    p = policy_positive_probability(policy, [score], [group])[0]
    return int(gen.random() < p)


def policy_to_text(policy: ThresholdPolicy) -> str:
    lines = []
    for a in (0, 1):
        fields = [str(a)] + [format(v, ".17g") for v in
                             (policy.t0[a], policy.t1[a], policy.p0[a], policy.p1[a])]
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


def policy_from_text(text: str, constraint: str = "eo", model=None) -> ThresholdPolicy:
    t0 = [0.0, 0.0]
    t1 = [0.0, 0.0]
    p0 = [0.0, 0.0]
    p1 = [0.0, 0.0]
    seen = set()
    for line in text.strip().splitlines():
        a_s, t0_s, t1_s, p0_s, p1_s = line.split()
        a = int(a_s)
        seen.add(a)
        t0[a], t1[a], p0[a], p1[a] = (float(v) for v in (t0_s, t1_s, p0_s, p1_s))
    if seen != {0, 1}:
        raise StrategyError("policy text must carry exactly groups 0 and 1")
    return ThresholdPolicy(constraint, tuple(t0), tuple(t1), tuple(p0), tuple(p1), model)


def save_policy(policy: ThresholdPolicy, path):
    Path(path).write_text(policy_to_text(policy), encoding="utf-8")


def load_policy(path, constraint: str = "eo", model=None) -> ThresholdPolicy:
    return policy_from_text(Path(path).read_text(encoding="utf-8"), constraint, model)


# -- operating-point geometry -------------------------------------------------

def _thresholds_desc(scores) -> np.ndarray:
    """Candidate thresholds: +inf, midpoints of adjacent observed scores, -inf.

    Descending order, so the induced rates P{s > t} ascend along the array.
    Midpoints never coincide with observed scores, which keeps the closed
    band of the policy unambiguous on its fitting data.
    """
    uniq = np.unique(scores)
    mids = ((uniq[:-1] + uniq[1:]) / 2.0)[::-1]
    return np.concatenate([[np.inf], mids, [-np.inf]])


def _exceed_rate(sorted_values, thresholds) -> np.ndarray:
    """P{v > t} for each threshold, against a sorted sample."""
    n = len(sorted_values)
    if n == 0:
        raise StrategyError("empty cell while building threshold curves")
    return 1.0 - np.searchsorted(sorted_values, thresholds, side="right") / n


def _upper_envelope(x, y):
    """Indices of the upper concave envelope of points sorted by x ascending."""
    order = np.lexsort((-y, x))
    keep = []
    last_x = None
    for i in order:
        if last_x is not None and x[i] == last_x:
            continue
        keep.append(i)
        last_x = x[i]

    def cross(o, a, b):
        return (x[a] - x[o]) * (y[b] - y[o]) - (y[a] - y[o]) * (x[b] - x[o])

    hull = []
    for i in keep:
        while len(hull) >= 2 and cross(hull[-2], hull[-1], i) >= 0:
            hull.pop()
        hull.append(i)
    return np.asarray(hull, dtype=np.int64)


@dataclass(frozen=True)
class _Curve:
    """One group's threshold staircase plus its upper concave envelope."""

    thr: np.ndarray   # descending thresholds
    x: np.ndarray     # ascending rate coordinate (fpr or selection rate)
    y: np.ndarray     # paired coordinate (tpr or accuracy)
    hull: np.ndarray  # staircase indices of envelope vertices

    def envelope_y(self, qx) -> np.ndarray:
        return np.interp(qx, self.x[self.hull], self.y[self.hull])

    def segment_at(self, qx) -> int:
        hx = self.x[self.hull]
        j = int(np.searchsorted(hx, qx, side="right")) - 1
        return min(max(j, 0), len(hx) - 2)


def _roc_curve(scores, labels) -> _Curve:
    pos = np.sort(scores[labels == 1])
    neg = np.sort(scores[labels == 0])
    if len(pos) == 0 or len(neg) == 0:
        raise StrategyError("a (label, group) cell is empty")
    thr = _thresholds_desc(scores)
    fpr = _exceed_rate(neg, thr)
    tpr = _exceed_rate(pos, thr)
    return _Curve(thr, fpr, tpr, _upper_envelope(fpr, tpr))


def _selection_curve(scores, labels) -> _Curve:
    thr = _thresholds_desc(scores)
    srt = np.sort(scores)
    rate = _exceed_rate(srt, thr)
    pos = np.sort(scores[labels == 1])
    n = len(scores)
    n_pos = len(pos)
    pos_gt = (1.0 - np.searchsorted(pos, thr, side="right") / n_pos) * n_pos if n_pos else np.zeros(len(thr))
    total_gt = rate * n
    # correct = positives above threshold + negatives at or below it
    acc = (pos_gt + (n - n_pos) - (total_gt - pos_gt)) / n
    return _Curve(thr, rate, acc, _upper_envelope(rate, acc))


@dataclass(frozen=True)
class _Realization:
    """How one group reaches a target point: mix of two staircase indices."""

    lo: int      # higher-threshold staircase index
    hi: int      # lower-threshold staircase index
    p0: float    # weight on the lower-threshold point

    def thresholds(self, curve: _Curve):
        t1 = curve.thr[self.lo]
        t0 = curve.thr[self.hi]
        p0 = self.p0
        if p0 <= _EPS:
            return t1, t1, 0.0
        if p0 >= 1.0 - _EPS:
            return t0, t0, 0.0
        return t0, t1, p0


def _segment_realization(curve: _Curve, seg: int, u: float) -> _Realization:
    lo = int(curve.hull[seg])
    hi = int(curve.hull[seg + 1])
    return _Realization(lo, hi, min(max(u, 0.0), 1.0))


def _point_of(curve: _Curve, r: _Realization):
    x = (1 - r.p0) * curve.x[r.lo] + r.p0 * curve.x[r.hi]
    y = (1 - r.p0) * curve.y[r.lo] + r.p0 * curve.y[r.hi]
    return x, y


def _chord_indices(curve: _Curve) -> np.ndarray:
    m = len(curve.thr)
    picks = np.unique(np.concatenate([
        curve.hull,
        np.linspace(0, m - 1, num=min(m, _CHORD_POINTS)).astype(np.int64),
    ]))
    return picks


def _cross_candidates(curve_a: _Curve, curve_b: _Curve):
    """Target points both groups reach exactly, with their realisations.

    Yields tuples ``(x, y, real_a, real_b)``.
    """
    out = []

    def env_segments(curve):
        hx = curve.x[curve.hull]
        hy = curve.y[curve.hull]
        return hx[:-1], hy[:-1], hx[1:], hy[1:]

    ax1, ay1, ax2, ay2 = env_segments(curve_a)
    bx1, by1, bx2, by2 = env_segments(curve_b)

    # corners: all-negative and all-positive are staircase endpoints of both
    for idx_fn in (lambda c: 0, lambda c: len(c.thr) - 1):
        ia = idx_fn(curve_a)
        ib = idx_fn(curve_b)
        out.append((curve_a.x[ia], curve_a.y[ia],
                    _Realization(ia, ia, 0.0), _Realization(ib, ib, 0.0)))

    # proper crossings of the two envelopes
    dax = (ax2 - ax1)[:, None]
    day = (ay2 - ay1)[:, None]
    dbx = (bx2 - bx1)[None, :]
    dby = (by2 - by1)[None, :]
    rx = bx1[None, :] - ax1[:, None]
    ry = by1[None, :] - ay1[:, None]
    denom = dax * dby - day * dbx
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (rx * dby - ry * dbx) / denom
        u = (rx * day - ry * dax) / denom
    ok = (np.abs(denom) > _EPS) & (t >= -_EPS) & (t <= 1 + _EPS) & (u >= -_EPS) & (u <= 1 + _EPS)
    for i, j in zip(*np.nonzero(ok)):
        ti = min(max(float(t[i, j]), 0.0), 1.0)
        uj = min(max(float(u[i, j]), 0.0), 1.0)
        px = ax1[i] + ti * (ax2[i] - ax1[i])
        py = ay1[i] + ti * (ay2[i] - ay1[i])
        out.append((px, py,
                    _segment_realization(curve_a, int(i), ti),
                    _segment_realization(curve_b, int(j), uj)))

    # vertices of one envelope sitting exactly on the other envelope
    def vertex_hits(curve_v, curve_o, swap):
        for pos, idx in enumerate(curve_v.hull):
            vx = curve_v.x[idx]
            vy = curve_v.y[idx]
            oy = float(curve_o.envelope_y(vx))
            if abs(oy - vy) <= 1e-9:
                seg = curve_o.segment_at(vx)
                hx = curve_o.x[curve_o.hull]
                span = hx[seg + 1] - hx[seg]
                u = 0.0 if span <= 0 else (vx - hx[seg]) / span
                real_v = _Realization(int(idx), int(idx), 0.0)
                real_o = _segment_realization(curve_o, seg, float(u))
                out.append((vx, vy, real_o, real_v) if swap else (vx, vy, real_v, real_o))

    vertex_hits(curve_a, curve_b, swap=False)
    vertex_hits(curve_b, curve_a, swap=True)

    # chords of one staircase crossing the other envelope
    def chord_hits(curve_c, curve_o, swap):
        picks = _chord_indices(curve_c)
        ii, jj = np.triu_indices(len(picks), k=1)
        ci = picks[ii]
        cj = picks[jj]
        cx1 = curve_c.x[ci][:, None]
        cy1 = curve_c.y[ci][:, None]
        dcx = (curve_c.x[cj] - curve_c.x[ci])[:, None]
        dcy = (curve_c.y[cj] - curve_c.y[ci])[:, None]
        ox1, oy1, ox2, oy2 = env_segments(curve_o)
        dox = (ox2 - ox1)[None, :]
        doy = (oy2 - oy1)[None, :]
        rx2 = ox1[None, :] - cx1
        ry2 = oy1[None, :] - cy1
        den = dcx * doy - dcy * dox
        with np.errstate(divide="ignore", invalid="ignore"):
            tc = (rx2 * doy - ry2 * dox) / den
            uo = (rx2 * dcy - ry2 * dcx) / den
        hit = (np.abs(den) > _EPS) & (tc >= -_EPS) & (tc <= 1 + _EPS) & (uo >= -_EPS) & (uo <= 1 + _EPS)
        for p, q in zip(*np.nonzero(hit)):
            tcv = min(max(float(tc[p, q]), 0.0), 1.0)
            uov = min(max(float(uo[p, q]), 0.0), 1.0)
            px = float(cx1[p, 0] + tcv * dcx[p, 0])
            py = float(cy1[p, 0] + tcv * dcy[p, 0])
            real_c = _Realization(int(ci[p]), int(cj[p]), tcv)
            real_o = _segment_realization(curve_o, int(q), uov)
            out.append((px, py, real_o, real_c) if swap else (px, py, real_c, real_o))

    chord_hits(curve_a, curve_b, swap=False)
    chord_hits(curve_b, curve_a, swap=True)
    return out


def _band_width(t0, t1):
    if t0 == t1:
        return 0.0
    return float(t1) - float(t0)


def _fit_eo(scores, labels, groups, base_pos_rate) -> tuple:
    curves = []
    for a in (0, 1):
        mask = groups == a
        if not mask.any():
            raise StrategyError("a protected group is empty")
        curves.append(_roc_curve(scores[mask], labels[mask]))
    candidates = _cross_candidates(curves[0], curves[1])

    best = None
    for px, py, real0, real1 in candidates:
        acc = base_pos_rate * py + (1.0 - base_pos_rate) * (1.0 - px)
        th = [real.thresholds(curve) for real, curve in zip((real0, real1), curves)]
        width = sum(_band_width(t0, t1) for t0, t1, _ in th)
        key = (-acc, width)
        if best is None or key < best[0]:
            best = (key, th)
    return best[1]


def _fit_dp(scores, labels, groups, group_mass) -> tuple:
    curves = []
    for a in (0, 1):
        mask = groups == a
        if not mask.any():
            raise StrategyError("a protected group is empty")
        curves.append(_selection_curve(scores[mask], labels[mask]))

    rates = np.unique(np.concatenate([c.x[c.hull] for c in curves]))
    total_acc = sum(mass * curve.envelope_y(rates)
                    for mass, curve in zip(group_mass, curves))

    best = None
    for r, acc in zip(rates, total_acc):
        th = []
        for curve in curves:
            seg = curve.segment_at(r)
            hx = curve.x[curve.hull]
            span = hx[seg + 1] - hx[seg]
            u = 0.0 if span <= 0 else (r - hx[seg]) / span
            th.append(_segment_realization(curve, seg, float(u)).thresholds(curve))
        width = sum(_band_width(t0, t1) for t0, t1, _ in th)
        key = (-float(acc), width)
        if best is None or key < best[0]:
            best = (key, th)
    return best[1]


def fit_threshold_optimizer(model: TrainedModel, ds: Dataset, constraint: str) -> ThresholdPolicy:
    """Fit per-group randomized thresholds on a dataset's base-model scores."""
    if constraint not in ("dp", "eo"):
        raise StrategyError(f"constraint must be dp or eo, got {constraint!r}")
    ds.require_binary_protected()
    scores = models.scores(model, ds)
    groups = ds.protected
    labels = ds.labels
    if constraint == "eo":
        th = _fit_eo(scores, labels, groups, float(labels.mean()))
    else:
        mass = [float((groups == a).mean()) for a in (0, 1)]
        th = _fit_dp(scores, labels, groups, mass)
    t0 = tuple(v[0] for v in th)
    t1 = tuple(v[1] for v in th)
    p0 = tuple(v[2] for v in th)
    p1 = tuple(1.0 - v[2] for v in th)
    return ThresholdPolicy(constraint, t0, t1, p0, p1, model)
