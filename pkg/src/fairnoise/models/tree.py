"""Greedy Gini decision tree on the encoded feature matrix.

The split search is the hottest loop in the package (it runs once per node
per feature), so the sorted-sweep lives in the kernel backend.  Splits with
zero Gini gain are still taken while the node is impure; that is what lets
depth-2 trees solve parity-style problems where the first cut earns nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from fairnoise import kernels


@dataclass(frozen=True)
class TreeParams:
    feature: np.ndarray    # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    score: np.ndarray      # leaf positive fraction (weighted)


def fit_tree(X, y, sample_weight, max_depth=6, min_samples_split=2) -> TreeParams:
    feature = []
    threshold = []
    left = []
    right = []
    score = []

    def add_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        score.append(0.5)
        return len(feature) - 1

    def build(idx, depth):
        node = add_node()
        w = sample_weight[idx]
        wtot = float(w.sum())
        wpos = float((w * y[idx]).sum())
        score[node] = wpos / wtot if wtot > 0 else 0.5
        impure = 0.0 < wpos < wtot
        if depth >= max_depth or len(idx) < min_samples_split or not impure:
            return node
        best_score = np.inf
        best_feat = -1
        best_thr = 0.0
        pos_w = w * y[idx]
        for j in range(X.shape[1]):
            col = X[idx, j]
            order = np.argsort(col, kind="stable")
            svals = col[order]
            pos, sc = kernels.best_split(svals, pos_w[order], w[order])
            if pos >= 0 and sc < best_score:
                best_score = sc
                best_feat = j
                best_thr = 0.5 * (svals[pos] + svals[pos + 1])
        if best_feat < 0:
            return node
        mask = X[idx, best_feat] <= best_thr
        feature[node] = best_feat
        threshold[node] = best_thr
        left[node] = build(idx[mask], depth + 1)
        right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(X.shape[0]), 0)
    return TreeParams(
        np.asarray(feature, dtype=np.int64),
        np.asarray(threshold),
        np.asarray(left, dtype=np.int64),
        np.asarray(right, dtype=np.int64),
        np.asarray(score),
    )


def tree_scores(params: TreeParams, X) -> np.ndarray:
    node = np.zeros(X.shape[0], dtype=np.int64)
    while True:
        rows = np.flatnonzero(params.feature[node] >= 0)
        if rows.size == 0:
            break
        cur = node[rows]
        values = X[rows, params.feature[cur]]
        go_left = values <= params.threshold[cur]
        node[rows] = np.where(go_left, params.left[cur], params.right[cur])
    return params.score[node]
