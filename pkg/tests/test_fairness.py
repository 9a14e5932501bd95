"""Group fairness metrics against hand counts and an exhaustive oracle."""

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairnoise.fairness import (EmptyCellError, FairnessError,
                                demographic_parity, equalized_odds,
                                false_positive_diff, group_expected_rates,
                                group_rates, metric_value, true_positive_diff)


def oracle_rates(preds, labels, protected):
    """Independent pure-python counting oracle."""
    n = [[0, 0], [0, 0]]
    pos = [[0, 0], [0, 0]]
    for p, y, a in zip(preds, labels, protected):
        n[y][a] += 1
        pos[y][a] += p
    return n, pos


def oracle_metric(metric, preds, labels, protected):
    n, pos = oracle_rates(preds, labels, protected)

    def rate(y, a):
        if n[y][a] == 0:
            return None
        return pos[y][a] / n[y][a]

    def group(a):
        total = n[0][a] + n[1][a]
        if total == 0:
            return None
        return (pos[0][a] + pos[1][a]) / total

    if metric == "dp":
        g0, g1 = group(0), group(1)
        return None if g0 is None or g1 is None else abs(g0 - g1)
    if metric == "fp":
        r0, r1 = rate(0, 0), rate(0, 1)
        return None if r0 is None or r1 is None else abs(r0 - r1)
    if metric == "tp":
        r0, r1 = rate(1, 0), rate(1, 1)
        return None if r0 is None or r1 is None else abs(r0 - r1)
    fp = oracle_metric("fp", preds, labels, protected)
    tp = oracle_metric("tp", preds, labels, protected)
    return None if fp is None or tp is None else max(fp, tp)


class TestGroupRates:
    def test_hand_count(self):
        gr = group_rates([1, 0], [1, 0], [0, 1])
        assert gr.n_group.tolist() == [1, 1]
        assert gr.pos_group.tolist() == [1.0, 0.0]
        assert gr.n[1, 0] == 1 and gr.pos[1, 0] == 1.0

    def test_single_group_flags_other_undefined(self):
        gr = group_rates([1, 0, 1], [1, 0, 1], [0, 0, 0])
        assert not gr.group_defined(1)
        assert not gr.cell_defined(0, 1)
        with pytest.raises(EmptyCellError, match="empty protected group"):
            demographic_parity(gr)

    def test_single_row(self):
        gr = group_rates([1], [1], [0])
        assert gr.n.sum() == 1 and gr.cell_defined(1, 0)

    def test_length_mismatch(self):
        with pytest.raises(FairnessError):
            group_rates([1, 0], [1], [0, 1])

    def test_non_binary_rejected(self):
        with pytest.raises(FairnessError):
            group_rates([2, 0], [1, 0], [0, 1])


class TestMetricValues:
    def _gr(self, preds, labels, protected):
        return group_rates(preds, labels, protected)

    def test_dp_direct(self):
        # group 0 rate 0.5, group 1 rate 0.25
        gr = self._gr([1, 0, 1, 0, 0, 0], [1, 0, 1, 0, 0, 0], [0, 0, 1, 1, 1, 1])
        assert demographic_parity(gr) == pytest.approx(0.25, abs=1e-15)

    def test_dp_identical_predictions(self):
        gr = self._gr([1, 1, 1, 1], [1, 0, 1, 0], [0, 0, 1, 1])
        assert demographic_parity(gr) == 0.0

    def test_dp_extremes(self):
        gr = self._gr([1, 1, 0, 0], [1, 0, 1, 0], [0, 0, 1, 1])
        assert demographic_parity(gr) == 1.0

    def test_fp_rates(self):
        # FP rate 0.2 in group 0 (1 of 5 negatives), 0.1 in group 1 (1 of 10)
        preds = [1, 0, 0, 0, 0] + [1] + [1, 0, 0, 0, 0, 0, 0, 0, 0, 0] + [1]
        labels = [0] * 5 + [1] + [0] * 10 + [1]
        protected = [0] * 6 + [1] * 11
        gr = self._gr(preds, labels, protected)
        assert false_positive_diff(gr) == pytest.approx(0.1, abs=1e-12)

    def test_fp_perfect_classifier(self):
        gr = self._gr([0, 1, 0, 1], [0, 1, 0, 1], [0, 0, 1, 1])
        assert false_positive_diff(gr) == 0.0

    def test_fp_empty_cell(self):
        gr = self._gr([1, 0, 1], [0, 0, 1], [0, 0, 1])
        with pytest.raises(EmptyCellError):
            false_positive_diff(gr)

    def test_tp_rates(self):
        # TP rates 0.9 (9/10) vs 0.6 (6/10)
        preds = [1] * 9 + [0] + [1] * 6 + [0] * 4
        labels = [1] * 20
        protected = [0] * 10 + [1] * 10
        # add negatives so the dataset is sane
        preds += [0, 0]
        labels += [0, 0]
        protected += [0, 1]
        gr = self._gr(preds, labels, protected)
        assert true_positive_diff(gr) == pytest.approx(0.3, abs=1e-12)

    def test_eo_is_max_of_slices(self):
        cases = [((0.1, 0.3), 0.3), ((0.0, 0.0), 0.0), ((0.4, 0.0), 0.4)]
        for (fp_want, tp_want), eo_want in cases:
            # craft 10-negative and 10-positive cells per group with exact rates
            preds, labels, protected = [], [], []
            for a, (fpr, tpr) in enumerate([(0.0, 0.0), (fp_want, tp_want)]):
                for y, r in ((0, fpr), (1, tpr)):
                    k = int(round(r * 10))
                    preds += [1] * k + [0] * (10 - k)
                    labels += [y] * 10
                    protected += [a] * 10
            gr = self._gr(preds, labels, protected)
            assert false_positive_diff(gr) == pytest.approx(fp_want, abs=1e-12)
            assert true_positive_diff(gr) == pytest.approx(tp_want, abs=1e-12)
            assert equalized_odds(gr) == pytest.approx(eo_want, abs=1e-12)

    def test_metric_dispatch(self):
        gr = self._gr([1, 0, 1, 0], [1, 0, 1, 0], [0, 0, 1, 1])
        for metric in ("dp", "eo", "fp", "tp"):
            assert metric_value(metric, gr) >= 0.0
        with pytest.raises(FairnessError):
            metric_value("accuracy", gr)


@st.composite
def labelled_vectors(draw):
    n = draw(st.integers(min_value=8, max_value=40))
    bits = lambda: draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
    preds, labels, protected = bits(), bits(), bits()
    # ensure all four (y, a) cells are populated
    for y in (0, 1):
        for a in (0, 1):
            labels[2 * y + a] = y
            protected[2 * y + a] = a
    return preds, labels, protected


class TestProperties:
    @settings(max_examples=60, deadline=None)
    @given(labelled_vectors())
    def test_range_and_oracle(self, data):
        preds, labels, protected = data
        gr = group_rates(preds, labels, protected)
        for metric in ("dp", "eo", "fp", "tp"):
            value = metric_value(metric, gr)
            assert 0.0 <= value <= 1.0
            assert value == pytest.approx(oracle_metric(metric, preds, labels, protected), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(labelled_vectors(), st.integers(0, 2 ** 31))
    def test_permutation_invariance(self, data, seed):
        preds, labels, protected = map(np.array, data)
        perm = np.random.default_rng(seed).permutation(len(preds))
        gr1 = group_rates(preds, labels, protected)
        gr2 = group_rates(preds[perm], labels[perm], protected[perm])
        for metric in ("dp", "eo", "fp", "tp"):
            assert metric_value(metric, gr1) == metric_value(metric, gr2)

    @settings(max_examples=40, deadline=None)
    @given(labelled_vectors())
    def test_group_swap_symmetry(self, data):
        preds, labels, protected = map(np.array, data)
        gr1 = group_rates(preds, labels, protected)
        gr2 = group_rates(preds, labels, 1 - protected)
        for metric in ("dp", "eo", "fp", "tp"):
            assert metric_value(metric, gr1) == pytest.approx(
                metric_value(metric, gr2), abs=1e-15)


class TestExhaustive:
    def test_all_prediction_vectors_match_oracle(self):
        labels = [0, 0, 1, 1, 0, 1, 0, 1]
        protected = [0, 1, 0, 1, 1, 0, 0, 1]
        n = len(labels)
        for bits in itertools.product((0, 1), repeat=n):
            gr = group_rates(list(bits), labels, protected)
            for metric in ("dp", "eo", "fp", "tp"):
                want = oracle_metric(metric, bits, labels, protected)
                assert metric_value(metric, gr) == pytest.approx(want, abs=0)


class TestExpectedRates:
    def test_matches_hard_counts_on_binary_probs(self):
        preds = np.array([1, 0, 1, 1, 0, 0])
        labels = np.array([1, 0, 1, 0, 1, 0])
        protected = np.array([0, 0, 1, 1, 0, 1])
        a = group_rates(preds, labels, protected)
        b = group_expected_rates(preds.astype(float), labels, protected)
        assert np.array_equal(a.pos, b.pos)

    def test_fractional_probabilities(self):
        gr = group_expected_rates([0.5, 0.5, 1.0, 0.0], [1, 0, 1, 0], [0, 0, 1, 1])
        assert demographic_parity(gr) == pytest.approx(0.0, abs=1e-15)

    def test_out_of_range_rejected(self):
        with pytest.raises(FairnessError):
            group_expected_rates([1.5, 0.0], [1, 0], [0, 1])
