"""Loading, validation and transforms of tabular fairness datasets."""

import numpy as np
import pytest

from fairnoise.dataset import (CONTINUOUS, DISCRETE, DataError, Dataset,
                               FeatureKind, Schema, SplitSpec, balance_classes,
                               binarize_protected, load_csv, split,
                               synth_biased, write_csv)

CSV_BODY = (
    "age,job,sex,y\n"
    "23,clerk,0,1\n"
    "31,nurse,1,0\n"
    "47,clerk,0,1\n"
    "52,teacher,1,0\n"
)

SCHEMA_BODY = (
    "label=y\n"
    "protected=sex\n"
    "kind.age=continuous\n"
    "kind.job=discrete\n"
)


@pytest.fixture
def csv_pair(tmp_path):
    csv_path = tmp_path / "toy.csv"
    schema_path = tmp_path / "toy.schema"
    csv_path.write_text(CSV_BODY)
    schema_path.write_text(SCHEMA_BODY)
    return csv_path, schema_path


class TestLoadCsv:
    def test_dimensions(self, csv_pair):
        ds = load_csv(*csv_pair)
        assert ds.n_rows == 4
        assert ds.n_features == 2
        assert ds.names == ("age", "job")
        assert ds.kinds[0].tag == CONTINUOUS
        assert ds.kinds[1].tag == DISCRETE

    def test_category_set_is_distinct_values(self, csv_pair):
        ds = load_csv(*csv_pair)
        assert ds.kinds[1].categories == ("clerk", "nurse", "teacher")

    def test_two_value_column_categories(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("c,s,y\na,0,0\nb,1,1\na,0,0\nb,1,1\n")
        s = tmp_path / "d.schema"
        s.write_text("label=y\nprotected=s\nkind.c=discrete\n")
        ds = load_csv(p, s)
        assert ds.kinds[0].categories == ("a", "b")

    def test_nonbinary_protected_rejected(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("x,s,y\n1,0,0\n2,1,1\n3,2,0\n")
        s = tmp_path / "bad.schema"
        s.write_text("label=y\nprotected=s\n")
        with pytest.raises(DataError, match="protected column not binary"):
            load_csv(p, s)

    def test_missing_file(self, tmp_path):
        s = tmp_path / "x.schema"
        s.write_text("label=y\nprotected=s\n")
        with pytest.raises(DataError, match="no such file"):
            load_csv(tmp_path / "absent.csv", s)

    def test_missing_value_rejected(self, tmp_path):
        p = tmp_path / "gap.csv"
        p.write_text("x,s,y\n1,0,0\n,1,1\n")
        s = tmp_path / "gap.schema"
        s.write_text("label=y\nprotected=s\n")
        with pytest.raises(DataError, match="missing value"):
            load_csv(p, s)

    def test_non_numeric_continuous_rejected(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("x,s,y\n1,0,0\nfoo,1,1\n")
        s = tmp_path / "t.schema"
        s.write_text("label=y\nprotected=s\nkind.x=continuous\n")
        with pytest.raises(DataError, match="not numeric"):
            load_csv(p, s)

    def test_row_filter_and_drop(self, tmp_path):
        p = tmp_path / "f.csv"
        p.write_text("x,junk,s,y\n1,keep,0,0\n2,unknown,1,1\n3,keep,1,1\n4,keep,0,0\n")
        s = tmp_path / "f.schema"
        s.write_text("label=y\nprotected=s\ndrop.junk=true\nfilter.junk=unknown\n")
        ds = load_csv(p, s)
        assert ds.n_rows == 3
        assert ds.names == ("x",)

    def test_positive_key_binarises_at_load(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("x,race,y\n1,white,0\n2,black,1\n3,asian,1\n4,white,0\n")
        s = tmp_path / "r.schema"
        s.write_text("label=y\nprotected=race\npositive=white\n")
        ds = load_csv(p, s)
        assert ds.protected.tolist() == [1, 0, 0, 1]

    def test_positive_key_degenerate_sets(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("x,race,y\n1,white,0\n2,black,1\n")
        s_all = tmp_path / "all.schema"
        s_all.write_text("label=y\nprotected=race\npositive=white,black\n")
        with pytest.raises(DataError, match="all rows"):
            load_csv(p, s_all)
        s_none = tmp_path / "none.schema"
        s_none.write_text("label=y\nprotected=race\npositive=martian\n")
        with pytest.raises(DataError, match="no rows"):
            load_csv(p, s_none)

    def test_schema_requires_roles(self, tmp_path):
        s = tmp_path / "s.schema"
        s.write_text("label=y\n")
        with pytest.raises(DataError, match="protected"):
            Schema.from_file(s)


class TestRoundTrip:
    def test_write_after_load_is_stable(self, tmp_path):
        # canonical form: feature columns, protected, label; 17 significant digits
        body = "x1,cat,protected,label\n0.5,a,0,1\n1.25,b,1,0\n2,a,1,1\n3.5,b,0,0\n"
        first = tmp_path / "a.csv"
        first.write_text(body)
        schema = tmp_path / "a.schema"
        schema.write_text("label=label\nprotected=protected\nkind.cat=discrete\n")
        ds = load_csv(first, schema)
        out = tmp_path / "b.csv"
        write_csv(ds, out)
        assert out.read_text() == body
        write_csv(load_csv(out, schema), tmp_path / "c.csv")
        assert (tmp_path / "c.csv").read_text() == body


class TestSplit:
    def _ds(self, n):
        x = np.arange(n, dtype=np.float64)
        labels = np.tile([0, 1], n // 2 + 1)[:n]
        prot = np.tile([0, 0, 1, 1], n // 4 + 1)[:n]
        return Dataset.build([x], (FeatureKind(CONTINUOUS),), ("x",), labels, prot)

    def test_sizes(self):
        train, test = split(self._ds(10), SplitSpec(0.8, seed=7))
        assert (train.n_rows, test.n_rows) == (8, 2)

    def test_deterministic(self):
        ds = self._ds(12)
        a = split(ds, SplitSpec(0.75, seed=7))
        b = split(ds, SplitSpec(0.75, seed=7))
        for x, y in zip(a, b):
            assert (x.labels == y.labels).all()
            assert (x.columns[0] == y.columns[0]).all()

    def test_clamp_keeps_both_sides(self):
        x = np.array([0.0, 1.0])
        ds = Dataset.build([x], (FeatureKind(CONTINUOUS),), ("x",),
                           np.array([0, 1]), np.array([1, 0]))
        train, test = split(ds, SplitSpec(0.9, seed=3))
        assert (train.n_rows, test.n_rows) == (1, 1)

    def test_partition(self):
        ds = self._ds(30)
        train, test = split(ds, SplitSpec(0.5, seed=11))
        merged = np.sort(np.concatenate([train.columns[0], test.columns[0]]))
        assert np.array_equal(merged, np.sort(ds.columns[0]))

    def test_fraction_bounds(self):
        with pytest.raises(DataError):
            split(self._ds(10), SplitSpec(1.0, seed=1))


class TestBalance:
    def _imbalanced(self, n0, n1):
        labels = np.array([0] * n0 + [1] * n1)
        x = np.arange(n0 + n1, dtype=np.float64)
        prot = np.tile([0, 1], (n0 + n1) // 2 + 1)[: n0 + n1]
        return Dataset.build([x], (FeatureKind(CONTINUOUS),), ("x",), labels, prot)

    def test_downsamples_majority(self):
        ds = self._imbalanced(700, 300)
        out = balance_classes(ds, seed=5)
        counts = np.bincount(out.labels)
        assert counts.tolist() == [300, 300]

    def test_already_balanced_unchanged(self):
        ds = self._imbalanced(5, 5)
        out = balance_classes(ds, seed=5)
        assert np.array_equal(out.columns[0], ds.columns[0])

    def test_deterministic(self):
        ds = self._imbalanced(40, 10)
        a = balance_classes(ds, seed=9)
        b = balance_classes(ds, seed=9)
        assert np.array_equal(a.columns[0], b.columns[0])

    def test_retained_rows_unaltered(self):
        ds = self._imbalanced(40, 10)
        out = balance_classes(ds, seed=9)
        original = {float(v) for v in ds.columns[0]}
        assert all(float(v) in original for v in out.columns[0])

    def test_single_class_rejected(self):
        labels = np.zeros(10, dtype=np.int64)
        ds = Dataset.build([np.arange(10.0)], (FeatureKind(CONTINUOUS),), ("x",),
                           labels, np.tile([0, 1], 5))
        with pytest.raises(DataError):
            balance_classes(ds, seed=1)


class TestBinarizeProtected:
    def _raw(self):
        values = ("asian", "black", "white")
        codes = np.array([2, 1, 0, 2, 1, 0])
        x = np.arange(6, dtype=np.float64)
        labels = np.array([0, 1, 0, 1, 0, 1])
        return Dataset.build([x], (FeatureKind(CONTINUOUS),), ("x",), labels, codes, values)

    def test_membership(self):
        out = binarize_protected(self._raw(), {"white"})
        assert out.protected.tolist() == [1, 0, 0, 1, 0, 0]
        assert out.protected_values == (0, 1)

    def test_degenerate_full_set(self):
        with pytest.raises(DataError, match="all rows"):
            binarize_protected(self._raw(), {"white", "black", "asian"})

    def test_degenerate_empty_match(self):
        with pytest.raises(DataError, match="no rows"):
            binarize_protected(self._raw(), {"hispanic"})

    def test_identity_on_binary(self):
        ds = synth_biased(100, 0.5, 0.5, seed=1)
        out = binarize_protected(ds, {1})
        assert np.array_equal(out.protected, ds.protected)


class TestSynth:
    def test_deterministic(self):
        a = synth_biased(500, 0.7, 0.4, seed=3)
        b = synth_biased(500, 0.7, 0.4, seed=3)
        assert np.array_equal(a.labels, b.labels)
        assert np.array_equal(a.columns[0], b.columns[0])
        assert np.array_equal(a.columns[2], b.columns[2])

    def test_minimum_size(self):
        with pytest.raises(DataError):
            synth_biased(50, 0.5, 0.5, seed=1)

    def test_structure(self):
        ds = synth_biased(400, 1.0, 0.5, seed=2)
        assert [k.tag for k in ds.kinds] == [CONTINUOUS, CONTINUOUS, DISCRETE]
        assert ds.kinds[2].categories == ("c0", "c1", "c2")
        assert set(np.unique(ds.protected)) == {0, 1}

    def test_mean_gap_tracks_bias(self):
        ds = synth_biased(60000, 1.0, 0.5, seed=4)
        x1 = ds.columns[0]
        gap = x1[ds.protected == 1].mean() - x1[ds.protected == 0].mean()
        assert gap == pytest.approx(1.0, abs=0.05)


class TestDatasetInvariants:
    def test_immutability(self):
        ds = synth_biased(100, 0.5, 0.5, seed=0)
        with pytest.raises(ValueError):
            ds.labels[0] = 1
        with pytest.raises(ValueError):
            ds.columns[0][0] = 0.0

    def test_label_validation(self):
        with pytest.raises(DataError, match="label"):
            Dataset.build([np.zeros(3)], (FeatureKind(CONTINUOUS),), ("x",),
                          np.array([0, 1, 2]), np.array([0, 1, 0]))

    def test_length_validation(self):
        with pytest.raises(DataError):
            Dataset.build([np.zeros(3)], (FeatureKind(CONTINUOUS),), ("x",),
                          np.array([0, 1, 1]), np.array([0, 1]))
