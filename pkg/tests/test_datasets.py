import logging

import numpy as np
import pytest

import synthdata
from erasure_bench.datasets import (
    BUILTIN_DATASETS,
    CATEGORICAL,
    NUMERIC,
    Dataset,
    FeatureEncoder,
    PreprocessConfig,
    Schema,
    dataset_config_from_dict,
    load_csv,
    preprocess,
    resolve_data_dir,
    train_test_split,
)

TOY_SCHEMA = Schema(
    columns=(("color", CATEGORICAL), ("size", NUMERIC), ("label", CATEGORICAL)),
    target="label",
    feature_columns=("color", "size"),
)


def write_toy_csv(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("color,size,label\n")
        for row in rows:
            fh.write(",".join(str(v) for v in row) + "\n")
    return path


class TestSchema:
    def test_duplicate_columns_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            Schema(columns=(("a", NUMERIC), ("a", NUMERIC)), target="a",
                   feature_columns=())

    def test_target_must_exist(self):
        with pytest.raises(ValueError, match="target"):
            Schema(columns=(("a", NUMERIC),), target="b", feature_columns=())

    def test_features_subset_of_columns(self):
        with pytest.raises(ValueError, match="not in schema"):
            Schema(columns=(("a", NUMERIC), ("t", CATEGORICAL)), target="t",
                   feature_columns=("z",))

    def test_target_not_a_feature(self):
        with pytest.raises(ValueError, match="cannot be a feature"):
            Schema(columns=(("a", NUMERIC), ("t", CATEGORICAL)), target="t",
                   feature_columns=("a", "t"))

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="kind"):
            Schema(columns=(("a", "text"),), target="a", feature_columns=())


class TestLoadCsv:
    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_csv(tmp_path / "nope.csv", TOY_SCHEMA)

    def test_header_only_is_zero_rows(self, tmp_path):
        path = write_toy_csv(tmp_path / "empty.csv", [])
        with pytest.raises(ValueError, match="zero rows"):
            load_csv(path, TOY_SCHEMA)

    def test_header_mismatch(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("color,label\nred,a\n", encoding="utf-8")
        with pytest.raises(ValueError, match="missing schema columns"):
            load_csv(path, TOY_SCHEMA)

    def test_non_numeric_token_rejected(self, tmp_path):
        path = write_toy_csv(tmp_path / "bad.csv", [("red", "big", "a")])
        with pytest.raises(ValueError, match="non-numeric"):
            load_csv(path, TOY_SCHEMA)

    def test_incomplete_rows_dropped_and_counted(self, tmp_path):
        rows = [("red", 1.0, "a"), ("?", 2.0, "b"), ("blue", "", "a"), ("green", 3.0, "b")]
        ds = load_csv(write_toy_csv(tmp_path / "toy.csv", rows), TOY_SCHEMA)
        assert ds.n_rows == 2
        assert ds.n_dropped == 2
        assert ds.row_ids.tolist() == [0, 1]

    def test_values_whitespace_stripped(self, tmp_path):
        path = tmp_path / "toy.csv"
        path.write_text("color,size,label\n red , 1.5 , a \n", encoding="utf-8")
        ds = load_csv(path, TOY_SCHEMA)
        assert ds.records[0]["color"] == "red"
        assert ds.records[0]["size"] == 1.5

    def test_extra_columns_ignored(self, tmp_path):
        path = tmp_path / "toy.csv"
        path.write_text("color,size,label,junk\nred,1,a,zzz\n", encoding="utf-8")
        ds = load_csv(path, TOY_SCHEMA)
        assert ds.n_rows == 1
        assert "junk" not in ds.records[0]

    def test_header_order_insensitive(self, tmp_path):
        path = tmp_path / "toy.csv"
        path.write_text("label,size,color\na,1,red\n", encoding="utf-8")
        ds = load_csv(path, TOY_SCHEMA)
        assert ds.records[0] == {"color": "red", "size": 1.0, "label": "a"}

    def test_adult_complete_case_count(self, tmp_path):
        # mirrors the published pipeline: 32,561 raw rows of which 2,399 carry
        # missing markers leaves 30,162 complete records
        path = synthdata.write_csv(
            tmp_path / "adult.csv", synthdata.ADULT_COLUMNS,
            synthdata.make_adult_rows(32_561, seed=23),
            missing_row_count=2_399, seed=5,
        )
        ds = load_csv(path, BUILTIN_DATASETS["adult"].schema)
        assert ds.n_rows == 30_162
        assert ds.n_dropped == 2_399

    def test_cmc_fixture_row_count(self, cmc_ds):
        assert cmc_ds.n_rows == 1_473

    def test_mgm_fixture_complete_case_count(self, mgm_ds):
        assert mgm_ds.n_rows == 830
        assert mgm_ds.n_dropped == 131


class TestPreprocess:
    def test_one_hot_groups_sum_to_one(self):
        rng = np.random.default_rng(0)
        values = rng.choice(["x", "y", "z"], 10).tolist()
        ds = Dataset(
            schema=Schema(columns=(("c", CATEGORICAL), ("t", CATEGORICAL)),
                          target="t", feature_columns=("c",)),
            records=tuple({"c": v, "t": "a"} for v in values),
            row_ids=np.arange(10, dtype=np.int64),
        )
        prepared = preprocess(ds)
        assert prepared.feature_matrix.shape == (10, 3)
        assert np.array_equal(prepared.feature_matrix.sum(axis=1), np.ones(10))

    def test_numeric_only_passthrough(self):
        ds = Dataset(
            schema=Schema(columns=(("a", NUMERIC), ("b", NUMERIC), ("t", CATEGORICAL)),
                          target="t", feature_columns=("a", "b")),
            records=tuple({"a": float(i), "b": float(-i), "t": "x"} for i in range(5)),
            row_ids=np.arange(5, dtype=np.int64),
        )
        prepared = preprocess(ds)
        expected = np.array([[float(i), float(-i)] for i in range(5)])
        assert np.array_equal(prepared.feature_matrix, expected)

    def test_cahousing_class_merge(self, cahousing_ds):
        raw_classes = {r["ocean_proximity"] for r in cahousing_ds.records}
        assert {"NEAR BAY", "ISLAND"} <= raw_classes
        prepared = preprocess(cahousing_ds, BUILTIN_DATASETS["cahousing"].preprocess)
        assert prepared.class_names == ("<1H OCEAN", "INLAND", "NEAR OCEAN")

    def test_deterministic_feature_order(self, adult_ds):
        prepared = preprocess(adult_ds, BUILTIN_DATASETS["adult"].preprocess)
        schema = BUILTIN_DATASETS["adult"].schema
        # schema order for columns, lexicographic order inside one-hot groups
        col_of = [name.split("=")[0] for name in prepared.feature_names]
        order = [c for c in schema.feature_columns for _ in range(col_of.count(c))]
        assert col_of == order
        for col in schema.feature_columns:
            cats = [n.split("=", 1)[1] for n in prepared.feature_names
                    if n.startswith(f"{col}=")]
            assert cats == sorted(cats)

    def test_repeat_runs_byte_identical(self, adult_ds):
        a = preprocess(adult_ds, BUILTIN_DATASETS["adult"].preprocess)
        b = preprocess(adult_ds, BUILTIN_DATASETS["adult"].preprocess)
        assert a.feature_matrix.tobytes() == b.feature_matrix.tobytes()
        assert np.array_equal(a.labels, b.labels)
        assert a.class_names == b.class_names

    def test_single_category_column_warns_not_fails(self, caplog):
        ds = Dataset(
            schema=Schema(columns=(("c", CATEGORICAL), ("t", CATEGORICAL)),
                          target="t", feature_columns=("c",)),
            records=tuple({"c": "only", "t": str(i % 2)} for i in range(4)),
            row_ids=np.arange(4, dtype=np.int64),
        )
        with caplog.at_level(logging.WARNING):
            prepared = preprocess(ds)
        assert "single observed value" in caplog.text
        assert np.array_equal(prepared.feature_matrix, np.ones((4, 1)))

    def test_frozen_encoder_keeps_dimension_for_subsets(self, cahousing_ds):
        cfg = BUILTIN_DATASETS["cahousing"].preprocess
        encoder = FeatureEncoder(cahousing_ds.schema, cfg).fit(cahousing_ds)
        full = encoder.transform(cahousing_ds)
        keep = [i for i, rec in enumerate(cahousing_ds.records)
                if rec["ocean_proximity"] not in ("NEAR BAY", "ISLAND")]
        subset = encoder.transform(cahousing_ds.take(keep))
        assert subset.feature_matrix.shape[1] == full.feature_matrix.shape[1]
        assert subset.class_names == full.class_names

    def test_unseen_category_rejected(self):
        base = Dataset(
            schema=Schema(columns=(("c", CATEGORICAL), ("t", CATEGORICAL)),
                          target="t", feature_columns=("c",)),
            records=({"c": "x", "t": "a"}, {"c": "y", "t": "a"}),
            row_ids=np.arange(2, dtype=np.int64),
        )
        encoder = FeatureEncoder(base.schema).fit(base)
        other = Dataset(schema=base.schema, records=({"c": "zzz", "t": "a"},),
                        row_ids=np.array([0], dtype=np.int64))
        with pytest.raises(ValueError, match="unseen category"):
            encoder.transform(other)

    def test_unknown_preprocess_column_rejected(self):
        ds = Dataset(
            schema=TOY_SCHEMA,
            records=({"color": "red", "size": 1.0, "label": "a"},),
            row_ids=np.array([0], dtype=np.int64),
        )
        with pytest.raises(ValueError, match="unknown columns"):
            preprocess(ds, PreprocessConfig(feature_columns=("nope",)))


class TestTrainTestSplit:
    def make_prepared(self, n):
        ds = Dataset(
            schema=Schema(columns=(("v", NUMERIC), ("t", CATEGORICAL)),
                          target="t", feature_columns=("v",)),
            records=tuple({"v": float(i), "t": str(i % 2)} for i in range(n)),
            row_ids=np.arange(n, dtype=np.int64),
        )
        return preprocess(ds)

    def test_seventy_thirty_sizes(self):
        split = train_test_split(self.make_prepared(100), 0.7, 42)
        assert split.train_ids.size == 70
        assert split.test_ids.size == 30

    def test_same_seed_identical(self):
        pd = self.make_prepared(57)
        a = train_test_split(pd, 0.7, 42)
        b = train_test_split(pd, 0.7, 42)
        assert np.array_equal(a.train_ids, b.train_ids)
        assert np.array_equal(a.test_ids, b.test_ids)
        c = train_test_split(pd, 0.7, 43)
        assert not np.array_equal(a.train_ids, c.train_ids)

    def test_partition_property(self):
        pd = self.make_prepared(10)
        split = train_test_split(pd, 0.5, 7)
        combined = set(split.train_ids) | set(split.test_ids)
        assert combined == set(range(10))
        assert not set(split.train_ids) & set(split.test_ids)

    def test_invalid_inputs(self):
        pd = self.make_prepared(10)
        with pytest.raises(ValueError, match="ratio"):
            train_test_split(pd, 0.0, 1)
        with pytest.raises(ValueError, match="ratio"):
            train_test_split(pd, 1.0, 1)
        with pytest.raises(ValueError, match="at least 2"):
            train_test_split(self.make_prepared(1), 0.5, 1)

    def test_rounding_ties_to_even(self):
        # 0.5 * 25 = 12.5 rounds to 12 under banker's rounding
        split = train_test_split(self.make_prepared(25), 0.5, 3)
        assert split.train_ids.size == 12


class TestDatasetConfig:
    def test_builtin_registry_matches_published_layout(self):
        adult = BUILTIN_DATASETS["adult"]
        assert adult.schema.target == "salary-class"
        assert adult.positive_class == ">50K"
        assert adult.averaging == "binary_positive_class"
        assert "marital-status" in adult.schema.feature_columns
        cah = BUILTIN_DATASETS["cahousing"]
        assert cah.preprocess.class_merges == {"NEAR BAY": "NEAR OCEAN",
                                               "ISLAND": "NEAR OCEAN"}
        assert BUILTIN_DATASETS["mgm"].positive_class == "1"
        assert BUILTIN_DATASETS["cmc"].averaging == "macro"

    def test_from_dict_round_trip(self):
        cfg = dataset_config_from_dict("toy", {
            "filename": "toy.csv",
            "columns": [["color", "categorical"], ["size", "numeric"],
                        ["label", "categorical"]],
            "target": "label",
            "feature_columns": ["color", "size"],
            "averaging": "macro",
        })
        assert cfg.schema.target == "label"
        assert cfg.filename == "toy.csv"

    def test_from_dict_rejects_unknown_fields(self):
        with pytest.raises(ValueError, match="unknown fields"):
            dataset_config_from_dict("toy", {"columns": [], "target": "t",
                                             "feature_columns": [], "bogus": 1})

    def test_from_dict_requires_core_fields(self):
        with pytest.raises(ValueError, match="missing field"):
            dataset_config_from_dict("toy", {"target": "t"})

    def test_resolve_data_dir_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv("ERASURE_BENCH_DATA_DIR", str(tmp_path))
        assert resolve_data_dir() == tmp_path
        monkeypatch.delenv("ERASURE_BENCH_DATA_DIR")
        assert resolve_data_dir() == resolve_data_dir(None)
        assert resolve_data_dir(tmp_path / "x") == tmp_path / "x"
