"""CSV loading, per-dataset preprocessing, one-hot encoding and train/test splits."""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)

CATEGORICAL = "categorical"
NUMERIC = "numeric"

DEFAULT_MISSING_TOKENS = ("", "?")
DATA_DIR_ENV = "ERASURE_BENCH_DATA_DIR"


@dataclass(frozen=True)
class Schema:
    """Column layout of a tabular dataset: (name, kind) pairs, target, feature columns."""

    columns: tuple[tuple[str, str], ...]
    target: str
    feature_columns: tuple[str, ...]

    def __post_init__(self):
        names = [name for name, _ in self.columns]
        if len(set(names)) != len(names):
            raise ValueError("duplicate column names in schema")
        for _, kind in self.columns:
            if kind not in (CATEGORICAL, NUMERIC):
                raise ValueError(f"unknown column kind {kind!r}")
        if self.target not in names:
            raise ValueError(f"target {self.target!r} is not a schema column")
        extra = set(self.feature_columns) - set(names)
        if extra:
            raise ValueError(f"feature columns not in schema: {sorted(extra)}")
        if self.target in self.feature_columns:
            raise ValueError("target cannot be a feature column")

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.columns)

    def kind_of(self, name: str) -> str:
        for col, kind in self.columns:
            if col == name:
                return kind
        raise KeyError(name)


@dataclass(frozen=True)
class Dataset:
    """Raw records plus stable integer row ids; immutable after construction."""

    schema: Schema
    records: tuple[dict, ...]
    row_ids: np.ndarray
    n_dropped: int = 0

    @property
    def n_rows(self) -> int:
        return len(self.records)

    def column(self, name: str) -> list:
        if name not in self.schema.column_names:
            raise KeyError(f"unknown column {name!r}")
        return [rec[name] for rec in self.records]

    def take(self, positions) -> "Dataset":
        """Sub-dataset at the given record positions, keeping original row ids."""
        pos = list(positions)
        return Dataset(
            schema=self.schema,
            records=tuple(self.records[i] for i in pos),
            row_ids=np.asarray(self.row_ids, dtype=np.int64)[pos],
            n_dropped=self.n_dropped,
        )


@dataclass(frozen=True)
class PreprocessConfig:
    """Column selection and target class merges applied before encoding."""

    feature_columns: tuple[str, ...] | None = None
    class_merges: dict[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class PreparedDataset:
    """Feature matrix (one-hot categoricals + raw numerics) and class-index labels."""

    feature_matrix: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    row_ids: np.ndarray
    feature_names: tuple[str, ...]

    @property
    def n_rows(self) -> int:
        return int(self.feature_matrix.shape[0])

    def take_ids(self, ids) -> tuple[np.ndarray, np.ndarray]:
        """(features, labels) for the given row ids."""
        lookup = {int(rid): i for i, rid in enumerate(self.row_ids)}
        pos = [lookup[int(i)] for i in ids]
        return self.feature_matrix[pos], self.labels[pos]


@dataclass(frozen=True)
class SplitIndices:
    train_ids: np.ndarray
    test_ids: np.ndarray
    split_seed: int


def load_csv(path, schema: Schema, missing_tokens=DEFAULT_MISSING_TOKENS) -> Dataset:
    """Load a header-ed CSV, dropping rows with missing values in any schema column.

    The header must contain every schema column (order-insensitive; extra
    columns are ignored). Values are whitespace-stripped; numeric columns must
    parse as finite floats.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    missing = set(missing_tokens)

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        absent = [c for c in schema.column_names if c not in header]
        if absent:
            raise ValueError(f"{path.name}: header missing schema columns {absent}")

        records: list[dict] = []
        n_dropped = 0
        for line_no, raw in enumerate(reader, start=2):
            values = {c: (raw[c] or "").strip() for c in schema.column_names}
            if any(v in missing for v in values.values()):
                n_dropped += 1
                continue
            rec: dict = {}
            for name, kind in schema.columns:
                if kind == NUMERIC:
                    try:
                        num = float(values[name])
                    except ValueError:
                        raise ValueError(
                            f"{path.name}:{line_no}: non-numeric value {values[name]!r} "
                            f"in numeric column {name!r}"
                        ) from None
                    if not np.isfinite(num):
                        raise ValueError(f"{path.name}:{line_no}: non-finite value in {name!r}")
                    rec[name] = num
                else:
                    rec[name] = values[name]
            records.append(rec)

    if not records:
        raise ValueError(f"{path.name}: zero rows after dropping incomplete records")
    if n_dropped:
        logger.info("%s: dropped %d incomplete rows, kept %d", path.name, n_dropped, len(records))
    return Dataset(
        schema=schema,
        records=tuple(records),
        row_ids=np.arange(len(records), dtype=np.int64),
        n_dropped=n_dropped,
    )


class FeatureEncoder:
    """One-hot encoder with a frozen vocabulary.

    Fit once on the undeleted dataset and reused for every deletion level, so
    the feature dimension and class list stay comparable across a sweep.
    Category values and class names are ordered lexicographically; feature
    columns keep their schema order.
    """

    def __init__(self, schema: Schema, cfg: PreprocessConfig | None = None):
        self.schema = schema
        self.cfg = cfg or PreprocessConfig()
        self.feature_columns = tuple(self.cfg.feature_columns or schema.feature_columns)
        unknown = set(self.feature_columns) - set(schema.column_names)
        if unknown:
            raise ValueError(f"preprocess names unknown columns: {sorted(unknown)}")
        self.categories_: dict[str, tuple[str, ...]] = {}
        self.class_names_: tuple[str, ...] = ()
        self.feature_names_: tuple[str, ...] = ()

    def _merged_target(self, ds: Dataset) -> list[str]:
        merges = self.cfg.class_merges
        return [merges.get(str(v), str(v)) for v in ds.column(self.schema.target)]

    def fit(self, ds: Dataset) -> "FeatureEncoder":
        observed_classes = set(self._merged_target(ds))
        missing_merge_sources = set(self.cfg.class_merges) - {
            str(v) for v in ds.column(self.schema.target)
        }
        if missing_merge_sources:
            logger.info("class merges for absent labels: %s", sorted(missing_merge_sources))
        self.class_names_ = tuple(sorted(observed_classes))

        names: list[str] = []
        for col in self.feature_columns:
            if self.schema.kind_of(col) == CATEGORICAL:
                cats = tuple(sorted({str(v) for v in ds.column(col)}))
                if len(cats) == 1:
                    logger.warning("categorical column %r has a single observed value", col)
                self.categories_[col] = cats
                names.extend(f"{col}={c}" for c in cats)
            else:
                names.append(col)
        self.feature_names_ = tuple(names)
        return self

    def transform(self, ds: Dataset) -> PreparedDataset:
        if not self.class_names_:
            raise RuntimeError("encoder is not fitted")
        n = ds.n_rows
        blocks: list[np.ndarray] = []
        for col in self.feature_columns:
            if self.schema.kind_of(col) == CATEGORICAL:
                cats = self.categories_[col]
                index = {c: j for j, c in enumerate(cats)}
                block = np.zeros((n, len(cats)), dtype=np.float64)
                for i, v in enumerate(ds.column(col)):
                    j = index.get(str(v))
                    if j is None:
                        raise ValueError(f"unseen category {v!r} in column {col!r}")
                    block[i, j] = 1.0
                blocks.append(block)
            else:
                blocks.append(np.array(ds.column(col), dtype=np.float64).reshape(n, 1))

        class_index = {c: i for i, c in enumerate(self.class_names_)}
        labels = np.empty(n, dtype=np.int64)
        for i, v in enumerate(self._merged_target(ds)):
            if v not in class_index:
                raise ValueError(f"unseen target class {v!r}")
            labels[i] = class_index[v]

        matrix = np.hstack(blocks) if blocks else np.zeros((n, 0), dtype=np.float64)
        return PreparedDataset(
            feature_matrix=matrix,
            labels=labels,
            class_names=self.class_names_,
            row_ids=np.asarray(ds.row_ids, dtype=np.int64).copy(),
            feature_names=self.feature_names_,
        )


def preprocess(ds: Dataset, cfg: PreprocessConfig | None = None) -> PreparedDataset:
    """Fit an encoder on `ds` and transform it in one step."""
    return FeatureEncoder(ds.schema, cfg).fit(ds).transform(ds)


def train_test_split(pd: PreparedDataset, ratio: float, seed: int) -> SplitIndices:
    """Seeded random partition of the current row ids; first round(ratio*n) are train."""
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie strictly between 0 and 1")
    n = pd.n_rows
    if n < 2:
        raise ValueError("need at least 2 rows to split")
    rng = np.random.Generator(np.random.PCG64(seed))
    perm = rng.permutation(n)
    k = round(ratio * n)
    ids = np.asarray(pd.row_ids, dtype=np.int64)
    return SplitIndices(
        train_ids=np.sort(ids[perm[:k]]),
        test_ids=np.sort(ids[perm[k:]]),
        split_seed=seed,
    )


@dataclass(frozen=True)
class DatasetConfig:
    """Everything the harness needs to run one named dataset."""

    dataset_id: str
    filename: str
    schema: Schema
    preprocess: PreprocessConfig = field(default_factory=PreprocessConfig)
    averaging: str = "macro"
    positive_class: str | None = None


def _schema(columns, target, features) -> Schema:
    return Schema(columns=tuple(columns), target=target, feature_columns=tuple(features))


BUILTIN_DATASETS: dict[str, DatasetConfig] = {
    "adult": DatasetConfig(
        dataset_id="adult",
        filename="adult.csv",
        schema=_schema(
            columns=[
                ("sex", CATEGORICAL),
                ("age", NUMERIC),
                ("race", CATEGORICAL),
                ("marital-status", CATEGORICAL),
                ("education", CATEGORICAL),
                ("native-country", CATEGORICAL),
                ("workclass", CATEGORICAL),
                ("occupation", CATEGORICAL),
                ("salary-class", CATEGORICAL),
            ],
            target="salary-class",
            features=[
                "sex", "age", "race", "marital-status", "education",
                "native-country", "workclass", "occupation",
            ],
        ),
        averaging="binary_positive_class",
        positive_class=">50K",
    ),
    "cahousing": DatasetConfig(
        dataset_id="cahousing",
        filename="cahousing.csv",
        schema=_schema(
            columns=[
                ("housing_median_age", NUMERIC),
                ("median_house_value", NUMERIC),
                ("median_income", NUMERIC),
                ("longitude", NUMERIC),
                ("latitude", NUMERIC),
                ("ocean_proximity", CATEGORICAL),
            ],
            target="ocean_proximity",
            features=[
                "housing_median_age", "median_house_value", "median_income",
                "longitude", "latitude",
            ],
        ),
        preprocess=PreprocessConfig(
            class_merges={"NEAR BAY": "NEAR OCEAN", "ISLAND": "NEAR OCEAN"}
        ),
        averaging="macro",
    ),
    "cmc": DatasetConfig(
        dataset_id="cmc",
        filename="cmc.csv",
        schema=_schema(
            columns=[
                ("wife_age", NUMERIC),
                ("wife_edu", NUMERIC),
                ("num_children", NUMERIC),
                ("contraceptive_method", CATEGORICAL),
            ],
            target="contraceptive_method",
            features=["wife_age", "wife_edu", "num_children"],
        ),
        averaging="macro",
    ),
    "mgm": DatasetConfig(
        dataset_id="mgm",
        filename="mgm.csv",
        schema=_schema(
            columns=[
                ("bi_rads_assessment", NUMERIC),
                ("age", NUMERIC),
                ("shape", NUMERIC),
                ("margin", NUMERIC),
                ("density", NUMERIC),
                ("severity", CATEGORICAL),
            ],
            target="severity",
            features=["bi_rads_assessment", "age", "shape", "margin", "density"],
        ),
        averaging="binary_positive_class",
        positive_class="1",
    ),
}


def dataset_config_from_dict(dataset_id: str, data: dict) -> DatasetConfig:
    """Build a DatasetConfig from a harness config file entry."""
    known = {"filename", "columns", "target", "feature_columns", "class_merges",
             "averaging", "positive_class"}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"dataset {dataset_id!r}: unknown fields {sorted(unknown)}")
    for required in ("columns", "target", "feature_columns"):
        if required not in data:
            raise ValueError(f"dataset {dataset_id!r}: missing field {required!r}")
    schema = Schema(
        columns=tuple((str(n), str(k)) for n, k in data["columns"]),
        target=str(data["target"]),
        feature_columns=tuple(str(c) for c in data["feature_columns"]),
    )
    averaging = data.get("averaging", "macro")
    if averaging not in ("macro", "binary_positive_class"):
        raise ValueError(f"dataset {dataset_id!r}: unknown averaging {averaging!r}")
    return DatasetConfig(
        dataset_id=dataset_id,
        filename=str(data.get("filename", f"{dataset_id}.csv")),
        schema=schema,
        preprocess=PreprocessConfig(
            class_merges={str(k): str(v) for k, v in data.get("class_merges", {}).items()}
        ),
        averaging=averaging,
        positive_class=data.get("positive_class"),
    )


def resolve_data_dir(explicit: str | os.PathLike | None = None) -> Path:
    """Dataset folder root: explicit argument, else $ERASURE_BENCH_DATA_DIR, else ./data."""
    if explicit is not None:
        return Path(explicit)
    env = os.environ.get(DATA_DIR_ENV)
    return Path(env) if env else Path("data")


def load_dataset(cfg: DatasetConfig, data_dir=None, path=None) -> Dataset:
    """Load the CSV behind a dataset config from the resolved data directory."""
    csv_path = Path(path) if path is not None else resolve_data_dir(data_dir) / cfg.filename
    return load_csv(csv_path, cfg.schema)
