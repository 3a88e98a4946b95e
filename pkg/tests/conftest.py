import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import pytest

import synthdata
from erasure_bench.datasets import BUILTIN_DATASETS, load_dataset

ADULT_N = 2000
CAHOUSING_N = 1600
CMC_N = 1473
MGM_RAW_N = 961
MGM_MISSING_ROWS = 131  # 961 raw rows minus 131 incomplete = 830 complete


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory):
    """Synthetic stand-ins for the four benchmark datasets, one CSV each."""
    root = tmp_path_factory.mktemp("bench-data")
    synthdata.write_csv(root / "adult.csv", synthdata.ADULT_COLUMNS,
                        synthdata.make_adult_rows(ADULT_N))
    synthdata.write_csv(root / "cahousing.csv", synthdata.CAHOUSING_COLUMNS,
                        synthdata.make_cahousing_rows(CAHOUSING_N))
    synthdata.write_csv(root / "cmc.csv", synthdata.CMC_COLUMNS,
                        synthdata.make_cmc_rows(CMC_N))
    synthdata.write_csv(root / "mgm.csv", synthdata.MGM_COLUMNS,
                        synthdata.make_mgm_rows(MGM_RAW_N),
                        missing_row_count=MGM_MISSING_ROWS, seed=3)
    return root


@pytest.fixture(scope="session")
def adult_ds(data_dir):
    return load_dataset(BUILTIN_DATASETS["adult"], data_dir=data_dir)


@pytest.fixture(scope="session")
def cahousing_ds(data_dir):
    return load_dataset(BUILTIN_DATASETS["cahousing"], data_dir=data_dir)


@pytest.fixture(scope="session")
def cmc_ds(data_dir):
    return load_dataset(BUILTIN_DATASETS["cmc"], data_dir=data_dir)


@pytest.fixture(scope="session")
def mgm_ds(data_dir):
    return load_dataset(BUILTIN_DATASETS["mgm"], data_dir=data_dir)
