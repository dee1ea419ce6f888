"""Shared fixtures: the two flight tables and their populations."""

from pathlib import Path

import numpy as np
import pytest

from evoweights.core.model import FeatureSpec, Population, RawTable, build_population
from tests.helpers import REAL_COLUMNS, REAL_KINDS, REAL_ROWS, SIMPLE_COLUMNS, SIMPLE_ROWS

ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = ROOT / "data"
FIXTURES_DIR = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES_DIR


@pytest.fixture
def simple_table() -> RawTable:
    return RawTable(SIMPLE_COLUMNS, SIMPLE_ROWS, ("A", "B", "C"))


@pytest.fixture
def simple_pop(simple_table) -> Population:
    specs = [FeatureSpec(j, "inverse") for j in range(simple_table.m)]
    return build_population(simple_table, specs)


@pytest.fixture
def real_table() -> RawTable:
    return RawTable(REAL_COLUMNS, REAL_ROWS, tuple("ABCDEFGHIJ"))


@pytest.fixture
def real_pop(real_table) -> Population:
    specs = [FeatureSpec(j, kind) for j, kind in enumerate(REAL_KINDS)]
    return build_population(real_table, specs)


@pytest.fixture
def uniform3() -> np.ndarray:
    return np.full(3, 1.0 / 3.0)
