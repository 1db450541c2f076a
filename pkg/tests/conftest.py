from __future__ import annotations

from pathlib import Path

import pytest

from calc.conformal import VectorFieldSpec
from calc.lagrangians import DiffeoSpec, make_berwald_moor, make_minkowski

ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = ROOT / "configs"


@pytest.fixture
def minkowski2():
    return make_minkowski(2)


@pytest.fixture
def bm2():
    return make_berwald_moor(2)


@pytest.fixture
def bm3():
    return make_berwald_moor(3)


@pytest.fixture
def radial2():
    return VectorFieldSpec.from_sources(["x0", "x1"], label="radial")


@pytest.fixture
def boost2():
    return VectorFieldSpec.from_sources(["x1", "x0"], label="boost")


@pytest.fixture
def cubic2():
    return DiffeoSpec.from_sources(["x0+x0^3", "x1+x1^3"], kind="componentwise", label="cubic")


@pytest.fixture
def config_dir():
    return CONFIG_DIR
