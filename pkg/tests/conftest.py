"""Pytest configuration and fixtures."""

import json
import shutil
import tempfile
from pathlib import Path

import pytest
from click.testing import CliRunner

from falcon.cache import CacheManager
from falcon.models import CantorSetSpec, EngineConfig
from falcon.staircase import StaircaseEvaluator


@pytest.fixture()
def temp_dir():
    """Create a temporary directory for tests."""
    temp_dir = tempfile.mkdtemp()
    yield Path(temp_dir)
    shutil.rmtree(temp_dir)


@pytest.fixture(scope="session")
def config():
    """Default engine configuration, independent of the environment."""
    return EngineConfig()


@pytest.fixture(scope="session")
def middle_third():
    """The triadic Cantor set on [0, 1]."""
    return CantorSetSpec.middle_third()


@pytest.fixture(scope="session")
def quarter_set():
    """Two children of ratio 1/4, dimension 1/2."""
    return CantorSetSpec(m=2, r="1/4")


@pytest.fixture(scope="session")
def full_interval():
    """Two halves of [0, 1]: no gaps, dimension 1."""
    return CantorSetSpec(m=2, r=0.5)


@pytest.fixture(scope="session")
def exact_evaluator(middle_third, config):
    """Exact staircase of the middle-third set (normalization computed once)."""
    return StaircaseEvaluator.build(middle_third, mode="exact", config=config)


@pytest.fixture(scope="session")
def unit_evaluator(full_interval, config):
    """Exact staircase of the gapless set, where S(x) = x."""
    return StaircaseEvaluator.build(full_interval, mode="exact", config=config)


@pytest.fixture(scope="session")
def power_evaluator():
    """Power-law staircase x**0.63 on [0, 1]."""
    return StaircaseEvaluator.power_law(0.63)


@pytest.fixture()
def cache_manager(temp_dir):
    """Cache manager writing into a temporary directory."""
    return CacheManager(cache_dir=temp_dir / "cache")


@pytest.fixture()
def runner():
    """Create a Click test runner."""
    return CliRunner()


@pytest.fixture()
def write_json(temp_dir):
    """Write a JSON document into the temporary directory and return its path."""

    def _write(name, document):
        path = temp_dir / name
        path.write_text(json.dumps(document))
        return path

    return _write
