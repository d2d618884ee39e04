import shutil
from pathlib import Path

import pytest

from skillgraph.cli import BUNDLED_LIBRARY
from skillgraph.model import load_library
from skillgraph.retrieval import build_index

GOLDEN = Path(__file__).parent / "golden"
DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def lib():
    return load_library(BUNDLED_LIBRARY)


@pytest.fixture(scope="session")
def index(lib):
    return build_index(lib)


@pytest.fixture
def lib_copy(tmp_path):
    """Writable copy of the bundled library for mutation tests."""
    dst = tmp_path / "library"
    shutil.copytree(BUNDLED_LIBRARY, dst)
    return dst
