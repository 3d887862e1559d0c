import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cilist.graphio import load_fixture  # noqa: E402


@pytest.fixture(scope="session")
def g2():
    return load_fixture("g2").graph


@pytest.fixture(scope="session")
def g1():
    return load_fixture("g1").graph


@pytest.fixture(scope="session")
def sachs_file():
    return load_fixture("sachs")
