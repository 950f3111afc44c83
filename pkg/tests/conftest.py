import pytest
from importlib import resources

from cstarpres.fcalc import builtin_registry


@pytest.fixture(scope="session")
def reg():
    return builtin_registry()


@pytest.fixture(scope="session")
def corpus():
    return resources.files("cstarpres") / "corpus"


@pytest.fixture(scope="session")
def schemas_dir():
    return resources.files("cstarpres") / "schemas"
