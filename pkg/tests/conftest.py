import pytest

from constants_roots import compute_constants


@pytest.fixture(scope="session")
def constants():
    return compute_constants()
