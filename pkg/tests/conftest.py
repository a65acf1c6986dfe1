import pytest

from gridshed import parse_network
from gridshed.analysis import load_case
from gridshed.data import case_files, case_path


@pytest.fixture(scope="session")
def ieee13_case():
    return load_case(*case_files("ieee13"))


@pytest.fixture(scope="session")
def psps_case():
    return load_case(*case_files("ieee13_psps"))


@pytest.fixture(scope="session")
def reduction_net():
    return parse_network(case_path("reduction15"))
