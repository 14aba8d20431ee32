import json
from importlib import resources

import pytest

from a2p2.session import Runtime


@pytest.fixture(scope="session")
def runtime():
    return Runtime.shipped()


@pytest.fixture(scope="session")
def graph(runtime):
    return runtime.graph


@pytest.fixture(scope="session")
def bank(runtime):
    return runtime.bank


@pytest.fixture(scope="session")
def raw_graph():
    """The graph document as plain JSON, for oracle scans independent of ckg."""
    return json.loads(resources.files("a2p2.data").joinpath("ckg.json").read_text())


@pytest.fixture(scope="session")
def raw_bank():
    return json.loads(resources.files("a2p2.data").joinpath("responses.json").read_text())


@pytest.fixture(scope="session")
def raw_scorer_config():
    return json.loads(resources.files("a2p2.data").joinpath("scorer_config.json").read_text())


@pytest.fixture(scope="session")
def raw_templates():
    return json.loads(resources.files("a2p2.data").joinpath("templates.json").read_text())
