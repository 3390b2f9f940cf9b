from __future__ import annotations

import pytest

from agentforum.personas import default_catalog
from agentforum.providers import MockProvider
from agentforum.retrieval import default_search_clients
from agentforum.scripting import load_script, run_script, scenario_path
from agentforum.service import ForumService

SCENARIOS = (
    "deliberation_walkthrough.yaml",
    "crispr_search.yaml",
    "commitments_clash.yaml",
)


@pytest.fixture(scope="session")
def catalog():
    return default_catalog()


@pytest.fixture(scope="session")
def search_clients():
    return default_search_clients()


@pytest.fixture(scope="session")
def provider():
    return MockProvider()


@pytest.fixture()
def service(catalog, provider, search_clients):
    return ForumService(
        provider=provider, search_clients=search_clients, catalog=catalog
    )


@pytest.fixture(scope="session")
def scenario_runs(catalog):
    """Each bundled scenario executed once, shared by read-only tests."""
    runs = {}
    for name in SCENARIOS:
        service = ForumService(catalog=catalog)
        script = load_script(scenario_path(name))
        runs[name] = (service, run_script(script, service=service))
    return runs
