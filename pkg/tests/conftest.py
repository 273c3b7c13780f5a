"""Shared fixtures: repository paths, the committed dataset registry,
and replay gateway factories."""

from __future__ import annotations

import importlib.util
from pathlib import Path

import pytest

from sketchbench.bench import Registry, load_registry
from sketchbench.gateway import Gateway, ReplayBackend

REPO_ROOT = Path(__file__).resolve().parents[1]
DATA_DIR = REPO_ROOT / "data"


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def registry() -> Registry:
    return load_registry(DATA_DIR / "registry.json")


@pytest.fixture(scope="session")
def reference_perm():
    """The standalone permutation reference, loaded from its script so
    the expectation shares no code with the package generator."""
    path = REPO_ROOT / "scripts" / "reference_permutation.py"
    spec = importlib.util.spec_from_file_location("reference_permutation", path)
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module.perm


def replay_gateway(script_path, ledger=None) -> Gateway:
    backend = ReplayBackend.from_file(script_path)
    if ledger is None:
        return Gateway(backend)
    return Gateway(backend, ledger=ledger)


@pytest.fixture
def gateway_for(registry):
    """Factory fixture: dataset id -> fresh replay gateway over its
    committed script, with the registry rate card attached."""

    def make(dataset_id: str) -> Gateway:
        entry = registry.get(dataset_id)
        assert entry.replay_script is not None
        return replay_gateway(entry.replay_script, ledger=registry.ledger())

    return make
