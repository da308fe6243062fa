"""Shared fixtures: the linked example project and fresh stores."""

from __future__ import annotations

import pytest

from wisflow.example import SEED, write_example
from wisflow.project import load_directory
from wisflow.store import MemoryBackend, Store, seed_store


@pytest.fixture(scope="session")
def example_system(tmp_path_factory):
    directory = tmp_path_factory.mktemp("models")
    write_example(directory)
    system, diagnostics = load_directory(directory)
    assert system is not None, [d.render() for d in diagnostics]
    return system


@pytest.fixture()
def fresh_store(example_system):
    store = Store(example_system.class_model, MemoryBackend(), seed=42)
    seed_store(store, SEED)
    return store
