"""Shared fixtures: tiny datasets and pre-trained toy models.

Training fixtures are session-scoped so the expensive work happens once;
everything they return is immutable, so sharing across tests is safe.
"""
import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from tabuq import (Dataset, MlpModel, SeededRng, ToyConfig, TrainConfig,
                   VaeConfig, generate_toy, train_mlp, train_vae)

settings.register_profile(
    "suite", max_examples=50, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("suite")

# One line per shipping criterion, filled in by tests/test_acceptance.py and
# echoed after the test run so the verdicts survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_dataset(X, y, tags=None) -> Dataset:
    X = np.asarray(X, dtype=np.float64)
    names = tuple(f"x{i + 1}" for i in range(X.shape[1]))
    return Dataset(features=X, labels=np.asarray(y, dtype=np.int64),
                   feature_names=names,
                   group_tags=tags if tags is not None else ())


@pytest.fixture(scope="session")
def toy_balanced() -> tuple[Dataset, Dataset, Dataset]:
    cfg = ToyConfig(mode="balanced")
    rng = SeededRng(0)
    return (generate_toy(cfg, rng.split("train")),
            generate_toy(cfg, rng.split("val")),
            generate_toy(cfg, rng.split("test")))


@pytest.fixture(scope="session")
def toy_unbalanced() -> tuple[Dataset, Dataset, Dataset]:
    cfg = ToyConfig(mode="unbalanced")
    rng = SeededRng(0)
    return (generate_toy(cfg, rng.split("train")),
            generate_toy(cfg, rng.split("val")),
            generate_toy(cfg, rng.split("test")))


@pytest.fixture(scope="session")
def toy_mlp(toy_balanced) -> MlpModel:
    train, val, _ = toy_balanced
    return train_mlp(train, val, TrainConfig.toy(), SeededRng(1))


@pytest.fixture(scope="session")
def toy_vae(toy_balanced):
    train, _, _ = toy_balanced
    return train_vae(train, VaeConfig.toy(), SeededRng(2))
