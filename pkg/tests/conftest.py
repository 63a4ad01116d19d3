from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

SRC = Path(__file__).resolve().parents[1] / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))

from trial_transport.data_model import ObservationTable  # noqa: E402


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="run Monte-Carlo acceptance tests")


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: long Monte-Carlo acceptance runs (enable with --runslow)")


def pytest_collection_modifyitems(config: pytest.Config, items: list) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


def make_table(
    rng: np.random.Generator,
    n_trial: int = 120,
    n_target: int = 80,
    p: int = 2,
    trials: int = 2,
    levels: tuple = (0, 1),
) -> ObservationTable:
    """Random pooled table with every level present in every trial."""
    trial_id = np.concatenate([np.zeros(n_target, dtype=np.int64), 1 + np.arange(n_trial) % trials])
    n = n_trial + n_target
    treatment = np.full(n, -1, dtype=np.int64)
    treatment[n_target:] = np.array(levels)[np.arange(n_trial) // trials % len(levels)]
    covariates = rng.normal(size=(n, p))
    outcome = np.full(n, np.nan)
    outcome[n_target:] = covariates[n_target:].sum(axis=1) + treatment[n_target:] + rng.normal(size=n_trial)
    return ObservationTable(trial_id=trial_id, treatment=treatment, outcome=outcome, covariates=covariates)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240101)


@pytest.fixture
def small_table(rng: np.random.Generator) -> ObservationTable:
    return make_table(rng)


@pytest.fixture
def four_row_csv(tmp_path: Path) -> Path:
    path = tmp_path / "four.csv"
    path.write_text(
        "trial,treatment,outcome,x\n1,1,2.0,0.5\n1,0,1.0,-0.5\n2,1,3.0,1.0\n0,,,0.0\n",
        encoding="utf-8",
    )
    return path
