import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from modelscope.dataset import Dataset
from modelscope.families import BINOMIAL, GAUSSIAN, POISSON

DATA_DIR = Path(__file__).parent.parent / "data"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running checks")
    # keep worker counts deterministic and modest inside the suite
    os.environ.setdefault("MODELSCOPE_CORES", "2")


@pytest.fixture(scope="session")
def data_dir():
    return DATA_DIR


@pytest.fixture(scope="session")
def artificialeg():
    from modelscope.dataset import load_csv

    return load_csv(DATA_DIR / "artificialeg.csv", response="y", family="gaussian")


@pytest.fixture(scope="session")
def diabetes():
    from modelscope.dataset import load_csv

    return load_csv(DATA_DIR / "diabetes.csv", response="y", family="gaussian")


@pytest.fixture(scope="session")
def birthwt():
    from modelscope.dataset import load_csv

    return load_csv(
        DATA_DIR / "birthwt.csv",
        response="low",
        family="binomial",
        factor_columns=["race=white,black,other", "smoke", "ptd", "ht", "ui", "ftv"],
    )


def random_gaussian(n=80, p=6, seed=0, rho=0.4, signal=3):
    rng = np.random.default_rng(seed)
    cov = (1 - rho) * np.eye(p) + rho * np.ones((p, p))
    X = rng.standard_normal((n, p)) @ np.linalg.cholesky(cov).T
    beta = np.zeros(p)
    beta[:signal] = rng.normal(scale=1.0, size=signal)
    y = X @ beta + rng.standard_normal(n)
    return Dataset(y=y, X=X, names=tuple(f"v{j}" for j in range(p)), family=GAUSSIAN)


def random_binomial(n=120, p=5, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    eta = X @ np.concatenate([rng.normal(scale=0.8, size=3), np.zeros(p - 3)]) - 0.2
    y = (rng.random(n) < 1.0 / (1.0 + np.exp(-eta))).astype(float)
    return Dataset(y=y, X=X, names=tuple(f"v{j}" for j in range(p)), family=BINOMIAL)


def random_poisson(n=120, p=4, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    mu = np.exp(0.4 + X @ np.concatenate([[0.5, -0.3], np.zeros(p - 2)]))
    y = rng.poisson(mu).astype(float)
    return Dataset(y=y, X=X, names=tuple(f"v{j}" for j in range(p)), family=POISSON)
