import numpy as np
import pytest

from pqbert.config import PqBertConfig


def tiny_config(**overrides) -> PqBertConfig:
    base = dict(M=2, k_star=8, P=4, D_model=16, layers=1, heads=2,
                ff_dim=32, dropout=0.0, seed=0)
    base.update(overrides)
    return PqBertConfig(**base)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
