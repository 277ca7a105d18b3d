import numpy as np
import pytest

from app.schemas.cost import COMPARISON_WEIGHTS
from app.schemas.game import GameParams, SimplexState
from app.schemas.trajectory import TimeGrid


@pytest.fixture
def params() -> GameParams:
    return GameParams(n=5, r=3.0, sigma=1.0)


@pytest.fixture
def w0() -> SimplexState:
    return SimplexState(x=0.2, y=0.7, z=0.1)


@pytest.fixture
def comparison_weights():
    return COMPARISON_WEIGHTS


@pytest.fixture
def comparison_grid() -> TimeGrid:
    return TimeGrid(t0=0.0, tf=20.0, steps=400)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240501)


@pytest.fixture
def interior_states(rng) -> list[SimplexState]:
    samples = rng.dirichlet([2.0, 2.0, 2.0], size=100)
    return [SimplexState.from_array(sample / sample.sum()) for sample in samples]
