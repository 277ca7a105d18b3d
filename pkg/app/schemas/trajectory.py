import numpy as np
from pydantic import Field, model_validator

from app.core.config import settings
from app.schemas.base import ArrayModel, DomainModel, FloatArray
from app.schemas.game import SimplexState


class TimeGrid(DomainModel):
    t0: float = 0.0
    tf: float
    steps: int = Field(ge=1)

    @model_validator(mode="after")
    def check_interval(self) -> "TimeGrid":
        if not self.tf > self.t0:
            raise ValueError(f"tf must be greater than t0, got t0={self.t0}, tf={self.tf}")
        return self

    @property
    def dt(self) -> float:
        return (self.tf - self.t0) / self.steps

    @property
    def size(self) -> int:
        return self.steps + 1

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t0, self.tf, self.steps + 1)


class ControlTrajectory(ArrayModel):
    grid: TimeGrid
    values: FloatArray
    v_max: float = Field(default=1.0, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def check_values(self) -> "ControlTrajectory":
        if self.values.shape != (self.grid.size,):
            raise ValueError(
                f"control needs {self.grid.size} node values, got shape {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("control values must be finite")
        if self.values.min() < 0.0 or self.values.max() > self.v_max:
            raise ValueError(f"control values must lie in [0, {self.v_max}]")
        return self

    @classmethod
    def constant(cls, grid: TimeGrid, v: float, v_max: float = 1.0) -> "ControlTrajectory":
        return cls(grid=grid, values=np.full(grid.size, float(v)), v_max=v_max)


class StateTrajectory(ArrayModel):
    grid: TimeGrid
    states: FloatArray
    # diagnostics of the raw RK4 output, before clamping and renormalization
    max_simplex_deviation: float = 0.0
    min_raw_component: float = 0.0

    @model_validator(mode="after")
    def check_states(self) -> "StateTrajectory":
        if self.states.shape != (self.grid.size, 3):
            raise ValueError(
                f"states need shape ({self.grid.size}, 3), got {self.states.shape}"
            )
        tol = settings.SIMPLEX_TOLERANCE
        if self.states.min() < -tol:
            raise ValueError("states must be non-negative")
        if np.abs(self.states.sum(axis=1) - 1.0).max() > tol:
            raise ValueError("every state must sum to 1")
        return self

    @property
    def x(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def z(self) -> np.ndarray:
        return self.states[:, 2]

    def state_at(self, node: int) -> SimplexState:
        return SimplexState.from_array(self.states[node])

    @property
    def initial(self) -> SimplexState:
        return self.state_at(0)

    @property
    def final(self) -> SimplexState:
        return self.state_at(-1)
