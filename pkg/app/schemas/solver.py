from enum import Enum

import numpy as np
from pydantic import Field, model_validator

from app.schemas.base import ArrayModel, DomainModel, FloatArray
from app.schemas.cost import CostBreakdown
from app.schemas.trajectory import ControlTrajectory, StateTrajectory, TimeGrid


class SolverMethod(str, Enum):
    FBSM = "fbsm"
    PGD = "pgd"


class SolverConfig(DomainModel):
    max_iters: int = Field(default=2000, ge=1)
    theta: float = Field(default=0.5, gt=0.0, le=1.0)
    tol_cost: float = Field(default=1e-8, gt=0.0)
    tol_control: float = Field(default=1e-6, gt=0.0)
    bang_bang_epsilon: float = Field(default=1e-12, gt=0.0)
    max_backtracks: int = Field(default=20, ge=0)
    initial_control: float = Field(default=0.5, ge=0.0, le=1.0)


class Costate(ArrayModel):
    grid: TimeGrid
    values: FloatArray

    @model_validator(mode="after")
    def check_shape(self) -> "Costate":
        if self.values.shape != (self.grid.size, 3):
            raise ValueError(
                f"costate needs shape ({self.grid.size}, 3), got {self.values.shape}"
            )
        return self

    @property
    def terminal(self) -> np.ndarray:
        return self.values[-1]


class SolveReport(ArrayModel):
    method: SolverMethod
    control: ControlTrajectory
    states: StateTrajectory
    costate: Costate
    breakdown: CostBreakdown
    iterations: int
    converged: bool
    cost_history: list[float]

    @property
    def cost(self) -> float:
        return self.breakdown.total


class SweepEntry(DomainModel):
    v: float
    breakdown: CostBreakdown


class SweepResult(DomainModel):
    entries: list[SweepEntry]

    @property
    def best(self) -> SweepEntry:
        return min(self.entries, key=lambda entry: entry.breakdown.total)

    @property
    def argmin(self) -> float:
        return self.best.v


class StationarityReport(DomainModel):
    tolerance: float
    interior_nodes: int
    lower_nodes: int
    upper_nodes: int
    max_interior_residual: float
    min_lower_gradient: float | None = None
    max_upper_gradient: float | None = None
    satisfied: bool


class PlateauReport(DomainModel):
    target: float
    window: float
    mean: float
    max_deviation: float
    within: bool
