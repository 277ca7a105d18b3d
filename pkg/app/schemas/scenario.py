from enum import Enum

from pydantic import Field, field_validator, model_validator

from app.schemas.base import DomainModel
from app.schemas.cost import COMPARISON_WEIGHTS, CostBreakdown, CostWeights
from app.schemas.game import GameParams, SimplexState
from app.schemas.solver import PlateauReport, SolverConfig, SolverMethod, StationarityReport
from app.schemas.trajectory import TimeGrid


class ScenarioMode(str, Enum):
    SIMULATE = "simulate"
    OPTIMIZE = "optimize"
    SWEEP = "sweep"
    COMPARE = "compare"


class ScenarioBase(DomainModel):
    name: str | None = None
    description: str | None = None
    params: GameParams = GameParams()
    w0: SimplexState = SimplexState(x=0.2, y=0.7, z=0.1)
    grid: TimeGrid = TimeGrid(t0=0.0, tf=20.0, steps=400)
    weights: CostWeights = COMPARISON_WEIGHTS
    solver: SolverConfig = SolverConfig()
    solver_method: SolverMethod = SolverMethod.FBSM
    constant_v: float | None = None
    sweep_points: int = Field(default=101, ge=2)

    @field_validator("name")
    @classmethod
    def check_name(cls, v: str | None) -> str | None:
        # the name doubles as the default output directory
        if v is not None and (v in {"", ".", ".."} or "/" in v or "\\" in v):
            raise ValueError(f"name must be a plain directory name, got {v!r}")
        return v


class ScenarioConfig(ScenarioBase):
    mode: ScenarioMode

    @model_validator(mode="after")
    def check_mode_fields(self) -> "ScenarioConfig":
        if self.mode == ScenarioMode.SIMULATE:
            if self.constant_v is None:
                raise ValueError("constant_v is required in simulate mode")
            if not 0.0 <= self.constant_v <= self.weights.v_max:
                raise ValueError(
                    f"constant_v must lie in [0, {self.weights.v_max}], got {self.constant_v}"
                )
        return self


class ScenarioRunRequest(ScenarioBase):
    out_dir: str | None = None


class ComparisonRow(DomainModel):
    strategy: str
    v: float | None = None
    cost: float
    punished_integral: float
    wall_time: float
    converged: bool = True


class RunSummary(DomainModel):
    scenario: ScenarioConfig
    breakdown: CostBreakdown | None = None
    punished_integral: float | None = None
    converged: bool = True
    iterations: int | None = None
    initial_error: float | None = None
    final_error: float | None = None
    argmin_v: float | None = None
    sweep_min_cost: float | None = None
    comparison: list[ComparisonRow] | None = None
    stationarity: StationarityReport | None = None
    plateau: PlateauReport | None = None
    files: dict[str, str] = {}
