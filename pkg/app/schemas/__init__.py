from app.schemas.common import GenericApiResponse
from app.schemas.cost import COMPARISON_WEIGHTS, CostBreakdown, CostWeights
from app.schemas.game import FULL_COOPERATION, GameParams, PayoffVector, SimplexState, Strategy
from app.schemas.scenario import RunSummary, ScenarioConfig, ScenarioMode
from app.schemas.solver import SolveReport, SolverConfig, SolverMethod
from app.schemas.trajectory import ControlTrajectory, StateTrajectory, TimeGrid
