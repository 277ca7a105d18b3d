import logging

import numpy as np
from scipy.integrate import trapezoid

from app.core.exceptions import GridMismatchError
from app.schemas.cost import CostBreakdown, CostWeights
from app.schemas.game import SimplexState
from app.schemas.trajectory import ControlTrajectory, StateTrajectory, TimeGrid

logger = logging.getLogger(__name__)


def quadrature_weights(grid: TimeGrid) -> np.ndarray:
    """Composite trapezoid weights q_k with sum_k q_k g_k == trapezoid(g, times)."""
    spacing = np.diff(grid.times)
    weights = np.zeros(grid.size)
    weights[:-1] += 0.5 * spacing
    weights[1:] += 0.5 * spacing
    return weights


def running_cost(w: SimplexState, v: float, weights: CostWeights) -> float:
    error = w.as_array() - weights.w_star.as_array()
    return (
        0.5 * weights.alpha2 * float(error @ error)
        + 0.5 * weights.alpha3 * v**2
        + 0.5 * weights.alpha4 * v**2 * w.y**2
    )


def breakdown_from_arrays(
    states: np.ndarray,
    values: np.ndarray,
    times: np.ndarray,
    weights: CostWeights,
) -> CostBreakdown:
    error = states - weights.w_star.as_array()
    squared_error = np.einsum("ij,ij->i", error, error)
    y = states[:, 1]

    terminal = 0.5 * weights.alpha1 * float(squared_error[-1])
    tracking = 0.5 * weights.alpha2 * float(trapezoid(squared_error, times))
    effort = 0.5 * weights.alpha3 * float(trapezoid(values**2, times))
    punished = 0.5 * weights.alpha4 * float(trapezoid((values * y) ** 2, times))

    return CostBreakdown(
        terminal=terminal,
        tracking=tracking,
        effort=effort,
        punished=punished,
        total=terminal + tracking + effort + punished,
        punished_integral=float(trapezoid(values * y, times)),
    )


def evaluate_cost(
    traj: StateTrajectory,
    control: ControlTrajectory,
    weights: CostWeights,
) -> CostBreakdown:
    if traj.grid != control.grid:
        raise GridMismatchError(
            f"state grid {traj.grid.model_dump()} differs from control grid {control.grid.model_dump()}"
        )
    return breakdown_from_arrays(traj.states, control.values, traj.grid.times, weights)
