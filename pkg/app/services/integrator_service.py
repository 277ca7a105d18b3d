import logging
import math

import numpy as np

from app.core.config import settings
from app.core.exceptions import DomainError, IntegrationError
from app.schemas.game import GameParams, SimplexState
from app.schemas.trajectory import ControlTrajectory, StateTrajectory
from app.services.dynamics_service import field_terms

logger = logging.getLogger(__name__)


def _rk4_raw(x, y, z, v_left, v_mid, v_right, h, n, r, sigma):
    k1 = field_terms(x, y, z, v_left, n, r, sigma)
    k2 = field_terms(
        x + 0.5 * h * k1[0], y + 0.5 * h * k1[1], z + 0.5 * h * k1[2], v_mid, n, r, sigma
    )
    k3 = field_terms(
        x + 0.5 * h * k2[0], y + 0.5 * h * k2[1], z + 0.5 * h * k2[2], v_mid, n, r, sigma
    )
    k4 = field_terms(x + h * k3[0], y + h * k3[1], z + h * k3[2], v_right, n, r, sigma)
    return (
        x + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        z + h / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2]),
    )


def _renormalize(x, y, z):
    """Clamp at zero and rescale onto the simplex; returns the state and the raw deviation."""
    deviation = max(abs(x + y + z - 1.0), -min(x, y, z, 0.0))
    x, y, z = max(x, 0.0), max(y, 0.0), max(z, 0.0)
    total = x + y + z
    if not total > 0.0:
        return (x, y, z), math.inf
    return (x / total, y / total, z / total), deviation


def forward_states(
    w0: np.ndarray,
    values: np.ndarray,
    dt: float,
    params: GameParams,
) -> tuple[np.ndarray, float, float]:
    """Integrate node-valued controls; returns states, max raw deviation and min raw component."""
    n, r, sigma = params.n, params.r, params.sigma
    limit = settings.STEP_DEVIATION_LIMIT
    steps = len(values) - 1
    states = np.empty((steps + 1, 3))
    states[0] = w0
    x, y, z = (float(component) for component in w0)
    max_deviation = 0.0
    min_component = min(x, y, z)
    controls = values.tolist()

    for k in range(steps):
        v_left, v_right = controls[k], controls[k + 1]
        try:
            raw = _rk4_raw(x, y, z, v_left, 0.5 * (v_left + v_right), v_right, dt, n, r, sigma)
        except OverflowError as e:
            raise IntegrationError(f"step overflowed ({e}), reduce the step size", node=k + 1) from e
        (x, y, z), deviation = _renormalize(*raw)
        if not deviation <= limit:
            raise IntegrationError(
                f"step left the simplex by {deviation:.3e}, reduce the step size", node=k + 1
            )
        max_deviation = max(max_deviation, abs(sum(raw) - 1.0))
        min_component = min(min_component, *raw)
        states[k + 1] = (x, y, z)

    return states, max_deviation, min_component


def rk4_step(
    w: SimplexState,
    v_left: float,
    v_mid: float,
    v_right: float,
    dt: float,
    params: GameParams,
) -> SimplexState:
    if not dt > 0.0:
        raise DomainError(f"step size must be positive, got {dt}")
    try:
        raw = _rk4_raw(w.x, w.y, w.z, v_left, v_mid, v_right, dt, params.n, params.r, params.sigma)
    except OverflowError as e:
        raise IntegrationError(f"step overflowed ({e}), reduce the step size") from e
    state, deviation = _renormalize(*raw)
    if not deviation <= settings.STEP_DEVIATION_LIMIT:
        raise IntegrationError(f"step left the simplex by {deviation:.3e}, reduce the step size")
    return SimplexState.from_array(state)


def integrate_forward(
    w0: SimplexState,
    control: ControlTrajectory,
    params: GameParams,
) -> StateTrajectory:
    states, max_deviation, min_component = forward_states(
        w0.as_array(), control.values, control.grid.dt, params
    )
    logger.debug(
        f"Integrated {control.grid.steps} steps, max simplex deviation {max_deviation:.3e}"
    )
    return StateTrajectory(
        grid=control.grid,
        states=states,
        max_simplex_deviation=max_deviation,
        min_raw_component=min_component,
    )
