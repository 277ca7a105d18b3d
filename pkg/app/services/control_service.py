"""Optimal punishment schedules.

Two solvers minimise the same discretised objective: a forward-backward sweep
driven by the closed-form pointwise minimiser of the Hamiltonian, and a
projected gradient method driven by the exact discrete adjoint of the RK4
scheme and trapezoid quadrature.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from app.core.config import settings
from app.core.exceptions import DomainError, InvalidWeightsError
from app.schemas.cost import CostWeights
from app.schemas.game import GameParams, SimplexState
from app.schemas.solver import (
    Costate,
    PlateauReport,
    SolveReport,
    SolverConfig,
    SolverMethod,
    StationarityReport,
    SweepEntry,
    SweepResult,
)
from app.schemas.trajectory import ControlTrajectory, StateTrajectory, TimeGrid
from app.services.cost_service import breakdown_from_arrays, quadrature_weights
from app.services.dynamics_service import (
    critical_punishment,
    field_array,
    jacobian_array,
    jacobian_terms,
    sensitivity_array,
    sensitivity_terms,
)
from app.services.integrator_service import forward_states, integrate_forward

logger = logging.getLogger(__name__)

ARMIJO_CONSTANT = 1e-4
MIN_STEP = 1e-4
MAX_STEP = 1e6
ACTIVE_BOUND_FRACTION = 1e-5


def _check_weights(weights: CostWeights) -> None:
    if weights.total_weight <= 0.0:
        raise InvalidWeightsError("at least one cost weight must be positive")


def _flat(increase: float, cost: float, tol_cost: float) -> bool:
    return increase <= tol_cost * max(abs(cost), 1.0)


def costate_rhs(
    w: SimplexState,
    v: float,
    lam: np.ndarray,
    weights: CostWeights,
    params: GameParams,
) -> np.ndarray:
    """dλ/dt = -∂H/∂w."""
    jacobian = np.array(jacobian_terms(w.x, w.y, w.z, v, params.n, params.r, params.sigma))
    source = weights.alpha2 * (w.as_array() - weights.w_star.as_array())
    source[1] += weights.alpha4 * v**2 * w.y
    return -(source + jacobian.T @ np.asarray(lam, dtype=float))


def pointwise_control_update(
    w: SimplexState,
    lam: np.ndarray,
    weights: CostWeights,
    params: GameParams,
    epsilon: float = 1e-12,
) -> float:
    sensitivity = np.array(sensitivity_terms(w.x, w.y, w.z, params.n, params.r))
    switching = float(np.dot(lam, sensitivity))
    curvature = weights.alpha3 + weights.alpha4 * w.y**2
    if curvature > epsilon:
        return min(max(-switching / curvature, 0.0), weights.v_max)
    # H is linear in v; a flat H (singular arc) falls to the lower bound
    return weights.v_max if switching < -epsilon else 0.0


class ControlProblem:
    """Discretised problem on a fixed grid; arrays in, arrays out."""

    def __init__(
        self,
        w0: SimplexState,
        grid: TimeGrid,
        weights: CostWeights,
        params: GameParams,
    ):
        _check_weights(weights)
        if not weights.strictly_convex:
            logger.info("No quadratic control penalty: the Hamiltonian is linear in v, bang-bang updates")
        self.w0 = w0.as_array()
        self.grid = grid
        self.weights = weights
        self.params = params
        self.dt = grid.dt
        self.times = grid.times
        self.quadrature = quadrature_weights(grid)
        self.w_star = weights.w_star.as_array()

    def forward(self, values: np.ndarray) -> tuple[np.ndarray, float, float]:
        return forward_states(self.w0, values, self.dt, self.params)

    def cost(self, states: np.ndarray, values: np.ndarray) -> float:
        return breakdown_from_arrays(states, values, self.times, self.weights).total

    def _state_source(self, states: np.ndarray, values) -> np.ndarray:
        source = self.weights.alpha2 * (states - self.w_star)
        source[:, 1] += self.weights.alpha4 * values**2 * states[:, 1]
        return source

    def costate(self, states: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Backward RK4 for dλ/dt = -(g + Jᵀλ).

        Midpoint states come from the cubic Hermite interpolant of the forward
        nodes, so the costate keeps fourth order; the control is piecewise
        linear and its midpoint is exact.
        """
        h = self.dt
        slopes = field_array(states, values, self.params)
        mid_states = 0.5 * (states[1:] + states[:-1]) + h / 8.0 * (slopes[:-1] - slopes[1:])
        mid_values = 0.5 * (values[1:] + values[:-1])
        node_jac = jacobian_array(states, values, self.params).transpose(0, 2, 1)
        mid_jac = jacobian_array(mid_states, mid_values, self.params).transpose(0, 2, 1)
        node_source = self._state_source(states, values)
        mid_source = self._state_source(mid_states, mid_values)

        lam = np.empty_like(states)
        lam[-1] = self.weights.alpha1 * (states[-1] - self.w_star)
        for j in range(len(states) - 1, 0, -1):
            upstream = lam[j]
            k1 = -(node_source[j] + node_jac[j] @ upstream)
            k2 = -(mid_source[j - 1] + mid_jac[j - 1] @ (upstream - 0.5 * h * k1))
            k3 = -(mid_source[j - 1] + mid_jac[j - 1] @ (upstream - 0.5 * h * k2))
            k4 = -(node_source[j - 1] + node_jac[j - 1] @ (upstream - h * k3))
            lam[j - 1] = upstream - h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return lam

    def switching(self, states: np.ndarray, lam: np.ndarray) -> np.ndarray:
        """λ·f_v at every node."""
        return np.einsum("ij,ij->i", lam, sensitivity_array(states, self.params))

    def curvature(self, states: np.ndarray) -> np.ndarray:
        """H_vv = α3 + α4 y² at every node."""
        return self.weights.alpha3 + self.weights.alpha4 * states[:, 1] ** 2

    def hamiltonian_gradient(
        self, states: np.ndarray, values: np.ndarray, lam: np.ndarray
    ) -> np.ndarray:
        return self.curvature(states) * values + self.switching(states, lam)

    def pointwise_update(
        self,
        states: np.ndarray,
        lam: np.ndarray,
        epsilon: float,
    ) -> np.ndarray:
        v_max = self.weights.v_max
        switching = self.switching(states, lam)
        curvature = self.curvature(states)
        convex = curvature > epsilon
        bang_bang = np.where(switching < -epsilon, v_max, 0.0)
        interior = -switching / np.where(convex, curvature, 1.0)
        return np.where(convex, np.clip(interior, 0.0, v_max), bang_bang)

    def snap_to_bounds(
        self, values: np.ndarray, proposal: np.ndarray, tolerance: float
    ) -> np.ndarray:
        """Move nodes within ``tolerance`` of the bound their proposal sits on onto that bound."""
        snapped = values.copy()
        for bound in (0.0, self.weights.v_max):
            near = (proposal == bound) & (np.abs(values - bound) <= tolerance)
            snapped[near] = bound
        return snapped

    def discrete_gradient(self, states: np.ndarray, values: np.ndarray) -> np.ndarray:
        """Exact gradient of the trapezoid cost of the RK4 trajectory w.r.t. node controls."""
        h = self.dt
        params = self.params
        alpha1, alpha2, alpha3, alpha4 = self.weights.alphas
        q = self.quadrature
        y = states[:, 1]

        base = states[:-1]
        v_left, v_right = values[:-1], values[1:]
        v_mid = 0.5 * (v_left + v_right)
        k1 = field_array(base, v_left, params)
        stage2 = base + 0.5 * h * k1
        k2 = field_array(stage2, v_mid, params)
        stage3 = base + 0.5 * h * k2
        k3 = field_array(stage3, v_mid, params)
        stage4 = base + h * k3

        jac = [
            jacobian_array(base, v_left, params),
            jacobian_array(stage2, v_mid, params),
            jacobian_array(stage3, v_mid, params),
            jacobian_array(stage4, v_right, params),
        ]
        sens = [
            sensitivity_array(base, params),
            sensitivity_array(stage2, params),
            sensitivity_array(stage3, params),
            sensitivity_array(stage4, params),
        ]

        direct = q[:, None] * alpha2 * (states - self.w_star)
        direct[:, 1] += q * alpha4 * values**2 * y
        direct[-1] += alpha1 * (states[-1] - self.w_star)
        gradient = q * (alpha3 * values + alpha4 * values * y**2)

        adjoint = direct[-1].copy()
        for k in range(len(values) - 2, -1, -1):
            bar4 = h / 6.0 * adjoint
            bar3 = h / 3.0 * adjoint
            bar2 = h / 3.0 * adjoint
            bar1 = h / 6.0 * adjoint

            m4 = bar4 @ jac[3][k]
            gradient[k + 1] += sens[3][k] @ bar4
            bar3 = bar3 + h * m4

            m3 = bar3 @ jac[2][k]
            mid = sens[2][k] @ bar3
            bar2 = bar2 + 0.5 * h * m3

            m2 = bar2 @ jac[1][k]
            mid += sens[1][k] @ bar2
            bar1 = bar1 + 0.5 * h * m2

            m1 = bar1 @ jac[0][k]
            gradient[k] += sens[0][k] @ bar1 + 0.5 * mid
            gradient[k + 1] += 0.5 * mid

            adjoint = adjoint + m1 + m2 + m3 + m4 + direct[k]
        return gradient

    def report(
        self,
        method: SolverMethod,
        values: np.ndarray,
        forward: tuple[np.ndarray, float, float],
        iterations: int,
        converged: bool,
        history: list[float],
    ) -> SolveReport:
        states, max_deviation, min_component = forward
        control = ControlTrajectory(
            grid=self.grid,
            values=np.clip(values, 0.0, self.weights.v_max),
            v_max=self.weights.v_max,
        )
        return SolveReport(
            method=method,
            control=control,
            states=StateTrajectory(
                grid=self.grid,
                states=states,
                max_simplex_deviation=max_deviation,
                min_raw_component=min_component,
            ),
            costate=Costate(grid=self.grid, values=self.costate(states, control.values)),
            breakdown=breakdown_from_arrays(states, control.values, self.times, self.weights),
            iterations=iterations,
            converged=converged,
            cost_history=history,
        )


def _initial_values(grid: TimeGrid, weights: CostWeights, config: SolverConfig) -> np.ndarray:
    return np.full(grid.size, config.initial_control * weights.v_max)


def _settle(
    problem: ControlProblem,
    values: np.ndarray,
    forward: tuple[np.ndarray, float, float],
    cost: float,
    config: SolverConfig,
) -> tuple[np.ndarray, tuple[np.ndarray, float, float], float, StationarityReport]:
    """Snap near-active nodes onto their bounds and check stationarity with the sweep's costate."""
    lam = problem.costate(forward[0], values)
    proposal = problem.pointwise_update(forward[0], lam, config.bang_bang_epsilon)
    snapped = problem.snap_to_bounds(values, proposal, config.tol_control)
    if not np.array_equal(snapped, values):
        snapped_forward = problem.forward(snapped)
        snapped_cost = problem.cost(snapped_forward[0], snapped)
        if snapped_cost <= cost:
            values, forward, cost = snapped, snapped_forward, snapped_cost
            lam = problem.costate(forward[0], values)
    kkt = classify_stationarity(
        problem.hamiltonian_gradient(forward[0], values, lam),
        values,
        problem.weights.v_max,
        settings.KKT_TOLERANCE,
    )
    return values, forward, cost, kkt


def fbsm_solve(
    w0: SimplexState,
    grid: TimeGrid,
    weights: CostWeights,
    params: GameParams,
    config: SolverConfig | None = None,
) -> SolveReport:
    config = config or SolverConfig()
    problem = ControlProblem(w0, grid, weights, params)
    values = _initial_values(grid, weights, config)
    forward = problem.forward(values)
    cost = problem.cost(forward[0], values)
    history = [cost]
    converged = False
    iterations = 0
    logger.info(f"FBSM start: {grid.steps} steps, initial cost {cost:.10g}")

    while iterations < config.max_iters:
        iterations += 1
        lam = problem.costate(forward[0], values)
        proposal = problem.pointwise_update(forward[0], lam, config.bang_bang_epsilon)
        direction = proposal - values

        theta = config.theta
        smallest_increase = math.inf
        accepted = None
        for _ in range(config.max_backtracks + 1):
            trial = np.clip(values + theta * direction, 0.0, weights.v_max)
            trial_forward = problem.forward(trial)
            trial_cost = problem.cost(trial_forward[0], trial)
            if trial_cost <= cost:
                accepted = (trial, trial_forward, trial_cost)
                break
            smallest_increase = min(smallest_increase, trial_cost - cost)
            theta *= 0.5

        if accepted is None:
            flat = _flat(smallest_increase, cost, config.tol_cost)
            values, forward, settled_cost, kkt = _settle(problem, values, forward, cost, config)
            if settled_cost < cost:
                cost = settled_cost
                history.append(cost)
            converged = flat and kkt.satisfied
            log = logger.info if converged else logger.warning
            log(
                f"FBSM line search exhausted at iteration {iterations}, smallest increase "
                f"{smallest_increase:.3e}, max interior |H_v| {kkt.max_interior_residual:.3e}"
            )
            break

        trial, trial_forward, trial_cost = accepted
        delta_v = float(np.max(np.abs(trial - values)))
        delta_j = cost - trial_cost
        values, forward, cost = trial, trial_forward, trial_cost
        history.append(cost)
        logger.debug(
            f"FBSM iteration {iterations}: cost {cost:.12g}, theta {theta:.3g}, max |dv| {delta_v:.3e}"
        )
        if _flat(delta_j, cost, config.tol_cost) and delta_v <= config.tol_control:
            values, forward, settled_cost, kkt = _settle(problem, values, forward, cost, config)
            if settled_cost < cost:
                cost = settled_cost
                history.append(cost)
            if kkt.satisfied:
                converged = True
                break
            logger.debug(
                f"FBSM iteration {iterations}: increments below tolerance but KKT not met "
                f"(max interior |H_v| {kkt.max_interior_residual:.3e}), continuing"
            )

    if not converged and iterations >= config.max_iters:
        logger.warning(f"FBSM stopped at max_iters={config.max_iters} without converging")
    logger.info(f"FBSM done: {iterations} iterations, cost {cost:.10g}, converged={converged}")
    return problem.report(SolverMethod.FBSM, values, forward, iterations, converged, history)


def projected_gradient_solve(
    w0: SimplexState,
    grid: TimeGrid,
    weights: CostWeights,
    params: GameParams,
    config: SolverConfig | None = None,
) -> SolveReport:
    config = config or SolverConfig()
    problem = ControlProblem(w0, grid, weights, params)
    v_max = weights.v_max
    q = problem.quadrature
    values = _initial_values(grid, weights, config)
    forward = problem.forward(values)
    cost = problem.cost(forward[0], values)
    gradient = problem.discrete_gradient(forward[0], values)
    history = [cost]
    converged = False
    iterations = 0
    step = 1.0
    logger.info(f"Projected gradient start: {grid.steps} steps, initial cost {cost:.10g}")

    while iterations < config.max_iters:
        iterations += 1
        # discrete H_v: the gradient measured per unit of time
        direction = gradient / q

        smallest_increase = math.inf
        accepted = None
        for _ in range(config.max_backtracks + 1):
            trial = np.clip(values - step * direction, 0.0, v_max)
            trial_forward = problem.forward(trial)
            trial_cost = problem.cost(trial_forward[0], trial)
            if trial_cost <= cost + ARMIJO_CONSTANT * float(gradient @ (trial - values)):
                accepted = (trial, trial_forward, trial_cost)
                break
            smallest_increase = min(smallest_increase, trial_cost - cost)
            step *= 0.5

        if accepted is None:
            converged = _flat(smallest_increase, cost, config.tol_cost)
            log = logger.info if converged else logger.warning
            log(f"Projected gradient line search exhausted at iteration {iterations}")
            break

        trial, trial_forward, trial_cost = accepted
        trial_gradient = problem.discrete_gradient(trial_forward[0], trial)
        displacement = trial - values
        delta_v = float(np.max(np.abs(displacement)))
        delta_j = cost - trial_cost

        # Barzilai-Borwein length in the quadrature inner product
        change = trial_gradient / q - direction
        curvature = float(np.sum(q * displacement * change))
        if curvature > 0.0:
            step = float(np.clip(np.sum(q * displacement**2) / curvature, MIN_STEP, MAX_STEP))
        else:
            step = 1.0

        values, forward, cost, gradient = trial, trial_forward, trial_cost, trial_gradient
        history.append(cost)
        logger.debug(
            f"PGD iteration {iterations}: cost {cost:.12g}, step {step:.3g}, max |dv| {delta_v:.3e}"
        )
        if _flat(delta_j, cost, config.tol_cost) and delta_v <= config.tol_control:
            converged = True
            break

    if not converged and iterations >= config.max_iters:
        logger.warning(f"Projected gradient stopped at max_iters={config.max_iters} without converging")
    logger.info(
        f"Projected gradient done: {iterations} iterations, cost {cost:.10g}, converged={converged}"
    )
    return problem.report(SolverMethod.PGD, values, forward, iterations, converged, history)


def solve(
    method: SolverMethod,
    w0: SimplexState,
    grid: TimeGrid,
    weights: CostWeights,
    params: GameParams,
    config: SolverConfig | None = None,
) -> SolveReport:
    if method == SolverMethod.PGD:
        return projected_gradient_solve(w0, grid, weights, params, config)
    return fbsm_solve(w0, grid, weights, params, config)


def discrete_gradient(
    w0: SimplexState,
    control: ControlTrajectory,
    weights: CostWeights,
    params: GameParams,
) -> tuple[float, np.ndarray]:
    """Cost of the controlled trajectory and its gradient w.r.t. every node value."""
    problem = ControlProblem(w0, control.grid, weights, params)
    states = problem.forward(control.values)[0]
    return problem.cost(states, control.values), problem.discrete_gradient(states, control.values)


def _constant_entry(
    w0: SimplexState,
    grid: TimeGrid,
    weights: CostWeights,
    params: GameParams,
    v: float,
) -> SweepEntry:
    control = ControlTrajectory.constant(grid, v, weights.v_max)
    states = integrate_forward(w0, control, params)
    breakdown = breakdown_from_arrays(states.states, control.values, grid.times, weights)
    return SweepEntry(v=v, breakdown=breakdown)


def constant_sweep(
    w0: SimplexState,
    grid: TimeGrid,
    weights: CostWeights,
    params: GameParams,
    v_values: Sequence[float],
    workers: int | None = None,
) -> SweepResult:
    v_values = [float(v) for v in v_values]
    for v in v_values:
        if not 0.0 <= v <= weights.v_max:
            raise DomainError(f"sweep value {v} outside [0, {weights.v_max}]")

    workers = workers or settings.SWEEP_WORKERS
    count = len(v_values)
    if workers > 1 and count > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            entries = list(
                executor.map(
                    _constant_entry,
                    [w0] * count,
                    [grid] * count,
                    [weights] * count,
                    [params] * count,
                    v_values,
                )
            )
    else:
        entries = [_constant_entry(w0, grid, weights, params, v) for v in v_values]

    result = SweepResult(entries=entries)
    logger.info(
        f"Constant sweep over {count} values: argmin v={result.argmin:.4g}, "
        f"cost {result.best.breakdown.total:.10g}"
    )
    return result


def hamiltonian_gradient(
    w0: SimplexState,
    control: ControlTrajectory,
    weights: CostWeights,
    params: GameParams,
    discrete: bool = False,
) -> np.ndarray:
    """H_v per node, from the continuous costate or from the discrete adjoint."""
    problem = ControlProblem(w0, control.grid, weights, params)
    states = problem.forward(control.values)[0]
    if discrete:
        return problem.discrete_gradient(states, control.values) / problem.quadrature
    lam = problem.costate(states, control.values)
    return problem.hamiltonian_gradient(states, control.values, lam)


def stationarity_report(
    w0: SimplexState,
    control: ControlTrajectory,
    weights: CostWeights,
    params: GameParams,
    tolerance: float | None = None,
    discrete: bool = False,
) -> StationarityReport:
    tolerance = settings.KKT_TOLERANCE if tolerance is None else tolerance
    gradient = hamiltonian_gradient(w0, control, weights, params, discrete)
    return classify_stationarity(gradient, control.values, weights.v_max, tolerance)


def classify_stationarity(
    gradient: np.ndarray, values: np.ndarray, v_max: float, tolerance: float
) -> StationarityReport:
    """Sign conditions on H_v at active nodes, |H_v| at interior ones."""
    margin = ACTIVE_BOUND_FRACTION * v_max
    lower = values <= margin
    upper = values >= v_max - margin
    interior = ~(lower | upper)

    max_interior = float(np.max(np.abs(gradient[interior]))) if interior.any() else 0.0
    min_lower = float(np.min(gradient[lower])) if lower.any() else None
    max_upper = float(np.max(gradient[upper])) if upper.any() else None
    satisfied = (
        max_interior <= tolerance
        and (min_lower is None or min_lower >= -tolerance)
        and (max_upper is None or max_upper <= tolerance)
    )
    return StationarityReport(
        tolerance=tolerance,
        interior_nodes=int(interior.sum()),
        lower_nodes=int(lower.sum()),
        upper_nodes=int(upper.sum()),
        max_interior_residual=max_interior,
        min_lower_gradient=min_lower,
        max_upper_gradient=max_upper,
        satisfied=satisfied,
    )


def plateau_report(
    control: ControlTrajectory,
    params: GameParams,
    window: float | None = None,
    tolerance: float | None = None,
) -> PlateauReport:
    """Compare the control over the last ``window`` time units with the critical punishment."""
    window = settings.PLATEAU_WINDOW if window is None else window
    tolerance = settings.PLATEAU_TOLERANCE if tolerance is None else tolerance
    target = critical_punishment(params)
    times = control.grid.times
    tail = control.values[times >= control.grid.tf - window]
    max_deviation = float(np.max(np.abs(tail - target)))
    report = PlateauReport(
        target=target,
        window=window,
        mean=float(np.mean(tail)),
        max_deviation=max_deviation,
        within=max_deviation <= tolerance,
    )
    if not report.within:
        logger.warning(
            f"Late-time control deviates from the critical punishment {target:.4g} "
            f"by {max_deviation:.3g} over the last {window:g} time units"
        )
    return report
