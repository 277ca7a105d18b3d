import logging

import numpy as np
import pytest

from app.core.exceptions import DomainError, InvalidWeightsError
from app.schemas.cost import COMPARISON_WEIGHTS, CostWeights
from app.schemas.game import FULL_COOPERATION, GameParams, SimplexState
from app.schemas.solver import SolverConfig, SolverMethod
from app.schemas.trajectory import ControlTrajectory, TimeGrid
from app.services.control_service import (
    ControlProblem,
    classify_stationarity,
    constant_sweep,
    costate_rhs,
    discrete_gradient,
    fbsm_solve,
    plateau_report,
    pointwise_control_update,
    projected_gradient_solve,
    stationarity_report,
)
from app.services.cost_service import evaluate_cost
from app.services.dynamics_service import control_sensitivity, critical_punishment, field_terms
from app.services.integrator_service import integrate_forward
from app.services.preset_service import PRESETS


def _hamiltonian(point, v, lam, weights, params):
    error = point - weights.w_star.as_array()
    running = (
        0.5 * weights.alpha2 * error @ error
        + 0.5 * weights.alpha3 * v**2
        + 0.5 * weights.alpha4 * v**2 * point[1] ** 2
    )
    field = np.array(field_terms(*point, v, params.n, params.r, params.sigma))
    return running + lam @ field


def _cost(w0, grid, values, weights, params):
    control = ControlTrajectory(grid=grid, values=values)
    return evaluate_cost(integrate_forward(w0, control, params), control, weights).total


class TestCostateRhs:
    def test_vanishes_at_target(self, params):
        weights = CostWeights(alpha2=1.0, alpha4=1.0)
        rhs = costate_rhs(FULL_COOPERATION, 0.0, np.zeros(3), weights, params)
        np.testing.assert_array_equal(rhs, np.zeros(3))

    def test_tracking_only(self, params, w0):
        weights = CostWeights(alpha2=0.7)
        rhs = costate_rhs(w0, 0.3, np.zeros(3), weights, params)
        np.testing.assert_allclose(rhs, -0.7 * (w0.as_array() - FULL_COOPERATION.as_array()))

    def test_matches_finite_differences_of_hamiltonian(self, params, interior_states, rng):
        weights = CostWeights(alpha1=0.2, alpha2=0.5, alpha3=0.1, alpha4=0.9)
        h = 1e-6
        for w in interior_states:
            v = float(rng.uniform())
            lam = rng.normal(size=3)
            numeric = np.empty(3)
            for k in range(3):
                step = np.zeros(3)
                step[k] = h
                numeric[k] = -(
                    _hamiltonian(w.as_array() + step, v, lam, weights, params)
                    - _hamiltonian(w.as_array() - step, v, lam, weights, params)
                ) / (2 * h)
            analytic = costate_rhs(w, v, lam, weights, params)
            assert np.linalg.norm(analytic - numeric) <= 1e-6 * np.linalg.norm(analytic)


class TestPointwiseUpdate:
    def test_zero_costate_with_effort_penalty(self, params, w0):
        assert pointwise_control_update(w0, np.zeros(3), CostWeights(alpha3=1.0), params) == 0.0

    def test_clipped_to_upper_bound(self, params, w0):
        # the y-component of f_v is negative, so a large positive λ_y favours punishing
        lam = np.array([0.0, 1e3, 0.0])
        weights = CostWeights(alpha3=1.0, v_max=0.8)
        assert pointwise_control_update(w0, lam, weights, params) == 0.8

    def test_interior_minimiser(self, params, w0):
        weights = CostWeights(alpha3=0.5, alpha4=0.5)
        lam = np.array([0.0, 0.01, 0.0])
        v = pointwise_control_update(w0, lam, weights, params)
        assert 0.0 < v < 1.0
        # H_v vanishes at the minimiser
        h_v = (weights.alpha3 + weights.alpha4 * w0.y**2) * v + lam @ control_sensitivity(w0, params)
        assert h_v == pytest.approx(0.0, abs=1e-14)

    def test_bang_bang_without_defectors(self, params):
        w = SimplexState(x=0.6, y=0.0, z=0.4)
        lam = np.array([1.0, -2.0, 0.5])
        assert pointwise_control_update(w, lam, CostWeights(alpha4=1.0), params) == 0.0

    def test_bang_bang_saturates(self, params, w0):
        lam = np.array([0.0, 1.0, 0.0])
        assert pointwise_control_update(w0, lam, CostWeights(alpha2=1.0), params) == 1.0
        assert pointwise_control_update(w0, -lam, CostWeights(alpha2=1.0), params) == 0.0

    def test_singular_arc_falls_to_lower_bound(self, params, w0):
        weights = CostWeights(alpha2=1.0)
        assert pointwise_control_update(w0, np.zeros(3), weights, params) == 0.0


class TestDiscreteGradient:
    def test_matches_finite_differences(self, params, w0, rng):
        grid = TimeGrid(tf=5.0, steps=19)
        weights = CostWeights(alpha1=0.5, alpha2=0.04, alpha3=0.001, alpha4=0.959)
        values = rng.uniform(0.2, 0.8, size=grid.size)
        cost, gradient = discrete_gradient(w0, ControlTrajectory(grid=grid, values=values), weights, params)
        assert cost == pytest.approx(_cost(w0, grid, values, weights, params), rel=1e-14)

        h = 1e-6
        numeric = np.empty(grid.size)
        for k in range(grid.size):
            up, down = values.copy(), values.copy()
            up[k] += h
            down[k] -= h
            numeric[k] = (
                _cost(w0, grid, up, weights, params) - _cost(w0, grid, down, weights, params)
            ) / (2 * h)
        np.testing.assert_allclose(gradient, numeric, rtol=1e-4, atol=1e-4 * np.abs(numeric).max())


class TestFbsm:
    def test_rejects_all_zero_weights(self, params, w0, comparison_grid):
        weights = CostWeights.model_construct()
        with pytest.raises(InvalidWeightsError):
            fbsm_solve(w0, comparison_grid, weights, params)

    @pytest.mark.parametrize("name", ["fig4a", "fig4b"])
    def test_control_penalty_alone_means_no_punishment(self, name):
        preset = PRESETS[name]
        report = fbsm_solve(preset.w0, preset.grid, preset.weights, preset.params, preset.solver)
        assert report.converged
        assert report.control.values.max() <= 1e-6
        uncontrolled = integrate_forward(
            preset.w0, ControlTrajectory.constant(preset.grid, 0.0), preset.params
        )
        np.testing.assert_allclose(report.states.states, uncontrolled.states, atol=1e-4)

    def test_cost_history_never_increases(self, params, w0):
        grid = TimeGrid(tf=10.0, steps=100)
        report = fbsm_solve(w0, grid, COMPARISON_WEIGHTS, params, SolverConfig(max_iters=40))
        history = np.array(report.cost_history)
        assert np.all(np.diff(history) <= 0.0)
        assert report.iterations <= 40
        assert report.cost == history[-1]

    def test_costate_terminal_condition(self, params, w0):
        grid = TimeGrid(tf=10.0, steps=100)
        weights = CostWeights(alpha1=1.0, alpha3=0.1)
        report = fbsm_solve(w0, grid, weights, params, SolverConfig(max_iters=5))
        np.testing.assert_allclose(
            report.costate.terminal,
            report.states.final.as_array() - FULL_COOPERATION.as_array(),
        )

    def test_controls_stay_in_box(self, params, w0):
        grid = TimeGrid(tf=10.0, steps=100)
        weights = CostWeights(alpha2=1.0, alpha3=1e-3, v_max=0.6)
        report = fbsm_solve(w0, grid, weights, params, SolverConfig(max_iters=50))
        assert report.control.values.min() >= 0.0
        assert report.control.values.max() <= 0.6

    @pytest.mark.slow
    def test_tracking_only_saturates_during_transient(self):
        preset = PRESETS["fig3"]
        report = fbsm_solve(
            preset.w0, preset.grid, preset.weights, preset.params, SolverConfig(max_iters=300)
        )
        early = preset.grid.times <= 5.0
        assert np.all(report.control.values[early] >= 1.0 - 1e-3)
        assert report.states.final.x > report.states.initial.x

    def test_convergence_requires_stationarity(self, params, w0):
        grid = TimeGrid(tf=10.0, steps=100)
        report = fbsm_solve(w0, grid, COMPARISON_WEIGHTS, params, SolverConfig(max_iters=500))
        kkt = stationarity_report(w0, report.control, COMPARISON_WEIGHTS, params)
        assert not report.converged or kkt.satisfied

    @pytest.mark.slow
    @pytest.mark.parametrize("name", ["fig6c", "fig6d"])
    def test_saturated_start_is_stationary_when_converged(self, name):
        preset = PRESETS[name]
        report = fbsm_solve(preset.w0, preset.grid, preset.weights, preset.params, preset.solver)
        kkt = stationarity_report(preset.w0, report.control, preset.weights, preset.params)
        assert not report.converged or kkt.satisfied


class TestProjectedGradient:
    def test_effort_only_converges_to_zero(self, params, w0):
        grid = TimeGrid(tf=20.0, steps=200)
        report = projected_gradient_solve(w0, grid, CostWeights(alpha3=1.0), params)
        assert report.converged
        assert report.method == SolverMethod.PGD
        assert report.control.values.max() <= 1e-6

    def test_cost_history_never_increases(self, params, w0):
        grid = TimeGrid(tf=10.0, steps=100)
        report = projected_gradient_solve(
            w0, grid, COMPARISON_WEIGHTS, params, SolverConfig(max_iters=30)
        )
        assert np.all(np.diff(report.cost_history) <= 0.0)


@pytest.fixture(scope="module")
def comparison_solutions():
    params = GameParams()
    w0 = SimplexState(x=0.2, y=0.7, z=0.1)
    grid = TimeGrid(tf=20.0, steps=400)
    config = SolverConfig(max_iters=1000)
    return {
        "fbsm": fbsm_solve(w0, grid, COMPARISON_WEIGHTS, params, config),
        "pgd": projected_gradient_solve(w0, grid, COMPARISON_WEIGHTS, params, config),
        "sweep": constant_sweep(w0, grid, COMPARISON_WEIGHTS, params, np.linspace(0.0, 1.0, 101)),
        "full": constant_sweep(w0, grid, COMPARISON_WEIGHTS, params, [1.0]),
    }


@pytest.mark.slow
class TestComparisonScenario:
    def test_optimal_cost(self, comparison_solutions):
        report = comparison_solutions["fbsm"]
        assert report.converged
        assert report.cost == pytest.approx(0.3503187, rel=0.02)

    def test_optimal_beats_every_constant(self, comparison_solutions):
        assert comparison_solutions["fbsm"].cost <= comparison_solutions["sweep"].best.breakdown.total

    def test_fewer_punished_individuals(self, comparison_solutions):
        optimal = comparison_solutions["fbsm"].breakdown.punished_integral
        full = comparison_solutions["full"].best.breakdown.punished_integral
        assert optimal < full

    def test_solvers_agree(self, comparison_solutions):
        fbsm = comparison_solutions["fbsm"].cost
        pgd = comparison_solutions["pgd"].cost
        assert pgd == pytest.approx(fbsm, rel=0.01)

    def test_kkt_conditions(self, comparison_solutions):
        report = comparison_solutions["fbsm"]
        kkt = stationarity_report(
            report.states.initial, report.control, COMPARISON_WEIGHTS, GameParams()
        )
        assert kkt.satisfied, kkt
        assert kkt.max_interior_residual <= 1e-4

    def test_projected_gradient_kkt_conditions(self, comparison_solutions):
        report = comparison_solutions["pgd"]
        kkt = stationarity_report(
            report.states.initial, report.control, COMPARISON_WEIGHTS, GameParams(), discrete=True
        )
        assert kkt.max_interior_residual <= 1e-3


class TestConstantSweep:
    def test_argmin_near_reference(self, params, w0, comparison_grid, comparison_weights):
        sweep = constant_sweep(
            w0, comparison_grid, comparison_weights, params, np.linspace(0.0, 1.0, 101)
        )
        assert len(sweep.entries) == 101
        assert sweep.argmin == pytest.approx(0.57, abs=0.02)
        assert sweep.best.breakdown.total == pytest.approx(0.3638641, rel=0.02)

    def test_single_entry_matches_direct_evaluation(self, params, w0, comparison_grid, comparison_weights):
        sweep = constant_sweep(w0, comparison_grid, comparison_weights, params, [1.0])
        control = ControlTrajectory.constant(comparison_grid, 1.0)
        direct = evaluate_cost(integrate_forward(w0, control, params), control, comparison_weights)
        assert sweep.best.breakdown == direct

    def test_effort_only_cost_increases_with_v(self, params, w0, comparison_grid):
        sweep = constant_sweep(
            w0, comparison_grid, CostWeights(alpha3=1.0), params, np.linspace(0.0, 1.0, 11)
        )
        costs = [entry.breakdown.total for entry in sweep.entries]
        assert all(later > earlier for earlier, later in zip(costs, costs[1:]))

    def test_rejects_values_outside_box(self, params, w0, comparison_grid, comparison_weights):
        with pytest.raises(DomainError):
            constant_sweep(w0, comparison_grid, comparison_weights, params, [0.5, 1.5])

    def test_worker_pool_matches_sequential(self, params, w0, comparison_weights):
        grid = TimeGrid(tf=5.0, steps=50)
        values = [0.0, 0.25, 0.5, 0.75, 1.0]
        sequential = constant_sweep(w0, grid, comparison_weights, params, values, workers=1)
        pooled = constant_sweep(w0, grid, comparison_weights, params, values, workers=2)
        assert pooled == sequential


class TestReports:
    def test_stationarity_at_lower_bound(self, params, w0, comparison_grid):
        control = ControlTrajectory.constant(comparison_grid, 0.0)
        report = stationarity_report(w0, control, CostWeights(alpha3=1.0), params)
        assert report.satisfied
        assert report.lower_nodes == comparison_grid.size
        assert report.interior_nodes == 0

    def test_stationarity_violated_in_interior(self, params, w0, comparison_grid):
        control = ControlTrajectory.constant(comparison_grid, 0.5)
        report = stationarity_report(w0, control, CostWeights(alpha3=1.0), params)
        assert not report.satisfied
        assert report.max_interior_residual == pytest.approx(0.5)

    def test_plateau_at_critical_punishment(self, params):
        grid = TimeGrid(tf=90.0, steps=400)
        control = ControlTrajectory.constant(grid, critical_punishment(params))
        report = plateau_report(control, params)
        assert report.within
        assert report.mean == pytest.approx(1 / 6)

    def test_plateau_miss_only_warns(self, params, caplog):
        grid = TimeGrid(tf=90.0, steps=400)
        control = ControlTrajectory.constant(grid, 0.5)
        with caplog.at_level(logging.WARNING):
            report = plateau_report(control, params)
        assert not report.within
        assert "critical punishment" in caplog.text

    def test_node_just_below_upper_bound_is_interior(self):
        values = np.array([0.9999878, 0.5])
        gradient = np.array([-0.0635, 0.0])
        assert not classify_stationarity(gradient, values, 1.0, 1e-4).satisfied
        assert classify_stationarity(gradient, np.array([1.0, 0.5]), 1.0, 1e-4).satisfied


class TestSnapToBounds:
    def test_only_nodes_whose_proposal_is_on_the_bound(self, params, w0):
        problem = ControlProblem(w0, TimeGrid(tf=1.0, steps=4), COMPARISON_WEIGHTS, params)
        values = np.array([0.9999995, 0.9999995, 3e-7, 0.4, 0.99])
        proposal = np.array([1.0, 0.7, 0.0, 0.0, 1.0])
        snapped = problem.snap_to_bounds(values, proposal, 1e-6)
        np.testing.assert_array_equal(snapped, [1.0, 0.9999995, 0.0, 0.4, 0.99])
