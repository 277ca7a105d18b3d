import json
import logging
import time
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from app.core.exceptions import ScenarioConfigError
from app.schemas.scenario import ComparisonRow, RunSummary, ScenarioConfig, ScenarioMode
from app.schemas.solver import SolverMethod
from app.schemas.trajectory import ControlTrajectory
from app.services import control_service
from app.services.cost_service import evaluate_cost
from app.services.export_service import export_service
from app.services.integrator_service import integrate_forward

logger = logging.getLogger(__name__)


def validation_messages(error: ValidationError) -> list[str]:
    return [
        f"{'.'.join(str(part) for part in item['loc']) or '<root>'}: {item['msg']}"
        for item in error.errors()
    ]


class ScenarioService:
    def load_config(self, path: str | Path) -> ScenarioConfig:
        """Read a scenario document; a summary.json is accepted through its ``scenario`` key."""
        path = Path(path)
        try:
            document = json.loads(path.read_text())
        except OSError as e:
            raise ScenarioConfigError(f"cannot read config {path}", errors=[str(e)]) from e
        except json.JSONDecodeError as e:
            raise ScenarioConfigError(f"config {path} is not valid JSON", errors=[str(e)]) from e

        if isinstance(document, dict) and "scenario" in document:
            document = document["scenario"]
        return self.validate(document)

    def validate(self, document) -> ScenarioConfig:
        try:
            return ScenarioConfig.model_validate(document)
        except ValidationError as e:
            raise ScenarioConfigError(
                "invalid scenario config", errors=validation_messages(e)
            ) from e

    def run(self, config: ScenarioConfig, out_dir: str | Path) -> RunSummary:
        runners = {
            ScenarioMode.SIMULATE: self.run_simulate,
            ScenarioMode.OPTIMIZE: self.run_optimize,
            ScenarioMode.SWEEP: self.run_sweep,
            ScenarioMode.COMPARE: self.run_compare,
        }
        logger.info(f"Running {config.mode.value} scenario {config.name or '<unnamed>'}")
        return runners[config.mode](config, Path(out_dir))

    def _finish(self, summary: RunSummary, files: dict[str, Path], out_dir: Path) -> RunSummary:
        files["summary"] = out_dir / "summary.json"
        summary = summary.model_copy(
            update={"files": {key: str(path) for key, path in files.items()}}
        )
        export_service.write_summary(summary, out_dir)
        return summary

    def _state_errors(self, config: ScenarioConfig, traj) -> dict[str, float]:
        target = config.weights.w_star
        return {
            "initial_error": traj.initial.distance(target),
            "final_error": traj.final.distance(target),
        }

    def run_simulate(self, config: ScenarioConfig, out_dir: Path) -> RunSummary:
        if config.constant_v is None:
            raise ScenarioConfigError("constant_v is required in simulate mode")
        control = ControlTrajectory.constant(config.grid, config.constant_v, config.weights.v_max)
        traj = integrate_forward(config.w0, control, config.params)
        breakdown = evaluate_cost(traj, control, config.weights)

        files = {
            "trajectory": export_service.write_trajectory(traj, out_dir),
            "control": export_service.write_control(control, traj, out_dir),
            "ternary": export_service.export_ternary(traj, out_dir),
        }
        summary = RunSummary(
            scenario=config,
            breakdown=breakdown,
            punished_integral=breakdown.punished_integral,
            converged=True,
            **self._state_errors(config, traj),
        )
        return self._finish(summary, files, out_dir)

    def run_optimize(self, config: ScenarioConfig, out_dir: Path) -> RunSummary:
        report = control_service.solve(
            config.solver_method,
            config.w0,
            config.grid,
            config.weights,
            config.params,
            config.solver,
        )
        stationarity = control_service.stationarity_report(
            config.w0,
            report.control,
            config.weights,
            config.params,
            discrete=config.solver_method == SolverMethod.PGD,
        )
        weights = config.weights
        plateau = None
        if weights.alpha2 > 0.0 and weights.alpha3 > 0.0 and weights.alpha4 > 0.0:
            plateau = control_service.plateau_report(report.control, config.params)

        files = {
            "trajectory": export_service.write_trajectory(report.states, out_dir),
            "control": export_service.write_control(report.control, report.states, out_dir),
            "ternary": export_service.export_ternary(report.states, out_dir),
        }
        summary = RunSummary(
            scenario=config,
            breakdown=report.breakdown,
            punished_integral=report.breakdown.punished_integral,
            converged=report.converged,
            iterations=report.iterations,
            stationarity=stationarity,
            plateau=plateau,
            **self._state_errors(config, report.states),
        )
        if not report.converged:
            logger.warning(f"Solver did not converge after {report.iterations} iterations")
        return self._finish(summary, files, out_dir)

    def _sweep_values(self, config: ScenarioConfig) -> np.ndarray:
        return np.linspace(0.0, config.weights.v_max, config.sweep_points)

    def run_sweep(self, config: ScenarioConfig, out_dir: Path) -> RunSummary:
        sweep = control_service.constant_sweep(
            config.w0, config.grid, config.weights, config.params, self._sweep_values(config)
        )
        best = sweep.best
        files = {"sweep": export_service.write_sweep(sweep, out_dir)}
        summary = RunSummary(
            scenario=config,
            breakdown=best.breakdown,
            punished_integral=best.breakdown.punished_integral,
            converged=True,
            argmin_v=best.v,
            sweep_min_cost=best.breakdown.total,
        )
        return self._finish(summary, files, out_dir)

    def run_compare(self, config: ScenarioConfig, out_dir: Path) -> RunSummary:
        weights = config.weights

        started = time.perf_counter()
        full = control_service.constant_sweep(
            config.w0, config.grid, weights, config.params, [weights.v_max]
        ).best
        full_time = time.perf_counter() - started

        started = time.perf_counter()
        sweep = control_service.constant_sweep(
            config.w0, config.grid, weights, config.params, self._sweep_values(config)
        )
        sweep_time = time.perf_counter() - started
        best = sweep.best

        started = time.perf_counter()
        report = control_service.solve(
            config.solver_method, config.w0, config.grid, weights, config.params, config.solver
        )
        optimal_time = time.perf_counter() - started

        rows = [
            ComparisonRow(
                strategy="full",
                v=full.v,
                cost=full.breakdown.total,
                punished_integral=full.breakdown.punished_integral,
                wall_time=full_time,
            ),
            ComparisonRow(
                strategy="best_constant",
                v=best.v,
                cost=best.breakdown.total,
                punished_integral=best.breakdown.punished_integral,
                wall_time=sweep_time,
            ),
            ComparisonRow(
                strategy="optimal",
                cost=report.cost,
                punished_integral=report.breakdown.punished_integral,
                wall_time=optimal_time,
                converged=report.converged,
            ),
        ]
        for row in rows:
            logger.info(
                f"{row.strategy}: J={row.cost:.7f}, punished={row.punished_integral:.7f}, "
                f"{row.wall_time:.2f}s"
            )

        stationarity = control_service.stationarity_report(
            config.w0,
            report.control,
            weights,
            config.params,
            discrete=config.solver_method == SolverMethod.PGD,
        )
        files = {
            "comparison": export_service.write_comparison(rows, out_dir),
            "sweep": export_service.write_sweep(sweep, out_dir),
            "trajectory": export_service.write_trajectory(report.states, out_dir),
            "control": export_service.write_control(report.control, report.states, out_dir),
            "ternary": export_service.export_ternary(report.states, out_dir),
        }
        summary = RunSummary(
            scenario=config,
            breakdown=report.breakdown,
            punished_integral=report.breakdown.punished_integral,
            converged=report.converged,
            iterations=report.iterations,
            argmin_v=best.v,
            sweep_min_cost=best.breakdown.total,
            comparison=rows,
            stationarity=stationarity,
            **self._state_errors(config, report.states),
        )
        return self._finish(summary, files, out_dir)


scenario_service = ScenarioService()
