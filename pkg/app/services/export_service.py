import logging
import math
from pathlib import Path

import numpy as np
import pandas as pd

from app.core.config import settings
from app.schemas.scenario import ComparisonRow, RunSummary
from app.schemas.solver import SweepResult
from app.schemas.trajectory import ControlTrajectory, StateTrajectory

logger = logging.getLogger(__name__)

# barycentric -> plane: x at (0, 0), y at (1, 0), z at (1/2, sqrt(3)/2)
TERNARY_COLUMNS = ("X=y+z/2", "Y=sqrt(3)/2*z")


def ternary_coordinates(states: np.ndarray) -> np.ndarray:
    y, z = states[:, 1], states[:, 2]
    return np.column_stack((y + 0.5 * z, 0.5 * math.sqrt(3.0) * z))


class ExportService:
    def __init__(self):
        self.float_format = settings.CSV_FLOAT_FORMAT

    def _write_frame(self, frame: pd.DataFrame, path: Path) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format=self.float_format)
        logger.info(f"Wrote {path}")
        return path

    def write_trajectory(self, traj: StateTrajectory, out_dir: Path) -> Path:
        frame = pd.DataFrame(
            {"t": traj.grid.times, "x": traj.x, "y": traj.y, "z": traj.z}
        )
        return self._write_frame(frame, out_dir / "trajectory.csv")

    def write_control(
        self, control: ControlTrajectory, traj: StateTrajectory, out_dir: Path
    ) -> Path:
        frame = pd.DataFrame(
            {"t": control.grid.times, "v": control.values, "yv": traj.y * control.values}
        )
        return self._write_frame(frame, out_dir / "control.csv")

    def export_ternary(self, traj: StateTrajectory, out_dir: Path) -> Path:
        frame = pd.DataFrame(ternary_coordinates(traj.states), columns=list(TERNARY_COLUMNS))
        return self._write_frame(frame, out_dir / "ternary.csv")

    def write_sweep(self, sweep: SweepResult, out_dir: Path) -> Path:
        frame = pd.DataFrame(
            {
                "v": [entry.v for entry in sweep.entries],
                "J": [entry.breakdown.total for entry in sweep.entries],
            }
        )
        return self._write_frame(frame, out_dir / "sweep.csv")

    def write_comparison(self, rows: list[ComparisonRow], out_dir: Path) -> Path:
        frame = pd.DataFrame([row.model_dump() for row in rows])
        frame = frame.rename(columns={"cost": "J"})
        return self._write_frame(frame, out_dir / "comparison.csv")

    def write_summary(self, summary: RunSummary, out_dir: Path) -> Path:
        path = out_dir / "summary.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(summary.model_dump_json(indent=2))
        logger.info(f"Wrote {path}")
        return path


export_service = ExportService()
