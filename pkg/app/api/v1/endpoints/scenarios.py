import logging
from pathlib import Path

from fastapi import APIRouter, HTTPException, status
from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import OPGGError, ScenarioConfigError
from app.schemas.common import GenericApiResponse
from app.schemas.game import GameParams
from app.schemas.scenario import ScenarioMode, ScenarioRunRequest
from app.services.dynamics_service import critical_punishment
from app.services.preset_service import list_presets
from app.services.scenario_service import scenario_service, validation_messages

logger = logging.getLogger(__name__)

router = APIRouter()


@router.get("/presets", status_code=status.HTTP_200_OK)
def get_presets() -> GenericApiResponse:
    return GenericApiResponse(
        success=True,
        data=[
            {"name": preset.name, "mode": preset.mode.value, "description": preset.description}
            for preset in list_presets()
        ],
    )


@router.get("/critical-punishment", status_code=status.HTTP_200_OK)
def get_critical_punishment(n: int = 5, r: float = 3.0, sigma: float = 1.0) -> GenericApiResponse:
    try:
        params = GameParams(n=n, r=r, sigma=sigma)
    except ValidationError as e:
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY,
            detail=validation_messages(e),
        ) from e
    return GenericApiResponse(
        success=True,
        data={"n": n, "r": r, "sigma": sigma, "critical_punishment": critical_punishment(params)},
    )


def _output_dir(out_dir: str | None, default_name: str) -> Path:
    """Resolve a requested output directory inside OUTPUT_DIR."""
    root = Path(settings.OUTPUT_DIR).resolve()
    target = (root / (out_dir or default_name)).resolve()
    if not target.is_relative_to(root):
        raise ScenarioConfigError(
            "invalid output directory", [f"out_dir: must stay inside {settings.OUTPUT_DIR}"]
        )
    return target


@router.post("/{mode}", status_code=status.HTTP_200_OK)
def run_scenario(mode: ScenarioMode, payload: ScenarioRunRequest) -> GenericApiResponse:
    document = payload.model_dump(mode="json", exclude={"out_dir"})
    document["mode"] = mode.value
    try:
        config = scenario_service.validate(document)
        out_dir = _output_dir(payload.out_dir, config.name or mode.value)
        summary = scenario_service.run(config, out_dir)
    except ScenarioConfigError as e:
        logger.error(f"Rejected {mode.value} scenario: {e}")
        raise HTTPException(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=e.errors or str(e)
        ) from e
    except OPGGError as e:
        logger.error(f"{mode.value} scenario failed: {e}")
        raise HTTPException(status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, detail=str(e)) from e

    return GenericApiResponse(
        success=summary.converged,
        message="Scenario completed" if summary.converged else "Solver did not converge",
        data=summary.model_dump(mode="json"),
    )
