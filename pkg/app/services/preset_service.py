"""Named scenarios for every experiment of the fractional-punishment study.

Defaults shared by all of them: n=5, r=3, sigma=1, w0=(0.2, 0.7, 0.1), v_max=1.
"""

from app.core.exceptions import ScenarioConfigError
from app.schemas.cost import COMPARISON_WEIGHTS, CostWeights
from app.schemas.game import SimplexState
from app.schemas.scenario import ScenarioConfig, ScenarioMode
from app.schemas.trajectory import TimeGrid

LONG_HORIZON = TimeGrid(t0=0.0, tf=70.0, steps=400)


def _weight_family(
    prefix: str, alpha2_values: list[float], partner: str, description: str, grid: TimeGrid
) -> dict[str, ScenarioConfig]:
    presets = {}
    for suffix, alpha2 in zip("abcde", alpha2_values):
        name = f"{prefix}{suffix}"
        weights = CostWeights(alpha2=alpha2, **{partner: round(1.0 - alpha2, 12)})
        presets[name] = ScenarioConfig(
            name=name,
            description=f"{description}, alpha2={alpha2}",
            mode=ScenarioMode.OPTIMIZE,
            grid=grid,
            weights=weights,
        )
    return presets


def _combined_family() -> dict[str, ScenarioConfig]:
    presets = {}
    alpha3 = 0.0001
    for suffix, alpha2 in zip("abcde", [0.02, 0.03, 0.04, 0.05, 0.06]):
        name = f"fig9{suffix}"
        presets[name] = ScenarioConfig(
            name=name,
            description=f"tracking, effort and punished-individual costs, alpha2={alpha2}",
            mode=ScenarioMode.OPTIMIZE,
            grid=TimeGrid(t0=0.0, tf=90.0, steps=400),
            weights=CostWeights(
                alpha2=alpha2, alpha3=alpha3, alpha4=round(1.0 - alpha2 - alpha3, 12)
            ),
        )
    return presets


def _build_presets() -> dict[str, ScenarioConfig]:
    presets = {
        "fig1": ScenarioConfig(
            name="fig1",
            description="terminal cost only",
            mode=ScenarioMode.OPTIMIZE,
            grid=TimeGrid(t0=0.0, tf=70.0, steps=250),
            weights=CostWeights(alpha1=1.0),
        ),
        "fig2": ScenarioConfig(
            name="fig2",
            description="punishment-free dynamics near full cooperation",
            mode=ScenarioMode.SIMULATE,
            w0=SimplexState(x=0.998, y=0.001, z=0.001),
            grid=TimeGrid(t0=0.0, tf=4.0, steps=600),
            constant_v=0.0,
        ),
        "fig3": ScenarioConfig(
            name="fig3",
            description="tracking cost only",
            mode=ScenarioMode.OPTIMIZE,
            grid=TimeGrid(t0=0.0, tf=70.0, steps=250),
            weights=CostWeights(alpha2=1.0),
        ),
        "fig4": ScenarioConfig(
            name="fig4",
            description="punishment-free orbit",
            mode=ScenarioMode.SIMULATE,
            grid=TimeGrid(t0=0.0, tf=70.0, steps=600),
            constant_v=0.0,
        ),
        "fig4a": ScenarioConfig(
            name="fig4a",
            description="effort cost only",
            mode=ScenarioMode.OPTIMIZE,
            grid=TimeGrid(t0=0.0, tf=70.0, steps=600),
            weights=CostWeights(alpha3=1.0),
        ),
        "fig4b": ScenarioConfig(
            name="fig4b",
            description="punished-individual cost only",
            mode=ScenarioMode.OPTIMIZE,
            grid=TimeGrid(t0=0.0, tf=70.0, steps=600),
            weights=CostWeights(alpha4=1.0),
        ),
    }
    presets.update(
        _weight_family(
            "fig5", [0.999, 0.97, 0.94, 0.91], "alpha3", "tracking and effort costs", LONG_HORIZON
        )
    )
    presets.update(
        _weight_family(
            "fig6", [0.9, 0.4, 0.2, 0.1], "alpha3", "tracking and effort costs", LONG_HORIZON
        )
    )
    presets.update(
        _weight_family(
            "fig7",
            [0.2, 0.05, 0.03, 0.02, 0.01],
            "alpha4",
            "tracking and punished-individual costs",
            LONG_HORIZON,
        )
    )
    presets.update(
        _weight_family(
            "fig8",
            [0.009, 0.005, 0.003, 0.001],
            "alpha4",
            "tracking and punished-individual costs",
            LONG_HORIZON,
        )
    )
    presets.update(_combined_family())

    short = TimeGrid(t0=0.0, tf=20.0, steps=400)
    sweep = ScenarioConfig(
        name="fig10",
        description="constant punishment sweep under the comparison weights (alias: sweep)",
        mode=ScenarioMode.SWEEP,
        grid=short,
        weights=COMPARISON_WEIGHTS,
        sweep_points=101,
    )
    presets["fig10"] = sweep
    presets["sweep"] = sweep.model_copy(update={"name": "sweep"})
    comparison = ScenarioConfig(
        name="fig11",
        description="full, best constant and optimal punishment compared (alias: table1)",
        mode=ScenarioMode.COMPARE,
        grid=TimeGrid(t0=0.0, tf=20.0, steps=1200),
        weights=COMPARISON_WEIGHTS,
        sweep_points=101,
    )
    presets["fig11"] = comparison
    presets["table1"] = comparison.model_copy(update={"name": "table1"})
    return presets


PRESETS = _build_presets()


def list_presets() -> list[ScenarioConfig]:
    return list(PRESETS.values())


def get_preset(name: str) -> ScenarioConfig:
    try:
        return PRESETS[name]
    except KeyError:
        raise ScenarioConfigError(
            f"unknown preset {name!r}", errors=[f"available: {', '.join(PRESETS)}"]
        ) from None
