import argparse
import logging
import sys
from pathlib import Path

from pydantic import ValidationError

from app.core.config import settings
from app.core.exceptions import OPGGError, ScenarioConfigError
from app.core.log_config import configure_logging
from app.schemas.game import GameParams
from app.schemas.scenario import ScenarioConfig, ScenarioMode
from app.schemas.solver import SolverMethod
from app.services.dynamics_service import critical_punishment
from app.services.preset_service import get_preset, list_presets
from app.services.scenario_service import scenario_service, validation_messages

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_NOT_CONVERGED = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opgg",
        description="Fractional punishment in the optional public goods game: "
        "simulation, optimal control, sweeps and comparisons",
    )
    parser.add_argument("--log-level", default=None, help="overrides LOG_LEVEL")
    commands = parser.add_subparsers(dest="command", required=True)

    for mode in ScenarioMode:
        command = commands.add_parser(mode.value, help=f"run a {mode.value} scenario")
        source = command.add_mutually_exclusive_group()
        source.add_argument("--config", type=Path, help="scenario JSON (or a summary.json)")
        source.add_argument("--preset", help="built-in scenario name, see `presets`")
        command.add_argument("--out", type=Path, help="output directory")
        command.add_argument(
            "--solver", choices=[method.value for method in SolverMethod], default=None
        )

    commands.add_parser("presets", help="list built-in scenarios")

    critical = commands.add_parser("critical", help="print the critical punishment fraction")
    critical.add_argument("--n", type=int, default=5)
    critical.add_argument("--r", type=float, default=3.0)
    critical.add_argument("--sigma", type=float, default=1.0)
    return parser


def resolve_config(args: argparse.Namespace) -> ScenarioConfig:
    if args.config is not None:
        config = scenario_service.load_config(args.config)
    elif args.preset is not None:
        config = get_preset(args.preset)
    else:
        raise ScenarioConfigError("one of --config or --preset is required")

    document = config.model_dump(mode="json")
    document["mode"] = args.command
    if args.solver is not None:
        document["solver_method"] = args.solver
    return scenario_service.validate(document)


def _run_scenario(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    out_dir = args.out or Path(settings.OUTPUT_DIR) / (config.name or config.mode.value)
    summary = scenario_service.run(config, out_dir)

    if summary.breakdown is not None:
        print(f"J = {summary.breakdown.total:.7f}  punished = {summary.punished_integral:.7f}")
    if summary.argmin_v is not None:
        print(f"best constant v = {summary.argmin_v:.4g}  J = {summary.sweep_min_cost:.7f}")
    for row in summary.comparison or []:
        print(f"{row.strategy:>14}  J = {row.cost:.7f}  punished = {row.punished_integral:.7f}")
    print(f"results written to {out_dir}")

    if not summary.converged:
        logger.warning("Solver did not converge, outputs kept")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def _print_presets() -> int:
    for preset in list_presets():
        print(f"{preset.name:<8} {preset.mode.value:<9} {preset.description}")
    return EXIT_OK


def _print_critical(args: argparse.Namespace) -> int:
    params = GameParams(n=args.n, r=args.r, sigma=args.sigma)
    print(f"{critical_punishment(params):.17g}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        if args.command == "presets":
            return _print_presets()
        if args.command == "critical":
            return _print_critical(args)
        return _run_scenario(args)
    except ScenarioConfigError as e:
        logger.error(str(e))
        return EXIT_CONFIG_ERROR
    except ValidationError as e:
        logger.error("invalid parameters: " + "; ".join(validation_messages(e)))
        return EXIT_CONFIG_ERROR
    except (OPGGError, OSError) as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
