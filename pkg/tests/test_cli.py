import json

import pytest

from app.cli import EXIT_CONFIG_ERROR, EXIT_NOT_CONVERGED, EXIT_OK, main


def _write_config(path, **overrides):
    document = {"mode": "simulate", "grid": {"tf": 10.0, "steps": 100}, "constant_v": 0.3}
    document.update(overrides)
    path.write_text(json.dumps(document))
    return path


class TestScenarioCommands:
    def test_simulate_preset(self, tmp_path, capsys):
        assert main(["simulate", "--preset", "fig2", "--out", str(tmp_path)]) == EXIT_OK
        for name in ("trajectory.csv", "control.csv", "ternary.csv", "summary.json"):
            assert (tmp_path / name).exists()
        assert f"results written to {tmp_path}" in capsys.readouterr().out

    def test_subcommand_overrides_config_mode(self, tmp_path):
        config = _write_config(tmp_path / "scenario.json", sweep_points=3)
        assert main(["sweep", "--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_OK
        summary = json.loads((tmp_path / "out" / "summary.json").read_text())
        assert summary["scenario"]["mode"] == "sweep"
        assert (tmp_path / "out" / "sweep.csv").exists()

    def test_replay_from_summary(self, tmp_path):
        config = _write_config(tmp_path / "scenario.json")
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path / "first")]) == EXIT_OK
        replay = tmp_path / "first" / "summary.json"
        assert main(["simulate", "--config", str(replay), "--out", str(tmp_path / "second")]) == EXIT_OK
        assert (tmp_path / "first" / "trajectory.csv").read_bytes() == (
            tmp_path / "second" / "trajectory.csv"
        ).read_bytes()

    def test_not_converged_exit_code(self, tmp_path):
        config = _write_config(
            tmp_path / "scenario.json", mode="optimize", constant_v=None, solver={"max_iters": 1}
        )
        assert main(["optimize", "--config", str(config), "--out", str(tmp_path / "out")]) == (
            EXIT_NOT_CONVERGED
        )
        assert (tmp_path / "out" / "summary.json").exists()


class TestConfigErrors:
    def test_missing_file(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json")]) == EXIT_CONFIG_ERROR

    def test_no_source(self):
        assert main(["simulate"]) == EXIT_CONFIG_ERROR

    def test_unknown_preset(self):
        assert main(["simulate", "--preset", "fig99"]) == EXIT_CONFIG_ERROR

    def test_invalid_scenario(self, tmp_path):
        config = _write_config(tmp_path / "scenario.json", constant_v=2.0)
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == EXIT_CONFIG_ERROR

    def test_invalid_game_parameters(self):
        assert main(["critical", "--n", "5", "--r", "6.0"]) == EXIT_CONFIG_ERROR

    def test_config_and_preset_are_exclusive(self, tmp_path):
        config = _write_config(tmp_path / "scenario.json")
        with pytest.raises(SystemExit):
            main(["simulate", "--config", str(config), "--preset", "fig2"])

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit):
            main(["train"])


class TestInfoCommands:
    def test_presets(self, capsys):
        assert main(["presets"]) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert any(line.startswith("table1") for line in lines)

    def test_critical(self, capsys):
        assert main(["critical"]) == EXIT_OK
        assert float(capsys.readouterr().out.strip()) == 1 / 6

    def test_critical_custom_game(self, capsys):
        assert main(["critical", "--n", "4", "--r", "2.0", "--sigma", "0.5"]) == EXIT_OK
        assert float(capsys.readouterr().out.strip()) == pytest.approx(1 / 3)
