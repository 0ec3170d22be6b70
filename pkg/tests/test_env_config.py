from drntool.config.settings import Config, build_run_config


def test_env_override_scalar(monkeypatch, tmp_path):
    monkeypatch.setenv("DRNTOOL_WALKERS", "1234")
    config = Config(str(tmp_path / "config.cfg"))
    assert config.get("walkers") == "1234"
    assert config.validate()["walkers"] == 1234


def test_env_override_rate_in_hz(monkeypatch, tmp_path):
    monkeypatch.setenv("DRNTOOL_GAMMA_DARK", "400hz")
    run = build_run_config(Config(str(tmp_path / "config.cfg")), {"seed": 1})
    assert abs(run.ensemble.dark_dephasing_rate - 2513.2741228718346) < 1e-9


def test_env_override_priority(monkeypatch, tmp_path):
    path = tmp_path / "config.cfg"
    path.write_text("beam_radius = 0.2\n", encoding="utf-8")
    monkeypatch.setenv("DRNTOOL_BEAM_RADIUS", "0.3")
    config = Config(str(path), preset="fig2b")
    # Should use env var, not config file or preset value
    assert config.get("beam_radius") == "0.3"


def test_cli_override_beats_env(monkeypatch, tmp_path):
    monkeypatch.setenv("DRNTOOL_SEED", "5")
    run = build_run_config(Config(str(tmp_path / "config.cfg")), {"seed": 9})
    assert run.seed == 9
