"""Tests for CLI commands.

Runs lineshape, distributions, gradient, fit and presets end to end on a small
Monte Carlo setup injected through ctx.obj.
"""

import os
import re

from click.testing import CliRunner

from drntool.cli.main import cli
from drntool.infrastructure.export import read_header

# --- Utility Functions ---


def clean_cli_output(output):
    """Helper to strip ANSI codes and empty lines from CLI output."""
    output = re.sub(r"\x1b\[[0-9;]*m", "", output)
    return "\n".join([line for line in output.splitlines() if line.strip()])


def invoke(args, config):
    return CliRunner().invoke(cli, args, obj=config)


# --- CLI Command Tests: lineshape ---


def test_lineshape_command(mock_config):
    """Test lineshape command writes the ensemble, class and fit files."""
    result = invoke(["lineshape"], mock_config)

    assert result.exit_code == 0, result.output
    out_dir = mock_config.data["output_dir"]
    names = sorted(os.listdir(out_dir))
    assert names == [
        "fit_report.txt",
        "lineshape.csv",
        "lineshape_class0.csv",
        "lineshape_class1.csv",
        "lineshape_class2.csv",
    ]
    output = clean_cli_output(result.output)
    assert "central_fwhm_hz" in output
    assert "Wrote 5 file(s)" in output


def test_lineshape_header_records_run(mock_config):
    result = invoke(["lineshape"], mock_config)

    assert result.exit_code == 0, result.output
    header = read_header(os.path.join(mock_config.data["output_dir"], "lineshape.csv"))
    assert header["seed"] == "11"
    assert len(header["config_hash"]) == 16
    assert header["param.walkers"] == "300"
    assert header["preset"] == "none"
    assert float(header["background"]) == 0.9


def test_lineshape_csv_has_odd_symmetric_grid(mock_config):
    result = invoke(["lineshape"], mock_config)

    assert result.exit_code == 0, result.output
    with open(os.path.join(mock_config.data["output_dir"], "lineshape.csv"), encoding="utf-8") as f:
        rows = [line for line in f if not line.startswith("#")]
    assert rows[0].strip() == "detuning_hz,transmission,contrast"
    detunings = [float(row.split(",")[0]) for row in rows[1:]]
    assert len(detunings) == 401
    assert detunings == [-d for d in reversed(detunings)]


def test_lineshape_is_reproducible(mock_config):
    """Identical seed and parameters give byte-identical files."""
    path = os.path.join(mock_config.data["output_dir"], "lineshape.csv")
    assert invoke(["lineshape"], mock_config).exit_code == 0
    with open(path, "rb") as f:
        first = f.read()
    assert invoke(["lineshape"], mock_config).exit_code == 0
    with open(path, "rb") as f:
        second = f.read()
    assert first == second


def test_lineshape_missing_seed(mock_config):
    """A missing seed is a usage error and nothing is written."""
    mock_config.data["seed"] = "none"
    result = invoke(["lineshape"], mock_config)

    assert result.exit_code == 2
    assert "seed" in result.output
    assert not os.path.exists(mock_config.data["output_dir"])


def test_lineshape_even_grid_points(mock_config):
    result = invoke(["lineshape", "--grid-points", "400"], mock_config)

    assert result.exit_code == 2
    assert "odd" in result.output
    assert not os.path.exists(mock_config.data["output_dir"])


def test_lineshape_negative_gamma_dark(mock_config):
    result = invoke(["lineshape", "--gamma-dark=-5"], mock_config)

    assert result.exit_code == 2
    assert "non-negative" in result.output


def test_lineshape_invalid_rate(mock_config):
    result = invoke(["lineshape", "--gamma-dark", "fast"], mock_config)

    assert result.exit_code == 2
    assert "Invalid rate" in result.output


def test_lineshape_out_option(mock_config, tmp_path):
    target = tmp_path / "custom"
    result = invoke(["lineshape", "--out", str(target), "--max-returns", "1"], mock_config)

    assert result.exit_code == 0, result.output
    expected = ["fit_report.txt", "lineshape.csv", "lineshape_class0.csv", "lineshape_class1.csv"]
    assert sorted(os.listdir(target)) == expected


# --- CLI Command Tests: distributions ---


def test_distributions_command(mock_config):
    result = invoke(["distributions"], mock_config)

    assert result.exit_code == 0, result.output
    names = sorted(os.listdir(mock_config.data["output_dir"]))
    assert names == ["distributions_report.txt", "t_in_eigenmode.csv", "t_in_montecarlo.csv", "t_out_montecarlo.csv"]
    output = clean_cli_output(result.output)
    assert "ks_statistic" in output
    assert "mean_exit_eigenmode" in output


# --- CLI Command Tests: gradient ---


def test_gradient_command(mock_config):
    result = invoke(["gradient", "--gamma-dark", "0", "--gamma-dark", "400hz"], mock_config)

    assert result.exit_code == 0, result.output
    out_dir = mock_config.data["output_dir"]
    assert sorted(os.listdir(out_dir)) == ["gradient_000.csv", "gradient_001.csv", "suppression_report.txt"]
    header = read_header(os.path.join(out_dir, "gradient_001.csv"))
    assert abs(float(header["param.gamma_dark"]) - 2513.2741228718346) < 1e-9
    assert header["content"] == "ensemble lineshape"
    with open(os.path.join(out_dir, "suppression_report.txt"), encoding="utf-8") as f:
        report = f.read()
    assert "entry_001.gamma_dark_hz" in report
    assert "peak_excess_non_increasing" in report


def test_gradient_zero_rate_file_matches_lineshape(mock_config):
    out_dir = mock_config.data["output_dir"]
    assert invoke(["lineshape"], mock_config).exit_code == 0
    with open(os.path.join(out_dir, "lineshape.csv"), encoding="utf-8") as f:
        lineshape = f.read()

    result = invoke(["gradient", "--gamma-dark", "0", "--gamma-dark", "400hz"], mock_config)

    assert result.exit_code == 0, result.output
    with open(os.path.join(out_dir, "gradient_000.csv"), encoding="utf-8") as f:
        assert f.read() == lineshape


def test_gradient_negative_rate(mock_config):
    result = invoke(["gradient", "--gamma-dark", "0", "--gamma-dark=-1"], mock_config)

    assert result.exit_code == 2
    assert not os.path.exists(mock_config.data["output_dir"])


# --- CLI Command Tests: fit ---


def test_fit_command_on_lineshape_output(mock_config):
    assert invoke(["lineshape"], mock_config).exit_code == 0
    csv_path = os.path.join(mock_config.data["output_dir"], "lineshape.csv")

    result = invoke(["fit", csv_path], mock_config)

    assert result.exit_code == 0, result.output
    report = os.path.join(mock_config.data["output_dir"], "lineshape_fit.txt")
    header = read_header(report)
    assert header["input"] == csv_path
    assert header["input_config_hash"] == read_header(csv_path)["config_hash"]
    assert "lorentzian_fwhm_hz" in clean_cli_output(result.output)


def test_fit_rejects_malformed_csv(mock_config, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("detuning_hz,transmission\n-1,0.5\n0,oops\n1,0.5\n", encoding="utf-8")

    result = invoke(["fit", str(bad)], mock_config)

    assert result.exit_code == 2


# --- CLI Command Tests: presets ---


def test_presets_command():
    result = CliRunner().invoke(cli, ["presets"])

    assert result.exit_code == 0
    output = clean_cli_output(result.output)
    for name in ("fig1b", "fig2a", "fig2b", "fig3a", "fig3b", "fig4"):
        assert name in output


def test_presets_show():
    result = CliRunner().invoke(cli, ["presets", "--show", "fig4"])

    assert result.exit_code == 0
    assert "gamma_dark_values = 0, 100hz, 400hz, 1600hz" in result.output


def test_unknown_preset_is_rejected(mock_config):
    result = invoke(["lineshape", "--preset", "fig9"], mock_config)

    assert result.exit_code == 2
