import json
import logging
import math
import os
from typing import Any, Optional

import click

from drntool.cli.decorators import RATE, show_validity_warnings, translate_exceptions, validate_non_negative_rates
from drntool.cli.formatters import (
    format_presets_table,
    format_summary_table,
    format_suppression_table,
    print_written_files,
)
from drntool.config.presets import PRESET_NAMES, list_presets, preset_text
from drntool.config.settings import CONFIG_PATH, Config, RunConfig, build_run_config, config_hash
from drntool.core.analysis import fit_lorentzian, fwhm_numeric, peak_metrics
from drntool.core.diffusion import lowest_mode_fwhm
from drntool.core.models import SuppressionEntry
from drntool.core.pipeline import LineshapeAnalysis, LineshapePipeline
from drntool.infrastructure.export import (
    header_lines,
    read_lineshape_csv,
    render_distribution,
    render_lineshape,
    render_report,
    write_outputs,
)
from drntool.utils.units import rad_to_hz

logging.basicConfig(
    level=logging.ERROR,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    handlers=[logging.StreamHandler()],
)
logger = logging.getLogger(__name__)

ENSEMBLE_CONTENT = "# content = ensemble lineshape"


def run_options(func):
    """Options shared by the simulation verbs."""
    options = [
        click.option(
            "--config",
            "config_path",
            type=click.Path(exists=True, dir_okay=False),
            help="Flat key = value config file.",
        ),
        click.option("--preset", type=click.Choice(PRESET_NAMES), help="Bundled parameter preset."),
        click.option("--seed", type=int, help="RNG seed for the Monte Carlo walkers."),
        click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory."),
        click.option("--grid-points", type=int, help="Number of detuning grid points (odd)."),
        click.option("--max-returns", type=int, help="Largest number of dark periods per sequence."),
        click.option("--walkers", type=int, help="Number of Monte Carlo walkers."),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _load_run_config(
    obj: Any, config_path: Optional[str], preset: Optional[str], overrides: dict, require_seed: bool = True
) -> RunConfig:
    # A Config injected through ctx.obj (tests) is used when no file or preset is named.
    if isinstance(obj, Config) and config_path is None and preset is None:
        config = obj
    else:
        config = Config(path=config_path or CONFIG_PATH, preset=preset)
    run = build_run_config(config, overrides, require_seed=require_seed)
    logger.debug(json.dumps({"component": "cli", "event": "run_config", "hash": config_hash(run), "seed": run.seed}))
    return run


def _pipeline(run: RunConfig) -> LineshapePipeline:
    return LineshapePipeline(
        run.params,
        run.geometry,
        run.ensemble,
        run.walk,
        run.grid.build(run.params, run.geometry),
        sequence_source=run.sequence_source,
        distribution_bins=run.distribution_bins,
    )


def _header(run: RunConfig, **extra) -> list[str]:
    return header_lines(config_hash(run), run.seed, run.values, extra={"preset": run.preset or "none", **extra})


def _fit_entries(fit, fwhm: float) -> list[tuple[str, Any]]:
    relative = fit.rms_residual / abs(fit.amplitude) if fit.amplitude else math.inf
    return [
        ("lorentzian_amplitude", fit.amplitude),
        ("lorentzian_center_hz", rad_to_hz(fit.center)),
        ("lorentzian_fwhm_hz", rad_to_hz(fit.fwhm)),
        ("lorentzian_offset", fit.offset),
        ("lorentzian_rms_residual", fit.rms_residual),
        ("lorentzian_relative_rms", relative),
        ("lorentzian_converged", fit.converged),
        ("lorentzian_iterations", fit.iterations),
        ("fwhm_hz", rad_to_hz(fwhm)),
    ]


def _metric_entries(metrics, lowest_hz: float, fwhm: float) -> list[tuple[str, Any]]:
    return [
        ("central_fwhm_hz", rad_to_hz(metrics.central_fwhm)),
        ("peak_excess", metrics.peak_excess),
        ("relative_excess", metrics.relative_excess),
        ("narrowing_factor", metrics.narrowing_factor),
        ("lowest_mode_fwhm_hz", lowest_hz),
        ("fwhm_over_lowest_mode", rad_to_hz(fwhm) / lowest_hz),
    ]


def _analysis_entries(analysis: LineshapeAnalysis, n_sequences: int, source: str) -> list[tuple[str, Any]]:
    entries = _fit_entries(analysis.fit, analysis.fwhm)
    entries += _metric_entries(analysis.metrics, analysis.lowest_mode_fwhm_hz, analysis.fwhm)
    entries += [
        ("sequence_source", source),
        ("sequences", n_sequences),
        ("return_probability", analysis.return_probability),
    ]
    entries += [(f"class_mass_{k}", mass) for k, mass in sorted(analysis.class_masses.items())]
    validity = analysis.validity
    entries += [
        ("validity_gamma_over_detuning", validity.gamma_over_detuning),
        ("validity_gamma_over_width", validity.gamma_over_width),
        ("validity_gamma_width_over_detuning_sq", validity.gamma_width_over_detuning_sq),
        ("validity_ok", validity.valid),
    ]
    return entries


def _suppression_entries(entries: list[SuppressionEntry]) -> list[tuple[str, Any]]:
    lines: list[tuple[str, Any]] = []
    for i, entry in enumerate(entries):
        prefix = f"entry_{i:03d}"
        lines += [
            (f"{prefix}.gamma_dark", entry.dark_rate),
            (f"{prefix}.gamma_dark_hz", rad_to_hz(entry.dark_rate)),
            (f"{prefix}.peak_excess", entry.peak_excess),
            (f"{prefix}.central_fwhm_hz", rad_to_hz(entry.central_fwhm)),
            (f"{prefix}.suppression_ratio", entry.suppression_ratio),
            (f"{prefix}.wing_change", entry.wing_change),
        ]
    excesses = [entry.peak_excess for entry in entries]
    monotonic = all(later <= earlier for earlier, later in zip(excesses, excesses[1:]))
    lines.append(("peak_excess_non_increasing", monotonic))
    return lines


# --- Unified CLI Group ---
@click.group()
@click.option("--debug", is_flag=True, help="Enable debug logging for troubleshooting.")
@click.option("--verbose", is_flag=True, help="Log progress messages.")
@click.pass_context
def cli(ctx, debug, verbose):
    """Simulate diffusion-induced Ramsey narrowing of EIT lineshapes."""
    package_logger = logging.getLogger("drntool")
    if debug:
        package_logger.setLevel(logging.DEBUG)
        logger.debug("Debug logging enabled")
    elif verbose:
        package_logger.setLevel(logging.INFO)


@cli.command(
    help="Ensemble lineshape, per-return-class components and a fit report. "
    "Example: drntool lineshape --preset fig2a --seed 1"
)
@run_options
@click.option("--gamma-dark", type=RATE, help="Extra dark-only decay rate (rad/s, or e.g. 400hz).")
@click.pass_obj
@show_validity_warnings
@translate_exceptions
def lineshape(obj, config_path, preset, seed, out_dir, grid_points, max_returns, walkers, gamma_dark):
    if gamma_dark is not None:
        validate_non_negative_rates((gamma_dark,))
    overrides = {
        "seed": seed,
        "output_dir": out_dir,
        "grid_points": grid_points,
        "max_returns": max_returns,
        "walkers": walkers,
        "gamma_dark": gamma_dark,
    }
    run = _load_run_config(obj, config_path, preset, overrides)
    pipeline = _pipeline(run)

    shape = pipeline.lineshape()
    classes = pipeline.class_lineshapes()
    analysis = pipeline.analyze(shape)
    entries = _analysis_entries(analysis, len(pipeline.sequences()), run.sequence_source)

    header = _header(run)
    files = {"lineshape.csv": render_lineshape(shape, header + [ENSEMBLE_CONTENT])}
    for k, component in classes.items():
        files[f"lineshape_class{k}.csv"] = render_lineshape(
            component, header + [f"# content = return class {k} contribution"]
        )
    files["fit_report.txt"] = render_report(header, entries)

    paths = write_outputs(run.output_dir, files)
    click.echo(format_summary_table([e for e in entries if not e[0].startswith("validity_")]))
    print_written_files(paths)


@cli.command(help="In-beam and dark-time distributions with Monte Carlo vs eigenmode comparison.")
@run_options
@click.pass_obj
@show_validity_warnings
@translate_exceptions
def distributions(obj, config_path, preset, seed, out_dir, grid_points, max_returns, walkers):
    overrides = {
        "seed": seed,
        "output_dir": out_dir,
        "grid_points": grid_points,
        "max_returns": max_returns,
        "walkers": walkers,
    }
    run = _load_run_config(obj, config_path, preset, overrides)
    summary = _pipeline(run).distributions()
    tau = summary.tau_d

    header = _header(run)
    files = {
        "t_in_eigenmode.csv": render_distribution(summary.t_in_eigenmode, tau, header),
        "t_in_montecarlo.csv": render_distribution(summary.t_in_montecarlo, tau, header),
        "t_out_montecarlo.csv": render_distribution(summary.t_out_montecarlo, tau, header),
    }
    t_out = summary.t_out_montecarlo
    entries = [
        ("tau_d", tau),
        ("mean_exit_eigenmode", summary.mean_exit_eigenmode),
        ("mean_exit_montecarlo", summary.mean_exit_montecarlo),
        ("mean_exit_relative_difference", summary.mean_exit_montecarlo / summary.mean_exit_eigenmode - 1.0),
        ("ks_statistic", summary.ks_statistic),
        ("return_probability", summary.return_probability),
        ("t_in_escape_mass", summary.t_in_eigenmode.escape_mass),
        ("t_out_escape_mass", t_out.escape_mass),
    ]
    if t_out.tracked_mass > 0:
        entries += [("t_out_mean_tau", t_out.mean() / tau), ("t_out_median_tau", t_out.median() / tau)]
    files["distributions_report.txt"] = render_report(header, entries)

    paths = write_outputs(run.output_dir, files)
    click.echo(format_summary_table(entries))
    print_written_files(paths)


@cli.command(help="Lineshapes for several dark-only decay rates and a suppression report.")
@run_options
@click.option(
    "--gamma-dark",
    "gamma_dark_values",
    type=RATE,
    multiple=True,
    help="Dark-only decay rate; repeat for each lineshape (rad/s, or e.g. 400hz).",
)
@click.pass_obj
@show_validity_warnings
@translate_exceptions
def gradient(obj, config_path, preset, seed, out_dir, grid_points, max_returns, walkers, gamma_dark_values):
    validate_non_negative_rates(gamma_dark_values)
    overrides = {
        "seed": seed,
        "output_dir": out_dir,
        "grid_points": grid_points,
        "max_returns": max_returns,
        "walkers": walkers,
        "gamma_dark_values": tuple(gamma_dark_values) or None,
    }
    run = _load_run_config(obj, config_path, preset, overrides)
    rates = list(run.gamma_dark_values)
    if not rates:
        raise click.UsageError("gradient needs at least one --gamma-dark value or a gamma_dark_values setting.")
    shapes, entries = _pipeline(run).gradient(rates)

    header = _header(run)
    files = {}
    single_rate = {**overrides, "gamma_dark_values": None}
    for i, (shape, rate) in enumerate(zip(shapes, rates)):
        # same header as `lineshape --gamma-dark <rate>` on this configuration
        rate_run = _load_run_config(obj, config_path, preset, {**single_rate, "gamma_dark": rate})
        files[f"gradient_{i:03d}.csv"] = render_lineshape(shape, _header(rate_run) + [ENSEMBLE_CONTENT])
    files["suppression_report.txt"] = render_report(header, _suppression_entries(entries))

    paths = write_outputs(run.output_dir, files)
    click.echo(format_suppression_table(entries))
    print_written_files(paths)


@cli.command(help="Fit an existing lineshape CSV. Example: drntool fit out/lineshape.csv --preset fig2b")
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False))
@click.option(
    "--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Flat key = value config file."
)
@click.option("--preset", type=click.Choice(PRESET_NAMES), help="Preset supplying the lowest-mode baseline.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Output directory (default: next to the CSV).")
@click.pass_obj
@show_validity_warnings
@translate_exceptions
def fit(obj, csv_path, config_path, preset, out_dir):
    run = _load_run_config(obj, config_path, preset, {}, require_seed=False)
    shape, metadata = read_lineshape_csv(csv_path)

    result = fit_lorentzian(shape)
    width = fwhm_numeric(shape)
    metrics = peak_metrics(shape, run.geometry, run.params)
    entries = _fit_entries(result, width)
    entries += _metric_entries(metrics, lowest_mode_fwhm(run.geometry, run.params), width)

    header = _header(run, input=csv_path, input_config_hash=metadata.get("config_hash", "none"))
    stem = os.path.splitext(os.path.basename(csv_path))[0]
    directory = out_dir or os.path.dirname(os.path.abspath(csv_path))
    paths = write_outputs(directory, {f"{stem}_fit.txt": render_report(header, entries)})
    click.echo(format_summary_table(entries))
    print_written_files(paths)


@cli.command(help="List bundled presets, or print one with --show.")
@click.option("--show", type=click.Choice(PRESET_NAMES), help="Print the full preset file.")
@translate_exceptions
def presets(show):
    if show:
        click.echo(preset_text(show))
        return
    click.echo(format_presets_table(list_presets()))


if __name__ == "__main__":
    cli()
