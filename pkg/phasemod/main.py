import logging
from pathlib import Path

import click

from phasemod import experiments
from phasemod.cli_io import load_transfer_table, parse_config, load_profile, write_grid
from phasemod.constants import (
    DEFAULT_LOG_LEVEL,
    DEFAULT_OUT_DIR,
    DEFAULT_PROFILE,
    DEFAULT_WORKERS,
    TOOL_VERSION,
)
from phasemod.errors import ConfigError, DomainError, NumericError

# ==========================================
# 🔧 CONFIGURATION
# ==========================================
EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# Profile used when --profile is not given.
COMMAND_PROFILES = {
    "spectrum": "sideband-spectrum",
    "chevron": "sweet-spot-first-order",
    "phase-sweep": "sweet-spot-first-order",
    "amp-coupling": "amplitude-coupling",
    "spectroscopy": "sweet-spot-first-order",
    "transfer": "transfer-calibration",
    "coupler-sweep": "coupler-sweep",
    "param-res": "zeroth-order-sweet",
    "taylor-fourier": "taylor-fourier",
}

logger = logging.getLogger("phasemod")


def _configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


COMMON_OPTIONS = (
    click.option("--config", "config_path", type=click.Path(dir_okay=False, path_type=Path),
                 help="Experiment TOML; fields not given come from the profile."),
    click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
                 default=DEFAULT_OUT_DIR, show_default=True, help="Output directory."),
    click.option("--workers", type=click.IntRange(min=1), default=DEFAULT_WORKERS, show_default=True,
                 help="Worker processes for independent sweep points."),
    click.option("--profile", default=None, help="Bundled base profile (default depends on the subcommand)."),
    click.option("--log-level", default=DEFAULT_LOG_LEVEL, show_default=True,
                 type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False)),
    click.option("--quiet", is_flag=True, help="Hide progress bars and status lines."),
)


def common_options(func):
    """--config/--out/--workers/--profile/--log-level/--quiet shared by every subcommand."""
    for option in reversed(COMMON_OPTIONS):
        func = option(func)
    return func


def _run(name: str, runner, config_path, out_dir, workers, profile, log_level, quiet, **extra) -> None:
    """Load the config, run one experiment, write ``<out>/<name>.csv``; maps errors to exit codes."""
    _configure_logging(log_level)
    profile = profile or COMMAND_PROFILES.get(name, DEFAULT_PROFILE)
    say = (lambda msg: None) if quiet else click.echo
    try:
        cfg = parse_config(config_path, profile) if config_path else load_profile(profile)
        say(f"🚀 {name}: {cfg.name} ({cfg.sweep.points} points, axis {cfg.sweep.axis}, workers {workers})")
        logger.info("running %s (profile %s, config %s)", name, profile, config_path or "profile")
        grid = runner(cfg, workers=workers, progress=not quiet, **extra)
        path = write_grid(grid, Path(out_dir) / f"{name}.csv", cfg)
    except (ConfigError, DomainError) as exc:
        click.echo(f"❌ Error: {exc}", err=True)
        raise SystemExit(EXIT_CONFIG)
    except NumericError as exc:
        logger.debug("numeric failure in %s", name, exc_info=True)
        click.echo(f"❌ Numeric error: {exc}", err=True)
        raise SystemExit(EXIT_NUMERIC)
    except OSError as exc:
        click.echo(f"❌ {exc}", err=True)
        raise SystemExit(1)

    flagged = [row for row in grid.summary if row.flag and row.flag not in ("analytic", "reference")]
    if flagged:
        say(f"⚠️  {len(flagged)} sweep point(s) flagged: {', '.join(sorted({r.flag for r in flagged}))}")
    say(f"✅ Saved {path}")


@click.group()
@click.version_option(TOOL_VERSION, prog_name="phasemod")
def cli():
    """Phase-modulated parametric coupling of flux-tunable transmons: virtual experiments."""


@cli.command()
@common_options
def spectrum(**opts):
    """Sideband spectra of both qubits versus modulation amplitude."""
    _run("spectrum", experiments.run_sideband_spectrum, **opts)


@cli.command()
@click.option("--axis", type=click.Choice(["dphi", "omega_p", "phi_tilde"]), default=None,
              help="Swept parameter (default: sweep.axis).")
@common_options
def chevron(axis, **opts):
    """Population of |10> versus time and one drive parameter."""
    _run("chevron", experiments.run_chevron, axis=axis, **opts)


@cli.command("phase-sweep")
@common_options
def phase_sweep(**opts):
    """Coupling strength versus relative drive phase."""
    _run("phase-sweep", experiments.run_phase_sweep, **opts)


@cli.command("amp-coupling")
@common_options
def amp_coupling(**opts):
    """Single-drive coupling and resonance drift versus amplitude."""
    _run("amp-coupling", experiments.run_amplitude_coupling, **opts)


@cli.command()
@click.option("--probe-axis", type=click.Choice(["dphi", "phi_tilde"]), default=None)
@common_options
def spectroscopy(probe_axis, **opts):
    """Dressed sideband spectrum and avoided-crossing gap."""
    _run("spectroscopy", experiments.run_spectroscopy, probe_axis=probe_axis, **opts)


@cli.command()
@click.option("--transfer", "transfer_path", required=True,
              type=click.Path(dir_okay=False, path_type=Path), help="Two-column CSV: omega_p (GHz), factor.")
@common_options
def transfer(transfer_path, **opts):
    """Effective amplitude calibration through a measured transfer function."""
    try:
        table = load_transfer_table(transfer_path)
    except ConfigError as exc:
        click.echo(f"❌ Error: {exc}", err=True)
        raise SystemExit(EXIT_CONFIG)
    _run("transfer", experiments.run_transfer_calibration, transfer_table=table, **opts)


@cli.command("coupler-sweep")
@common_options
def coupler_sweep(**opts):
    """Coupler-mediated static coupling versus coupler flux."""
    _run("coupler-sweep", experiments.run_coupler_sweep, **opts)


@cli.command("param-res")
@common_options
def param_res(**opts):
    """Zeroth-order parametric resonance phase sweep."""
    _run("param-res", experiments.run_parametric_resonance, **opts)


@cli.command("taylor-fourier")
@common_options
def taylor_fourier(**opts):
    """Truncation error of Taylor versus Fourier expansions."""

    def runner(cfg, workers, progress):
        return experiments.run_taylor_fourier(cfg, progress=progress)

    _run("taylor-fourier", runner, **opts)


if __name__ == "__main__":
    cli()
