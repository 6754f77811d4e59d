"""Command-line interface: one subcommand per pipeline stage.

Every command takes `--config <file>` (YAML or JSON); COHO_SEED in the
environment overrides the configured seed.  Failures exit nonzero with a
message naming the failing stage.
"""

from __future__ import annotations

import json
import logging
import sys

import click

from . import pipeline
from .config import load_config
from .errors import CohoError


def _run(stage_name: str, fn, *args):
    try:
        result = fn(*args)
    except CohoError as exc:
        click.echo(f"error in stage {stage_name}: {exc}", err=True)
        sys.exit(1)
    except FileNotFoundError as exc:
        click.echo(f"error in stage {stage_name}: missing input {exc}", err=True)
        sys.exit(1)
    click.echo(json.dumps(result, sort_keys=True))


config_option = click.option(
    "--config", "config_path", type=click.Path(exists=True), default=None,
    help="pipeline configuration file (YAML or JSON)")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="enable info logging")
def main(verbose):
    """Urban layout generation pipeline."""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s")


def _stage_command(name, fn):
    @main.command(name)
    @config_option
    def cmd(config_path):
        _run(name, fn, load_config(config_path))
    cmd.__doc__ = fn.__doc__
    return cmd


_stage_command("make-toy", pipeline.stage_make_toy)
_stage_command("ingest", pipeline.stage_ingest)
_stage_command("train-bvae", pipeline.stage_train_bvae)
_stage_command("fit-codebook", pipeline.stage_fit_codebook)
_stage_command("train-gmae", pipeline.stage_train_gmae)
_stage_command("generate", pipeline.stage_generate)
_stage_command("eval", pipeline.stage_eval)


@main.command("render")
@config_option
@click.option("--which", type=click.Choice(["generated", "real"]),
              default="generated")
def render_cmd(config_path, which):
    """Render a stored graph to SVG."""
    _run("render", pipeline.stage_render, load_config(config_path), which)


@main.command("serve")
@config_option
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8765, type=int)
def serve_cmd(config_path, host, port):
    """Start the HTTP API."""
    import uvicorn

    from .service import create_app
    uvicorn.run(create_app(load_config(config_path)), host=host, port=port)


if __name__ == "__main__":
    main()
