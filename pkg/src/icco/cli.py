"""Operator commands: train, evaluate, and serve a live session."""

from __future__ import annotations

import sys
import time
from pathlib import Path

import click

from .checkpoint import load_checkpoint
from .config import TrainConfig, load_train_config
from .evaluation import (
    DEFAULT_EVAL_SEEDS,
    export_report,
    run_language_eval,
    run_quadrant_eval,
)
from .llm import TransportError, make_translator
from .trainer import TrainingDiverged, train_run


@click.group()
def main():
    """Instruction-conditioned multi-agent coordination toolkit."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True), required=True, help="run config YAML")
@click.option("--out", "out_dir", type=click.Path(), default=None, help="run directory (default runs/<variant>_s<seed>)")
@click.option("--seed", type=int, default=None, help="override the config seed")
@click.option("--episodes", type=int, default=None, help="override the episode count")
@click.option("--backend", type=click.Choice(["auto", "cython", "python"]), default="auto")
@click.option("--quiet", is_flag=True)
def train(config_path, out_dir, seed, episodes, backend, quiet):
    """Train one variant per the config and write manifest/checkpoints/metrics."""
    cfg = load_train_config(config_path)
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if episodes is not None:
        overrides["episodes"] = episodes
    if overrides:
        data = cfg.to_dict()
        data.update(overrides)
        cfg = TrainConfig.from_dict(data)
    out = Path(out_dir) if out_dir else Path("runs") / f"{cfg.variant}_s{cfg.seed}_{int(time.time())}"
    try:
        manifest = train_run(cfg, out, env_backend=backend, quiet=quiet)
    except TrainingDiverged as exc:
        raise click.ClickException(f"training diverged: {exc}")
    click.echo(f"run {manifest.run_id} complete: {out}")


@main.command("eval")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--protocol", type=click.Choice(["quadrant", "language"]), required=True)
@click.option("--mock", is_flag=True, help="use the deterministic rule-based translator")
@click.option("--translator", "translator_kind", type=click.Choice(["mock", "live", "replay"]), default=None)
@click.option("--replay-dir", type=click.Path(), default=None)
@click.option("--trials", type=int, default=20)
@click.option("--out", "out_dir", type=click.Path(), default=None)
@click.option("--logs", is_flag=True, help="write per-trial trajectory logs")
@click.option("--backend", type=click.Choice(["auto", "cython", "python"]), default="auto")
def eval_cmd(checkpoint_path, protocol, mock, translator_kind, replay_dir, trials, out_dir, logs, backend):
    """Evaluate a checkpoint under the quadrant or language protocol."""
    ckpt = load_checkpoint(checkpoint_path)
    out = Path(out_dir) if out_dir else Path(checkpoint_path).parent / f"eval_{protocol}"
    out.mkdir(parents=True, exist_ok=True)
    seeds = DEFAULT_EVAL_SEEDS
    if trials > len(seeds):
        seeds = [seeds[0] + 7 * i for i in range(trials)]
    log_dir = out / "logs" if logs else None

    if protocol == "quadrant":
        metrics = run_quadrant_eval(
            ckpt.models, seeds=seeds, trials=trials, log_dir=log_dir, backend=backend
        )
        table, csv_text = export_report([metrics])
    else:
        kind = translator_kind or ("mock" if mock else "live")
        if mock:
            kind = "mock"
        try:
            translator = make_translator(kind, n_waypoints=ckpt.cfg.n_waypoints, replay_dir=replay_dir)
        except (TransportError, ValueError) as exc:
            raise click.ClickException(
                f"translator {kind!r} unavailable ({exc}); pass --mock for the offline translator"
            )
        results, errors = run_language_eval(
            ckpt.models, translator, seeds=seeds, trials=trials, log_dir=log_dir, backend=backend
        )
        for text, err in errors.items():
            click.echo(f"instruction {text!r} failed: {err}", err=True)
        if not results:
            raise click.ClickException("every instruction failed to translate")
        table, csv_text = export_report(list(results.values()))

    (out / "report.txt").write_text(table)
    (out / "metrics.csv").write_text(csv_text)
    click.echo(table)
    click.echo(f"reports in {out}")


@main.command()
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True), required=True)
@click.option("--bind", default="127.0.0.1:8700", show_default=True)
@click.option("--translator", "translator_kind", type=click.Choice(["mock", "live", "replay"]), default="mock", show_default=True)
@click.option("--replay-dir", type=click.Path(), default=None)
@click.option("--tick-hz", type=float, default=10.0, show_default=True)
@click.option("--static", "static_dir", type=click.Path(), default=None, help="console UI build to serve at /")
@click.option("--backend", type=click.Choice(["auto", "cython", "python"]), default="auto")
def serve(checkpoint_path, bind, translator_kind, replay_dir, tick_hz, static_dir, backend):
    """Stream a live session and accept instructions on a websocket."""
    from .serve import serve as run_server

    default_static = Path(__file__).resolve().parent.parent.parent / "frontend" / "dist"
    if static_dir is None and default_static.exists():
        static_dir = default_static
    click.echo(f"serving ws://{bind}/ws (translator={translator_kind})", err=True)
    run_server(
        checkpoint_path,
        bind=bind,
        translator_kind=translator_kind,
        replay_dir=replay_dir,
        tick_hz=tick_hz,
        static_dir=static_dir,
        env_backend=backend,
    )


if __name__ == "__main__":
    sys.exit(main())
