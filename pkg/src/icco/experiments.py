"""Desk-scale ordering experiments: train each variant over several seeds,
evaluate under the quadrant protocol, and summarize for the acceptance suite."""

from __future__ import annotations

import json
import shutil
import time
from pathlib import Path

from .checkpoint import load_checkpoint
from .config import VARIANTS, TrainConfig
from .evaluation import run_quadrant_eval, sign_test_p_value, untrained_models
from .trainer import train_run


def metrics_dict(metrics) -> dict:
    return {
        "mean_reward": metrics.mean_reward,
        "mean_picks": metrics.mean_picks,
        "mean_collects": metrics.mean_collects,
        "mean_defenses": metrics.mean_defenses,
        "mean_e_cossim": metrics.mean_e_cossim,
        "mean_nearest_dist": metrics.mean_nearest_dist,
        "rewards": [t.reward for t in metrics.trials],
        "defenses": [t.defenses for t in metrics.trials],
    }


def run_single(
    variant: str,
    seed: int,
    episodes: int,
    trials: int,
    out: Path,
    updates_per_episode: int = 1,
    keep_checkpoint: bool = True,
    quiet: bool = True,
) -> dict:
    t0 = time.time()
    cfg = TrainConfig(
        variant=variant,
        seed=seed,
        episodes=episodes,
        checkpoint_interval=0,
        updates_per_episode=updates_per_episode,
    )
    run_dir = out / "runs" / f"{variant}_s{seed}"
    if run_dir.exists():
        shutil.rmtree(run_dir)
    train_run(cfg, run_dir, quiet=quiet)
    ckpt_path = run_dir / "checkpoints" / "ckpt_final.pt"

    models = load_checkpoint(ckpt_path).models
    trained = run_quadrant_eval(models, trials=trials)
    untrained = run_quadrant_eval(untrained_models(cfg), trials=trials, label="untrained")

    entry = {
        "variant": variant,
        "seed": seed,
        "episodes": episodes,
        "minutes": round((time.time() - t0) / 60, 2),
        "quadrant": metrics_dict(trained),
        "untrained": metrics_dict(untrained),
    }
    if keep_checkpoint:
        keep = out / "checkpoints" / f"{variant}_s{seed}.pt"
        keep.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(ckpt_path, keep)
        entry["checkpoint"] = str(keep)
    return entry


def run_ordering_experiment(
    out: str | Path,
    episodes: int = 2000,
    seeds: list[int] | None = None,
    variants: list[str] | None = None,
    trials: int = 20,
    updates_per_episode: int = 1,
    tag: str = "desk_ordering",
    progress=None,
) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    seeds = seeds or [101, 102, 103, 104, 105]
    variants = variants or list(VARIANTS)
    results = []
    partial = out / f"{tag}_partial.json"
    for seed in seeds:
        for variant in variants:
            entry = run_single(
                variant, seed, episodes, trials, out, updates_per_episode=updates_per_episode
            )
            results.append(entry)
            partial.write_text(json.dumps({"runs": results}, indent=2))
            if progress is not None:
                progress(entry)
    summary = {
        "created_at": time.strftime("%Y-%m-%dT%H:%M:%S", time.gmtime()),
        "episodes": episodes,
        "updates_per_episode": updates_per_episode,
        "trials": trials,
        "seeds": seeds,
        "variants": variants,
        "runs": results,
    }
    (out / f"{tag}.json").write_text(json.dumps(summary, indent=2))
    return summary


def ordering_report(summary: dict) -> dict:
    """Paired seed comparisons and sign tests between the trained variants."""
    by_variant: dict[str, dict[int, dict]] = {}
    for run in summary["runs"]:
        by_variant.setdefault(run["variant"], {})[run["seed"]] = run

    def paired_wins(a: str, b: str) -> tuple[int, int]:
        seeds = sorted(set(by_variant.get(a, {})) & set(by_variant.get(b, {})))
        wins = sum(
            by_variant[a][s]["quadrant"]["mean_reward"] > by_variant[b][s]["quadrant"]["mean_reward"]
            for s in seeds
        )
        return wins, len(seeds)

    def variant_mean(v: str, key: str) -> float:
        runs = by_variant.get(v, {})
        return sum(r["quadrant"][key] for r in runs.values()) / max(len(runs), 1)

    report = {"means": {v: variant_mean(v, "mean_reward") for v in by_variant}}
    for baseline in ("QMIX", "ICCO_NO_CE"):
        wins, n = paired_wins("ICCO", baseline)
        report[f"ICCO_vs_{baseline}"] = {
            "wins": wins,
            "n": n,
            "p_value": sign_test_p_value(wins, n) if n else 1.0,
        }
    report["defense_means"] = {v: variant_mean(v, "mean_defenses") for v in by_variant}
    icco_runs = by_variant.get("ICCO", {})
    if icco_runs:
        report["icco_e_cossim"] = sum(r["quadrant"]["mean_e_cossim"] for r in icco_runs.values()) / len(icco_runs)
        report["icco_nearest_dist"] = sum(
            r["quadrant"]["mean_nearest_dist"] for r in icco_runs.values()
        ) / len(icco_runs)
        report["untrained_nearest_dist"] = sum(
            r["untrained"]["mean_nearest_dist"] for r in icco_runs.values()
        ) / len(icco_runs)
    return report
