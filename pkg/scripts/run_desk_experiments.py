"""Desk-scale ordering experiments: train every variant over several seeds,
evaluate each checkpoint under the quadrant protocol, and write the summary
artifact consumed by the acceptance suite.

    python3 scripts/run_desk_experiments.py --out artifacts --episodes 2000 \
        --seeds 101 102 103 104 105 --trials 20

Runs are independent; shard with --variants/--seeds across processes if you
have more than one core to spare.
"""

import argparse
import json
from pathlib import Path

from icco.config import VARIANTS
from icco.experiments import ordering_report, run_ordering_experiment


def progress(entry: dict) -> None:
    q = entry["quadrant"]
    print(
        f"[{entry['variant']} s{entry['seed']}] reward={q['mean_reward']:.1f} "
        f"defenses={q['mean_defenses']:.1f} picks={q['mean_picks']:.1f} "
        f"e_cos={q['mean_e_cossim']:+.3f} dist={q['mean_nearest_dist']:.2f} "
        f"(untrained dist={entry['untrained']['mean_nearest_dist']:.2f}) {entry['minutes']}min",
        flush=True,
    )


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("artifacts"))
    ap.add_argument("--episodes", type=int, default=2000)
    ap.add_argument("--updates", type=int, default=1, help="optimizer updates per collected episode")
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seeds", type=int, nargs="+", default=[101, 102, 103, 104, 105])
    ap.add_argument("--variants", nargs="+", default=list(VARIANTS))
    ap.add_argument("--tag", default="desk_ordering")
    args = ap.parse_args()

    summary = run_ordering_experiment(
        args.out,
        episodes=args.episodes,
        seeds=args.seeds,
        variants=args.variants,
        trials=args.trials,
        updates_per_episode=args.updates,
        tag=args.tag,
        progress=progress,
    )
    print(json.dumps(ordering_report(summary), indent=2))
    print(f"wrote {args.out / (args.tag + '.json')}")


if __name__ == "__main__":
    main()
