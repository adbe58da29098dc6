"""Benchmark the compiled simulation kernel against the pure-Python fallback.

    python3 benchmarks/bench_env.py [--steps 20000]

Both backends run the same seeded action/instruction sequence; the parity
check at the end asserts their trajectories are bit-identical.
"""

import argparse
import time

import numpy as np

from icco.config import ScenarioConfig
from icco.env import ResourceWorld, available_backends


def run(backend: str, steps: int, seed: int = 7) -> tuple[float, np.ndarray]:
    sc = ScenarioConfig(episode_steps=steps)
    world = ResourceWorld(sc, backend=backend)
    rng = np.random.default_rng(seed)
    world.reset(seed)
    actions = rng.integers(0, 5, size=(steps, world.n_agents))
    waypoints = rng.uniform(-world.half_extent, world.half_extent, size=(world.n_agents, 4, 2))
    checksum = np.zeros(2)
    t0 = time.perf_counter()
    for t in range(steps):
        bd, obs = world.step(actions[t], waypoints)
        checksum[0] += bd.r_inst
        checksum[1] += obs[0, 0]
    elapsed = time.perf_counter() - t0
    return elapsed, checksum


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=20_000)
    args = parser.parse_args()

    backends = available_backends()
    results = {}
    for backend in backends:
        elapsed, checksum = run(backend, args.steps)
        results[backend] = (elapsed, checksum)
        print(f"{backend:8s} {args.steps / elapsed:10.0f} steps/s   ({elapsed * 1e6 / args.steps:7.1f} us/step)")

    if len(results) == 2:
        speedup = results["python"][0] / results["cython"][0]
        print(f"cython speedup: {speedup:.1f}x")
        if not np.array_equal(results["python"][1], results["cython"][1]):
            raise SystemExit("PARITY FAILURE: backends diverged")
        print("parity: bit-identical checksums")
    else:
        print("compiled kernel not built; only the python fallback was timed")


if __name__ == "__main__":
    main()
