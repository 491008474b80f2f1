"""Compare the compiled physics kernel against the pure-Python fallback.

Runs the same seeded waypoint-tracking workload through both backends,
checks they agree bit for bit, and reports throughput. Invoke from the
repository root:

    python3 benchmarks/bench_kernels.py --steps 20000
"""

import argparse
import time

import numpy as np

from tetherperch.kernels import N_OUT, get_backend
from tetherperch.world import World


def run_backend(name: str, steps: int, seed: int):
    step_world, _ = get_backend(name)
    world = World()
    state = world.initial_state(np.array([2.0, 0.0, 2.5]))
    params = world.packed_params()
    inv_mass = world.tether.inverse_masses()
    out = np.zeros(N_OUT)
    rng = np.random.default_rng(seed)
    waypoint = state.quad_position.copy()
    start = time.perf_counter()
    for i in range(steps):
        if i % 400 == 0:
            waypoint = world.branch.center + rng.uniform(-2.0, 2.0, 3)
        step_world(
            state.quad_position,
            state.quad_velocity,
            state.link_positions,
            state.link_velocities,
            inv_mass,
            waypoint,
            params,
            out,
        )
    elapsed = time.perf_counter() - start
    return elapsed, state


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20_000, help="substeps per backend")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    results = {}
    for name in ("compiled", "python"):
        try:
            elapsed, state = run_backend(name, args.steps, args.seed)
        except ValueError as exc:
            print(f"{name:>9}: unavailable ({exc})")
            continue
        results[name] = (elapsed, state)
        print(
            f"{name:>9}: {args.steps / elapsed:12,.0f} substeps/s"
            f"   ({elapsed:.3f} s for {args.steps:,} substeps)"
        )

    if len(results) == 2:
        (fast, fast_state), (slow, slow_state) = results["compiled"], results["python"]
        same = np.array_equal(fast_state.quad_position, slow_state.quad_position) and np.array_equal(
            fast_state.link_positions, slow_state.link_positions
        )
        print(f"{'parity':>9}: final states {'identical' if same else 'DIFFER'}")
        print(f"{'speedup':>9}: {slow / fast:.1f}x compiled over pure Python")
        if not same:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
