#!/usr/bin/env python3
"""Benchmark the compiled rollout core against the pure-Python fallback.

Usage:
    python benchmarks/bench_rollout.py [--repeats 200] [--substeps 10]

Times single rollouts of a random policy on a sampled environment (the
per-rollout path also covers noise generation and argument packing) and a
batched cost-matrix-style workload with thread workers.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gaitcert.environments import EnvDistributionParams, sample_environment
from gaitcert.gaits import make_library
from gaitcert.policy import param_count
from gaitcert.simulate import SimConfig, available_backends, rollout, rollout_batch


def time_single(backend: str, weights, env, library, cfg, repeats: int) -> float:
    rollout(weights, env, library, cfg, backend=backend)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        rollout(weights, env, library, cfg, backend=backend)
    return (time.perf_counter() - start) / repeats


def time_batch(backend: str, jobs, library, cfg, workers: int) -> float:
    start = time.perf_counter()
    rollout_batch(jobs, library, cfg, workers=workers, backend=backend)
    return time.perf_counter() - start


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    parser.add_argument("--substeps", type=int, default=10)
    parser.add_argument("--batch", type=int, default=200)
    parser.add_argument("--workers", type=int, default=4)
    args = parser.parse_args()

    library = make_library()
    cfg = SimConfig(substeps_per_stride=args.substeps)
    params = EnvDistributionParams(master_seed=12345)
    env = sample_environment(params, 0)
    rng = np.random.default_rng(0)
    weights = rng.normal(size=param_count())

    backends = available_backends()
    print(f"available backends: {', '.join(backends)}")
    res = rollout(weights, env, library, cfg)
    print(f"scenario: {res.stride_count} strides x {args.substeps} substeps, "
          f"tube cost {res.tube_cost:.3f}")

    singles = {}
    for backend in backends:
        dt = time_single(backend, weights, env, library, cfg, args.repeats)
        singles[backend] = dt
        print(f"  single rollout [{backend:8s}]: {1e3 * dt:8.3f} ms "
              f"({1.0 / dt:8.1f} rollouts/s)")
    if "compiled" in singles and "pure" in singles:
        print(f"  single-rollout speedup: {singles['pure'] / singles['compiled']:.1f}x")

    envs = [sample_environment(params, i) for i in range(args.batch)]
    jobs = [(weights, e) for e in envs]
    for backend in backends:
        dt = time_batch(backend, jobs, library, cfg, args.workers)
        print(f"  batch of {args.batch} [{backend:8s}, {args.workers} workers]: "
              f"{dt:6.2f} s ({args.batch / dt:8.1f} rollouts/s)")

    if "compiled" in backends:
        a = rollout(weights, env, library, cfg, backend="compiled")
        b = rollout(weights, env, library, cfg, backend="pure")
        agree = a.prior_cost == b.prior_cost and a.tube_cost == b.tube_cost
        print(f"  backends bit-identical on this scenario: {agree}")


if __name__ == "__main__":
    main()
