"""Command-line experiment driver.

Subcommands cover the full pipeline:

    gen-envs      sample an environment dataset for one split
    train-prior   stage 1: fit the weight distribution by ES
    certify       stage 2: discretize, build the cost matrix, optimize the bound
    evaluate      deploy the posterior on held-out environments, write the report
    export-trace  dump one rollout's substep records for plotting
    report        pretty-print a report or training trace

Exit codes: 0 success, 2 configuration error, 3 split-hygiene violation,
4 bound solver did not converge.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .bounds import (
    BoundResult,
    compute_cost_matrix,
    discretize_policy_space,
    estimate_true_cost,
    optimize_posterior,
)
from .config import RunConfig, load_config, preset
from .datasets import Dataset, SplitRange, check_disjoint, read_dataset, split_range, write_dataset
from .environments import sample_environment
from .errors import ConfigError, GaitcertError, SplitOverlapError
from .es import train_prior
from .policy import (
    PolicyArch,
    load_distribution,
    load_policy_set,
    save_distribution,
    save_policy_set,
)
from .rng import LANE_EVAL_DRAW, LANE_POLICY_SET, make_stream
from .simulate import backend_name, rollout

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SPLIT = 3
EXIT_SOLVER = 4


def _resolve_config(args) -> RunConfig:
    if args.config and args.preset:
        raise ConfigError("pass either --config or --preset, not both")
    if args.config:
        cfg = load_config(args.config)
    elif args.preset:
        cfg = preset(args.preset)
    else:
        raise ConfigError("one of --config or --preset is required")
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.out is not None:
        overrides["output_dir"] = args.out
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _range_from(meta: dict) -> SplitRange:
    return SplitRange(split=meta["split"], start=meta["start"], count=meta["count"])


def _check_hash(found: str, cfg: RunConfig, what: str) -> None:
    if found != cfg.hash():
        raise ConfigError(
            f"{what} carries config hash {found}, current config is {cfg.hash()}"
        )


# -- subcommands ---------------------------------------------------------------


def cmd_gen_envs(cfg: RunConfig, count: int, split: str, mode: str = "compact") -> Path:
    rng = split_range(split, count)
    path = _outdir(cfg) / f"envs-{split}.jsonl"
    write_dataset(path, cfg.env_params(), rng, cfg.hash(), mode=mode)
    print(f"wrote {count} environments ({split}, {mode}) -> {path}")
    return path


def cmd_train_prior(cfg: RunConfig, dataset_path) -> tuple[Path, Path]:
    dataset = read_dataset(dataset_path, expected_hash=cfg.hash())
    es_cfg = cfg.es.build(cfg.master_seed)
    if dataset.rng.count != es_cfg.env_count:
        raise ConfigError(
            f"dataset holds {dataset.rng.count} environments, "
            f"es.env_count is {es_cfg.env_count}"
        )
    library = cfg.library.build()
    started = time.perf_counter()
    dist, trace = train_prior(es_cfg, dataset.envs, library, cfg.sim.build(),
                              workers=cfg.workers)
    elapsed = time.perf_counter() - started

    out = _outdir(cfg)
    ckpt = out / "prior.ckpt"
    save_distribution(ckpt, dist, PolicyArch(output_dim=len(library)), extra={
        "config_hash": cfg.hash(),
        "trained_on": {"split": dataset.rng.split, "start": dataset.rng.start,
                       "count": dataset.rng.count},
        "elapsed_seconds": elapsed,
    })
    trace_path = out / "prior-trace.jsonl"
    with open(trace_path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"kind": "gaitcert-es-trace", "config_hash": cfg.hash()},
                            sort_keys=True) + "\n")
        for rec in trace.records:
            fh.write(json.dumps(dataclasses.asdict(rec), sort_keys=True) + "\n")
    epoch_costs = trace.epoch_mean_costs()
    if epoch_costs:
        print(f"epoch mean cost: first {epoch_costs[0]:.4f}, last {epoch_costs[-1]:.4f}")
    print(f"trained prior in {elapsed:.1f}s -> {ckpt}")
    return ckpt, trace_path


def _write_cost_matrix_csv(path, matrix, config_hash: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config={config_hash}\n")
        fh.write("env_id," + ",".join(f"policy_{j}" for j in matrix.policy_ids) + "\n")
        for env_id, row in zip(matrix.env_ids, matrix.entries):
            fh.write(str(env_id) + "," + ",".join(repr(float(v)) for v in row) + "\n")


def cmd_certify(cfg: RunConfig, prior_path, envs_path) -> tuple[Path, BoundResult]:
    dist, prior_meta = load_distribution(prior_path)
    _check_hash(prior_meta.get("config_hash", ""), cfg, str(prior_path))
    prior_range = _range_from(prior_meta["trained_on"])

    dataset = read_dataset(envs_path, expected_hash=cfg.hash())
    check_disjoint(prior_range, dataset.rng)
    if dataset.rng.count != cfg.pac.env_count:
        raise ConfigError(
            f"dataset holds {dataset.rng.count} environments, "
            f"pac.env_count is {cfg.pac.env_count}"
        )

    library = cfg.library.build()
    started = time.perf_counter()
    stream = make_stream(cfg.master_seed, LANE_POLICY_SET)
    policy_set = discretize_policy_space(dist, cfg.pac.policy_count, stream)
    matrix = compute_cost_matrix(policy_set, dataset.envs, library, cfg.sim.build(),
                                 workers=cfg.workers)
    result = optimize_posterior(matrix, cfg.pac.delta)
    elapsed = time.perf_counter() - started

    out = _outdir(cfg)
    _write_cost_matrix_csv(out / "cost-matrix.csv", matrix, cfg.hash())
    save_policy_set(out / "policies.ckpt",
                    policy_set.with_probs(result.posterior),
                    PolicyArch(output_dim=len(library)),
                    extra={"config_hash": cfg.hash()})
    posterior_path = out / "posterior.json"
    payload = {
        "kind": "gaitcert-posterior",
        "config_hash": cfg.hash(),
        "bound": result.bound,
        "empirical_cost": result.empirical_cost,
        "kl": result.kl,
        "regularizer": result.regularizer,
        "n_envs": result.n_envs,
        "delta": result.delta,
        "posterior": result.posterior.tolist(),
        "converged": result.converged,
        "iterations": result.iterations,
        "gap": result.gap,
        "prior_range": dataclasses.asdict(prior_range),
        "pac_range": dataclasses.asdict(dataset.rng),
        "elapsed_seconds": elapsed,
    }
    with open(posterior_path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    success = (1.0 - min(1.0, result.bound)) * 100.0
    print(f"certified bound {result.bound:.4f} (success >= {success:.2f}% "
          f"with confidence {1 - result.delta:.2%}) -> {posterior_path}")
    if not result.converged:
        print(f"warning: solver stopped at gap {result.gap:.2e} "
              f"after {result.iterations} iterations", file=sys.stderr)
    return posterior_path, result


def _report_content(cfg: RunConfig, posterior: dict, estimate, dataset: Dataset,
                    per_policy) -> dict:
    bound = posterior["bound"]
    return {
        "kind": "gaitcert-report",
        "config_hash": cfg.hash(),
        "pac_bound": bound,
        "pac_success_pct": (1.0 - min(1.0, bound)) * 100.0,
        "empirical_cost": posterior["empirical_cost"],
        "kl": posterior["kl"],
        "regularizer": posterior["regularizer"],
        "delta": posterior["delta"],
        "n_train_envs": posterior["n_envs"],
        "n_holdout_envs": len(estimate.per_env_costs),
        "true_cost_estimate": estimate.estimate,
        "true_success_pct": (1.0 - estimate.estimate) * 100.0,
        "bound_minus_true": bound - estimate.estimate,
        "posterior": posterior["posterior"],
        "solver_converged": posterior["converged"],
        "per_policy_holdout_mean": [None if np.isnan(v) else v for v in per_policy[0]],
        "per_policy_holdout_count": [int(c) for c in per_policy[1]],
        "per_env_costs": estimate.per_env_costs.tolist(),
        "dataset_ranges": {
            "prior": posterior["prior_range"],
            "pac": posterior["pac_range"],
            "holdout": dataclasses.asdict(dataset.rng),
        },
    }


def cmd_evaluate(cfg: RunConfig, posterior_path, envs_path) -> tuple[Path, dict]:
    with open(posterior_path, "r", encoding="utf-8") as fh:
        posterior = json.load(fh)
    if posterior.get("kind") != "gaitcert-posterior":
        raise ConfigError(f"{posterior_path} is not a posterior record")
    _check_hash(posterior.get("config_hash", ""), cfg, str(posterior_path))

    policies_path = Path(posterior_path).parent / "policies.ckpt"
    policy_set, set_meta = load_policy_set(policies_path)
    _check_hash(set_meta.get("config_hash", ""), cfg, str(policies_path))
    if not np.allclose(policy_set.probs, posterior["posterior"], atol=1e-12):
        raise ConfigError("policy set probabilities disagree with the posterior record")

    dataset = read_dataset(envs_path, expected_hash=cfg.hash())
    check_disjoint(_range_from(posterior["prior_range"]),
                   _range_from(posterior["pac_range"]), dataset.rng)
    if dataset.rng.count != cfg.pac.holdout_count:
        raise ConfigError(
            f"dataset holds {dataset.rng.count} environments, "
            f"pac.holdout_count is {cfg.pac.holdout_count}"
        )

    library = cfg.library.build()
    started = time.perf_counter()
    stream = make_stream(cfg.master_seed, LANE_EVAL_DRAW)
    estimate = estimate_true_cost(policy_set, dataset.envs, library, cfg.sim.build(),
                                  stream, workers=cfg.workers)
    elapsed = time.perf_counter() - started

    content = _report_content(cfg, posterior, estimate, dataset,
                              (estimate.per_policy_mean, estimate.per_policy_count))
    canonical = json.dumps(content, sort_keys=True, separators=(",", ":"))
    report = dict(content)
    report["content_digest"] = hashlib.sha256(canonical.encode()).hexdigest()
    report["timings"] = {
        "train_prior_seconds": None,
        "certify_seconds": posterior.get("elapsed_seconds"),
        "evaluate_seconds": elapsed,
        "backend": backend_name(),
    }
    prior_ckpt = Path(posterior_path).parent / "prior.ckpt"
    if prior_ckpt.exists():
        _, prior_meta = load_distribution(prior_ckpt)
        report["timings"]["train_prior_seconds"] = prior_meta.get("elapsed_seconds")

    report_path = _outdir(cfg) / "report.json"
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"bound success >= {report['pac_success_pct']:.2f}%, "
          f"held-out success {report['true_success_pct']:.2f}% -> {report_path}")
    return report_path, report


def cmd_export_trace(cfg: RunConfig, policies_path, env_index: int,
                     policy_index: int | None = None) -> Path:
    policy_set, set_meta = load_policy_set(policies_path)
    _check_hash(set_meta.get("config_hash", ""), cfg, str(policies_path))
    if policy_index is None:
        policy_index = int(np.argmax(policy_set.probs))
    env = sample_environment(cfg.env_params(), env_index)
    library = cfg.library.build()
    result = rollout(policy_set.weights[policy_index], env, library, cfg.sim.build(),
                     want_trace=True)
    trace = result.trace
    path = _outdir(cfg) / f"trace-env{env_index}.csv"
    substeps = trace.substeps_per_stride
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# config={cfg.hash()} policy={policy_index} env={env_index}\n")
        fh.write("t,robot_x,robot_y,robot_heading,leader_x,leader_y,"
                 "force_x,force_y,force_meas_x,force_meas_y,gait_index\n")
        for g in range(result.stride_count * substeps):  # left substep nodes
            k = g // substeps
            fh.write(",".join(repr(float(v)) for v in (
                trace.t[g], trace.robot_pos[g, 0], trace.robot_pos[g, 1],
                trace.robot_heading[g], trace.leader_pos[g, 0], trace.leader_pos[g, 1],
                trace.force[g, 0], trace.force[g, 1],
                trace.force_noisy[g, 0], trace.force_noisy[g, 1],
            )) + f",{trace.selected[k]}\n")
    print(f"wrote {result.stride_count * substeps} substep records -> {path}")
    return path


def cmd_report(path) -> None:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        record = json.loads(text)
    except json.JSONDecodeError:
        lines = text.splitlines()
        record = json.loads(lines[0]) if lines else {}
        if record.get("kind") == "gaitcert-es-trace":
            costs = [json.loads(line)["mean_cost"] for line in lines[1:]]
            print(f"training trace: {len(costs)} iterations")
            if costs:
                print(f"  first iteration cost {costs[0]:.4f}, last {costs[-1]:.4f}")
            return
        raise ConfigError(f"{path} is not a report or training trace")
    if record.get("kind") != "gaitcert-report":
        raise ConfigError(f"{path} is not a report or training trace")
    print(f"config           {record['config_hash']}")
    print(f"train envs       {record['n_train_envs']}")
    print(f"holdout envs     {record['n_holdout_envs']}")
    print(f"certified bound  {record['pac_bound']:.4f}")
    print(f"bound success    {record['pac_success_pct']:.2f}% "
          f"(confidence {100 * (1 - record['delta']):.0f}%)")
    print(f"true success     {record['true_success_pct']:.2f}% (estimate)")
    print(f"bound - true     {record['bound_minus_true']:.4f}")


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaitcert",
        description="Train and certify gait-switching supervisors.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to a run configuration JSON file")
        p.add_argument("--preset", choices=("paper", "desk"),
                       help="use a built-in configuration")
        p.add_argument("--seed", type=int, help="override the master seed")
        p.add_argument("--workers", type=int, help="rollout worker threads")
        p.add_argument("--out", help="override the output directory")

    p = sub.add_parser("gen-envs", help="sample an environment dataset")
    common(p)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--split", choices=("prior", "pac", "holdout"), required=True)
    p.add_argument("--mode", choices=("compact", "full"), default="compact")

    p = sub.add_parser("train-prior", help="stage 1: ES training")
    common(p)
    p.add_argument("--envs", required=True, help="prior dataset file")

    p = sub.add_parser("certify", help="stage 2: optimize the certified bound")
    common(p)
    p.add_argument("--prior", required=True, help="prior distribution checkpoint")
    p.add_argument("--envs", required=True, help="bound-training dataset file")

    p = sub.add_parser("evaluate", help="held-out evaluation and report")
    common(p)
    p.add_argument("--posterior", required=True, help="posterior.json from certify")
    p.add_argument("--envs", required=True, help="held-out dataset file")

    p = sub.add_parser("export-trace", help="dump one rollout's substep records")
    common(p)
    p.add_argument("--policies", required=True, help="policies.ckpt from certify")
    p.add_argument("--env-index", type=int, required=True)
    p.add_argument("--policy-index", type=int,
                   help="default: the highest-probability policy")

    p = sub.add_parser("report", help="pretty-print a report or training trace")
    p.add_argument("path", help="report.json or prior-trace.jsonl")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            cmd_report(args.path)
            return EXIT_OK
        cfg = _resolve_config(args)
        if args.command == "gen-envs":
            cmd_gen_envs(cfg, args.count, args.split, args.mode)
        elif args.command == "train-prior":
            cmd_train_prior(cfg, args.envs)
        elif args.command == "certify":
            _, result = cmd_certify(cfg, args.prior, args.envs)
            if not result.converged:
                return EXIT_SOLVER
        elif args.command == "evaluate":
            cmd_evaluate(cfg, args.posterior, args.envs)
        elif args.command == "export-trace":
            cmd_export_trace(cfg, args.policies, args.env_index, args.policy_index)
        return EXIT_OK
    except SplitOverlapError as exc:
        print(f"split hygiene violation: {exc}", file=sys.stderr)
        return EXIT_SPLIT
    except (ConfigError, GaitcertError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
