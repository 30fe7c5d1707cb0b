"""Command-line surface: evolve, train, eval, rank, replay, report.

Exit codes: 0 success, 2 configuration error, 3 simulator blowup (partial
outputs are flushed first), 4 unknown id / bad references.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, NAMED_DESIGNS, RunConfig, apply_overrides, load_config
from .design import DESIGN_V6, DESIGN_V7, DesignParams
from .env import NumericalBlowupError, TrajectoryRecord, episode_config, run_episodes, write_trajectory_csv
from .evaluation import evaluate_design
from .evolution import EvolutionConfig, Pool, SimTrainer, co_optimize
from .hand import build_hand
from .objects import all_instances, parse_instance
from .policy import act_batch
from .training import train as train_policy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_BAD_REF = 4

_ALL_DESIGNS = dict(NAMED_DESIGNS, v6=DESIGN_V6, v7=DESIGN_V7)


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if getattr(args, "set", None):
        cfg = apply_overrides(cfg, args.set)
    if getattr(args, "seed", None) is not None:
        cfg = apply_overrides(cfg, [f"master_seed={args.seed}"])
    if getattr(args, "iters", None) is not None:
        cfg = apply_overrides(cfg, [f"evolution.n_iterations={args.iters}"])
    if getattr(args, "workers", None) is not None:
        cfg = apply_overrides(cfg, [f"workers={args.workers}"])
    return cfg


def _trainer(cfg: RunConfig) -> SimTrainer:
    t = cfg.training
    return SimTrainer(
        cfg.instance_specs(),
        es=t.es(),
        n_episodes=t.n_episodes,
        eval_episodes=t.eval_episodes,
        gamma=t.gamma,
        physics=cfg.environment,
        workers=cfg.resolve_workers(),
    )


def _resolve_instances(flag: str | None, cfg: RunConfig):
    if flag is None:
        return cfg.instance_specs()
    if flag == "all":
        return all_instances()
    return [parse_instance(label) for label in flag.split(",")]


def _entry_auc(entry, cfg: RunConfig, instances):
    report = evaluate_design(
        entry.policy,
        entry.theta,
        instances,
        k_intervals=cfg.evaluation.k_intervals,
        f_max=cfg.evaluation.f_max,
        n_episodes=cfg.evaluation.n_episodes,
        seed=cfg.master_seed,
        physics=cfg.environment,
        workers=cfg.resolve_workers(),
    )
    return report


def cmd_evolve(args) -> int:
    cfg = _load_run_config(args)
    out = Path(args.out or cfg.output_dir)
    evo = EvolutionConfig(
        seed_designs=cfg.evolution.seed_designs(),
        n_iterations=cfg.evolution.n_iterations,
        q=cfg.evolution.q,
        xi=cfg.evolution.xi,
        epsilon=cfg.evolution.epsilon,
        master_seed=cfg.master_seed,
        bounds=cfg.bounds.build(),
    )
    try:
        pool, _log = co_optimize(evo, _trainer(cfg), out_dir=out)
    except NumericalBlowupError as exc:
        print(f"simulation blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP

    instances = cfg.instance_specs()
    for entry in pool:
        if entry.auc is None:
            entry.auc = _entry_auc(entry, cfg, instances).aggregate_auc
    pool.save_jsonl(out / "pool.jsonl")
    with open(out / "summary.csv", "w") as f:
        f.write("id,aggregate_auc,expected_return,iteration\n")
        for entry in pool:
            f.write(f"{entry.id},{entry.auc!r},{entry.expected_return!r},{entry.iteration}\n")
    print(f"pool of {len(pool)} designs written to {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _load_run_config(args)
    if args.design in _ALL_DESIGNS:
        theta = _ALL_DESIGNS[args.design]
    else:
        try:
            with open(args.design) as f:
                theta = DesignParams.from_json_dict(json.load(f))
        except (OSError, ValueError, KeyError) as exc:
            print(f"cannot load design {args.design!r}: {exc}", file=sys.stderr)
            return EXIT_BAD_REF
    t = cfg.training
    try:
        policy, report = train_policy(
            theta,
            None,
            cfg.instance_specs(),
            cfg.master_seed,
            es=t.es(),
            n_episodes=t.n_episodes,
            gamma=t.gamma,
            physics=cfg.environment,
            workers=cfg.resolve_workers(),
        )
    except NumericalBlowupError as exc:
        print(f"simulation blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    out = Path(args.out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "policy.json", "w") as f:
        json.dump(policy.to_json_dict(), f)
    with open(out / "train_report.json", "w") as f:
        json.dump(report.to_json_dict(), f, indent=2)
    print(
        f"trained {args.design}: best return {report.final_expected_return:.4f} "
        f"after {report.generations_used} generations"
    )
    return EXIT_OK


def _load_pool(path: str) -> Pool | None:
    try:
        return Pool.load_jsonl(path)
    except OSError as exc:
        print(f"cannot read pool {path}: {exc}", file=sys.stderr)
        return None


def cmd_eval(args) -> int:
    cfg = _load_run_config(args)
    pool = _load_pool(args.pool)
    if pool is None:
        return EXIT_BAD_REF
    try:
        entry = pool.get(args.id)
    except KeyError:
        print(f"unknown design id {args.id!r}", file=sys.stderr)
        return EXIT_BAD_REF
    instances = _resolve_instances(args.instances, cfg)
    report = _entry_auc(entry, cfg, instances)
    out = Path(args.out or Path(args.pool).parent)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / f"{entry.id}_eval.json", "w") as f:
        json.dump(report.to_json_dict(), f, indent=2)
    with open(out / f"{entry.id}_eval.csv", "w") as f:
        report.write_csv(f, entry.id)
    print(f"{entry.id}: aggregate AUC {report.aggregate_auc:.4f} over {len(instances)} instance(s)")
    return EXIT_OK


def cmd_rank(args) -> int:
    cfg = _load_run_config(args)
    pool = _load_pool(args.pool)
    if pool is None:
        return EXIT_BAD_REF
    if len(pool) == 0:
        print("pool is empty", file=sys.stderr)
        return EXIT_BAD_REF
    instances = _resolve_instances(args.instances, cfg)
    for entry in pool:
        if entry.auc is None:
            entry.auc = _entry_auc(entry, cfg, instances).aggregate_auc
    ranked = sorted(pool, key=lambda e: (-e.auc, e.id))
    if args.top is not None:
        ranked = ranked[: args.top]
    print("rank,id,aggregate_auc,expected_return")
    for i, e in enumerate(ranked, start=1):
        print(f"{i},{e.id},{e.auc!r},{e.expected_return!r}")
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = _load_run_config(args)
    pool = _load_pool(args.pool)
    if pool is None:
        return EXIT_BAD_REF
    try:
        entry = pool.get(args.id)
        instance = parse_instance(args.instance)
    except (KeyError, ValueError) as exc:
        print(f"bad reference: {exc}", file=sys.stderr)
        return EXIT_BAD_REF
    phys = cfg.environment
    episode_seed = args.seed_episode if args.seed_episode is not None else cfg.master_seed
    config = episode_config(instance, args.force, episode_seed, phys)
    hand = build_hand(entry.theta)
    record = TrajectoryRecord()
    try:
        run_episodes(
            hand,
            phys,
            [config],
            lambda obs: act_batch(entry.policy.params, obs, entry.policy.arch),
            gamma=cfg.training.gamma,
            record=record,
        )
    except NumericalBlowupError as exc:
        print(f"simulation blowup: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    with open(args.out, "w") as f:
        write_trajectory_csv(f, record)
    print(f"wrote {len(record.reward)} steps to {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    pool = _load_pool(args.pool)
    if pool is None:
        return EXIT_BAD_REF
    if len(pool) == 0:
        print("pool is empty", file=sys.stderr)
        return EXIT_BAD_REF
    n_seed = sum(1 for e in pool if e.source_id is None)
    best = max(pool, key=lambda e: e.expected_return)
    print(f"entries: {len(pool)} ({n_seed} seeds, {len(pool) - n_seed} evolved)")
    print(f"best expected return: {best.expected_return!r} ({best.id})")
    with_auc = [e for e in pool if e.auc is not None]
    if with_auc:
        top = max(with_auc, key=lambda e: e.auc)
        print(f"best aggregate AUC: {top.auc!r} ({top.id})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="handopt", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", default=None, help="JSON run configuration")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="dotted config override, repeatable")
        sp.add_argument("--seed", type=int, default=None, help="master seed override")
        sp.add_argument("--workers", type=int, default=None)

    sp = sub.add_parser("evolve", help="run the design/policy co-optimization loop")
    common(sp)
    sp.add_argument("--iters", type=int, default=None, help="override evolution.n_iterations")
    sp.add_argument("--out", default=None, help="output directory")
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("train", help="train a policy for a single design")
    common(sp)
    sp.add_argument("--design", default="v3", help="named design (v3/v5/v6/v7) or JSON file")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="disturbance-AUC evaluation of one pool entry")
    common(sp)
    sp.add_argument("--pool", required=True)
    sp.add_argument("--id", required=True)
    sp.add_argument("--instances", default=None, help="'all', or comma-separated shape@scale labels")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("rank", help="rank pool entries by aggregate AUC")
    common(sp)
    sp.add_argument("--pool", required=True)
    sp.add_argument("--instances", default=None)
    sp.add_argument("--top", type=int, default=None)
    sp.set_defaults(func=cmd_rank)

    sp = sub.add_parser("replay", help="dump one episode trajectory as CSV")
    common(sp)
    sp.add_argument("--pool", required=True)
    sp.add_argument("--id", required=True)
    sp.add_argument("--instance", required=True)
    sp.add_argument("--episode-seed", dest="seed_episode", type=int, default=None)
    sp.add_argument("--force", type=float, default=0.0)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_replay)

    sp = sub.add_parser("report", help="summarize a pool file")
    sp.add_argument("--pool", required=True)
    sp.set_defaults(func=cmd_report)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
