"""End-to-end design/policy co-optimization at toy scale.

Seeds the elite pool with the v3/v5 reference designs, proposes mutated
crossovers, transfers policies across interpolation stepping stones, and
admits designs whose trained return beats the threshold. Everything is
deterministic in --seed.

Run:
    python demos/05_co_optimize.py --iters 3 --out /tmp/coopt
"""

import argparse

from handopt.config import config_from_dict
from handopt.evolution import EvolutionConfig, SimTrainer, co_optimize


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--iters", type=int, default=3)
    parser.add_argument("--budget", type=int, default=10, help="ES generations per design")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="directory for pool.jsonl / log.jsonl")
    args = parser.parse_args()

    cfg = config_from_dict(
        {
            "master_seed": args.seed,
            "instances": ["sphere@1.0"],
            "training": {
                "budget": args.budget,
                "window": 10 * args.budget,
                "population": 16,
                "elite": 4,
                "n_episodes": 2,
                "eval_episodes": 4,
            },
            "evolution": {"n_iterations": args.iters},
        }
    )
    trainer = SimTrainer(
        cfg.instance_specs(),
        es=cfg.training.es(),
        n_episodes=cfg.training.n_episodes,
        eval_episodes=cfg.training.eval_episodes,
    )
    evo = EvolutionConfig(
        seed_designs=cfg.evolution.seed_designs(),
        n_iterations=cfg.evolution.n_iterations,
        master_seed=cfg.master_seed,
        bounds=cfg.bounds.build(),
    )

    pool, log = co_optimize(evo, trainer, out_dir=args.out)

    print(f"\npool after {args.iters} iteration(s): {len(pool)} designs")
    for e in pool:
        src = f" <- {e.source_id}" if e.source_id else " (seed)"
        print(f"  {e.id}{src}: expected return {e.expected_return:+.3f}")
    admitted = sum(1 for ev in log.events if ev["event"] == "stone_admitted")
    rejected = sum(1 for ev in log.events if ev["event"] == "stone_rejected")
    print(f"stones admitted/rejected: {admitted}/{rejected}")
    if args.out:
        print(f"artifacts in {args.out}/ (pool.jsonl, log.jsonl)")


if __name__ == "__main__":
    main()
