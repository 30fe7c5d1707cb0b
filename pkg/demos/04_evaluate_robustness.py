"""Robustness metric walkthrough: success rate under an increasing random
disturbance force, integrated into a single AUC number.

Trains a quick policy first (or loads one), then sweeps the force grid.

Run:
    python demos/04_evaluate_robustness.py --budget 40
    python demos/04_evaluate_robustness.py --policy trained_policy.json
"""

import argparse
import json

from handopt.design import DESIGN_V3
from handopt.evaluation import evaluate_design
from handopt.objects import parse_instance
from handopt.policy import PolicyParams
from handopt.training import EsConfig, train


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instances", default="sphere@1.0")
    parser.add_argument("--policy", default=None, help="policy JSON (skips training)")
    parser.add_argument("--budget", type=int, default=40)
    parser.add_argument("--grid", type=int, default=10, help="force-grid intervals")
    parser.add_argument("--episodes", type=int, default=32, help="episodes per grid point")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    instances = [parse_instance(s) for s in args.instances.split(",")]
    if args.policy:
        with open(args.policy) as f:
            policy = PolicyParams.from_json_dict(json.load(f))
    else:
        print(f"training a policy for {args.budget} generations first...")
        es = EsConfig(budget=args.budget, window=10 * args.budget)
        policy, _ = train(DESIGN_V3, None, instances, seed=args.seed, es=es, n_episodes=4)

    report = evaluate_design(
        policy, DESIGN_V3, instances,
        k_intervals=args.grid, n_episodes=args.episodes, seed=args.seed,
    )
    for rep in report.per_instance.values():
        print(f"\n{rep.instance}: AUC = {rep.auc:.4f}")
        for f, r in zip(rep.force_grid, rep.success_rates):
            bar = "#" * int(40 * r)
            print(f"  F = {f:4.2f} N  rate {r:5.3f}  {bar}")
    print(f"\naggregate AUC over {len(instances)} instance(s): {report.aggregate_auc:.4f}")


if __name__ == "__main__":
    main()
