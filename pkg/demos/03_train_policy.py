"""Train a small grasping policy with the evolution-strategy trainer and
report the learning curve plus a held-out return estimate.

The defaults are sized for a coffee-break run; raise --budget and
--episodes for a policy that actually grasps reliably.

Run:
    python demos/03_train_policy.py --budget 30
"""

import argparse
import json

import numpy as np

from handopt.design import DESIGN_V3
from handopt.objects import parse_instance
from handopt.training import EsConfig, estimate_return, train


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instance", default="sphere@1.0")
    parser.add_argument("--budget", type=int, default=30, help="max ES generations")
    parser.add_argument("--episodes", type=int, default=4, help="episodes per fitness evaluation")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="write the trained policy JSON here")
    args = parser.parse_args()

    instance = parse_instance(args.instance)
    es = EsConfig(budget=args.budget, window=max(10, args.budget // 4))
    policy, report = train(
        DESIGN_V3, None, [instance], seed=args.seed, es=es, n_episodes=args.episodes
    )

    curve = report.best_return_curve
    print(f"ran {report.generations_used} generations"
          f"{' (stalled)' if report.converged else ''}")
    stride = max(1, len(curve) // 10)
    for g in range(0, len(curve), stride):
        print(f"  gen {g + 1:3d}: best fitness {curve[g]:+.3f}")
    print(f"final training fitness: {report.final_expected_return:+.3f}")

    held_out = estimate_return(policy, DESIGN_V3, [instance], 16, 0.0, seed=args.seed + 1)
    print(f"held-out mean return over 16 fresh episodes: {held_out:+.3f}")

    if args.out:
        with open(args.out, "w") as f:
            json.dump(policy.to_json_dict(), f)
        print(f"policy written to {args.out}")


if __name__ == "__main__":
    main()
