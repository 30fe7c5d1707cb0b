"""Step the planar manipulation simulator by hand: close all fingers on a
sphere and watch contacts form and the object move.

Run:
    python demos/02_simulate_grasp.py [--instance sphere@1.0] [--force 0.5]
    python demos/02_simulate_grasp.py --csv /tmp/traj.csv
"""

import argparse

import numpy as np

from handopt.design import DESIGN_V3
from handopt.env import Simulator, TrajectoryRecord, episode_config, run_episodes, write_trajectory_csv
from handopt.hand import build_hand
from handopt.objects import parse_instance


def closing_controller(obs):
    """Flex every finger at a constant rate (ignores the observation)."""
    return 0.6 * np.ones((obs.shape[0], 8))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--instance", default="sphere@1.0")
    parser.add_argument("--force", type=float, default=0.0, help="disturbance magnitude, N")
    parser.add_argument("--seed", type=int, default=3)
    parser.add_argument("--steps", type=int, default=150)
    parser.add_argument("--csv", default=None, help="also dump the trajectory to this CSV file")
    args = parser.parse_args()

    instance = parse_instance(args.instance)
    cfg = episode_config(instance, args.force, args.seed)
    sim = Simulator(DESIGN_V3)
    state = sim.reset(cfg)
    print(f"instance {instance.label}, goal pose {np.round(cfg.goal_pose, 2)}, "
          f"disturbance {args.force} N toward {np.round(cfg.disturbance_dir, 3)}")

    for t in range(args.steps):
        state = sim.step(state, closing_controller(np.zeros((1, 36)))[0], cfg)
        if t % 25 == 0 or (t < 50 and len(state.contacts) > 0 and t % 5 == 0):
            fingers = sorted({c.finger for c in state.contacts})
            print(f"  t={t:3d} pose={np.round(state.object_pose, 2)} "
                  f"contacts={len(state.contacts):2d} fingers={fingers} "
                  f"reward={sim.reward(state, None, cfg):+.3f}")
    print(f"success: {sim.is_success(state, cfg)}")

    if args.csv:
        record = TrajectoryRecord()
        run_episodes(build_hand(DESIGN_V3), sim.physics, [cfg], closing_controller,
                     gamma=1.0, record=record)
        with open(args.csv, "w") as f:
            write_trajectory_csv(f, record)
        print(f"wrote {len(record.reward)} steps to {args.csv}")


if __name__ == "__main__":
    main()
