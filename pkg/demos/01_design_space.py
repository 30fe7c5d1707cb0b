"""Tour of the hand design space: bounds, reference designs, and the genetic
operators used by the co-optimization loop.

Run:
    python demos/01_design_space.py [--seed 0]
"""

import argparse

import numpy as np

from handopt.design import (
    DESIGN_V3,
    DESIGN_V5,
    DESIGN_V6,
    DESIGN_V7,
    FIELD_NAMES,
    clamp,
    crossover,
    default_bounds,
    interp_path,
    mutate,
    normalized_distance,
)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--xi", type=float, default=0.1, help="interpolation step size")
    args = parser.parse_args()

    bounds = default_bounds()
    rng = np.random.default_rng(args.seed)

    print("design space: 14 bounded scalars (mm / deg)")
    for name, lo, hi in zip(FIELD_NAMES, bounds.lower, bounds.upper):
        print(f"  {name:>12s}: [{lo:7.1f}, {hi:7.1f}]")

    print("\nreference designs (normalized distance from v3):")
    for label, theta in [("v3", DESIGN_V3), ("v5", DESIGN_V5), ("v6", DESIGN_V6), ("v7", DESIGN_V7)]:
        d = normalized_distance(DESIGN_V3, theta, bounds)
        print(f"  {label}: d = {d:.4f}")

    print("\ncrossover + mutate + clamp (one candidate proposal):")
    child = clamp(mutate(crossover(DESIGN_V6, DESIGN_V7, rng), bounds, rng), bounds)
    for name, a, b, c in zip(
        FIELD_NAMES, DESIGN_V6.to_vector(), DESIGN_V7.to_vector(), child.to_vector()
    ):
        print(f"  {name:>12s}: {a:7.2f} x {b:7.2f} -> {c:7.2f}")

    print(f"\ninterpolation path v3 -> v7 with step {args.xi}:")
    path = interp_path(DESIGN_V3, DESIGN_V7, args.xi, bounds)
    print(f"  total distance {normalized_distance(DESIGN_V3, DESIGN_V7, bounds):.4f}"
          f" -> {len(path)} stepping stones")
    prev = DESIGN_V3
    for k, stone in enumerate(path):
        step = normalized_distance(prev, stone, bounds)
        left = normalized_distance(stone, DESIGN_V7, bounds)
        print(f"  stone {k}: step {step:.4f}, remaining {left:.4f}")
        prev = stone


if __name__ == "__main__":
    main()
