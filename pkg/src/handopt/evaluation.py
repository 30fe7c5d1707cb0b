"""Robustness evaluation: success rate under a fixed-direction random
disturbance, integrated over force magnitude (the AUC metric).

The force grid is F_k = k * F_max / K for k = 0..K; the success-rate curve is
integrated with the trapezoidal rule and normalized by F_max, so the metric
lives in [0, 1] regardless of F_max.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import DesignParams
from .env import PhysicsConfig, episode_config, run_episodes
from .hand import build_hand
from .objects import ObjectSpec, parse_instance
from .policy import PolicyParams, act_batch
from .training import derive_seed

DEFAULT_F_MAX = 1.0     # N
DEFAULT_GRID_INTERVALS = 10
DEFAULT_EPISODES_PER_POINT = 64


@dataclass
class InstanceReport:
    instance: str
    force_grid: list[float]
    success_rates: list[float]
    auc: float


@dataclass
class EvalReport:
    per_instance: dict[int, InstanceReport] = field(default_factory=dict)
    aggregate_auc: float = 0.0
    n_episodes_per_point: int = 0
    seed: int = 0

    def to_json_dict(self) -> dict:
        return {
            "per_instance": {
                str(k): {
                    "instance": r.instance,
                    "force_grid": r.force_grid,
                    "success_rates": r.success_rates,
                    "auc": r.auc,
                }
                for k, r in self.per_instance.items()
            },
            "aggregate_auc": self.aggregate_auc,
            "n_episodes_per_point": self.n_episodes_per_point,
            "seed": self.seed,
        }

    def write_csv(self, fileobj, design_id: str) -> None:
        """Per-cell rows followed by per-instance AUC summary rows."""
        fileobj.write("design_id,instance,F,success_rate\n")
        for rep in self.per_instance.values():
            for f, r in zip(rep.force_grid, rep.success_rates):
                fileobj.write(f"{design_id},{rep.instance},{f!r},{r!r}\n")
        fileobj.write("design_id,instance,auc\n")
        for rep in self.per_instance.values():
            fileobj.write(f"{design_id},{rep.instance},{rep.auc!r}\n")


def success_rate(
    policy: PolicyParams,
    theta: DesignParams,
    instance: ObjectSpec,
    force_mag: float,
    n_episodes: int,
    seed: int,
    physics: PhysicsConfig | None = None,
) -> float:
    """Fraction of episodes ending in success at one force magnitude.

    Every episode gets its own derived seed (fresh goal pose and force
    direction, the magnitude fixed)."""
    phys = physics or PhysicsConfig()
    hand = build_hand(theta)
    configs = [
        episode_config(instance, force_mag, derive_seed(seed, instance.one_hot_index, i), phys)
        for i in range(n_episodes)
    ]
    _, success, _ = run_episodes(
        hand, phys, configs, lambda obs: act_batch(policy.params, obs, policy.arch), gamma=1.0
    )
    return float(np.sum(success)) / n_episodes


def trapezoid_auc(force_grid: np.ndarray, rates: np.ndarray) -> float:
    """Normalized trapezoidal integral of the success-rate curve."""
    force_grid = np.asarray(force_grid, dtype=np.float64)
    rates = np.asarray(rates, dtype=np.float64)
    span = force_grid[-1] - force_grid[0]
    return float(np.trapezoid(rates, force_grid) / span)


def force_grid(k_intervals: int, f_max: float = DEFAULT_F_MAX) -> np.ndarray:
    if k_intervals < 1 or f_max <= 0:
        raise ValueError("need k_intervals >= 1 and f_max > 0")
    return np.arange(k_intervals + 1) * (f_max / k_intervals)


def _grid_cell(args) -> float:
    (policy_d, theta_vec, label, f, n, cell_seed, phys) = args
    policy = PolicyParams.from_json_dict(policy_d)
    theta = DesignParams.from_vector(np.asarray(theta_vec))
    return success_rate(policy, theta, parse_instance(label), f, n, cell_seed, phys)


def auc_metric(
    policy: PolicyParams,
    theta: DesignParams,
    instance: ObjectSpec,
    k_intervals: int = DEFAULT_GRID_INTERVALS,
    f_max: float = DEFAULT_F_MAX,
    n_episodes: int = DEFAULT_EPISODES_PER_POINT,
    seed: int = 0,
    physics: PhysicsConfig | None = None,
) -> float:
    """Success-rate AUC over the force grid for one object instance."""
    grid = force_grid(k_intervals, f_max)
    rates = [
        success_rate(policy, theta, instance, float(f), n_episodes, derive_seed(seed, k), physics)
        for k, f in enumerate(grid)
    ]
    return trapezoid_auc(grid, np.array(rates))


def evaluate_design(
    policy: PolicyParams,
    theta: DesignParams,
    instances: list[ObjectSpec],
    k_intervals: int = DEFAULT_GRID_INTERVALS,
    f_max: float = DEFAULT_F_MAX,
    n_episodes: int = DEFAULT_EPISODES_PER_POINT,
    seed: int = 0,
    physics: PhysicsConfig | None = None,
    workers: int = 1,
) -> EvalReport:
    """Full per-instance grid evaluation plus the aggregate AUC.

    Cells are independent; with workers > 1 they are computed in a process
    pool and reduced in fixed order, so worker count never changes results.
    """
    if not instances:
        raise ValueError("instances must be non-empty")
    phys = physics or PhysicsConfig()
    grid = force_grid(k_intervals, f_max)

    cells = [
        (inst, k, float(f))
        for inst in instances
        for k, f in enumerate(grid)
    ]
    # Cell seed depends on (seed, instance, grid index) only, so a single cell
    # is reproducible without running the rest.
    args = [
        (
            policy.to_json_dict(),
            theta.to_vector(),
            inst.label,
            f,
            n_episodes,
            derive_seed(seed, inst.one_hot_index, k),
            phys,
        )
        for inst, k, f in cells
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rates = list(pool.map(_grid_cell, args))
    else:
        rates = [_grid_cell(a) for a in args]

    report = EvalReport(n_episodes_per_point=n_episodes, seed=seed)
    n_grid = len(grid)
    for j, inst in enumerate(instances):
        inst_rates = rates[j * n_grid : (j + 1) * n_grid]
        report.per_instance[inst.one_hot_index] = InstanceReport(
            instance=inst.label,
            force_grid=[float(f) for f in grid],
            success_rates=[float(r) for r in inst_rates],
            auc=trapezoid_auc(grid, np.array(inst_rates)),
        )
    report.aggregate_auc = float(
        np.mean([r.auc for r in report.per_instance.values()])
    )
    return report
