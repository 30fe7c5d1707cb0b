"""Rollouts, return estimation, and a gradient-free policy trainer.

Training is a (mu, lambda) evolution strategy over the flat policy parameter
vector: antithetic Gaussian perturbations of the mean, fitness-weighted
recombination of the top candidates, and an improvement-window stopping rule.
Candidates within a generation share episode seeds (common random numbers) so
their fitnesses are directly comparable.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .design import DesignParams
from .env import EpisodeConfig, PhysicsConfig, episode_config, run_episodes
from .hand import build_hand
from .objects import ObjectSpec
from .policy import PolicyParams, act_batch, fresh_policy

DEFAULT_GAMMA = 0.99


def derive_seed(*keys: int) -> int:
    """Stable 64-bit seed derived from a tuple of integer keys.

    The key count is folded in first because SeedSequence ignores trailing
    zero entropy words, which would alias (s,) with (s, 0).
    """
    entropy = [len(keys)] + [int(k) & 0x7FFFFFFFFFFFFFFF for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def rollout(
    policy: PolicyParams,
    theta: DesignParams,
    config: EpisodeConfig,
    gamma: float = DEFAULT_GAMMA,
    physics: PhysicsConfig | None = None,
) -> tuple[float, bool]:
    """Simulate one episode; returns (discounted return, success)."""
    phys = physics or PhysicsConfig()
    hand = build_hand(theta)
    returns, success, _ = run_episodes(
        hand, phys, [config], lambda obs: act_batch(policy.params, obs, policy.arch), gamma
    )
    return float(returns[0]), bool(success[0])


def episode_returns(
    policy: PolicyParams,
    theta: DesignParams,
    instances: list[ObjectSpec],
    n_episodes: int,
    force_mag: float,
    seed: int,
    gamma: float = DEFAULT_GAMMA,
    physics: PhysicsConfig | None = None,
) -> np.ndarray:
    """Per-episode returns over (instance, episode) cells, in fixed order.

    Episode i of an instance uses the seed derived from (seed, one_hot_index,
    i), so any cell is reproducible in isolation and independent of n_episodes.
    """
    phys = physics or PhysicsConfig()
    hand = build_hand(theta)
    out = []
    for inst in instances:
        configs = [
            episode_config(inst, force_mag, derive_seed(seed, inst.one_hot_index, i), phys)
            for i in range(n_episodes)
        ]
        returns, _, _ = run_episodes(
            hand, phys, configs, lambda obs: act_batch(policy.params, obs, policy.arch), gamma
        )
        out.append(returns)
    return np.concatenate(out)


def estimate_return(
    policy: PolicyParams,
    theta: DesignParams,
    instances: list[ObjectSpec],
    n_episodes: int,
    force_mag: float,
    seed: int,
    gamma: float = DEFAULT_GAMMA,
    physics: PhysicsConfig | None = None,
) -> float:
    """Mean discounted return over freshly seeded episodes."""
    return float(
        np.mean(episode_returns(policy, theta, instances, n_episodes, force_mag, seed, gamma, physics))
    )


@dataclass
class TrainReport:
    generations_used: int
    best_return_curve: list[float] = field(default_factory=list)
    converged: bool = False
    final_expected_return: float = float("-inf")

    def to_json_dict(self) -> dict:
        return {
            "generations_used": self.generations_used,
            "best_return_curve": [float(x) for x in self.best_return_curve],
            "converged": self.converged,
            "final_expected_return": float(self.final_expected_return),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "TrainReport":
        return TrainReport(
            generations_used=int(d["generations_used"]),
            best_return_curve=[float(x) for x in d["best_return_curve"]],
            converged=bool(d["converged"]),
            final_expected_return=float(d["final_expected_return"]),
        )


def generations_to_threshold(report: TrainReport, threshold: float) -> int:
    """First generation whose best-so-far return reached the threshold;
    budget+1 if it never did."""
    for i, b in enumerate(report.best_return_curve):
        if b >= threshold:
            return i + 1
    return len(report.best_return_curve) + 1


@dataclass(frozen=True)
class EsConfig:
    budget: int = 500
    window: int = 20
    min_gain_frac: float = 0.01     # improvement below this fraction of |best| stalls
    population: int = 32            # antithetic, must be even
    elite: int = 8
    sigma: float = 0.05


def _recombination_weights(mu: int) -> np.ndarray:
    w = np.log(mu + 0.5) - np.log(np.arange(1, mu + 1))
    return w / w.sum()


def evolve_params(
    fitness,
    x0: np.ndarray,
    seed: int,
    es: EsConfig | None = None,
) -> tuple[np.ndarray, TrainReport]:
    """Core ES loop over a flat parameter vector.

    fitness(candidates, generation) takes a (population, n) matrix and returns
    a (population,) array; higher is better. Returns the best candidate ever
    evaluated and a report whose best-so-far curve is non-decreasing.
    """
    es = es or EsConfig()
    if es.population % 2 != 0:
        raise ValueError("population must be even (antithetic pairs)")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0x7FFFFFFFFFFFFFFF]))
    mean = np.asarray(x0, dtype=np.float64).copy()
    n = mean.shape[0]
    weights = _recombination_weights(es.elite)

    best_x = mean.copy()
    best_f = -np.inf
    curve: list[float] = []
    converged = False

    for g in range(1, es.budget + 1):
        eps = rng.standard_normal((es.population // 2, n))
        cands = np.concatenate([mean + es.sigma * eps, mean - es.sigma * eps], axis=0)
        f = np.asarray(fitness(cands, g), dtype=np.float64)
        order = np.argsort(-f, kind="stable")[: es.elite]
        mean = weights @ cands[order]

        gen_best = int(order[0])
        if f[gen_best] > best_f:
            best_f = float(f[gen_best])
            best_x = cands[gen_best].copy()
        curve.append(best_f)

        if g > es.window:
            gain = curve[-1] - curve[-1 - es.window]
            if gain < es.min_gain_frac * max(abs(curve[-1]), 1e-12):
                converged = True
                break

    report = TrainReport(
        generations_used=len(curve),
        best_return_curve=curve,
        converged=converged,
        final_expected_return=best_f,
    )
    return best_x, report


def _eval_candidates(
    hand,
    phys: PhysicsConfig,
    arch: dict,
    cands: np.ndarray,
    instances: list[ObjectSpec],
    n_episodes: int,
    force_mag: float,
    gen_seed: int,
    gamma: float,
) -> np.ndarray:
    """Fitness of a candidate block: mean return over (instance, episode)
    cells with generation-shared episode seeds. Used identically by the
    serial and the worker path so worker count cannot change results."""
    lam = cands.shape[0]
    per_cell = []
    for inst in instances:
        configs = [
            episode_config(inst, force_mag, derive_seed(gen_seed, inst.one_hot_index, i), phys)
            for i in range(n_episodes)
        ]
        big_configs = [cfg for _ in range(lam) for cfg in configs]
        big_params = np.repeat(cands, n_episodes, axis=0)
        returns, _, _ = run_episodes(
            hand, phys, big_configs, lambda obs: act_batch(big_params, obs, arch), gamma
        )
        per_cell.append(returns.reshape(lam, n_episodes))
    return np.concatenate(per_cell, axis=1).mean(axis=1)


def _candidate_fitness_chunk(args) -> np.ndarray:
    (chunk, arch, theta_vec, instance_labels, n_episodes, force_mag, gen_seed, gamma, phys) = args
    from .objects import parse_instance

    theta = DesignParams.from_vector(np.asarray(theta_vec))
    instances = [parse_instance(s) for s in instance_labels]
    hand = build_hand(theta)
    return _eval_candidates(
        hand, phys, dict(arch), np.asarray(chunk), instances, n_episodes, force_mag, gen_seed, gamma
    )


def train(
    theta: DesignParams,
    init: PolicyParams | None,
    instances: list[ObjectSpec],
    seed: int,
    es: EsConfig | None = None,
    n_episodes: int = 2,
    gamma: float = DEFAULT_GAMMA,
    force_mag: float = 0.0,
    physics: PhysicsConfig | None = None,
    workers: int = 1,
    fitness_fn=None,
) -> tuple[PolicyParams, TrainReport]:
    """Train an expert policy for one design; warm-start from `init` if given.

    Fitness is the estimated return with no disturbance (the disturbance only
    enters at evaluation time). fitness_fn replaces the simulator-backed
    fitness for testing; it receives (candidates, generation).
    """
    es = es or EsConfig()
    phys = physics or PhysicsConfig()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0x7FFFFFFFFFFFFFFF, 1]))
    start = init if init is not None else fresh_policy(rng)
    arch = dict(start.arch)
    hand = build_hand(theta)
    labels = [inst.label for inst in instances]

    pool = None
    if fitness_fn is not None:
        fitness = fitness_fn
    elif workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers)

        def fitness(cands, g):
            gen_seed = derive_seed(seed, 2, g)
            chunks = np.array_split(cands, workers)
            jobs = [
                (chunk, arch, theta.to_vector(), labels, n_episodes, force_mag, gen_seed, gamma, phys)
                for chunk in chunks
                if chunk.shape[0] > 0
            ]
            return np.concatenate(list(pool.map(_candidate_fitness_chunk, jobs)))

    else:

        def fitness(cands, g):
            gen_seed = derive_seed(seed, 2, g)
            return _eval_candidates(
                hand, phys, arch, cands, instances, n_episodes, force_mag, gen_seed, gamma
            )

    try:
        best_x, report = evolve_params(fitness, start.params, seed, es)
    finally:
        if pool is not None:
            pool.shutdown()
    return PolicyParams(best_x, arch), report
