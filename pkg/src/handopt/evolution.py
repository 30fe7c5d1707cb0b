"""Elite-pool design search: crossover/mutation proposals, nearest-source
lookup, and interpolation-based policy transfer with a reward-threshold gate.

The pool starts from trained seed designs and only grows: every stepping
stone between a source design and a new candidate is trained warm-started
from the previous stone's policy, and is admitted iff its expected return
beats the threshold. Rejected stones still carry the policy forward; they
gate admission, not progress.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Protocol

import numpy as np

from .design import (
    DesignBounds,
    DesignParams,
    clamp,
    crossover,
    default_bounds,
    interp_path,
    mutate,
    normalized_distance,
)
from .policy import PolicyParams
from .training import TrainReport, derive_seed


class SeedOutOfBoundsError(ValueError):
    pass


class PoolTooSmallError(ValueError):
    pass


class EmptyPoolError(ValueError):
    pass


@dataclass
class PoolEntry:
    id: str
    theta: DesignParams
    policy: PolicyParams
    expected_return: float
    auc: float | None
    parent_ids: tuple[str, ...]
    source_id: str | None
    iteration: int
    train_report: TrainReport

    def to_json_dict(self) -> dict:
        return {
            "id": self.id,
            "theta": self.theta.to_json_dict(),
            "policy": self.policy.to_json_dict(),
            "expected_return": float(self.expected_return),
            "auc": None if self.auc is None else float(self.auc),
            "lineage": {
                "parent_ids": list(self.parent_ids),
                "source_id": self.source_id,
                "iteration": self.iteration,
            },
            "train_report": self.train_report.to_json_dict(),
        }

    @staticmethod
    def from_json_dict(d: dict) -> "PoolEntry":
        lin = d["lineage"]
        return PoolEntry(
            id=d["id"],
            theta=DesignParams.from_json_dict(d["theta"]),
            policy=PolicyParams.from_json_dict(d["policy"]),
            expected_return=float(d["expected_return"]),
            auc=None if d["auc"] is None else float(d["auc"]),
            parent_ids=tuple(lin["parent_ids"]),
            source_id=lin["source_id"],
            iteration=int(lin["iteration"]),
            train_report=TrainReport.from_json_dict(d["train_report"]),
        )


class Pool:
    """Append-only set of elite designs with their expert policies."""

    def __init__(self, entries: list[PoolEntry] | None = None):
        self.entries: list[PoolEntry] = list(entries or [])

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, entry_id: str) -> PoolEntry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

    def add(self, entry: PoolEntry) -> None:
        self.entries.append(entry)

    def save_jsonl(self, path) -> None:
        with open(path, "w") as f:
            for e in self.entries:
                f.write(json.dumps(e.to_json_dict()) + "\n")

    @staticmethod
    def load_jsonl(path) -> "Pool":
        entries = []
        with open(path) as f:
            for line in f:
                line = line.strip()
                if line:
                    entries.append(PoolEntry.from_json_dict(json.loads(line)))
        return Pool(entries)


@dataclass(frozen=True)
class EvolutionConfig:
    seed_designs: tuple[DesignParams, ...]
    n_iterations: int = 10
    q: float | None = None          # None: derived from the trained seeds
    xi: float = 0.1                 # interpolation step, normalized units
    epsilon: float = 1e-6           # transfer loop exit tolerance
    master_seed: int = 0
    bounds: DesignBounds = field(default_factory=default_bounds)

    def __post_init__(self):
        if len(self.seed_designs) < 2:
            raise ValueError("need at least 2 seed designs (crossover needs two parents)")
        if self.xi <= 0 or self.epsilon < 0 or self.n_iterations < 0:
            raise ValueError("xi must be > 0, epsilon >= 0, n_iterations >= 0")


class Trainer(Protocol):
    def train(
        self, theta: DesignParams, init: PolicyParams | None, seed: int
    ) -> tuple[PolicyParams, TrainReport]: ...

    def expected_return(self, theta: DesignParams, policy: PolicyParams, seed: int) -> float: ...


class SimTrainer:
    """Default trainer: evolution-strategy policy search in the simulator."""

    def __init__(
        self,
        instances,
        es=None,
        n_episodes: int = 2,
        eval_episodes: int = 8,
        gamma: float = 0.99,
        physics=None,
        workers: int = 1,
    ):
        from .env import PhysicsConfig
        from .training import EsConfig

        self.instances = list(instances)
        self.es = es or EsConfig()
        self.n_episodes = n_episodes
        self.eval_episodes = eval_episodes
        self.gamma = gamma
        self.physics = physics or PhysicsConfig()
        self.workers = workers

    def train(self, theta, init, seed):
        from .training import train as train_policy

        return train_policy(
            theta,
            init,
            self.instances,
            seed,
            es=self.es,
            n_episodes=self.n_episodes,
            gamma=self.gamma,
            physics=self.physics,
            workers=self.workers,
        )

    def expected_return(self, theta, policy, seed):
        from .training import estimate_return

        return estimate_return(
            policy,
            theta,
            self.instances,
            self.eval_episodes,
            0.0,
            seed,
            self.gamma,
            self.physics,
        )


def default_threshold(seed_returns) -> float:
    """Admission threshold 60% of the way up from zero toward the mean seed
    return, on whichever side of zero the mean lies (works for negative
    reward scales too)."""
    m = float(np.mean(seed_returns))
    return m - 0.4 * abs(m)


def propose_candidate(
    pool: Pool, bounds: DesignBounds, rng: np.random.Generator
) -> tuple[DesignParams, tuple[str, str]]:
    """Sample two distinct parents, then crossover -> mutate -> clamp."""
    if len(pool) < 2:
        raise PoolTooSmallError("candidate proposal needs at least 2 pool entries")
    i, j = rng.choice(len(pool), size=2, replace=False)
    a, b = pool.entries[int(i)], pool.entries[int(j)]
    theta = clamp(mutate(crossover(a.theta, b.theta, rng), bounds, rng), bounds)
    return theta, (a.id, b.id)


def nearest_source(pool: Pool, theta_new: DesignParams, bounds: DesignBounds) -> PoolEntry:
    """Pool entry closest to the candidate; ties break to the smallest id."""
    if len(pool) == 0:
        raise EmptyPoolError("pool is empty")
    return min(pool.entries, key=lambda e: (normalized_distance(e.theta, theta_new, bounds), e.id))


@dataclass
class StoneResult:
    theta: DesignParams
    policy: PolicyParams
    expected_return: float
    admitted: bool
    entry_id: str | None
    train_report: TrainReport


class RunLog:
    """Structured event log, optionally mirrored to an append-only JSONL file."""

    def __init__(self, path=None):
        self.events: list[dict] = []
        self._file = open(path, "w") if path is not None else None

    def emit(self, event: str, **payload) -> None:
        rec = {"event": event, **payload}
        self.events.append(rec)
        if self._file is not None:
            self._file.write(json.dumps(rec) + "\n")
            self._file.flush()

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None


def transfer_policy(
    source: PoolEntry,
    theta_new: DesignParams,
    config: EvolutionConfig,
    pool: Pool,
    trainer: Trainer,
    q: float,
    iteration: int,
    parent_ids: tuple[str, ...],
    log: RunLog | None = None,
) -> list[StoneResult]:
    """Walk stepping stones from the source design to the candidate.

    Each stone trains warm-started from the previous stone's policy and is
    admitted to the pool iff its expected return beats q. A rejected stone
    still seeds the next stone's training.
    """
    if normalized_distance(source.theta, theta_new, config.bounds) <= config.epsilon:
        raise ValueError("source and candidate designs coincide")
    stones = interp_path(source.theta, theta_new, config.xi, config.bounds)
    results = []
    policy = source.policy
    for k, stone in enumerate(stones):
        train_seed = derive_seed(config.master_seed, 3, iteration, k)
        eval_seed = derive_seed(config.master_seed, 4, iteration, k)
        policy, report = trainer.train(stone, policy, train_seed)
        exp = trainer.expected_return(stone, policy, eval_seed)
        admitted = exp > q
        entry_id = None
        if log is not None:
            log.emit(
                "stone_trained",
                iteration=iteration,
                stone=k,
                theta=stone.to_json_dict(),
                expected_return=exp,
                generations=report.generations_used,
            )
        if admitted:
            entry_id = f"i{iteration:03d}-s{k:02d}"
            pool.add(
                PoolEntry(
                    id=entry_id,
                    theta=stone,
                    policy=policy,
                    expected_return=exp,
                    auc=None,
                    parent_ids=parent_ids,
                    source_id=source.id,
                    iteration=iteration,
                    train_report=report,
                )
            )
            if log is not None:
                log.emit("stone_admitted", iteration=iteration, stone=k, id=entry_id, expected_return=exp)
        elif log is not None:
            log.emit("stone_rejected", iteration=iteration, stone=k, expected_return=exp, threshold=q)
        results.append(StoneResult(stone, policy, exp, admitted, entry_id, report))
    return results


def init_pool(config: EvolutionConfig, trainer: Trainer, log: RunLog | None = None) -> Pool:
    """Train every seed design from scratch and admit all of them."""
    pool = Pool()
    for i, theta in enumerate(config.seed_designs):
        if not config.bounds.contains(theta):
            raise SeedOutOfBoundsError(f"seed design {i} is out of bounds")
        policy, report = trainer.train(theta, None, derive_seed(config.master_seed, 0, i))
        exp = trainer.expected_return(theta, policy, derive_seed(config.master_seed, 1, i))
        entry = PoolEntry(
            id=f"seed-{i:03d}",
            theta=theta,
            policy=policy,
            expected_return=exp,
            auc=None,
            parent_ids=(),
            source_id=None,
            iteration=0,
            train_report=report,
        )
        pool.add(entry)
        if log is not None:
            log.emit("seed_trained", id=entry.id, expected_return=exp,
                     generations=report.generations_used)
    return pool


def co_optimize(
    config: EvolutionConfig,
    trainer: Trainer,
    out_dir=None,
) -> tuple[Pool, RunLog]:
    """Full design/policy co-optimization loop; deterministic in master_seed.

    When out_dir is given, pool.jsonl and log.jsonl are written there
    (the log append-only during the run, the pool flushed after every
    admission so an interrupted run keeps its elites).
    """
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    log = RunLog(out / "log.jsonl" if out is not None else None)

    pool = init_pool(config, trainer, log)
    q = config.q if config.q is not None else default_threshold(
        [e.expected_return for e in pool.entries]
    )
    log.emit("threshold_resolved", q=q)
    if out is not None:
        pool.save_jsonl(out / "pool.jsonl")

    try:
        for it in range(1, config.n_iterations + 1):
            rng = np.random.default_rng(
                np.random.SeedSequence([config.master_seed & 0x7FFFFFFFFFFFFFFF, it])
            )
            theta_new, parents = propose_candidate(pool, config.bounds, rng)
            log.emit(
                "candidate_proposed",
                iteration=it,
                theta=theta_new.to_json_dict(),
                parents=list(parents),
            )
            source = nearest_source(pool, theta_new, config.bounds)
            if normalized_distance(source.theta, theta_new, config.bounds) <= config.epsilon:
                log.emit("candidate_degenerate", iteration=it, source=source.id)
                continue
            transfer_policy(source, theta_new, config, pool, trainer, q, it, parents, log)
            if out is not None:
                pool.save_jsonl(out / "pool.jsonl")
    finally:
        if out is not None:
            pool.save_jsonl(out / "pool.jsonl")
        log.close()
    return pool, log
