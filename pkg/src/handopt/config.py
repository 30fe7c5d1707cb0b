"""Run configuration: one JSON document with documented defaults.

An empty config file is a complete valid run; unknown keys anywhere are
rejected so typos fail loudly. Flat dotted overrides (`--set key=value` on the
CLI) patch individual fields.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field, fields

from .design import DESIGN_V3, DESIGN_V5, DesignBounds, DesignParams, default_bounds
from .env import PhysicsConfig
from .objects import parse_instance
from .training import EsConfig

NAMED_DESIGNS = {"v3": DESIGN_V3, "v5": DESIGN_V5}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BoundsSection:
    mutation_fraction: float = 0.05
    lower: list[float] | None = None
    upper: list[float] | None = None

    def build(self) -> DesignBounds:
        base = default_bounds(self.mutation_fraction)
        if self.lower is None and self.upper is None:
            return base
        import numpy as np

        lower = np.array(self.lower) if self.lower is not None else base.lower
        upper = np.array(self.upper) if self.upper is not None else base.upper
        return DesignBounds(lower, upper, self.mutation_fraction * (upper - lower))


@dataclass(frozen=True)
class EvolutionSection:
    n_iterations: int = 10
    q: float | None = None
    xi: float = 0.1
    epsilon: float = 1e-6
    seeds: tuple = ("v3", "v5")

    def seed_designs(self) -> tuple[DesignParams, ...]:
        out = []
        for s in self.seeds:
            if isinstance(s, str):
                if s not in NAMED_DESIGNS:
                    raise ConfigError(f"unknown named seed design {s!r}")
                out.append(NAMED_DESIGNS[s])
            else:
                out.append(DesignParams.from_json_dict(dict(s)))
        return tuple(out)


@dataclass(frozen=True)
class TrainingSection:
    budget: int = 500
    window: int = 20
    min_gain_frac: float = 0.01
    population: int = 32
    elite: int = 8
    sigma: float = 0.05
    n_episodes: int = 2
    eval_episodes: int = 8
    gamma: float = 0.99

    def es(self) -> EsConfig:
        return EsConfig(
            budget=self.budget,
            window=self.window,
            min_gain_frac=self.min_gain_frac,
            population=self.population,
            elite=self.elite,
            sigma=self.sigma,
        )


@dataclass(frozen=True)
class EvaluationSection:
    k_intervals: int = 10
    n_episodes: int = 64
    f_max: float = 1.0


@dataclass(frozen=True)
class RunConfig:
    bounds: BoundsSection = field(default_factory=BoundsSection)
    evolution: EvolutionSection = field(default_factory=EvolutionSection)
    training: TrainingSection = field(default_factory=TrainingSection)
    environment: PhysicsConfig = field(default_factory=PhysicsConfig)
    evaluation: EvaluationSection = field(default_factory=EvaluationSection)
    instances: tuple[str, ...] = ("sphere@1.0", "board@1.0")
    master_seed: int = 0
    workers: int | None = None
    output_dir: str = "runs/default"

    def resolve_workers(self) -> int:
        env = os.environ.get("HANDOPT_WORKERS")
        if env is not None:
            return max(1, int(env))
        if self.workers is not None:
            return max(1, int(self.workers))
        return os.cpu_count() or 1

    def instance_specs(self):
        return [parse_instance(label) for label in self.instances]


def _build_section(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'} must be an object")
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown config key(s) at {path or 'top level'}: {sorted(unknown)}")
    kwargs = {}
    for name, value in data.items():
        if name in _SECTION_TYPES and cls is RunConfig:
            kwargs[name] = _build_section(_SECTION_TYPES[name], value, f"{path}.{name}" if path else name)
        elif isinstance(value, list):
            kwargs[name] = tuple(value) if name in ("seeds", "instances") else value
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


_SECTION_TYPES = {
    "bounds": BoundsSection,
    "evolution": EvolutionSection,
    "training": TrainingSection,
    "environment": PhysicsConfig,
    "evaluation": EvaluationSection,
}


def config_from_dict(data: dict) -> RunConfig:
    return _build_section(RunConfig, data, "")


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path) as f:
            data = json.load(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def apply_overrides(config: RunConfig, overrides: list[str]) -> RunConfig:
    """Apply dotted `key=value` overrides; values parse as JSON when possible."""
    data = _to_dict(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = data
        parts = key.split(".")
        for p in parts[:-1]:
            if p not in node or not isinstance(node[p], dict):
                raise ConfigError(f"unknown config key {key!r}")
            node = node[p]
        if parts[-1] not in node:
            raise ConfigError(f"unknown config key {key!r}")
        node[parts[-1]] = value
    return config_from_dict(data)


def _to_dict(obj):
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: _to_dict(getattr(obj, f.name)) for f in fields(obj)}
    if isinstance(obj, tuple):
        return [_to_dict(x) for x in obj]
    return obj
