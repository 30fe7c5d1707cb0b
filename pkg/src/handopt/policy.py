"""Control policy: a small deterministic tanh MLP over a flat parameter vector.

The observation layout is 12 normalized joint angles, 3 object-pose-error
terms, 3 object-pose-in-palm terms, and the 18-dim one-hot object instance.
Actions are 8 joint-rate commands in (-1, 1): per finger, MCP plus the coupled
PIP/DIP flexion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_ARCH = {"obs_dim": 36, "hidden": 32, "action_dim": 8, "activation": "tanh"}


def n_params(arch: dict = DEFAULT_ARCH) -> int:
    o, h, a = arch["obs_dim"], arch["hidden"], arch["action_dim"]
    return (o * h + h) + (h * a + a)


@dataclass(frozen=True)
class PolicyParams:
    params: np.ndarray
    arch: dict = field(default_factory=lambda: dict(DEFAULT_ARCH))

    def __post_init__(self):
        p = np.asarray(self.params, dtype=np.float64)
        expected = n_params(self.arch)
        if p.shape != (expected,):
            raise ValueError(f"params must have shape ({expected},), got {p.shape}")
        object.__setattr__(self, "params", p)

    def to_json_dict(self) -> dict:
        return {"arch": dict(self.arch), "params": [float(x) for x in self.params]}

    @staticmethod
    def from_json_dict(d: dict) -> "PolicyParams":
        return PolicyParams(params=np.array(d["params"], dtype=np.float64), arch=dict(d["arch"]))


def zero_policy(arch: dict = DEFAULT_ARCH) -> PolicyParams:
    return PolicyParams(np.zeros(n_params(arch)), dict(arch))


def fresh_policy(rng: np.random.Generator, arch: dict = DEFAULT_ARCH) -> PolicyParams:
    """Fresh initialization: all parameters uniform in [-0.1, 0.1]."""
    return PolicyParams(rng.uniform(-0.1, 0.1, size=n_params(arch)), dict(arch))


def _unpack(params: np.ndarray, arch: dict):
    o, h, a = arch["obs_dim"], arch["hidden"], arch["action_dim"]
    i = 0
    w1 = params[..., i : i + o * h].reshape(*params.shape[:-1], o, h)
    i += o * h
    b1 = params[..., i : i + h]
    i += h
    w2 = params[..., i : i + h * a].reshape(*params.shape[:-1], h, a)
    i += h * a
    b2 = params[..., i : i + a]
    return w1, b1, w2, b2


def act(policy: PolicyParams, obs: np.ndarray) -> np.ndarray:
    """Deterministic action for a single observation."""
    return act_batch(policy.params[None, :], obs[None, :], policy.arch)[0]


def act_batch(params: np.ndarray, obs: np.ndarray, arch: dict = DEFAULT_ARCH) -> np.ndarray:
    """Actions for a batch of observations (B, obs_dim).

    params is either a single flat vector shared by the batch or a (B, n)
    matrix pairing each observation with its own parameters.
    """
    params = np.asarray(params, dtype=np.float64)
    obs = np.asarray(obs, dtype=np.float64)
    w1, b1, w2, b2 = _unpack(params, arch)
    if params.ndim == 1:
        hidden = np.tanh(obs @ w1 + b1)
        return np.tanh(hidden @ w2 + b2)
    hidden = np.tanh(np.einsum("bi,bih->bh", obs, w1) + b1)
    return np.tanh(np.einsum("bh,bha->ba", hidden, w2) + b2)
