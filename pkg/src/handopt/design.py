"""Hand design vector, bounds, genetic operators, and interpolation stepping.

A design is 14 scalars: palm rectangle size, (x, y) base position of the
index/middle/ring fingers on the palm, their base orientations, and the three
shared link lengths. Lengths are mm, angles deg. The flat-vector order is
fixed (see FIELD_NAMES) and used by every serialization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FIELD_NAMES = (
    "palm_width",
    "palm_height",
    "ff_x",
    "ff_y",
    "mf_x",
    "mf_y",
    "rf_x",
    "rf_y",
    "ff_orient",
    "mf_orient",
    "rf_orient",
    "proximal_len",
    "middle_len",
    "distal_len",
)

N_DIMS = len(FIELD_NAMES)

DESIGN_JSON_VERSION = 1


class ZeroDistanceError(ValueError):
    """Interpolation step requested between two identical designs."""


@dataclass(frozen=True)
class DesignParams:
    """One hand design (the genome of the search)."""

    palm_width: float
    palm_height: float
    ff_pos: tuple[float, float]
    mf_pos: tuple[float, float]
    rf_pos: tuple[float, float]
    ff_orient: float
    mf_orient: float
    rf_orient: float
    proximal_len: float
    middle_len: float
    distal_len: float

    def to_vector(self) -> np.ndarray:
        return np.array(
            [
                self.palm_width,
                self.palm_height,
                self.ff_pos[0],
                self.ff_pos[1],
                self.mf_pos[0],
                self.mf_pos[1],
                self.rf_pos[0],
                self.rf_pos[1],
                self.ff_orient,
                self.mf_orient,
                self.rf_orient,
                self.proximal_len,
                self.middle_len,
                self.distal_len,
            ],
            dtype=np.float64,
        )

    @staticmethod
    def from_vector(v: np.ndarray) -> "DesignParams":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (N_DIMS,):
            raise ValueError(f"design vector must have shape ({N_DIMS},), got {v.shape}")
        return DesignParams(
            palm_width=float(v[0]),
            palm_height=float(v[1]),
            ff_pos=(float(v[2]), float(v[3])),
            mf_pos=(float(v[4]), float(v[5])),
            rf_pos=(float(v[6]), float(v[7])),
            ff_orient=float(v[8]),
            mf_orient=float(v[9]),
            rf_orient=float(v[10]),
            proximal_len=float(v[11]),
            middle_len=float(v[12]),
            distal_len=float(v[13]),
        )

    def link_lengths(self) -> tuple[float, float, float]:
        return (self.proximal_len, self.middle_len, self.distal_len)

    def to_json_dict(self) -> dict:
        d = {name: float(x) for name, x in zip(FIELD_NAMES, self.to_vector())}
        d["version"] = DESIGN_JSON_VERSION
        return d

    @staticmethod
    def from_json_dict(d: dict) -> "DesignParams":
        if d.get("version") != DESIGN_JSON_VERSION:
            raise ValueError(f"unsupported design version: {d.get('version')!r}")
        return DesignParams.from_vector(np.array([d[name] for name in FIELD_NAMES]))

    def to_csv_row(self) -> str:
        return ",".join(repr(float(x)) for x in self.to_vector())

    @staticmethod
    def csv_header() -> str:
        return ",".join(FIELD_NAMES)


@dataclass(frozen=True)
class DesignBounds:
    """Element-wise lower/upper bounds and mutation half-ranges."""

    lower: np.ndarray
    upper: np.ndarray
    mutation_range: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=np.float64)
        upper = np.asarray(self.upper, dtype=np.float64)
        mut = np.asarray(self.mutation_range, dtype=np.float64)
        for name, arr in (("lower", lower), ("upper", upper), ("mutation_range", mut)):
            if arr.shape != (N_DIMS,):
                raise ValueError(f"{name} must have shape ({N_DIMS},)")
        if not np.all(lower < upper):
            raise ValueError("lower bounds must be strictly below upper bounds")
        if not np.all(mut >= 0):
            raise ValueError("mutation ranges must be non-negative")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "mutation_range", mut)

    @property
    def span(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, theta: DesignParams, atol: float = 1e-9) -> bool:
        v = theta.to_vector()
        return bool(np.all(v >= self.lower - atol) and np.all(v <= self.upper + atol))

    def normalize(self, theta: DesignParams) -> np.ndarray:
        return (theta.to_vector() - self.lower) / self.span

    def denormalize(self, u: np.ndarray) -> DesignParams:
        return DesignParams.from_vector(self.lower + np.asarray(u) * self.span)


# Search ranges for the 14 design dimensions, in flat-vector order.
_LOWER = np.array([69, 69, 8, 64, -20, 64, -56, 64, 0, -35, -45, 35, 8, 25], dtype=np.float64)
_UPPER = np.array([99, 99, 48, 84, 20, 84, -16, 84, 45, 35, 0, 55, 28, 45], dtype=np.float64)

DEFAULT_MUTATION_FRACTION = 0.05


def default_bounds(mutation_fraction: float = DEFAULT_MUTATION_FRACTION) -> DesignBounds:
    """Standard search box with mutation half-range as a fraction of each span."""
    return DesignBounds(_LOWER, _UPPER, mutation_fraction * (_UPPER - _LOWER))


# Reference designs (v3/v5: hand-iterated starting points; v6/v7: optimized).
DESIGN_V3 = DesignParams(84, 84, (28, 84), (0, 84), (-28, 84), 0, 0, 0, 45, 20, 35)
DESIGN_V5 = DesignParams(84, 84, (28, 84), (0, 84), (-28, 84), 0, 0, 0, 45, 20, 35)
DESIGN_V6 = DesignParams(92, 74, (28, 84), (0, 84), (-36, 84), 0, 0, 0, 45, 18, 35)
DESIGN_V7 = DesignParams(92, 74, (29, 83), (0, 84), (-36, 83), 2.9, 0, -2.9, 45, 18, 35)


def crossover(a: DesignParams, b: DesignParams, rng: np.random.Generator) -> DesignParams:
    """Element-wise uniform crossover: each dimension taken from a or b with p=0.5."""
    va, vb = a.to_vector(), b.to_vector()
    take_a = rng.random(N_DIMS) < 0.5
    return DesignParams.from_vector(np.where(take_a, va, vb))


def mutate(theta: DesignParams, bounds: DesignBounds, rng: np.random.Generator) -> DesignParams:
    """Add uniform noise in [-mutation_range, +mutation_range] per dimension.

    The result is not clamped; apply clamp() separately to stay in bounds.
    """
    noise = rng.uniform(-bounds.mutation_range, bounds.mutation_range)
    return DesignParams.from_vector(theta.to_vector() + noise)


def clamp(theta: DesignParams, bounds: DesignBounds) -> DesignParams:
    """Project onto the bound box, element-wise."""
    return DesignParams.from_vector(np.clip(theta.to_vector(), bounds.lower, bounds.upper))


def normalized_distance(a: DesignParams, b: DesignParams, bounds: DesignBounds) -> float:
    """Euclidean distance after rescaling each dimension to unit span.

    Raw dimensions mix mm and deg, so distances are taken in the
    bound-normalized space where every dimension spans [0, 1].
    """
    d = (a.to_vector() - b.to_vector()) / bounds.span
    return float(np.linalg.norm(d))


# Relative slack when deciding that the remaining distance fits in one step,
# so that near-exact multiples of the step size do not spawn a microscopic
# final stone.
_STEP_SNAP_RTOL = 1e-12


def interp_step(
    current: DesignParams,
    target: DesignParams,
    step: float,
    bounds: DesignBounds,
) -> DesignParams:
    """Move min(step, remaining distance) toward target in normalized space.

    The final step lands exactly on the target instead of overshooting.
    """
    if step <= 0:
        raise ValueError("step size must be positive")
    u_cur = bounds.normalize(current)
    u_tgt = bounds.normalize(target)
    delta = u_tgt - u_cur
    dist = float(np.linalg.norm(delta))
    if dist == 0.0:
        raise ZeroDistanceError("current and target designs are identical")
    if dist <= step * (1.0 + _STEP_SNAP_RTOL):
        return target
    return bounds.denormalize(u_cur + (step / dist) * delta)


def interp_path(
    source: DesignParams,
    target: DesignParams,
    step: float,
    bounds: DesignBounds,
) -> list[DesignParams]:
    """All stepping stones from source (exclusive) to target (inclusive)."""
    stones = []
    cur = source
    while normalized_distance(cur, target, bounds) > 0:
        cur = interp_step(cur, target, step, bounds)
        stones.append(cur)
    return stones
