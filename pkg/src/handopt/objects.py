"""Benchmark object geometry: 6 shapes x 3 uniform scales, with 2D signed distance.

Every object is a union of simple primitives (discs, oriented boxes, an
annulus). Signed distance is negative inside, and each query also returns the
outward unit normal, which the contact model uses as the push direction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SHAPES = ("barbell", "board", "cross3d", "pen", "ring", "sphere")
SCALES = (0.75, 1.0, 1.25)


class UnknownShapeError(ValueError):
    pass


class UnknownScaleError(ValueError):
    pass


@dataclass(frozen=True)
class Disc:
    center: tuple[float, float]
    radius: float


@dataclass(frozen=True)
class Box:
    center: tuple[float, float]
    half_extents: tuple[float, float]
    angle_deg: float = 0.0


@dataclass(frozen=True)
class Annulus:
    center: tuple[float, float]
    ring_radius: float
    half_thickness: float


Primitive = Disc | Box | Annulus


@dataclass(frozen=True)
class ObjectSpec:
    """One of the 18 benchmark object instances."""

    shape_id: str
    scale: float
    primitives: tuple[Primitive, ...]
    mass: float
    one_hot_index: int

    # Rotational symmetry of the shape: pose angle errors are reduced modulo
    # this period. 0 means fully rotation-symmetric (angle error is always 0).
    symmetry_period_deg: float = 360.0

    @property
    def label(self) -> str:
        return f"{self.shape_id}@{self.scale}"


_BASE_MASS_KG = 0.1

# Base primitive layouts at scale 1.0 (mm). The angle-symmetry period of each
# shape is listed alongside.
_SYMMETRY = {
    "barbell": 180.0,
    "board": 180.0,
    "cross3d": 90.0,
    "pen": 180.0,
    "ring": 0.0,
    "sphere": 0.0,
}


def _base_primitives(shape_id: str, s: float) -> tuple[Primitive, ...]:
    if shape_id == "sphere":
        return (Disc((0, 0), 25 * s),)
    if shape_id == "board":
        return (Box((0, 0), (40 * s, 25 * s)),)
    if shape_id == "pen":
        return (Box((0, 0), (50 * s, 4 * s)),)
    if shape_id == "cross3d":
        return (
            Box((0, 0), (30 * s, 7.5 * s), 0.0),
            Box((0, 0), (30 * s, 7.5 * s), 90.0),
        )
    if shape_id == "barbell":
        return (
            Disc((-25 * s, 0), 15 * s),
            Disc((25 * s, 0), 15 * s),
            Box((0, 0), (25 * s, 4 * s)),
        )
    if shape_id == "ring":
        return (Annulus((0, 0), 30 * s, 4 * s),)
    raise UnknownShapeError(f"unknown shape {shape_id!r}")


def make_object(shape_id: str, scale: float) -> ObjectSpec:
    """Canonical primitive decomposition of one object instance."""
    if shape_id not in SHAPES:
        raise UnknownShapeError(f"unknown shape {shape_id!r}; expected one of {SHAPES}")
    scale_idx = None
    for i, s in enumerate(SCALES):
        if abs(scale - s) < 1e-12:
            scale_idx = i
            break
    if scale_idx is None:
        raise UnknownScaleError(f"unknown scale {scale!r}; expected one of {SCALES}")
    shape_idx = SHAPES.index(shape_id)
    return ObjectSpec(
        shape_id=shape_id,
        scale=float(scale),
        primitives=_base_primitives(shape_id, float(scale)),
        mass=_BASE_MASS_KG * float(scale) ** 2,
        one_hot_index=3 * shape_idx + scale_idx,
        symmetry_period_deg=_SYMMETRY[shape_id],
    )


def all_instances() -> list[ObjectSpec]:
    """All 18 benchmark instances, ordered by one_hot_index."""
    return [make_object(shape, s) for shape in SHAPES for s in SCALES]


def parse_instance(label: str) -> ObjectSpec:
    """Parse a 'shape@scale' label, e.g. 'sphere@1.0'."""
    if "@" not in label:
        raise UnknownShapeError(f"instance label must look like 'shape@scale', got {label!r}")
    shape_id, scale_str = label.split("@", 1)
    return make_object(shape_id, float(scale_str))


def _safe_unit(v: np.ndarray, fallback=(1.0, 0.0)) -> np.ndarray:
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    unit = np.divide(v, norm, out=np.zeros_like(v), where=norm > 0)
    degenerate = (norm[..., 0] == 0)
    unit[degenerate] = fallback
    return unit


def _disc_sdf(prim: Disc, pts: np.ndarray):
    rel = pts - np.asarray(prim.center)
    dist = np.linalg.norm(rel, axis=-1)
    return dist - prim.radius, _safe_unit(rel)


def _annulus_sdf(prim: Annulus, pts: np.ndarray):
    rel = pts - np.asarray(prim.center)
    radial = np.linalg.norm(rel, axis=-1)
    sdf = np.abs(radial - prim.ring_radius) - prim.half_thickness
    n = _safe_unit(rel) * np.where(radial >= prim.ring_radius, 1.0, -1.0)[..., None]
    return sdf, n


def _box_sdf(prim: Box, pts: np.ndarray):
    rel = pts - np.asarray(prim.center)
    if prim.angle_deg != 0.0:
        a = np.deg2rad(prim.angle_deg)
        c, s = np.cos(a), np.sin(a)
        rel = np.stack([c * rel[..., 0] + s * rel[..., 1],
                        -s * rel[..., 0] + c * rel[..., 1]], axis=-1)
    half = np.asarray(prim.half_extents)
    d = np.abs(rel) - half
    outside = np.maximum(d, 0.0)
    out_norm = np.linalg.norm(outside, axis=-1)
    sdf = out_norm + np.minimum(np.maximum(d[..., 0], d[..., 1]), 0.0)

    sgn = np.where(rel >= 0, 1.0, -1.0)
    n_out = _safe_unit(outside * sgn)
    # Inside (or exactly on an edge): normal along the axis of least penetration.
    use_x = d[..., 0] >= d[..., 1]
    zeros = np.zeros_like(sgn[..., 0])
    n_in = np.where(
        use_x[..., None],
        np.stack([sgn[..., 0], zeros], axis=-1),
        np.stack([zeros, sgn[..., 1]], axis=-1),
    )
    n = np.where((out_norm > 0)[..., None], n_out, n_in)
    if prim.angle_deg != 0.0:
        n = np.stack([c * n[..., 0] - s * n[..., 1],
                      s * n[..., 0] + c * n[..., 1]], axis=-1)
    return sdf, n


def _primitive_sdf(prim: Primitive, pts: np.ndarray):
    if isinstance(prim, Disc):
        return _disc_sdf(prim, pts)
    if isinstance(prim, Annulus):
        return _annulus_sdf(prim, pts)
    if isinstance(prim, Box):
        return _box_sdf(prim, pts)
    raise TypeError(f"unknown primitive {prim!r}")


def object_sdf(obj: ObjectSpec, pose: np.ndarray, pts: np.ndarray):
    """Signed distance and outward world-frame normal for a batch of points.

    pose is (..., 3) = (x mm, y mm, angle deg) and pts is (..., P, 2) in world
    mm, with the leading axes broadcasting (e.g. pose (B, 3), pts (B, P, 2)).
    Union of primitives: minimum distance wins, and the winning primitive
    supplies the normal.
    """
    pose = np.asarray(pose, dtype=np.float64)
    pts = np.asarray(pts, dtype=np.float64)
    a = np.deg2rad(np.asarray(pose[..., 2]))
    c, s = np.cos(a)[..., None], np.sin(a)[..., None]
    rel = pts - pose[..., None, :2]
    local = np.stack([c * rel[..., 0] + s * rel[..., 1],
                      -s * rel[..., 0] + c * rel[..., 1]], axis=-1)

    sdfs, normals = [], []
    for prim in obj.primitives:
        d, n = _primitive_sdf(prim, local)
        sdfs.append(d)
        normals.append(n)
    sdf_stack = np.stack(sdfs)           # (K, ...)
    n_stack = np.stack(normals)          # (K, ..., 2)
    best = np.argmin(sdf_stack, axis=0)
    sdf = np.take_along_axis(sdf_stack, best[None], axis=0)[0]
    n_local = np.take_along_axis(n_stack, best[None, ..., None], axis=0)[0]
    n_world = np.stack([c * n_local[..., 0] - s * n_local[..., 1],
                        s * n_local[..., 0] + c * n_local[..., 1]], axis=-1)
    return sdf, n_world


def signed_distance(obj: ObjectSpec, pose, point):
    """Single-point convenience wrapper around object_sdf."""
    d, n = object_sdf(obj, np.asarray(pose, dtype=np.float64),
                      np.asarray(point, dtype=np.float64)[None, :])
    return float(d[0]), n[0]


def wrap_angle_deg(delta, period: float = 360.0):
    """Wrap an angle difference into (-period/2, period/2].

    period is the rotational symmetry of the shape; 0 collapses every
    difference to 0 (fully symmetric objects have no meaningful orientation).
    """
    delta = np.asarray(delta, dtype=np.float64)
    if period == 0.0:
        return np.zeros_like(delta)
    half = period / 2.0
    return half - np.mod(half - delta, period)
