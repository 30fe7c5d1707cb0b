"""Hand kinematics derived from a design vector.

Palm frame: origin at the bottom-center of the palm rectangle, x to the right,
y up. The palm spans x in [-w/2, w/2], y in [0, h]. Index/middle/ring fingers
attach at their design (x, y) positions and at rest point away from the palm
(+y, tilted by their base orientation); the thumb attaches at the bottom-edge
center and at rest points away in -y. Positive flexion curls every finger
inward over the palm, so the rest pose leaves the workspace above the palm
clear.

All four fingers share the same three link lengths and joint limits:
MCP [-20, 90], PIP [0, 110], DIP [0, 90] degrees of flexion.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .design import DesignBounds, DesignParams, default_bounds

FINGERS = ("thumb", "ff", "mf", "rf")
N_FINGERS = 4
N_JOINTS = 12

JOINT_LOWER = np.array([-20.0, 0.0, 0.0])   # MCP, PIP, DIP flexion (deg)
JOINT_UPPER = np.array([90.0, 110.0, 90.0])

CAPSULE_RADIUS_MM = 7.0

# Sample fractions along each link used for contact queries; the 1.0 entry is
# the link tip.
_LINK_FRACTIONS = np.array([1.0 / 3.0, 2.0 / 3.0, 1.0])
N_SAMPLES = N_FINGERS * 3 * len(_LINK_FRACTIONS)

# Workspace center used for goal sampling and observations. Fixed across
# designs (mid-range palm center) so episode configs transfer between designs.
NOMINAL_CENTER = np.array([0.0, 42.0])


class OutOfBoundsDesignError(ValueError):
    pass


@dataclass(frozen=True)
class HandModel:
    """Kinematic description of one hand; arrays are indexed by FINGERS order."""

    base_pos: np.ndarray        # (4, 2) mm
    base_dir_deg: np.ndarray    # (4,) world direction of the straight finger
    flex_sign: np.ndarray       # (4,) +1 curls CCW, -1 curls CW
    link_lengths: np.ndarray    # (3,) mm, shared by all fingers
    palm_size: tuple[float, float]
    capsule_radius: float = CAPSULE_RADIUS_MM
    joint_lower: np.ndarray = field(default_factory=lambda: JOINT_LOWER.copy())
    joint_upper: np.ndarray = field(default_factory=lambda: JOINT_UPPER.copy())

    @property
    def palm_center(self) -> np.ndarray:
        return np.array([0.0, self.palm_size[1] / 2.0])


def build_hand(theta: DesignParams, bounds: DesignBounds | None = None) -> HandModel:
    """Map a design vector to hand kinematics."""
    if bounds is None:
        bounds = default_bounds()
    if not bounds.contains(theta):
        raise OutOfBoundsDesignError("design is outside the bound box")

    base_pos = np.array(
        [
            (0.0, 0.0),          # thumb at bottom-edge center
            theta.ff_pos,
            theta.mf_pos,
            theta.rf_pos,
        ],
        dtype=np.float64,
    )
    # Positive orientation tilts a top finger toward the middle finger (CCW
    # from +y). The thumb rests pointing -y, below the palm.
    base_dir = np.array(
        [
            -90.0,
            90.0 + theta.ff_orient,
            90.0 + theta.mf_orient,
            90.0 + theta.rf_orient,
        ]
    )
    center = np.array([0.0, theta.palm_height / 2.0])
    flex_sign = np.empty(N_FINGERS)
    for i in range(N_FINGERS):
        a = np.deg2rad(base_dir[i])
        d = np.array([np.cos(a), np.sin(a)])
        v = center - base_pos[i]
        flex_sign[i] = 1.0 if d[0] * v[1] - d[1] * v[0] >= 0 else -1.0

    return HandModel(
        base_pos=base_pos,
        base_dir_deg=base_dir,
        flex_sign=flex_sign,
        link_lengths=np.array(theta.link_lengths(), dtype=np.float64),
        palm_size=(theta.palm_width, theta.palm_height),
    )


def fk_sample_points(hand: HandModel, q_deg: np.ndarray) -> np.ndarray:
    """Contact sample points along every link for a batch of joint vectors.

    q_deg: (B, 12) flexion angles; returns (B, N_SAMPLES, 2) points in mm.
    Sample i belongs to finger SAMPLE_FINGER[i].
    """
    q = np.asarray(q_deg, dtype=np.float64).reshape(-1, N_FINGERS, 3)
    ang = np.deg2rad(hand.base_dir_deg)[None, :, None] + (
        hand.flex_sign[None, :, None] * np.cumsum(np.deg2rad(q), axis=2)
    )
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=-1)          # (B, 4, 3, 2)
    seg = dirs * hand.link_lengths[None, None, :, None]
    ends = hand.base_pos[None, :, None, :] + np.cumsum(seg, axis=2)
    starts = np.concatenate(
        [np.broadcast_to(hand.base_pos[None, :, None, :], ends[:, :, :1, :].shape),
         ends[:, :, :2, :]],
        axis=2,
    )
    f = _LINK_FRACTIONS[None, None, None, :, None]
    pts = starts[..., None, :] + f * (ends - starts)[..., None, :]  # (B, 4, 3, S, 2)
    return pts.reshape(q.shape[0], N_SAMPLES, 2)


# Finger index of each contact sample point.
SAMPLE_FINGER = np.repeat(np.arange(N_FINGERS), 3 * len(_LINK_FRACTIONS))
# Link index (0 proximal, 1 middle, 2 distal) of each sample point.
SAMPLE_LINK = np.tile(np.repeat(np.arange(3), len(_LINK_FRACTIONS)), N_FINGERS)
