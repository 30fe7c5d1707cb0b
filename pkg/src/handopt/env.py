"""Deterministic planar quasi-static manipulation simulator.

Contacts are resolved with penalty springs along the object's signed-distance
normals, friction is a viscous drag capped by the Coulomb cone, and the object
moves quasi-statically: velocity proportional to net force (damping-dominated,
no inertia). Everything is a pure function of explicit inputs, so identical
(config, action sequence) pairs give bitwise-identical trajectories.

Internally the stepping math is vectorized over a batch of episodes; the
single-episode Simulator API is a batch of one.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace

import numpy as np

from . import hand as hand_mod
from .design import DesignBounds, DesignParams
from .hand import NOMINAL_CENTER, HandModel, build_hand, fk_sample_points
from .objects import ObjectSpec, object_sdf, wrap_angle_deg

N_INSTANCES = 18
OBS_DIM = 36
ACTION_DIM = 8

GOAL_RADIUS_MM = 60.0


class InvalidConfigError(ValueError):
    pass


class NumericalBlowupError(RuntimeError):
    pass


@dataclass(frozen=True)
class PhysicsConfig:
    """Contact/integration gains and task tolerances."""

    k_n: float = 200.0          # normal penalty stiffness, N/m of penetration
    mu: float = 0.8             # Coulomb friction coefficient
    c_lin: float = 50.0         # linear damping, N·s/m
    c_rot: float = 0.05         # rotational damping, N·m·s/rad
    c_tan: float = 1000.0       # tangential viscous gain before the Coulomb cap
    dt: float = 0.02            # s
    horizon: int = 300
    hold_steps: int = 10
    tol_pos_mm: float = 10.0
    tol_ang_deg: float = 10.0
    joint_rate_deg: float = 120.0   # max joint speed at |action| = 1
    dip_coupling: float = 0.7       # DIP rate = coupling * PIP rate
    w_pos: float = 1.0
    w_ang: float = 0.5
    w_contact: float = 0.1
    w_success: float = 5.0
    blowup_pos_mm: float = 1e4
    blowup_force_n: float = 1e5


@dataclass(frozen=True)
class EpisodeConfig:
    """One evaluation episode. The disturbance direction is fixed throughout."""

    object: ObjectSpec
    goal_pose: np.ndarray           # (3,) x mm, y mm, angle deg
    initial_object_pose: np.ndarray
    disturbance_mag: float          # N
    disturbance_dir: np.ndarray     # (2,) unit vector
    seed: int
    horizon: int = 300
    dt: float = 0.02

    def __post_init__(self):
        object.__setattr__(self, "goal_pose", np.asarray(self.goal_pose, dtype=np.float64))
        object.__setattr__(
            self, "initial_object_pose", np.asarray(self.initial_object_pose, dtype=np.float64)
        )
        d = np.asarray(self.disturbance_dir, dtype=np.float64)
        if not np.isclose(np.linalg.norm(d), 1.0, atol=1e-9):
            raise InvalidConfigError("disturbance direction must be a unit vector")
        if self.disturbance_mag < 0:
            raise InvalidConfigError("disturbance magnitude must be non-negative")
        object.__setattr__(self, "disturbance_dir", d)

    @property
    def disturbance_force(self) -> np.ndarray:
        return self.disturbance_mag * self.disturbance_dir


def episode_config(
    instance: ObjectSpec,
    force_mag: float,
    seed: int,
    physics: PhysicsConfig | None = None,
) -> EpisodeConfig:
    """Derive one episode deterministically from a seed.

    Goal position uniform in a disc around the nominal palm center, goal angle
    uniform, disturbance direction uniform on the circle.
    """
    phys = physics or PhysicsConfig()
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF]))
    r = GOAL_RADIUS_MM * np.sqrt(rng.random())
    a = rng.uniform(-np.pi, np.pi)
    goal_xy = NOMINAL_CENTER + r * np.array([np.cos(a), np.sin(a)])
    goal_ang = rng.uniform(-180.0, 180.0)
    fa = rng.uniform(-np.pi, np.pi)
    return EpisodeConfig(
        object=instance,
        goal_pose=np.array([goal_xy[0], goal_xy[1], goal_ang]),
        initial_object_pose=np.array([NOMINAL_CENTER[0], NOMINAL_CENTER[1], 0.0]),
        disturbance_mag=float(force_mag),
        disturbance_dir=np.array([np.cos(fa), np.sin(fa)]),
        seed=int(seed),
        horizon=phys.horizon,
        dt=phys.dt,
    )


@dataclass(frozen=True)
class Contact:
    finger: int
    link: int
    point: np.ndarray
    normal: np.ndarray
    normal_force: float
    tangent_force: float


@dataclass(frozen=True)
class SimState:
    joint_angles: np.ndarray    # (12,) flexion deg
    object_pose: np.ndarray     # (3,) x mm, y mm, angle deg
    object_vel: np.ndarray      # (3,) vx m/s, vy m/s, omega rad/s
    step_count: int
    hold_counter: int
    contacts: tuple[Contact, ...] = ()


# ---------------------------------------------------------------------------
# Batched core
# ---------------------------------------------------------------------------

_JOINT_LOWER_12 = np.tile(hand_mod.JOINT_LOWER, hand_mod.N_FINGERS)
_JOINT_UPPER_12 = np.tile(hand_mod.JOINT_UPPER, hand_mod.N_FINGERS)


def _integrate_joints(phys: PhysicsConfig, q: np.ndarray, actions: np.ndarray) -> np.ndarray:
    a = np.clip(np.asarray(actions, dtype=np.float64), -1.0, 1.0).reshape(-1, 4, 2)
    dq = np.empty(q.shape[0] * 12).reshape(-1, 4, 3)
    rate = phys.joint_rate_deg * phys.dt
    dq[:, :, 0] = a[:, :, 0] * rate
    dq[:, :, 1] = a[:, :, 1] * rate
    dq[:, :, 2] = phys.dip_coupling * a[:, :, 1] * rate
    q_new = q + dq.reshape(-1, 12)
    return np.clip(q_new, _JOINT_LOWER_12, _JOINT_UPPER_12)


def _contact_forces(
    hand: HandModel,
    obj: ObjectSpec,
    phys: PhysicsConfig,
    pts: np.ndarray,        # (B, P, 2) current sample points, mm
    v_f: np.ndarray,        # (B, P, 2) sample-point velocities, m/s
    pose: np.ndarray,       # (B, 3)
    vel: np.ndarray,        # (B, 3)
):
    """Penalty normal forces plus cone-capped viscous friction, per point."""
    sdf, n = object_sdf(obj, pose, pts)
    depth_mm = hand.capsule_radius - sdf
    active = depth_mm > 0.0
    f_n = np.where(active, phys.k_n * depth_mm * 1e-3, 0.0)

    t = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    r_m = (pts - pose[:, None, :2]) * 1e-3
    omega = vel[:, 2][:, None]
    v_obj_pt = np.stack(
        [vel[:, 0][:, None] - omega * r_m[..., 1],
         vel[:, 1][:, None] + omega * r_m[..., 0]],
        axis=-1,
    )
    v_rel_t = np.sum((v_obj_pt - v_f) * t, axis=-1)
    cap = phys.mu * f_n
    f_t = np.clip(-phys.c_tan * v_rel_t, -cap, cap)

    force_pts = -n * f_n[..., None] + t * f_t[..., None]
    torque = np.sum(r_m[..., 0] * force_pts[..., 1] - r_m[..., 1] * force_pts[..., 0], axis=-1)
    force = np.sum(force_pts, axis=1)
    return force, torque, f_n, f_t, n, active


def _finger_contact_count(active: np.ndarray) -> np.ndarray:
    """Number of distinct fingers with at least one active contact point."""
    per_finger = np.stack(
        [active[:, hand_mod.SAMPLE_FINGER == f].any(axis=1) for f in range(hand_mod.N_FINGERS)],
        axis=1,
    )
    return per_finger.sum(axis=1)


def _pose_errors(pose: np.ndarray, goal: np.ndarray, obj: ObjectSpec):
    pos_err = np.linalg.norm(pose[:, :2] - goal[:, :2], axis=1)
    ang_err = wrap_angle_deg(pose[:, 2] - goal[:, 2], obj.symmetry_period_deg)
    return pos_err, ang_err


def _step_batch(
    hand: HandModel,
    obj: ObjectSpec,
    phys: PhysicsConfig,
    q: np.ndarray,
    pose: np.ndarray,
    vel: np.ndarray,
    actions: np.ndarray,
    dist_force: np.ndarray,     # (B, 2) N
):
    """One physics step for a batch of episodes. Returns the new arrays plus
    the per-point contact data used for rewards and invariant checks."""
    q_new = _integrate_joints(phys, q, actions)
    pts_old = fk_sample_points(hand, q)
    pts = fk_sample_points(hand, q_new)
    v_f = (pts - pts_old) / phys.dt * 1e-3

    force, torque, f_n, f_t, n, active = _contact_forces(hand, obj, phys, pts, v_f, pose, vel)
    force = force + dist_force

    v_new = force / phys.c_lin
    omega_new = torque / phys.c_rot
    pose_new = pose.copy()
    pose_new[:, :2] += v_new * phys.dt * 1e3
    pose_new[:, 2] += omega_new * phys.dt * (180.0 / np.pi)
    vel_new = np.concatenate([v_new, omega_new[:, None]], axis=1)

    if (
        not np.all(np.isfinite(pose_new))
        or np.any(np.abs(pose_new[:, :2]) > phys.blowup_pos_mm)
        or np.any(np.abs(force) > phys.blowup_force_n)
    ):
        raise NumericalBlowupError("object state exceeded sanity bounds; check gains")
    return q_new, pose_new, vel_new, (pts, f_n, f_t, n, active)


def _step_reward(
    obj: ObjectSpec,
    phys: PhysicsConfig,
    pose: np.ndarray,
    goal: np.ndarray,
    n_fingers: np.ndarray,
):
    pos_err, ang_err = _pose_errors(pose, goal, obj)
    caged = n_fingers >= 2
    success_cond = caged & (pos_err <= phys.tol_pos_mm) & (np.abs(ang_err) <= phys.tol_ang_deg)
    r = (
        -phys.w_pos * pos_err / 100.0
        - phys.w_ang * np.abs(ang_err) / 180.0
        + phys.w_contact * caged
        + phys.w_success * success_cond
    )
    return r, success_cond


def make_observation(
    obj: ObjectSpec,
    phys: PhysicsConfig,
    q: np.ndarray,
    pose: np.ndarray,
    goal: np.ndarray,
) -> np.ndarray:
    """36-dim policy observation: normalized joints, pose error, pose in palm
    frame, and the one-hot object instance."""
    mid = 0.5 * (_JOINT_LOWER_12 + _JOINT_UPPER_12)
    half = 0.5 * (_JOINT_UPPER_12 - _JOINT_LOWER_12)
    q_n = (q - mid) / half

    ang_err = wrap_angle_deg(pose[:, 2] - goal[:, 2], obj.symmetry_period_deg)
    err = np.stack(
        [(goal[:, 0] - pose[:, 0]) / 100.0, (goal[:, 1] - pose[:, 1]) / 100.0, ang_err / 180.0],
        axis=1,
    )
    in_palm = np.stack(
        [
            (pose[:, 0] - NOMINAL_CENTER[0]) / 100.0,
            (pose[:, 1] - NOMINAL_CENTER[1]) / 100.0,
            wrap_angle_deg(pose[:, 2]) / 180.0,
        ],
        axis=1,
    )
    one_hot = np.zeros((q.shape[0], N_INSTANCES))
    one_hot[:, obj.one_hot_index] = 1.0
    return np.concatenate([q_n, err, in_palm, one_hot], axis=1)


# ---------------------------------------------------------------------------
# Single-episode API
# ---------------------------------------------------------------------------


class Simulator:
    """Owns the hand model and physics gains; episodes are pure functions of
    EpisodeConfig plus an action source. One instance must not be stepped
    concurrently, but any number of instances may run in parallel."""

    def __init__(
        self,
        theta: DesignParams,
        physics: PhysicsConfig | None = None,
        bounds: DesignBounds | None = None,
    ):
        self.physics = physics or PhysicsConfig()
        self.hand = build_hand(theta, bounds)

    def reset(self, config: EpisodeConfig) -> SimState:
        q = np.zeros(12)
        pose = config.initial_object_pose.copy()
        pts = fk_sample_points(self.hand, q[None, :])
        sdf, _ = object_sdf(config.object, pose[None, :], pts)
        if np.any(sdf < self.hand.capsule_radius):
            raise InvalidConfigError("object initially penetrates the hand at rest")
        return SimState(
            joint_angles=q,
            object_pose=pose,
            object_vel=np.zeros(3),
            step_count=0,
            hold_counter=0,
            contacts=(),
        )

    def step(self, state: SimState, action: np.ndarray, config: EpisodeConfig) -> SimState:
        q, pose, vel, contact_data = _step_batch(
            self.hand,
            config.object,
            self.physics,
            state.joint_angles[None, :],
            state.object_pose[None, :].copy(),
            state.object_vel[None, :],
            np.asarray(action, dtype=np.float64)[None, :],
            config.disturbance_force[None, :],
        )
        pts, f_n, f_t, n, active = contact_data
        contacts = tuple(
            Contact(
                finger=int(hand_mod.SAMPLE_FINGER[i]),
                link=int(hand_mod.SAMPLE_LINK[i]),
                point=pts[0, i].copy(),
                normal=n[0, i].copy(),
                normal_force=float(f_n[0, i]),
                tangent_force=float(f_t[0, i]),
            )
            for i in np.flatnonzero(active[0])
        )
        n_fingers = _finger_contact_count(active)
        _, success_cond = _step_reward(
            config.object, self.physics, pose, config.goal_pose[None, :], n_fingers
        )
        hold = state.hold_counter + 1 if bool(success_cond[0]) else 0
        return SimState(
            joint_angles=q[0],
            object_pose=pose[0],
            object_vel=vel[0],
            step_count=state.step_count + 1,
            hold_counter=hold,
            contacts=contacts,
        )

    def reward(self, state: SimState, action, config: EpisodeConfig) -> float:
        n_fingers = np.array([len({c.finger for c in state.contacts})])
        r, _ = _step_reward(
            config.object,
            self.physics,
            state.object_pose[None, :],
            config.goal_pose[None, :],
            n_fingers,
        )
        return float(r[0])

    def is_success(
        self,
        state: SimState,
        config: EpisodeConfig,
        tol_pos_mm: float | None = None,
        tol_ang_deg: float | None = None,
        hold_steps: int | None = None,
    ) -> bool:
        """True iff the success condition has held for hold_steps consecutive
        steps, where the per-step condition uses the given tolerances."""
        phys = self.physics
        tol_pos = phys.tol_pos_mm if tol_pos_mm is None else tol_pos_mm
        tol_ang = phys.tol_ang_deg if tol_ang_deg is None else tol_ang_deg
        hold = phys.hold_steps if hold_steps is None else hold_steps
        if (tol_pos, tol_ang) != (phys.tol_pos_mm, phys.tol_ang_deg):
            # Non-default tolerances: re-check the instantaneous condition
            # (the hold counter was accumulated under the defaults).
            pos_err, ang_err = _pose_errors(
                state.object_pose[None, :], config.goal_pose[None, :], config.object
            )
            n_fingers = len({c.finger for c in state.contacts})
            cond = (
                n_fingers >= 2
                and float(pos_err[0]) <= tol_pos
                and abs(float(ang_err[0])) <= tol_ang
            )
            return cond and state.hold_counter >= hold
        return state.hold_counter >= hold


# ---------------------------------------------------------------------------
# Batched rollouts
# ---------------------------------------------------------------------------


@dataclass
class TrajectoryRecord:
    """Per-step arrays for one recorded episode (batch index 0)."""

    joint_angles: list = field(default_factory=list)
    object_pose: list = field(default_factory=list)
    n_contacts: list = field(default_factory=list)
    reward: list = field(default_factory=list)
    normal_forces: list = field(default_factory=list)
    tangent_forces: list = field(default_factory=list)


def run_episodes(
    hand: HandModel,
    phys: PhysicsConfig,
    configs: list[EpisodeConfig],
    act_fn,
    gamma: float,
    record: TrajectoryRecord | None = None,
):
    """Run a batch of episodes with a shared object instance.

    act_fn maps observations (B, 36) -> actions (B, 8) and must be pure.
    Episodes terminate early once the success condition has held for
    phys.hold_steps steps. Returns (returns, successes, steps_used) arrays.

    All configs must share the same object instance and horizon; callers with
    mixed instances should group episodes per instance.
    """
    B = len(configs)
    obj = configs[0].object
    horizon = configs[0].horizon
    for cfg in configs:
        if cfg.object.one_hot_index != obj.one_hot_index:
            raise ValueError("run_episodes requires a homogeneous object batch")
        if cfg.horizon != horizon:
            raise ValueError("run_episodes requires a homogeneous horizon")

    q = np.zeros((B, 12))
    pose = np.stack([cfg.initial_object_pose for cfg in configs]).astype(np.float64)
    vel = np.zeros((B, 3))
    goal = np.stack([cfg.goal_pose for cfg in configs]).astype(np.float64)
    dist = np.stack([cfg.disturbance_force for cfg in configs]).astype(np.float64)

    hold = np.zeros(B, dtype=np.int64)
    active_ep = np.ones(B, dtype=bool)
    returns = np.zeros(B)
    success = np.zeros(B, dtype=bool)
    steps_used = np.zeros(B, dtype=np.int64)
    discount = np.ones(B)

    for _t in range(horizon):
        if not active_ep.any():
            break
        obs = make_observation(obj, phys, q, pose, goal)
        actions = act_fn(obs)
        q_new, pose_new, vel_new, contact_data = _step_batch(
            hand, obj, phys, q, pose, vel, actions, dist
        )
        # Freeze episodes that already terminated.
        upd = active_ep[:, None]
        q = np.where(upd, q_new, q)
        pose = np.where(upd, pose_new, pose)
        vel = np.where(upd, vel_new, vel)

        _pts, f_n, f_t, _n, active_pts = contact_data
        n_fingers = _finger_contact_count(active_pts)
        r, success_cond = _step_reward(obj, phys, pose, goal, n_fingers)
        returns += np.where(active_ep, discount * r, 0.0)
        discount = np.where(active_ep, discount * gamma, discount)
        hold = np.where(active_ep, np.where(success_cond, hold + 1, 0), hold)
        steps_used += active_ep

        if record is not None and active_ep[0]:
            record.joint_angles.append(q[0].copy())
            record.object_pose.append(pose[0].copy())
            record.n_contacts.append(int(active_pts[0].sum()))
            record.reward.append(float(r[0]))
            record.normal_forces.append(f_n[0].copy())
            record.tangent_forces.append(f_t[0].copy())

        done = hold >= phys.hold_steps
        success |= active_ep & done
        active_ep &= ~done

    return returns, success, steps_used


def write_trajectory_csv(fileobj: io.TextIOBase, record: TrajectoryRecord) -> None:
    """Dump a recorded episode as CSV, one row per step."""
    header = "t," + ",".join(f"q{i}" for i in range(12)) + ",obj_x,obj_y,obj_phi,n_contacts,reward"
    fileobj.write(header + "\n")
    for t, (q, pose, nc, r) in enumerate(
        zip(record.joint_angles, record.object_pose, record.n_contacts, record.reward)
    ):
        row = [str(t)]
        row += [repr(float(x)) for x in q]
        row += [repr(float(pose[0])), repr(float(pose[1])), repr(float(pose[2]))]
        row += [str(nc), repr(r)]
        fileobj.write(",".join(row) + "\n")
