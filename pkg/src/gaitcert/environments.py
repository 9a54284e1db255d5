"""Environment sampling: leader trajectories, interaction forces, noise.

An environment bundles everything outside the robot that shapes a rollout:
the initial heading perturbation, the leader's intended path, and the
measurement-noise stream for the interaction force.  All of it is a pure
function of (master_seed, env_index).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, TimeOutOfRangeError
from .rng import LANE_FORCE, LANE_HEADING, LANE_TRAJECTORY, make_stream, stream_key

WAYPOINT_RESOLUTION = 0.01  # m, target spacing of the dense polyline
CORNER_HALF_WINDOW = 0.5  # m, heading blend extends this far on each side of a corner


@dataclass(frozen=True)
class LeaderTrajectory:
    """Dense constant-speed polyline the leader walks along.

    Waypoints are spaced uniformly in arc length, so the polyline's total
    length equals speed * duration by construction.
    """

    waypoints: np.ndarray  # (n+1, 2)
    duration: float
    speed: float
    spacing: float

    def __post_init__(self):
        wp = np.ascontiguousarray(np.asarray(self.waypoints, dtype=float))
        object.__setattr__(self, "waypoints", wp)
        if wp.ndim != 2 or wp.shape[1] != 2 or wp.shape[0] < 2:
            raise InvalidParameterError("waypoints must be an (n+1, 2) array with n >= 1")
        steps = np.linalg.norm(np.diff(wp, axis=0), axis=1)
        if np.any(np.abs(steps - self.spacing) > 1e-9 * max(self.spacing, 1.0)):
            raise InvalidParameterError("waypoint spacing must be uniform")
        total = steps.sum()
        target = self.speed * self.duration
        if abs(total - target) > 1e-6 * max(target, 1.0):
            raise InvalidParameterError(
                f"polyline length {total:.9f} != speed*duration {target:.9f}"
            )

    @property
    def total_length(self) -> float:
        return self.spacing * (self.waypoints.shape[0] - 1)


@dataclass(frozen=True)
class ImpedanceParams:
    """Spring-damper law turning the leader-robot gap into a force."""

    stiffness: np.ndarray  # 2x2 diagonal, N/m
    damping: np.ndarray  # 2x2 diagonal, N*s/m

    def __post_init__(self):
        for name in ("stiffness", "damping"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.ndim == 0:
                m = np.diag([float(m), float(m)])
            elif m.shape == (2,):
                m = np.diag(m)
            if m.shape != (2, 2) or m[0, 1] != 0 or m[1, 0] != 0:
                raise InvalidParameterError(f"{name} must be a 2x2 diagonal matrix")
            if m[0, 0] < 0 or m[1, 1] < 0:
                raise InvalidParameterError(f"{name} diagonal must be nonnegative")
            object.__setattr__(self, name, m)

    @classmethod
    def isotropic(cls, stiffness: float, damping: float) -> "ImpedanceParams":
        return cls(stiffness=stiffness, damping=damping)


DEFAULT_IMPEDANCE = ImpedanceParams.isotropic(stiffness=30.0, damping=5.0)


@dataclass(frozen=True)
class EnvDistributionParams:
    """Parameters of the distribution environments are drawn from."""

    heading_noise_std: float = math.radians(5.0)
    force_noise_std: float = 1.0
    segment_length: float = 5.0
    segment_count: int = 8
    slope_range: float = math.radians(15.0)
    duration: float = 30.0
    speed: float = 1.25
    master_seed: int = 0

    def __post_init__(self):
        if min(self.heading_noise_std, self.force_noise_std, self.segment_length,
               self.duration, self.speed) < 0 or self.segment_count < 0:
            raise InvalidParameterError("distribution parameters must be nonnegative")
        if not 0 <= self.slope_range <= math.pi / 2:
            raise InvalidParameterError("slope_range must lie in [0, pi/2]")


@dataclass(frozen=True)
class Environment:
    """One sampled task instance: initial condition, leader path, noise stream."""

    env_index: int
    initial_heading: float
    force_noise_seed: tuple[int, int]
    force_noise_std: float
    leader: LeaderTrajectory


def _heading_profile(s: np.ndarray, turns: np.ndarray, segment_length: float,
                     half_window: float) -> np.ndarray:
    """Heading as a function of arc length along the blended polyline.

    Piecewise constant per segment, with each corner's step replaced by a
    C1 quadratic ramp over [corner - half_window, corner + half_window].
    """
    headings = np.concatenate(([0.0], np.cumsum(turns)))
    idx = np.clip(np.floor_divide(s, segment_length).astype(int), 0, len(headings) - 1)
    theta = headings[idx]
    if turns.size:
        corner = np.clip(np.rint(s / segment_length).astype(int), 1, len(headings) - 1)
        d = s - corner * segment_length
        inside = np.abs(d) < half_window
        if np.any(inside):
            u = (d[inside] + half_window) / (2.0 * half_window)
            ramp = np.where(u <= 0.5, 2.0 * u * u, 1.0 - 2.0 * (1.0 - u) ** 2)
            c = corner[inside]
            theta[inside] = headings[c - 1] + turns[c - 1] * ramp
    return theta


def generate_leader_trajectory(
    params: EnvDistributionParams, stream: np.random.Generator
) -> LeaderTrajectory:
    """Sample a leader path: equal-length segments with uniform random turns.

    Segment k's heading is segment k-1's plus a draw from
    U(-slope_range, +slope_range); corners are rounded in heading space,
    which preserves arc length exactly.  The result is truncated to
    speed * duration and resampled at ~1 cm uniform steps.
    """
    if params.segment_count < 1:
        raise InvalidParameterError("segment_count must be >= 1")
    turns = stream.uniform(-params.slope_range, params.slope_range,
                           size=params.segment_count - 1)
    total = params.segment_count * params.segment_length
    target = params.speed * params.duration
    if target <= 0:
        raise InvalidParameterError("speed * duration must be positive")
    if target > total + 1e-9:
        raise InvalidParameterError(
            f"total segment length {total} is shorter than speed*duration {target}"
        )
    n_pts = max(1, round(target / WAYPOINT_RESOLUTION))
    ds = target / n_pts
    half_window = min(CORNER_HALF_WINDOW, params.segment_length / 2.0)
    s_mid = (np.arange(n_pts) + 0.5) * ds
    theta = _heading_profile(s_mid, turns, params.segment_length, half_window)
    waypoints = np.zeros((n_pts + 1, 2))
    np.cumsum(ds * np.cos(theta), out=waypoints[1:, 0])
    np.cumsum(ds * np.sin(theta), out=waypoints[1:, 1])
    return LeaderTrajectory(
        waypoints=waypoints, duration=params.duration, speed=params.speed, spacing=ds
    )


def leader_pose(traj: LeaderTrajectory, t: float) -> tuple[np.ndarray, np.ndarray, float]:
    """Leader position, velocity and heading at time t in [0, duration]."""
    if t < 0.0 or t > traj.duration * (1.0 + 1e-12):
        raise TimeOutOfRangeError(f"t={t} outside [0, {traj.duration}]")
    n = traj.waypoints.shape[0] - 1
    scale = traj.speed / traj.spacing  # same evaluation order as the kernels
    x = min(t * scale, float(n))
    i = min(int(x), n - 1)
    frac = x - i
    w0 = traj.waypoints[i]
    w1 = traj.waypoints[i + 1]
    pos = w0 + frac * (w1 - w0)
    vel = (w1 - w0) * scale
    heading = math.atan2(vel[1], vel[0])
    return pos, vel, heading


def impedance_force(p_leader, v_leader, p_robot, v_robot,
                    params: ImpedanceParams) -> np.ndarray:
    """Interaction force K (p_L - p_R) + N (v_L - v_R)."""
    dp = np.asarray(p_leader, dtype=float) - np.asarray(p_robot, dtype=float)
    dv = np.asarray(v_leader, dtype=float) - np.asarray(v_robot, dtype=float)
    return params.stiffness @ dp + params.damping @ dv


def noisy_force(force, stream: np.random.Generator, noise_std: float) -> np.ndarray:
    """Measurement of the force with iid Gaussian noise per component."""
    if noise_std < 0:
        raise InvalidParameterError("noise_std must be nonnegative")
    return np.asarray(force, dtype=float) + noise_std * stream.standard_normal(2)


def sample_environment(params: EnvDistributionParams, env_index: int) -> Environment:
    """Draw environment env_index from the distribution.

    Deterministic in (params.master_seed, env_index): the heading draw, the
    trajectory draws, and the force-noise stream each use their own
    counter-based sub-stream.
    """
    if env_index < 0:
        raise InvalidParameterError("env_index must be nonnegative")
    heading_stream = make_stream(params.master_seed, LANE_HEADING, env_index)
    initial_heading = params.heading_noise_std * heading_stream.standard_normal()
    traj_stream = make_stream(params.master_seed, LANE_TRAJECTORY, env_index)
    leader = generate_leader_trajectory(params, traj_stream)
    return Environment(
        env_index=env_index,
        initial_heading=float(initial_heading),
        force_noise_seed=stream_key(params.master_seed, LANE_FORCE, env_index),
        force_noise_std=params.force_noise_std,
        leader=leader,
    )
