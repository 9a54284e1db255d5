"""Shared fixtures and scenario builders."""

from __future__ import annotations

import math

import numpy as np
import pytest

from gaitcert.environments import Environment, EnvDistributionParams, LeaderTrajectory
from gaitcert.gaits import make_library
from gaitcert.policy import param_count
from gaitcert.rng import LANE_FORCE, stream_key
from gaitcert.simulate import SimConfig


@pytest.fixture(scope="session")
def library():
    return make_library()


@pytest.fixture(scope="session")
def sim_cfg():
    return SimConfig()


def constant_policy(gait_index: int, scale: float = 10.0) -> np.ndarray:
    """Weights that always select one gait (large final-layer bias)."""
    w = np.zeros(param_count())
    w[670 + gait_index] = scale  # final bias block starts at 60+10+200+20+380
    return w


def straight_line_leader(speed: float = 1.25, duration: float = 30.0) -> LeaderTrajectory:
    target = speed * duration
    n_pts = round(target / 0.01)
    ds = target / n_pts
    wp = np.zeros((n_pts + 1, 2))
    wp[:, 0] = np.arange(n_pts + 1) * ds
    return LeaderTrajectory(waypoints=wp, duration=duration, speed=speed, spacing=ds)


def heading_profile_leader(profile, speed: float, duration: float) -> LeaderTrajectory:
    """Leader built by unit-speed integration of an arbitrary heading profile."""
    target = speed * duration
    n_pts = round(target / 0.01)
    ds = target / n_pts
    s_mid = (np.arange(n_pts) + 0.5) * ds
    theta = profile(s_mid)
    wp = np.zeros((n_pts + 1, 2))
    np.cumsum(ds * np.cos(theta), out=wp[1:, 0])
    np.cumsum(ds * np.sin(theta), out=wp[1:, 1])
    return LeaderTrajectory(waypoints=wp, duration=duration, speed=speed, spacing=ds)


def l_turn_leader(speed: float = 1.25, duration: float = 30.0) -> LeaderTrajectory:
    """Straight for 15 m, then a 90 degree left turn ramped over 1 m."""

    def profile(s):
        return np.where(s < 15.0, 0.0,
                        np.where(s > 16.0, math.pi / 2, (s - 15.0) * math.pi / 2))

    return heading_profile_leader(profile, speed, duration)


def quiet_env(leader: LeaderTrajectory, initial_heading: float = 0.0,
              noise_std: float = 0.0, seed: int = 999) -> Environment:
    """Environment with explicit leader and (by default) no noise."""
    return Environment(
        env_index=0,
        initial_heading=initial_heading,
        force_noise_seed=stream_key(seed, LANE_FORCE, 0),
        force_noise_std=noise_std,
        leader=leader,
    )


def quiet_params(**overrides) -> EnvDistributionParams:
    """Distribution with all noise sources off unless overridden."""
    base = dict(heading_noise_std=0.0, force_noise_std=0.0, slope_range=0.0,
                master_seed=123)
    base.update(overrides)
    return EnvDistributionParams(**base)
