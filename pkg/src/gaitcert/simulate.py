"""Closed-loop rollout of a policy in an environment.

Once per stride the policy reads the previous stride's observation and picks
a gait; the stride is then integrated over substeps against the leader's
impedance force, accumulating the noisy body-frame impulse that perturbs the
stride map.  Two cost functionals are accumulated along the way: the
tracking cost used for prior training and the tube-violation cost used for
certification.

The inner loop runs in a compiled extension when available and falls back to
a numerically identical pure-Python kernel otherwise (see `backend_name`).
Set GAITCERT_PURE=1 to force the fallback.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _core_py
from .environments import Environment, ImpedanceParams, DEFAULT_IMPEDANCE, leader_pose
from .errors import InvalidParameterError
from .gaits import GaitLibrary, wrap_angle
from .policy import FeatureScales, PolicyArch, param_count
from .rng import stream_from_key

try:  # compiled core is optional; the pure kernel is always present
    from . import _core as _core_ext
except ImportError:  # pragma: no cover - depends on build environment
    _core_ext = None

_FORCE_PURE = os.environ.get("GAITCERT_PURE", "").strip() not in ("", "0")

_BACKENDS = {"pure": _core_py}
if _core_ext is not None:
    _BACKENDS["compiled"] = _core_ext

_DEFAULT_BACKEND = "compiled" if (_core_ext is not None and not _FORCE_PURE) else "pure"


def backend_name() -> str:
    """Which kernel `rollout` uses by default."""
    return _DEFAULT_BACKEND


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


@dataclass(frozen=True)
class SimConfig:
    """Integration and cost parameters of the closed loop."""

    stride_duration: float = 0.4
    substeps_per_stride: int = 10
    tube_radius: float = 0.5
    impedance: ImpedanceParams = DEFAULT_IMPEDANCE

    def __post_init__(self):
        if self.substeps_per_stride < 2:
            raise InvalidParameterError("substeps_per_stride must be >= 2")
        if not self.tube_radius > 0:
            raise InvalidParameterError("tube_radius must be positive")
        if not self.stride_duration > 0:
            raise InvalidParameterError("stride_duration must be positive")


@dataclass(frozen=True)
class ObservationVector:
    """What the policy sees at the start of a stride."""

    heading: float
    stride_len: float
    heading_rate: float
    stride_rate: float
    force_int_x: float
    force_int_y: float

    def as_array(self) -> np.ndarray:
        return np.array([
            self.heading, self.stride_len, self.heading_rate,
            self.stride_rate, self.force_int_x, self.force_int_y,
        ])


@dataclass(frozen=True)
class StrideRecord:
    """Summary of one completed stride, input to `extract_features`."""

    end_heading: float  # raw accumulated heading at stride end
    turn: float  # heading change executed this stride
    stride: float  # stride length executed this stride
    prev_stride: float  # stride length of the stride before
    force_int_x: float  # body-frame noisy-force integral over the stride
    force_int_y: float
    stride_duration: float


def extract_features(record: StrideRecord) -> ObservationVector:
    """Observation for the next stride from the previous stride's record."""
    inv = 1.0 / record.stride_duration
    return ObservationVector(
        heading=wrap_angle(record.end_heading),
        stride_len=record.stride,
        heading_rate=record.turn * inv,
        stride_rate=(record.stride - record.prev_stride) * inv,
        force_int_x=record.force_int_x,
        force_int_y=record.force_int_y,
    )


@dataclass(frozen=True)
class Trace:
    """Per-substep record of a rollout on the global node grid."""

    t: np.ndarray  # (K*S+1,)
    robot_pos: np.ndarray  # (K*S+1, 2)
    robot_heading: np.ndarray  # (K*S+1,), raw accumulated heading
    leader_pos: np.ndarray  # (K*S+1, 2)
    force: np.ndarray  # (K*S+1, 2)
    force_noisy: np.ndarray  # (K*S+1, 2)
    selected: np.ndarray  # (K,) gait index per stride
    substeps_per_stride: int

    @property
    def node_count(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class RolloutResult:
    stride_count: int
    prior_cost: float
    tube_cost: float
    trace: Trace | None = None


def rollout(
    weights,
    env: Environment,
    library: GaitLibrary,
    cfg: SimConfig,
    scales: FeatureScales | None = None,
    want_trace: bool = False,
    backend: str | None = None,
) -> RolloutResult:
    """Run one policy in one environment.

    Pure function: identical inputs give bit-identical results on a given
    backend, so batches may be evaluated concurrently in any order.
    """
    arch = PolicyArch(output_dim=len(library))  # scorer output per gait
    w = np.ascontiguousarray(np.asarray(weights, dtype=float))
    if w.shape != (param_count(arch),):
        raise InvalidParameterError(
            f"weights must have {param_count(arch)} entries, got {w.shape}"
        )
    if max(arch.input_dim, *arch.hidden_dims, arch.output_dim) > 64:
        raise InvalidParameterError("layer widths above 64 are not supported")
    duration = env.leader.duration
    strides = int(math.floor(duration / cfg.stride_duration))
    if strides < 1:
        raise InvalidParameterError("horizon shorter than one stride")
    L = env.leader.speed * env.leader.duration
    if L <= 0:
        raise InvalidParameterError("leader path has zero length")

    S = cfg.substeps_per_stride
    nodes = strides * S + 1
    if env.force_noise_std > 0:
        noise = stream_from_key(env.force_noise_seed).standard_normal((nodes, 2))
    else:
        noise = np.zeros((nodes, 2))

    if scales is None:
        scales = FeatureScales.for_stride(library.nominal_stride)
    packed = library.packed()
    kd = np.diag(cfg.impedance.stiffness)
    nd = np.diag(cfg.impedance.damping)

    if want_trace:
        trace_t = np.zeros(nodes)
        trace_pr = np.zeros((nodes, 2))
        trace_hr = np.zeros(nodes)
        trace_pl = np.zeros((nodes, 2))
        trace_fe = np.zeros((nodes, 2))
        trace_ft = np.zeros((nodes, 2))
    else:
        trace_t = np.zeros(0)
        trace_pr = np.zeros((0, 2))
        trace_hr = np.zeros(0)
        trace_pl = np.zeros((0, 2))
        trace_fe = np.zeros((0, 2))
        trace_ft = np.zeros((0, 2))
    selected = np.zeros(strides, dtype=np.int64)

    impl = _BACKENDS[backend] if backend is not None else _BACKENDS[_DEFAULT_BACKEND]
    prior, tube = impl.run_rollout(
        w,
        arch.input_dim, arch.hidden_dims[0], arch.hidden_dims[1], arch.output_dim,
        packed["turn_star"], packed["a_turn"], packed["a_stride"],
        packed["g_turn_fwd"], packed["g_turn_lat"],
        packed["g_stride_fwd"], packed["g_stride_lat"],
        packed["nominal_stride"],
        packed["turn_lo"], packed["turn_hi"], packed["stride_lo"], packed["stride_hi"],
        env.initial_heading,
        env.leader.waypoints,
        env.leader.spacing, env.leader.speed, duration,
        float(kd[0]), float(kd[1]), float(nd[0]), float(nd[1]), env.force_noise_std,
        noise,
        cfg.stride_duration, S, cfg.tube_radius, strides,
        scales.as_array(),
        1 if want_trace else 0,
        trace_t, trace_pr, trace_hr, trace_pl, trace_fe, trace_ft,
        selected,
    )

    trace = None
    if want_trace:
        trace = Trace(
            t=trace_t, robot_pos=trace_pr, robot_heading=trace_hr,
            leader_pos=trace_pl, force=trace_fe, force_noisy=trace_ft,
            selected=selected, substeps_per_stride=S,
        )
    return RolloutResult(
        stride_count=strides, prior_cost=float(prior), tube_cost=float(tube), trace=trace
    )


def rollout_batch(
    jobs: list[tuple[np.ndarray, Environment]],
    library: GaitLibrary,
    cfg: SimConfig,
    workers: int = 1,
    scales: FeatureScales | None = None,
    backend: str | None = None,
) -> list[RolloutResult]:
    """Evaluate (weights, env) pairs, preserving job order in the output."""
    def one(job):
        w, env = job
        return rollout(w, env, library, cfg, scales=scales, backend=backend)

    if workers <= 1 or len(jobs) <= 1:
        return [one(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, jobs))


# -- standalone cost functionals ----------------------------------------------
#
# These recompute the costs from a trace, independently of the kernels'
# in-loop accumulation: the kernels sum sequentially with explicit trapezoid
# weights, these use vectorized quadrature over the stored nodes.


def _leader_track(trace: Trace, leader) -> tuple[np.ndarray, np.ndarray]:
    pos = np.empty((trace.node_count, 2))
    headings = np.empty(trace.node_count)
    for i, t in enumerate(trace.t):
        p, _, phi = leader_pose(leader, float(t))
        pos[i] = p
        headings[i] = phi
    return pos, headings


def prior_cost(trace: Trace, leader) -> float:
    """Path-normalized integral of squared position and orientation errors."""
    if trace.node_count < 2:
        raise InvalidParameterError("trace must hold at least two nodes")
    L = leader.speed * leader.duration
    if L <= 0:
        raise InvalidParameterError("leader path has zero length")
    leader_pos, leader_heading = _leader_track(trace, leader)
    e_p2 = np.sum((leader_pos - trace.robot_pos) ** 2, axis=1)
    e_phi2 = (np.cos(leader_heading) - np.cos(trace.robot_heading)) ** 2 + (
        np.sin(leader_heading) - np.sin(trace.robot_heading)
    ) ** 2
    return float(np.trapezoid(e_p2 + e_phi2, trace.t) / L)


def tube_cost(trace: Trace, leader, radius: float) -> float:
    """Fraction of substep samples at distance >= radius from the leader."""
    if not radius > 0:
        raise InvalidParameterError("radius must be positive")
    leader_pos, _ = _leader_track(trace, leader)
    d = np.linalg.norm(leader_pos - trace.robot_pos, axis=1)
    samples = d[:-1]  # piecewise-constant quadrature on left nodes
    return float(np.count_nonzero(samples >= radius) / samples.size)
