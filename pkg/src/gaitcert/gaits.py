"""Finite library of walking gaits and the stride-to-stride dynamics.

Each gait is an exponentially stable fixed point of an affine stride map on
the reduced state (turn, stride): the heading change and stride length
executed during one stride.  A stride-integrated body-frame force impulse
perturbs the state through a per-gait gain matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

# Number of gaits and their turning fixed points: -45 deg .. +45 deg in 5 deg steps.
GAIT_COUNT = 19
TURN_STEP_DEG = 5
STRAIGHT_INDEX = 9

# Default reduced-model parameters.  force_gain rows are (turn, stride),
# columns are body-frame (forward, lateral): a lateral pull steers heading,
# a forward pull stretches the stride.
DEFAULT_NOMINAL_STRIDE = 0.5
DEFAULT_CONTRACTION_RATE = 0.5
DEFAULT_FORCE_GAIN = ((0.0, 0.05), (0.02, 0.0))

# Clamp box keeping states physical under extreme forces.  Tests that need the
# unclamped affine regime stay well inside these bounds.
STRIDE_BOUNDS = (0.1, 1.0)
TURN_BOUNDS = (-math.pi / 3.0, math.pi / 3.0)


@dataclass(frozen=True)
class StrideState:
    """Heading change (rad) and stride length (m) executed in one stride."""

    turn: float
    stride: float

    def __post_init__(self):
        if not self.stride > 0:
            raise InvalidParameterError(f"stride must be positive, got {self.stride}")
        if not -math.pi / 2 < self.turn < math.pi / 2:
            raise InvalidParameterError(f"turn must lie in (-pi/2, pi/2), got {self.turn}")

    def as_array(self) -> np.ndarray:
        return np.array([self.turn, self.stride])


@dataclass(frozen=True)
class RobotPose:
    """Planar position (m) and accumulated heading (rad) of the walker."""

    position: np.ndarray
    heading: float

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.position.shape != (2,):
            raise InvalidParameterError("position must be a 2-vector")


@dataclass(frozen=True)
class GaitPrimitive:
    """One gait: its fixed point plus the local dynamics around it."""

    index: int
    turn_angle: float
    nominal_stride: float
    contraction: np.ndarray  # 2x2 diagonal, spectral radius < 1
    force_gain: np.ndarray  # 2x2, rows (turn, stride) x cols (forward, lateral)

    def __post_init__(self):
        object.__setattr__(self, "contraction", np.asarray(self.contraction, dtype=float))
        object.__setattr__(self, "force_gain", np.asarray(self.force_gain, dtype=float))
        if self.contraction.shape != (2, 2) or self.force_gain.shape != (2, 2):
            raise InvalidParameterError("contraction and force_gain must be 2x2")
        diag = np.diag(self.contraction)
        if np.any(diag <= 0) or np.any(diag >= 1):
            raise InvalidParameterError("contraction diagonal must lie in (0, 1)")
        if self.contraction[0, 1] != 0 or self.contraction[1, 0] != 0:
            raise InvalidParameterError("contraction must be diagonal")

    @property
    def fixed_point(self) -> StrideState:
        return StrideState(turn=self.turn_angle, stride=self.nominal_stride)


@dataclass(frozen=True)
class GaitLibrary:
    """Ordered collection of gaits with turn angles ascending."""

    primitives: tuple[GaitPrimitive, ...]
    stride_bounds: tuple[float, float] = STRIDE_BOUNDS
    turn_bounds: tuple[float, float] = TURN_BOUNDS

    def __post_init__(self):
        if len(self.primitives) != GAIT_COUNT:
            raise InvalidParameterError(f"library must hold {GAIT_COUNT} gaits")
        angles = [p.turn_angle for p in self.primitives]
        if not all(a < b for a, b in zip(angles, angles[1:])):
            raise InvalidParameterError("turn angles must be strictly increasing")
        strides = {p.nominal_stride for p in self.primitives}
        if len(strides) != 1:
            raise InvalidParameterError("all gaits must share one nominal stride")

    def __len__(self) -> int:
        return len(self.primitives)

    def __getitem__(self, i: int) -> GaitPrimitive:
        return self.primitives[i]

    @property
    def nominal_stride(self) -> float:
        return self.primitives[0].nominal_stride

    def packed(self) -> dict[str, np.ndarray | float]:
        """Flat arrays consumed by the rollout kernels (cached)."""
        cached = getattr(self, "_packed", None)
        if cached is not None:
            return cached
        n = len(self.primitives)
        turn_star = np.array([p.turn_angle for p in self.primitives])
        a_turn = np.array([p.contraction[0, 0] for p in self.primitives])
        a_stride = np.array([p.contraction[1, 1] for p in self.primitives])
        gain = np.array([p.force_gain for p in self.primitives])  # (n, 2, 2)
        packed = {
            "turn_star": turn_star,
            "a_turn": a_turn,
            "a_stride": a_stride,
            "g_turn_fwd": np.ascontiguousarray(gain[:, 0, 0]),
            "g_turn_lat": np.ascontiguousarray(gain[:, 0, 1]),
            "g_stride_fwd": np.ascontiguousarray(gain[:, 1, 0]),
            "g_stride_lat": np.ascontiguousarray(gain[:, 1, 1]),
            "nominal_stride": self.nominal_stride,
            "stride_lo": self.stride_bounds[0],
            "stride_hi": self.stride_bounds[1],
            "turn_lo": self.turn_bounds[0],
            "turn_hi": self.turn_bounds[1],
            "count": n,
        }
        object.__setattr__(self, "_packed", packed)
        return packed


def make_library(
    nominal_stride: float = DEFAULT_NOMINAL_STRIDE,
    contraction_rate: float = DEFAULT_CONTRACTION_RATE,
    force_gain=DEFAULT_FORCE_GAIN,
) -> GaitLibrary:
    """Build the 19-gait library with identical local dynamics per gait.

    Turn angles run -45 deg .. +45 deg in 5 deg increments; index ascends
    with angle, so index 9 walks straight.
    """
    if not nominal_stride > 0:
        raise InvalidParameterError(f"nominal_stride must be positive, got {nominal_stride}")
    if not 0 < contraction_rate < 1:
        raise InvalidParameterError(f"contraction_rate must lie in (0, 1), got {contraction_rate}")
    gain = np.asarray(force_gain, dtype=float)
    contraction = np.diag([contraction_rate, contraction_rate])
    prims = tuple(
        GaitPrimitive(
            index=i,
            turn_angle=math.radians((i - STRAIGHT_INDEX) * TURN_STEP_DEG),
            nominal_stride=nominal_stride,
            contraction=contraction,
            force_gain=gain,
        )
        for i in range(GAIT_COUNT)
    )
    return GaitLibrary(primitives=prims)


def stride_map(
    primitive: GaitPrimitive,
    state: StrideState,
    force_impulse,
    stride_bounds: tuple[float, float] = STRIDE_BOUNDS,
    turn_bounds: tuple[float, float] = TURN_BOUNDS,
) -> StrideState:
    """One stride of the reduced dynamics under a body-frame force impulse.

    x+ = x* + A (x - x*) + B u, clamped to the physical box.  With zero
    impulse the fixed point x* is exactly invariant.
    """
    x = state.as_array()
    x_star = primitive.fixed_point.as_array()
    u = np.asarray(force_impulse, dtype=float)
    nxt = x_star + primitive.contraction @ (x - x_star) + primitive.force_gain @ u
    turn = min(max(nxt[0], turn_bounds[0]), turn_bounds[1])
    stride = min(max(nxt[1], stride_bounds[0]), stride_bounds[1])
    return StrideState(turn=turn, stride=stride)


def advance_pose(pose: RobotPose, motion) -> RobotPose:
    """Integrate the planar pose over one executed stride.

    The position steps along the chord at the mid-stride heading, a
    second-order-accurate approximation of the turning arc; the heading
    accumulates the full turn.  `motion` is a StrideState or a raw
    (turn, stride) pair; degenerate motions (zero stride, right-angle
    turns) are allowed here.
    """
    if isinstance(motion, StrideState):
        turn, stride = motion.turn, motion.stride
    else:
        turn, stride = motion
    half = pose.heading + 0.5 * turn
    pos = np.array(
        [
            pose.position[0] + stride * math.cos(half),
            pose.position[1] + stride * math.sin(half),
        ]
    )
    return RobotPose(position=pos, heading=pose.heading + turn)


def wrap_angle(phi: float) -> float:
    """Wrap to (-pi, pi]."""
    m = math.fmod(phi + math.pi, 2.0 * math.pi)
    if m <= 0.0:
        m += 2.0 * math.pi
    return m - math.pi
