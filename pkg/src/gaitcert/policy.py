"""Supervisor policy: a small feedforward scorer over the gait library.

The network maps six normalized stride observations through two ELU hidden
layers (10 and 20 units) to a softmax score per gait.  Weights live in one
flat vector with a fixed layout so checkpoints are portable:
[W1 row-major, b1, W2 row-major, b2, W3 row-major, b3].
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .gaits import GAIT_COUNT

LAYOUT_VERSION = 1

# Fixed normalization scales: heading in units of pi/4, stride in units of the
# nominal stride, rates per second of the same, force integrals in units of
# 10 N*s.  Fixed (not data-dependent) so policies transfer across datasets.
HEADING_SCALE = math.pi / 4.0
FORCE_INTEGRAL_SCALE = 10.0


@dataclass(frozen=True)
class PolicyArch:
    """Layer sizes of the scorer network."""

    input_dim: int = 6
    hidden_dims: tuple[int, ...] = (10, 20)
    output_dim: int = GAIT_COUNT

    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, self.output_dim]
        return [(dims[i + 1], dims[i]) for i in range(len(dims) - 1)]


DEFAULT_ARCH = PolicyArch()


def param_count(arch: PolicyArch = DEFAULT_ARCH) -> int:
    """Total number of weights and biases."""
    return sum(out * inp + out for out, inp in arch.layer_shapes())


def validate_weights(weights: np.ndarray, arch: PolicyArch = DEFAULT_ARCH) -> np.ndarray:
    w = np.ascontiguousarray(np.asarray(weights, dtype=float))
    expected = param_count(arch)
    if w.shape != (expected,):
        raise InvalidParameterError(f"weights must be a flat vector of {expected}, got {w.shape}")
    if not np.all(np.isfinite(w)):
        raise InvalidParameterError("weights must be finite")
    return w


def split_weights(weights: np.ndarray, arch: PolicyArch = DEFAULT_ARCH):
    """Unpack the flat vector into [(W, b), ...] per layer."""
    w = validate_weights(weights, arch)
    layers = []
    offset = 0
    for out, inp in arch.layer_shapes():
        mat = w[offset:offset + out * inp].reshape(out, inp)
        offset += out * inp
        bias = w[offset:offset + out]
        offset += out
        layers.append((mat, bias))
    return layers


def elu(z: np.ndarray) -> np.ndarray:
    return np.where(z >= 0.0, z, np.exp(np.minimum(z, 0.0)) - 1.0)


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    e = np.exp(shifted)
    return e / e.sum()


def forward(weights: np.ndarray, observation, arch: PolicyArch = DEFAULT_ARCH) -> np.ndarray:
    """Score every gait for one normalized observation.

    Returns a probability vector (positive entries summing to one).
    """
    y = np.asarray(observation, dtype=float)
    if y.shape != (arch.input_dim,):
        raise InvalidParameterError(f"observation must have {arch.input_dim} entries")
    if not np.all(np.isfinite(y)):
        raise InvalidParameterError("observation must be finite")
    layers = split_weights(weights, arch)
    h = y
    for mat, bias in layers[:-1]:
        h = elu(mat @ h + bias)
    mat, bias = layers[-1]
    return softmax(mat @ h + bias)


def select_primitive(scores) -> int:
    """Argmax with ties broken toward the lowest index."""
    return int(np.argmax(np.asarray(scores)))


@dataclass(frozen=True)
class FeatureScales:
    """Per-feature normalization applied before the first layer."""

    heading: float = HEADING_SCALE
    stride: float = 0.5
    heading_rate: float = HEADING_SCALE
    stride_rate: float = 0.5
    force_integral: float = FORCE_INTEGRAL_SCALE

    @classmethod
    def for_stride(cls, nominal_stride: float) -> "FeatureScales":
        return cls(stride=nominal_stride, stride_rate=nominal_stride)

    def as_array(self) -> np.ndarray:
        return np.array([
            self.heading, self.stride, self.heading_rate,
            self.stride_rate, self.force_integral, self.force_integral,
        ])


def normalize_observation(observation, scales: FeatureScales) -> np.ndarray:
    return np.asarray(observation, dtype=float) / scales.as_array()


@dataclass
class PolicyDistribution:
    """Diagonal Gaussian over the flat weight vector.

    Stored as mean and log-variance so the standard deviation stays
    strictly positive under gradient updates.
    """

    mean: np.ndarray
    log_var: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.log_var = np.asarray(self.log_var, dtype=float)
        if self.mean.shape != self.log_var.shape or self.mean.ndim != 1:
            raise InvalidParameterError("mean and log_var must be equal-length vectors")
        if not (np.all(np.isfinite(self.mean)) and np.all(np.isfinite(self.log_var))):
            raise InvalidParameterError("distribution parameters must be finite")

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def sigma(self) -> np.ndarray:
        return np.exp(0.5 * self.log_var)

    @classmethod
    def standard(cls, dim: int) -> "PolicyDistribution":
        return cls(mean=np.zeros(dim), log_var=np.zeros(dim))

    def copy(self) -> "PolicyDistribution":
        return PolicyDistribution(self.mean.copy(), self.log_var.copy())


def sample_weights(
    dist: PolicyDistribution, stream: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Antithetic pair (mean + sigma*eps, mean - sigma*eps) and the draw eps."""
    eps = stream.standard_normal(dist.dim)
    delta = dist.sigma * eps
    return dist.mean + delta, dist.mean - delta, eps


@dataclass(frozen=True)
class DiscretePolicySet:
    """Finite policy support with a probability vector on the simplex."""

    weights: np.ndarray  # (m, d)
    probs: np.ndarray  # (m,)

    def __post_init__(self):
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "probs", np.asarray(self.probs, dtype=float))
        if self.weights.ndim != 2 or self.probs.shape != (self.weights.shape[0],):
            raise InvalidParameterError("weights must be (m, d) with probs of length m")
        if np.any(self.probs < 0) or abs(self.probs.sum() - 1.0) > 1e-12:
            raise InvalidParameterError("probs must be nonnegative and sum to 1")

    def __len__(self) -> int:
        return self.weights.shape[0]

    def with_probs(self, probs) -> "DiscretePolicySet":
        return DiscretePolicySet(weights=self.weights, probs=probs)


# -- checkpoint files ---------------------------------------------------------
#
# One JSON header line followed by raw little-endian float64 blocks.  The
# header records the architecture, layout version and how many vectors follow.


def _write_blocks(path, kind: str, arch: PolicyArch, blocks: list[np.ndarray],
                  extra: dict | None = None) -> None:
    header = {
        "kind": kind,
        "layout_version": LAYOUT_VERSION,
        "input_dim": arch.input_dim,
        "hidden_dims": list(arch.hidden_dims),
        "output_dim": arch.output_dim,
        "vector_count": len(blocks),
    }
    if extra:
        header.update(extra)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for block in blocks:
            fh.write(np.ascontiguousarray(block, dtype="<f8").tobytes())


def _read_blocks(path, kind: str) -> tuple[dict, list[np.ndarray]]:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        if header.get("kind") != kind:
            raise InvalidParameterError(f"{path} is not a {kind} checkpoint")
        if header.get("layout_version") != LAYOUT_VERSION:
            raise InvalidParameterError("unsupported checkpoint layout version")
        arch = PolicyArch(
            input_dim=header["input_dim"],
            hidden_dims=tuple(header["hidden_dims"]),
            output_dim=header["output_dim"],
        )
        d = param_count(arch)
        raw = fh.read()
    n = header["vector_count"]
    if len(raw) != n * d * 8:
        raise InvalidParameterError(f"{path} has a truncated payload")
    flat = np.frombuffer(raw, dtype="<f8").astype(float)
    return header, [flat[i * d:(i + 1) * d] for i in range(n)]


def save_policy(path, weights: np.ndarray, arch: PolicyArch = DEFAULT_ARCH,
                extra: dict | None = None) -> None:
    _write_blocks(path, "policy", arch, [validate_weights(weights, arch)], extra)


def load_policy(path) -> tuple[np.ndarray, dict]:
    header, blocks = _read_blocks(path, "policy")
    return blocks[0], header


def save_distribution(path, dist: PolicyDistribution, arch: PolicyArch = DEFAULT_ARCH,
                      extra: dict | None = None) -> None:
    if dist.dim != param_count(arch):
        raise InvalidParameterError("distribution size does not match architecture")
    _write_blocks(path, "weight-distribution", arch, [dist.mean, dist.log_var], extra)


def load_distribution(path) -> tuple[PolicyDistribution, dict]:
    header, blocks = _read_blocks(path, "weight-distribution")
    return PolicyDistribution(mean=blocks[0], log_var=blocks[1]), header


def save_policy_set(path, policy_set: DiscretePolicySet, arch: PolicyArch = DEFAULT_ARCH,
                    extra: dict | None = None) -> None:
    meta = {"probs": [float(p) for p in policy_set.probs]}
    if extra:
        meta.update(extra)
    _write_blocks(path, "policy-set", arch, list(policy_set.weights), meta)


def load_policy_set(path) -> tuple[DiscretePolicySet, dict]:
    header, blocks = _read_blocks(path, "policy-set")
    probs = np.asarray(header["probs"], dtype=float)
    return DiscretePolicySet(weights=np.stack(blocks), probs=probs), header
