"""Run configuration: one JSON file drives the whole pipeline.

The config hash — SHA-256 over the canonical serialization of every field
that affects results (output directory and worker count excluded) — is
stamped into all artifacts so stages from different configurations cannot
be mixed silently.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field

from .environments import EnvDistributionParams, ImpedanceParams
from .errors import ConfigError
from .es import ESConfig
from .gaits import (
    DEFAULT_CONTRACTION_RATE,
    DEFAULT_FORCE_GAIN,
    DEFAULT_NOMINAL_STRIDE,
    GaitLibrary,
    make_library,
)
from .simulate import SimConfig


@dataclass(frozen=True)
class LibraryConfig:
    nominal_stride: float = DEFAULT_NOMINAL_STRIDE
    contraction_rate: float = DEFAULT_CONTRACTION_RATE
    force_gain: tuple = DEFAULT_FORCE_GAIN

    def build(self) -> GaitLibrary:
        return make_library(self.nominal_stride, self.contraction_rate, self.force_gain)


@dataclass(frozen=True)
class PACConfig:
    policy_count: int = 20
    env_count: int = 1000
    holdout_count: int = 1000
    delta: float = 0.01


@dataclass(frozen=True)
class SimSection:
    stride_duration: float = 0.4
    substeps_per_stride: int = 10
    tube_radius: float = 0.5
    stiffness: float = 30.0
    damping: float = 5.0

    def build(self) -> SimConfig:
        return SimConfig(
            stride_duration=self.stride_duration,
            substeps_per_stride=self.substeps_per_stride,
            tube_radius=self.tube_radius,
            impedance=ImpedanceParams.isotropic(self.stiffness, self.damping),
        )


@dataclass(frozen=True)
class EnvSection:
    heading_noise_std: float = math.radians(5.0)
    force_noise_std: float = 1.0
    segment_length: float = 5.0
    segment_count: int = 8
    slope_range: float = math.radians(15.0)
    duration: float = 30.0
    speed: float = 1.25

    def build(self, master_seed: int) -> EnvDistributionParams:
        return EnvDistributionParams(master_seed=master_seed,
                                     **dataclasses.asdict(self))


@dataclass(frozen=True)
class ESSection:
    env_count: int = 500
    minibatch: int = 20
    pair_count: int = 2
    lr_mean: float = 0.1
    lr_logvar: float = 0.01
    epochs: int = 20

    def build(self, seed: int) -> ESConfig:
        return ESConfig(seed=seed, **dataclasses.asdict(self))


@dataclass(frozen=True)
class RunConfig:
    master_seed: int = 0
    output_dir: str = "runs/default"
    workers: int = 1
    library: LibraryConfig = field(default_factory=LibraryConfig)
    environment: EnvSection = field(default_factory=EnvSection)
    sim: SimSection = field(default_factory=SimSection)
    es: ESSection = field(default_factory=ESSection)
    pac: PACConfig = field(default_factory=PACConfig)

    def __post_init__(self):
        if self.environment.speed * self.environment.duration <= 0:
            raise ConfigError("leader speed * duration must be positive")
        if self.environment.duration < self.sim.stride_duration:
            raise ConfigError("horizon must cover at least one stride")

    def env_params(self) -> EnvDistributionParams:
        return self.environment.build(self.master_seed)

    def hash(self) -> str:
        payload = dataclasses.asdict(self)
        payload.pop("output_dir")
        payload.pop("workers")
        canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()[:12]

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)


_SECTION_TYPES = {
    "library": LibraryConfig,
    "environment": EnvSection,
    "sim": SimSection,
    "es": ESSection,
    "pac": PACConfig,
}


def config_from_dict(data: dict) -> RunConfig:
    kwargs: dict = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            section = _SECTION_TYPES[key]
            try:
                if key == "library" and "force_gain" in value:
                    value = dict(value, force_gain=tuple(map(tuple, value["force_gain"])))
                kwargs[key] = section(**value)
            except TypeError as exc:
                raise ConfigError(f"bad {key!r} section: {exc}") from exc
        elif key in ("master_seed", "output_dir", "workers"):
            kwargs[key] = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    try:
        return RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(data)


def preset(name: str, output_dir: str | None = None) -> RunConfig:
    """Built-in configurations.

    "paper" runs the full-scale pipeline; "desk" is a minutes-scale setup
    used by the acceptance suite.
    """
    if name == "paper":
        cfg = RunConfig(output_dir=output_dir or "runs/paper")
    elif name == "desk":
        cfg = RunConfig(
            output_dir=output_dir or "runs/desk",
            # the larger mean rate compensates for the short run; the smoothed
            # cost still decreases steadily at this scale
            es=ESSection(env_count=100, epochs=30, lr_mean=0.5),
            pac=PACConfig(policy_count=10, env_count=100, holdout_count=200),
        )
    else:
        raise ConfigError(f"unknown preset {name!r}; expected 'paper' or 'desk'")
    return cfg
