"""Environment dataset files and split hygiene.

Datasets are line-delimited JSON: a header record followed by one record per
environment.  The canonical "compact" mode stores only env indices (plus the
distribution parameters in the header) and regenerates environments on load;
"full" mode additionally dumps headings, noise keys and waypoints for
cross-implementation diffing.

The three pipeline splits draw from disjoint env-index ranges so the
bound-training and held-out data stay independent of the prior-training
data.  Every command that combines artifacts checks the recorded ranges.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass

import numpy as np

from .environments import EnvDistributionParams, Environment, LeaderTrajectory, sample_environment
from .errors import ConfigError, InvalidParameterError, SplitOverlapError

FORMAT_VERSION = 1

# Each split owns a fixed, generous index range.
SPLIT_BASES = {"prior": 0, "pac": 1_000_000, "holdout": 2_000_000}
SPLIT_SPAN = 1_000_000


@dataclass(frozen=True)
class SplitRange:
    split: str
    start: int
    count: int

    @property
    def stop(self) -> int:
        return self.start + self.count

    def overlaps(self, other: "SplitRange") -> bool:
        return self.start < other.stop and other.start < self.stop


def split_range(split: str, count: int) -> SplitRange:
    if split not in SPLIT_BASES:
        raise ConfigError(f"unknown split {split!r}; expected one of {sorted(SPLIT_BASES)}")
    if count < 1:
        raise InvalidParameterError("count must be >= 1")
    if count > SPLIT_SPAN:
        raise SplitOverlapError(
            f"{count} environments would overflow the {split!r} index range"
        )
    return SplitRange(split=split, start=SPLIT_BASES[split], count=count)


def check_disjoint(*ranges: SplitRange) -> None:
    for i, a in enumerate(ranges):
        for b in ranges[i + 1:]:
            if a.overlaps(b):
                raise SplitOverlapError(
                    f"splits {a.split!r} [{a.start}, {a.stop}) and "
                    f"{b.split!r} [{b.start}, {b.stop}) overlap"
                )


def sample_split(params: EnvDistributionParams, rng: SplitRange) -> list[Environment]:
    return [sample_environment(params, idx) for idx in range(rng.start, rng.stop)]


def write_dataset(path, params: EnvDistributionParams, rng: SplitRange,
                  config_hash: str, mode: str = "compact") -> list[Environment]:
    """Materialize and write one split; returns the environments."""
    if mode not in ("compact", "full"):
        raise InvalidParameterError(f"unknown dataset mode {mode!r}")
    envs = sample_split(params, rng)
    header = {
        "kind": "gaitcert-env-dataset",
        "format_version": FORMAT_VERSION,
        "config_hash": config_hash,
        "split": rng.split,
        "start_index": rng.start,
        "count": rng.count,
        "mode": mode,
        "params": dataclasses.asdict(params),
    }
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for env in envs:
            record = {"env_index": env.env_index}
            if mode == "full":
                record.update(
                    initial_heading=env.initial_heading,
                    force_noise_seed=list(env.force_noise_seed),
                    force_noise_std=env.force_noise_std,
                    leader={
                        "duration": env.leader.duration,
                        "speed": env.leader.speed,
                        "spacing": env.leader.spacing,
                        "waypoints": env.leader.waypoints.tolist(),
                    },
                )
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return envs


@dataclass(frozen=True)
class Dataset:
    envs: list[Environment]
    rng: SplitRange
    params: EnvDistributionParams
    config_hash: str
    mode: str


def read_dataset(path, expected_hash: str | None = None) -> Dataset:
    """Load a dataset file, regenerating environments in compact mode."""
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("kind") != "gaitcert-env-dataset":
            raise ConfigError(f"{path} is not an environment dataset")
        if header.get("format_version") != FORMAT_VERSION:
            raise ConfigError(f"{path} has an unsupported format version")
        if expected_hash is not None and header["config_hash"] != expected_hash:
            raise ConfigError(
                f"{path} was generated under config {header['config_hash']}, "
                f"expected {expected_hash}"
            )
        params = EnvDistributionParams(**header["params"])
        rng = SplitRange(split=header["split"], start=header["start_index"],
                         count=header["count"])
        mode = header["mode"]
        envs: list[Environment] = []
        for line in fh:
            record = json.loads(line)
            idx = record["env_index"]
            if mode == "compact":
                envs.append(sample_environment(params, idx))
            else:
                leader = LeaderTrajectory(
                    waypoints=np.asarray(record["leader"]["waypoints"]),
                    duration=record["leader"]["duration"],
                    speed=record["leader"]["speed"],
                    spacing=record["leader"]["spacing"],
                )
                envs.append(Environment(
                    env_index=idx,
                    initial_heading=record["initial_heading"],
                    force_noise_seed=tuple(record["force_noise_seed"]),
                    force_noise_std=record["force_noise_std"],
                    leader=leader,
                ))
    if len(envs) != rng.count:
        raise ConfigError(f"{path} holds {len(envs)} records, header says {rng.count}")
    return Dataset(envs=envs, rng=rng, params=params, config_hash=header["config_hash"],
                   mode=mode)
