"""Dataset files and split hygiene."""

import numpy as np
import pytest

from gaitcert.datasets import (
    SplitRange,
    check_disjoint,
    read_dataset,
    sample_split,
    split_range,
    write_dataset,
)
from gaitcert.environments import EnvDistributionParams
from gaitcert.errors import ConfigError, SplitOverlapError


@pytest.fixture()
def params():
    return EnvDistributionParams(master_seed=17, duration=6.0, segment_count=3)


class TestSplits:
    def test_ranges_are_disjoint_by_construction(self):
        prior = split_range("prior", 500)
        pac = split_range("pac", 1000)
        holdout = split_range("holdout", 1000)
        check_disjoint(prior, pac, holdout)
        assert prior.start == 0
        assert pac.start == 1_000_000
        assert holdout.start == 2_000_000

    def test_unknown_split_rejected(self):
        with pytest.raises(ConfigError):
            split_range("validation", 10)

    def test_overflowing_count_rejected(self):
        with pytest.raises(SplitOverlapError):
            split_range("prior", 2_000_000)

    def test_overlap_detection(self):
        a = SplitRange("prior", 0, 100)
        b = SplitRange("pac", 50, 100)
        with pytest.raises(SplitOverlapError):
            check_disjoint(a, b)
        check_disjoint(a, SplitRange("pac", 100, 100))  # touching is fine


class TestDatasetFiles:
    def test_compact_round_trip(self, tmp_path, params):
        rng = split_range("pac", 5)
        path = tmp_path / "envs.jsonl"
        written = write_dataset(path, params, rng, "hash123", mode="compact")
        loaded = read_dataset(path, expected_hash="hash123")
        assert loaded.rng == rng
        assert loaded.params == params
        assert len(loaded.envs) == 5
        for a, b in zip(written, loaded.envs):
            assert a.env_index == b.env_index
            assert a.initial_heading == b.initial_heading
            assert a.force_noise_seed == b.force_noise_seed
            np.testing.assert_array_equal(a.leader.waypoints, b.leader.waypoints)

    def test_full_round_trip(self, tmp_path, params):
        rng = split_range("holdout", 3)
        path = tmp_path / "envs.jsonl"
        written = write_dataset(path, params, rng, "hash123", mode="full")
        loaded = read_dataset(path, expected_hash="hash123")
        assert loaded.mode == "full"
        for a, b in zip(written, loaded.envs):
            assert a.initial_heading == b.initial_heading
            np.testing.assert_array_equal(a.leader.waypoints, b.leader.waypoints)

    def test_writes_are_byte_identical(self, tmp_path, params):
        rng = split_range("prior", 4)
        p1, p2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_dataset(p1, params, rng, "h")
        write_dataset(p2, params, rng, "h")
        assert p1.read_bytes() == p2.read_bytes()

    def test_hash_mismatch_rejected(self, tmp_path, params):
        path = tmp_path / "envs.jsonl"
        write_dataset(path, params, split_range("prior", 2), "aaa")
        with pytest.raises(ConfigError):
            read_dataset(path, expected_hash="bbb")

    def test_sample_split_indices(self, params):
        envs = sample_split(params, split_range("pac", 3))
        assert [e.env_index for e in envs] == [1_000_000, 1_000_001, 1_000_002]

    def test_non_dataset_file_rejected(self, tmp_path):
        path = tmp_path / "bogus.jsonl"
        path.write_text('{"kind": "something-else"}\n')
        with pytest.raises(ConfigError):
            read_dataset(path)
