"""Demo generators, class invariants, and the JSONL demo format."""

import io
import json
import logging

import numpy as np
import pytest

from tetherperch.demos import (
    AGENT_DEMO_KINDS,
    DEMO_FORMAT_VERSION,
    SET_SIZES,
    DemoSet,
    generate_demo,
    load_demo_set,
    load_transitions,
    make_demo_set,
    replay_rewards,
    satisfies_invariant,
    save_demo_set,
    sim_config_hash,
)
from tetherperch.env import EpisodeConfig, PerchEnv, transition_to_dict
from tetherperch.world import World


def fresh_env(max_steps: int = 60) -> PerchEnv:
    return PerchEnv(World(), EpisodeConfig(max_steps=max_steps, start_jitter=0.05))


@pytest.fixture(scope="module")
def optimal_set() -> DemoSet:
    return make_demo_set("A", fresh_env(), seed=0)


@pytest.fixture(scope="module")
def suboptimal_set() -> DemoSet:
    return make_demo_set("A-", fresh_env(), seed=0)


@pytest.fixture(scope="module")
def failed_set() -> DemoSet:
    return make_demo_set("F", fresh_env(), seed=0)


class TestGeneration:
    def test_optimal_ends_wrapped_in_hang_phase(self, optimal_set):
        for trajectory in optimal_set.trajectories:
            final = trajectory[-1]
            assert final.next_observation.wrap_count >= 1.0
            assert final.phase == "IV"
            assert final.done

    def test_suboptimal_touches_but_does_not_wrap(self, suboptimal_set):
        for trajectory, streaks in zip(
            suboptimal_set.trajectories, suboptimal_set.contact_streaks
        ):
            assert max(streaks) >= 1
            assert trajectory[-1].next_observation.wrap_count < 1.0

    def test_failed_never_contacts(self, failed_set):
        for streaks in failed_set.contact_streaks:
            assert max(streaks) == 0

    def test_generate_demo_returns_transitions(self):
        trajectory = generate_demo("A", fresh_env(), seed=0)
        assert trajectory[-1].next_observation.wrap_count >= 1.0

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            generate_demo("B", fresh_env(), seed=0)

    def test_impossible_class_fails_after_bounded_retries(self, caplog):
        # two steps are never enough to wrap, so every attempt is rejected
        env = fresh_env(max_steps=2)
        with caplog.at_level(logging.WARNING, logger="tetherperch.demos"):
            with pytest.raises(RuntimeError, match="20 attempts"):
                generate_demo("A", env, seed=0)
        assert "violated its invariant" in caplog.text

    def test_set_sizes_match_published_cardinalities(self):
        totals = {
            agent: sum(SET_SIZES[k] for k in kinds)
            for agent, kinds in AGENT_DEMO_KINDS.items()
        }
        assert totals == {"sac": 0, "sacfd-a": 2, "sacfd-aa": 5, "sacfd-aaf": 6}

    def test_invariant_checker_rejects_empty(self):
        assert not satisfies_invariant("A", [], [])


class TestStorage:
    def test_round_trip_is_lossless(self, optimal_set):
        buf = io.StringIO()
        save_demo_set(optimal_set, buf)
        buf.seek(0)
        loaded = load_demo_set(buf)
        assert loaded.label == optimal_set.label
        assert loaded.config_hash == optimal_set.config_hash
        assert loaded.seeds == optimal_set.seeds
        assert loaded.contact_streaks == optimal_set.contact_streaks
        assert len(loaded.trajectories) == len(optimal_set.trajectories)
        for got, want in zip(loaded.trajectories, optimal_set.trajectories):
            assert [transition_to_dict(t) for t in got] == [
                transition_to_dict(t) for t in want
            ]

    def test_header_line_schema(self, optimal_set):
        buf = io.StringIO()
        save_demo_set(optimal_set, buf)
        header = json.loads(buf.getvalue().splitlines()[0])
        assert header["version"] == DEMO_FORMAT_VERSION
        assert header["label"] == "A"
        assert header["config_hash"] == optimal_set.config_hash
        assert "provenance" in header

    def test_buffer_size_counts_all_transitions(self, optimal_set, suboptimal_set):
        buf_a, buf_am = io.StringIO(), io.StringIO()
        save_demo_set(optimal_set, buf_a)
        save_demo_set(suboptimal_set, buf_am)
        buf_a.seek(0)
        buf_am.seek(0)
        buffer = load_transitions([buf_a, buf_am])
        expected = optimal_set.transition_count + suboptimal_set.transition_count
        assert len(buffer) == expected
        assert len(optimal_set.trajectories) + len(suboptimal_set.trajectories) == 5

    def test_loaded_buffer_is_read_only(self, failed_set):
        buf = io.StringIO()
        save_demo_set(failed_set, buf)
        buf.seek(0)
        buffer = load_transitions(buf)
        with pytest.raises(RuntimeError):
            buffer.add(np.zeros(5), np.zeros(3), 0.0, np.zeros(5), False)

    def test_empty_file_gives_empty_buffer_with_warning(self, caplog):
        with caplog.at_level(logging.WARNING, logger="tetherperch.demos"):
            buffer = load_transitions(io.StringIO(""))
        assert len(buffer) == 0
        assert "empty" in caplog.text

    def test_malformed_line_names_line_number(self, failed_set):
        buf = io.StringIO()
        save_demo_set(failed_set, buf)
        lines = buf.getvalue().splitlines()
        lines[2] = "{not json"
        with pytest.raises(ValueError, match="line 3"):
            load_demo_set(io.StringIO("\n".join(lines)))

    def test_missing_field_names_line_number(self, failed_set):
        buf = io.StringIO()
        save_demo_set(failed_set, buf)
        lines = buf.getvalue().splitlines()
        row = json.loads(lines[1])
        del row["rew"]
        lines[1] = json.dumps(row)
        with pytest.raises(ValueError, match="line 2"):
            load_demo_set(io.StringIO("\n".join(lines)))

    def test_bad_header_is_line_one(self):
        with pytest.raises(ValueError, match="line 1"):
            load_demo_set(io.StringIO("not a header\n"))

    def test_version_mismatch_refused(self):
        header = json.dumps({"version": 99, "label": "A", "config_hash": ""})
        with pytest.raises(ValueError, match="version"):
            load_demo_set(io.StringIO(header + "\n"))

    def test_config_hash_mismatch_refused(self, failed_set):
        buf = io.StringIO()
        save_demo_set(failed_set, buf)
        buf.seek(0)
        with pytest.raises(ValueError, match="refusing"):
            load_transitions(buf, expected_config_hash="0" * 16)

    def test_matching_config_hash_accepted(self, failed_set):
        buf = io.StringIO()
        save_demo_set(failed_set, buf)
        buf.seek(0)
        buffer = load_transitions(buf, expected_config_hash=failed_set.config_hash)
        assert len(buffer) == failed_set.transition_count


class TestReplayFidelity:
    def test_rewards_replay_bit_identically(self, optimal_set):
        env = fresh_env()
        for trajectory, seed in zip(optimal_set.trajectories, optimal_set.seeds):
            stored = [t.reward for t in trajectory]
            assert replay_rewards(env, trajectory, seed) == stored

    def test_suboptimal_rewards_replay(self, suboptimal_set):
        env = fresh_env()
        trajectory = suboptimal_set.trajectories[0]
        stored = [t.reward for t in trajectory]
        assert replay_rewards(env, trajectory, suboptimal_set.seeds[0]) == stored


class TestConfigHash:
    def test_stable_for_equal_configuration(self):
        assert sim_config_hash(fresh_env()) == sim_config_hash(fresh_env())

    def test_sensitive_to_world_changes(self):
        from tetherperch.world import scale_tether

        env_a = fresh_env()
        env_b = PerchEnv(
            scale_tether(World(), length_scale=1.5),
            EpisodeConfig(max_steps=60, start_jitter=0.05),
        )
        assert sim_config_hash(env_a) != sim_config_hash(env_b)

    def test_sensitive_to_reward_constants(self):
        from tetherperch.rewards import RewardConstants

        env_a = fresh_env()
        env_b = PerchEnv(
            World(),
            EpisodeConfig(max_steps=60, start_jitter=0.05),
            RewardConstants(safe_distance=2.0).with_end_waypoint(
                World().branch.center + np.array([0.35, 0.0, 0.35])
            ),
        )
        assert sim_config_hash(env_a) != sim_config_hash(env_b)

    def test_short_hex_digest(self):
        digest = sim_config_hash(fresh_env())
        assert len(digest) == 16
        int(digest, 16)
