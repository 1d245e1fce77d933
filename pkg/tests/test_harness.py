"""
Harness tests - seed streams, budgets, cutoffs and evaluation modes
"""

import numpy as np
import pytest

from app.core.agents import CutoffMode, HyperConfig
from app.core.exceptions import ConfigurationError
from app.core.harness import (
    EpisodeEnd,
    EvalMode,
    ExperimentSpec,
    PairingMode,
    SeedPlan,
    derive_stream,
    run_batch,
    run_offline_eval,
    run_online,
    stream_id
)

from tests.conftest import MAZE_CONFIG

SARSA_MC = {"alpha": 0.5, "epsilon": 0.0, "tiles": 8, "tilings": 8, "lambda": 0.9, "gamma": 0.99}


def episode_lengths(record):
    return np.diff(np.append(record.episode_starts, record.step_budget))


class TestSeedStreams:
    """Deterministic stream derivation"""

    def test_deterministic(self):
        """Test the same triple gives the same stream"""
        a = derive_stream(42, 3, "env").random(5)
        b = derive_stream(42, 3, "env").random(5)
        np.testing.assert_array_equal(a, b)

    def test_labels_and_runs_differ(self):
        """Test labels, run indices and salts give distinct streams"""
        ids = {stream_id(42, 0, "env"), stream_id(42, 0, "agent"), stream_id(42, 1, "env"),
               stream_id(42, 0, "env", salt=9), stream_id(43, 0, "env")}
        assert len(ids) == 5

    def test_unknown_label(self):
        """Test only the known labels are accepted"""
        with pytest.raises(ConfigurationError):
            derive_stream(0, 0, "noise")

    def test_seed_plan_bounds(self):
        """Test base seeds must be 64-bit unsigned"""
        with pytest.raises(ConfigurationError):
            SeedPlan(-1, 0)
        with pytest.raises(ConfigurationError):
            SeedPlan(2 ** 64, 0)


class TestSpecValidation:
    """ExperimentSpec checks"""

    def test_unknown_algorithm(self):
        """Test unknown algorithms fail validation"""
        with pytest.raises(ConfigurationError):
            ExperimentSpec("simple-maze", "ppo", HyperConfig(dict(MAZE_CONFIG)), 100).validate()

    def test_bad_budget_and_cutoff(self):
        """Test non-positive budgets and cutoffs fail validation"""
        config = HyperConfig(dict(MAZE_CONFIG))
        with pytest.raises(ConfigurationError):
            ExperimentSpec("simple-maze", "esarsa", config, 0).validate()
        with pytest.raises(ConfigurationError):
            ExperimentSpec("simple-maze", "esarsa", config, 100, cutoff=0).validate()

    def test_fingerprint_tracks_settings(self, maze_spec):
        """Test the fingerprint changes with any setting"""
        other = ExperimentSpec(maze_spec.env_id, maze_spec.algorithm, maze_spec.config, 301)
        assert maze_spec.fingerprint() == ExperimentSpec(
            "simple-maze", "esarsa", HyperConfig(dict(MAZE_CONFIG)), 300).fingerprint()
        assert maze_spec.fingerprint() != other.fingerprint()

    def test_offline_mode_needs_interval(self):
        """Test offline evaluation needs a positive interval and rollout count"""
        with pytest.raises(ConfigurationError):
            EvalMode.offline(0, 5)


class TestRunOnline:
    """Fixed-budget online runs"""

    def test_exact_budget(self, maze_spec):
        """Test a run records exactly step_budget entries"""
        record = run_online(maze_spec, SeedPlan(0, 0))
        assert record.step_budget == 300
        assert record.episode_starts[0] == 0
        assert len(record.episode_ends) == record.episode_count

    def test_curve_constant_within_episodes(self, maze_spec):
        """Test every step of an episode carries that episode's return"""
        record = run_online(maze_spec, SeedPlan(0, 0))
        bounds = np.append(record.episode_starts, record.step_budget)
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            assert np.all(record.per_step_return[lo:hi] == record.per_step_return[lo])

    def test_returns_in_range(self, maze_spec):
        """Test maze returns are discounted and lie in [0, 1]"""
        record = run_online(maze_spec, SeedPlan(0, 0))
        assert np.all(record.per_step_return >= 0.0)
        assert np.all(record.per_step_return <= 1.0)

    def test_reproducible(self, maze_spec):
        """Test the same seed plan reproduces the run bit for bit"""
        a = run_online(maze_spec, SeedPlan(7, 2))
        b = run_online(maze_spec, SeedPlan(7, 2))
        np.testing.assert_array_equal(a.per_step_return, b.per_step_return)
        assert a.env_seed == b.env_seed and a.agent_seed == b.agent_seed

    def test_cutoff_limits_episodes(self):
        """Test no episode runs past the cutoff and cutoffs are labelled"""
        spec = ExperimentSpec("mountain-car", "sarsa-lambda", HyperConfig(SARSA_MC), 500, cutoff=50,
                              cutoff_mode=CutoffMode.BOOTSTRAP)
        record = run_online(spec, SeedPlan(0, 0))
        assert np.all(episode_lengths(record) <= 50)
        assert record.cutoff_count >= 1
        assert set(record.episode_ends) <= set(EpisodeEnd)

    def test_partial_final_episode(self):
        """Test an unfinished final episode is marked partial"""
        spec = ExperimentSpec("mountain-car", "sarsa-lambda", HyperConfig(SARSA_MC), 60)
        record = run_online(spec, SeedPlan(0, 0))
        assert record.has_partial
        assert not record.complete_mask()[-1]

    def test_continuing_task_single_episode(self):
        """Test continuing tasks run as one partial episode"""
        spec = ExperimentSpec("bairds", "offpolicy-td",
                              HyperConfig({"alpha": 0.001, "gamma": 0.9}), 100)
        record = run_online(spec, SeedPlan(0, 0))
        assert record.episode_count == 1
        assert record.episode_ends == [EpisodeEnd.PARTIAL]


class TestPairing:
    """Repeated-measures versus independent seeding"""

    def test_repeated_measures_share_env_stream(self, maze_spec):
        """Test two algorithms share environment streams under repeated measures"""
        other = ExperimentSpec("simple-maze", "esarsa", maze_spec.config.replace(alpha=0.5), 300)
        a = run_online(maze_spec, SeedPlan(1, 4, PairingMode.REPEATED_MEASURES))
        b = run_online(other, SeedPlan(1, 4, PairingMode.REPEATED_MEASURES))
        assert a.pairs_with(b)

    def test_independent_streams_differ(self, maze_spec):
        """Test independent pairing salts streams by spec"""
        other = ExperimentSpec("simple-maze", "esarsa", maze_spec.config.replace(alpha=0.5), 300)
        a = run_online(maze_spec, SeedPlan(1, 4, PairingMode.INDEPENDENT))
        b = run_online(other, SeedPlan(1, 4, PairingMode.INDEPENDENT))
        assert not a.pairs_with(b)


class TestOfflineEval:
    """Frozen-policy evaluation"""

    def test_checkpoints(self):
        """Test evaluation happens at 0, every interval and the budget end"""
        spec = ExperimentSpec("simple-maze", "esarsa", HyperConfig(dict(MAZE_CONFIG)), 200,
                              eval_mode=EvalMode.offline(100, 2, episode_cap=50))
        record = run_offline_eval(spec, SeedPlan(0, 0))
        np.testing.assert_array_equal(record.eval_steps, [0, 100, 200])
        assert np.all((record.eval_returns >= 0.0) & (record.eval_returns <= 1.0))

    def test_learning_unaffected(self):
        """Test evaluation rollouts do not change the learning run"""
        config = HyperConfig(dict(MAZE_CONFIG))
        online = run_online(ExperimentSpec("simple-maze", "esarsa", config, 200), SeedPlan(0, 0))
        offline = run_offline_eval(
            ExperimentSpec("simple-maze", "esarsa", config, 200, eval_mode=EvalMode.offline(50, 1, 20)),
            SeedPlan(0, 0))
        np.testing.assert_array_equal(online.per_step_return, offline.per_step_return)

    def test_online_mode_rejected(self, maze_spec):
        """Test run_offline_eval needs an offline mode"""
        with pytest.raises(ConfigurationError):
            run_offline_eval(maze_spec, SeedPlan(0, 0))


class TestRunBatch:
    """Batches of runs"""

    def test_ordered_by_run_index(self, maze_spec):
        """Test records come back in run order"""
        batch = run_batch(maze_spec, 3, base_seed=5)
        assert [r.run_index for r in batch] == [0, 1, 2]
        assert batch.fingerprint == maze_spec.fingerprint()

    def test_parallelism_invariant(self, maze_spec):
        """Test serial and parallel batches are identical"""
        serial = run_batch(maze_spec, 3, base_seed=5, parallelism=1)
        parallel = run_batch(maze_spec, 3, base_seed=5, parallelism=2)
        for a, b in zip(serial, parallel):
            np.testing.assert_array_equal(a.per_step_return, b.per_step_return)

    def test_invalid_counts(self, maze_spec):
        """Test run and worker counts must be positive"""
        with pytest.raises(ConfigurationError):
            run_batch(maze_spec, 0, base_seed=0)
        with pytest.raises(ConfigurationError):
            run_batch(maze_spec, 2, base_seed=0, parallelism=0)
