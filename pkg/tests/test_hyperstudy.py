"""
Hyperparameter study tests
"""

import math

import numpy as np
import pytest

from app.core.agents import HyperConfig
from app.core.exceptions import ConfigurationError, StatisticalPreconditionError
from app.core.hyperstudy import (
    Distribution,
    SweepSpec,
    bootstrap_max_estimate,
    closed_form_overreport_probability,
    fair_set_check,
    grid_configs,
    loo_hyper_generalization,
    maximization_bias_probability,
    power_grid,
    random_configs,
    sensitivity,
    two_stage_estimate,
    violin_table
)

# Top config, one runner-up a standard error below it (N = 30), three far behind
GAP = 1.0 / math.sqrt(30)
RUNNER_UP_MEANS = np.array([1.0, 1.0 - GAP, 0.0, 0.0, 0.0])


class TestSweeps:
    """Grids and sweep expansion"""

    def test_power_grid(self):
        """Test the power-of-base grid"""
        assert power_grid(2, -3, -1) == [0.125, 0.25, 0.5]

    def test_power_grid_order(self):
        """Test an inverted exponent range is rejected"""
        with pytest.raises(ConfigurationError):
            power_grid(2, 1, 0)

    def test_cross_product(self):
        """Test axes expand to their cross product in order"""
        sweep = SweepSpec(axes={"alpha": [0.1, 0.2], "epsilon": [0.0, 0.1]})
        assert sweep.overrides() == [
            {"alpha": 0.1, "epsilon": 0.0}, {"alpha": 0.1, "epsilon": 0.1},
            {"alpha": 0.2, "epsilon": 0.0}, {"alpha": 0.2, "epsilon": 0.1},
        ]
        assert sweep.parameter is None

    def test_grid_configs_keep_base(self):
        """Test swept values override a base configuration"""
        base = HyperConfig({"alpha": 0.5, "gamma": 0.99})
        configs = grid_configs(base, SweepSpec(axes={"alpha": [0.1, 0.2]}))
        assert [c["alpha"] for c in configs] == [0.1, 0.2]
        assert all(c["gamma"] == 0.99 for c in configs)
        assert configs[0].fingerprint() != configs[1].fingerprint()

    def test_empty_axis(self):
        """Test axes need values"""
        with pytest.raises(ConfigurationError):
            SweepSpec(axes={"alpha": []})


class TestSensitivity:
    """Sensitivity curves"""

    def test_interior_best(self, rng):
        """Test the best value and no range warning for an interior peak"""
        samples = [rng.normal(mu, 0.1, 10) for mu in (0.2, 0.8, 0.3)]
        result = sensitivity([0.1, 0.2, 0.4], samples, m=500, rng=rng)
        assert result.best_value == 0.2
        assert not result.boundary_flag
        assert [row["best"] for row in result.rows()] == [False, True, False]

    def test_boundary_best(self, rng):
        """Test a best value at the edge of the range is flagged"""
        samples = [rng.normal(mu, 0.1, 10) for mu in (0.2, 0.5, 0.9)]
        assert sensitivity([1, 2, 3], samples, m=500, rng=rng).boundary_flag

    def test_length_mismatch(self):
        """Test one sample set per value"""
        with pytest.raises(ConfigurationError):
            sensitivity([1, 2], [[0.1, 0.2]])


class TestFairSet:
    """Equal tuning budgets"""

    def test_violator(self):
        """Test the algorithm with fewer configs is reported"""
        report = fair_set_check({"a": 36, "b": 36, "c": 20})
        assert not report.ok
        assert report.reference_count == 36
        assert report.violators == ["c"]

    def test_fair(self):
        """Test equal budgets pass"""
        assert fair_set_check({"a": 10, "b": 10}).ok

    def test_violin_table_unfair(self):
        """Test violin summaries refuse unequal budgets"""
        with pytest.raises(ConfigurationError):
            violin_table({"a": [[1.0], [2.0]], "b": [[1.0]]})

    def test_violin_quantiles(self):
        """Test violin summaries pool per-config means"""
        table = violin_table({"a": [[1.0, 3.0], [4.0], [6.0]]})
        assert table["a"].quantiles["min"] == 2.0
        assert table["a"].quantiles["max"] == 6.0
        assert table["a"].quantiles["median"] == 4.0


class TestRandomConfigs:
    """Random search"""

    def test_bounds(self, rng):
        """Test samples respect each distribution"""
        configs = random_configs({
            "alpha": {"log-uniform": [1e-4, 1e-1]},
            "epsilon": {"uniform": [0.0, 0.2]},
            "tilings": {"choice": [4, 8, 16]},
        }, 50, rng)
        assert len(configs) == 50
        for c in configs:
            assert 1e-4 <= c["alpha"] <= 1e-1
            assert 0.0 <= c["epsilon"] <= 0.2
            assert c["tilings"] in (4, 8, 16)

    def test_bad_distribution(self):
        """Test unknown kinds and inverted bounds"""
        with pytest.raises(ConfigurationError):
            Distribution("gamma", 0.0, 1.0)
        with pytest.raises(ConfigurationError):
            Distribution.from_dict({"uniform": [1.0, 0.0]})


class TestBootstrapMax:
    """Tuned-performance estimation"""

    def test_not_below_sample_max(self, rng):
        """Test the estimate is at least the largest sample mean, up to noise"""
        per_config = [rng.normal(mu, 1.0, 10) for mu in (0.0, 0.1, 0.2, 0.3)]
        estimate = bootstrap_max_estimate(per_config, m=2000, rng=rng)
        assert estimate.mean >= max(x.mean() for x in per_config) - 0.02
        assert estimate.winner_counts.sum() == 2000
        assert estimate.interval.lower <= estimate.mean <= estimate.interval.upper

    def test_needs_two_runs(self):
        """Test every config needs at least two runs"""
        with pytest.raises(StatisticalPreconditionError):
            bootstrap_max_estimate([[1.0, 2.0], [3.0]])

    @pytest.mark.slow
    def test_covers_true_max(self):
        """Test the interval covers the true best mean while the naive max over-reports"""
        rng = np.random.default_rng(77)
        true_max = RUNNER_UP_MEANS.max()
        covered, over = 0, 0
        for _ in range(500):
            per_config = rng.normal(RUNNER_UP_MEANS[:, None], 1.0, size=(5, 30))
            estimate = bootstrap_max_estimate(list(per_config), m=1000, rng=rng)
            covered += estimate.interval.contains(true_max)
            over += per_config.mean(axis=1).max() > true_max
        assert covered / 500 >= 0.9
        assert over / 500 > 0.5


class TestMaximizationBias:
    """Over-reporting by picking the best sample mean"""

    def test_equal_means(self):
        """Test 36 equal-mean configs nearly always over-report"""
        fraction = maximization_bias_probability(36, 10, 1000, np.random.default_rng(0))
        assert fraction > 0.9

    def test_closed_form(self):
        """Test the independent-config closed form"""
        assert closed_form_overreport_probability(1) == 0.5
        assert closed_form_overreport_probability(36) == pytest.approx(1.0 - 0.5 ** 36)

    def test_single_config_near_half(self):
        """Test one config over-reports about half the time"""
        fraction = maximization_bias_probability(1, 10, 2000, np.random.default_rng(1))
        assert abs(fraction - 0.5) < 0.05

    def test_mean_shape(self):
        """Test one true mean per config"""
        with pytest.raises(ConfigurationError):
            maximization_bias_probability(3, 10, 100, means=[0.0, 1.0])


class TestTwoStage:
    """Two-stage tuning"""

    def test_selects_first_stage_winner(self, rng):
        """Test the winner is rerun on fresh samples"""
        per_config = [[0.0, 0.1], [0.9, 1.0], [0.4, 0.5]]
        calls = []

        def fresh_runs(index, n, g):
            calls.append((index, n))
            return g.normal(0.5, 0.1, n)

        result = two_stage_estimate(per_config, fresh_runs, second_stage_runs=50, rng=rng)
        assert result.selected_index == 1
        assert result.first_stage_mean == pytest.approx(0.95)
        assert calls == [(1, 50)]
        assert result.second_stage.n_samples == 50


class TestLeaveOneOut:
    """Cross-environment hyperparameter generalization"""

    def test_folds(self):
        """Test each environment is scored with the config best on the others"""
        table = np.array([
            [1.0, 0.0, 0.6],
            [0.0, 1.0, 0.6],
        ])
        result = loo_hyper_generalization(table)
        assert result.fold_configs == [1, 0]
        np.testing.assert_allclose(result.fold_values, [0.0, 0.0])
        assert result.deployed_config == 2
        assert result.in_sample == pytest.approx(0.6)
        assert result.estimate == 0.0

    def test_needs_two_environments(self):
        """Test one environment leaves nothing to generalize to"""
        with pytest.raises(StatisticalPreconditionError):
            loo_hyper_generalization(np.array([[0.1, 0.2]]))

    def test_mapping_grids_match(self):
        """Test environments must share a config grid"""
        with pytest.raises(ConfigurationError):
            loo_hyper_generalization({"a": [[0.1], [0.2]], "b": [[0.3]]})
