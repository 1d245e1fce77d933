"""
Command-line tests - exit codes, determinism and output files
"""

import copy
from pathlib import Path
from types import SimpleNamespace

import pytest
import yaml

from app.cli.config_file import load_config_file
from app.cli import main as cli_main
from app.cli.main import EXIT_CONFIG, EXIT_OK, EXIT_STATS, _value_range, main
from app.config import config
from app.core.demos import demo_baird
from app.core.exceptions import ConfigurationError
from app.core.harness import PairingMode, RunBatch
from app.services.storage import FileRecordStore

from tests.conftest import MAZE_CONFIG, make_record

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

EXPERIMENT = {
    "experiment": {
        "name": "maze",
        "env": {"id": "simple-maze"},
        "algorithm": "esarsa",
        "config": dict(MAZE_CONFIG),
        "step_budget": 300,
    },
    "seeds": {"base_seed": 7, "runs": 8},
}


@pytest.fixture(autouse=True)
def file_storage(monkeypatch):
    """Records go to disk with a small bootstrap budget"""
    monkeypatch.setattr(type(config), "STORAGE_TYPE", "file")
    monkeypatch.setattr(type(config), "BOOTSTRAP_RESAMPLES", 500)


def write_config(tmp_path, name="maze.yaml", **sections):
    document = copy.deepcopy(EXPERIMENT)
    for key, value in sections.items():
        document[key] = value
    path = tmp_path / name
    path.write_text(yaml.safe_dump(document), encoding="utf-8")
    return str(path)


class TestRun:
    """rleval run"""

    def test_parallelism_does_not_change_records(self, tmp_path, capsys):
        """Test serial and parallel runs write byte-identical record files"""
        path = write_config(tmp_path)
        assert main(["run", "--config", path, "--out", str(tmp_path / "serial"), "--parallelism", "1"]) == EXIT_OK
        assert main(["run", "--config", path, "--out", str(tmp_path / "parallel"), "--parallelism", "8"]) == EXIT_OK

        serial = sorted((tmp_path / "serial").glob("*.records"))
        parallel = sorted((tmp_path / "parallel").glob("*.records"))
        assert len(serial) == 1
        assert serial[0].name == parallel[0].name
        assert serial[0].name.startswith("esarsa-")
        assert serial[0].read_bytes() == parallel[0].read_bytes()
        assert list((tmp_path / "serial").glob("*.metrics.csv"))
        assert "# method: t" in capsys.readouterr().out

    def test_unknown_key(self, tmp_path):
        """Test unknown config keys exit with the configuration code"""
        path = write_config(tmp_path, extra={"x": 1})
        assert main(["run", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG

    def test_bad_hyperparameter(self, tmp_path):
        """Test an out-of-range hyperparameter fails before anything runs"""
        document = copy.deepcopy(EXPERIMENT["experiment"])
        document["config"]["epsilon"] = 2.0
        path = write_config(tmp_path, experiment=document)
        assert main(["run", "--config", path, "--out", str(tmp_path / "out")]) == EXIT_CONFIG
        assert not (tmp_path / "out").exists()

    def test_missing_file(self, tmp_path):
        """Test an unreadable config"""
        assert main(["run", "--config", str(tmp_path / "none.yaml")]) == EXIT_CONFIG

    def test_unknown_env(self, tmp_path):
        """Test an unknown environment id"""
        document = copy.deepcopy(EXPERIMENT["experiment"])
        document["env"] = {"id": "cartpole"}
        path = write_config(tmp_path, experiment=document)
        assert main(["run", "--config", path, "--out", str(tmp_path)]) == EXIT_CONFIG


class TestAnalyze:
    """rleval analyze"""

    def test_tables(self, tmp_path, capsys):
        """Test bands, distributions and summaries are written per batch"""
        path = write_config(tmp_path)
        records = tmp_path / "records"
        assert main(["run", "--config", path, "--out", str(records)]) == EXIT_OK
        out = tmp_path / "tables"
        assert main(["analyze", str(records), "--out", str(out), "--stride", "10"]) == EXIT_OK
        for suffix in ("band", "histogram", "density", "modes", "summary"):
            assert len(list(out.glob(f"*.{suffix}.csv"))) == 1
        assert "statistic,value" in capsys.readouterr().out

    def test_single_run(self, tmp_path):
        """Test a one-run batch exits with the precondition code"""
        batch = RunBatch("f" * 16, "simple-maze", "esarsa", 0, PairingMode.REPEATED_MEASURES, 3,
                         [make_record([0.0, 1.0, 0.0])])
        path = FileRecordStore(str(tmp_path)).save("single", batch)
        assert main(["analyze", path, "--out", str(tmp_path)]) == EXIT_STATS

    def test_empty_directory(self, tmp_path):
        """Test a directory with no record files"""
        assert main(["analyze", str(tmp_path)]) == EXIT_CONFIG


class TestCompare:
    """rleval compare"""

    def test_paired_difference(self, tmp_path, capsys):
        """Test two configs sharing seeds compare as repeated measures"""
        out = tmp_path / "records"
        slow = copy.deepcopy(EXPERIMENT["experiment"])
        slow["config"]["alpha"] = 0.05
        assert main(["run", "--config", write_config(tmp_path), "--out", str(out)]) == EXIT_OK
        assert main(["run", "--config", write_config(tmp_path, "slow.yaml", experiment=slow),
                     "--out", str(out)]) == EXIT_OK
        capsys.readouterr()

        paths = sorted(str(p) for p in out.glob("*.records"))
        assert len(paths) == 2
        code = main(["compare", *paths, "--paired", "--k-comparisons", "5", "--out", str(tmp_path / "diff")])
        assert code == EXIT_OK
        assert len(list((tmp_path / "diff").glob("diff-*.csv"))) == 1
        assert "# k_comparisons: 5" in capsys.readouterr().out


class TestSweep:
    """rleval sweep"""

    def test_sensitivity(self, tmp_path, capsys):
        """Test one record file per config plus sensitivity and manifest tables"""
        path = write_config(tmp_path, sweep={"parameter": "alpha", "values": [0.05, 0.1, 0.2],
                                             "runs_per_config": 3})
        out = tmp_path / "sweep"
        assert main(["sweep", "--config", path, "--out", str(out), "--idealized"]) == EXIT_OK
        assert len(list(out.glob("*.records"))) == 3
        assert (out / "maze.sensitivity.csv").exists()
        assert (out / "maze.manifest.csv").exists()
        assert "bootstrap-max" in capsys.readouterr().out

    def test_missing_section(self, tmp_path):
        """Test sweeping a config without a sweep section"""
        assert main(["sweep", "--config", write_config(tmp_path), "--out", str(tmp_path)]) == EXIT_CONFIG


class TestDemo:
    """rleval demo"""

    def test_maxbias(self, capsys):
        """Test the demo table is printed"""
        assert main(["demo", "maxbias"]) == EXIT_OK
        output = capsys.readouterr().out
        assert "# method: demo:maxbias" in output
        assert "overreport_fraction" in output

    def test_baird_trajectory_and_threshold(self, monkeypatch, tmp_path, capsys):
        """Test the Baird demo uses the configured threshold and writes the norm series"""
        captured = {}

        def short_run(name, base_seed, parallelism, **options):
            captured.update(options)
            return demo_baird(base_seed, updates=300, trajectory_every=100, **options)

        monkeypatch.setattr(type(config), "DIVERGENCE_THRESHOLD", 5e5)
        monkeypatch.setattr(cli_main, "run_demo", short_run)
        assert main(["demo", "baird", "--out", str(tmp_path)]) == EXIT_OK

        assert captured == {"threshold": 5e5}
        output = capsys.readouterr().out
        assert "step,algorithm,beta,norm" in output
        assert "# threshold: 500000.0" in output
        trajectory = (tmp_path / "demo-baird-trajectory.csv").read_text()
        assert trajectory.count("\n300,") == 6
        assert (tmp_path / "demo-baird.csv").exists()

    def test_unknown_demo(self):
        """Test argparse rejects unknown demo names"""
        with pytest.raises(SystemExit):
            main(["demo", "nope"])


class TestConfigFiles:
    """Shipped experiment configs"""

    @pytest.mark.parametrize("name", ["maze.yaml", "maze_sweep.yaml", "mountain_car_offline.yaml"])
    def test_valid(self, name):
        """Test every shipped config validates"""
        parsed = load_config_file(str(CONFIG_DIR / name))
        assert parsed.experiment_spec().step_budget >= 20_000

    def test_sweep_grid(self):
        """Test the stepsize grid expands to powers of two"""
        sweep = load_config_file(str(CONFIG_DIR / "maze_sweep.yaml")).sweep_spec()
        assert sweep.axes["alpha"] == [2.0 ** e for e in range(-7, 1)]

    def test_grid_and_values(self, tmp_path):
        """Test a sweep cannot give both a grid and values"""
        path = write_config(tmp_path, sweep={"parameter": "alpha", "values": [0.1],
                                             "grid": {"lo_exp": -2, "hi_exp": 0}})
        with pytest.raises(ConfigurationError):
            load_config_file(path)


class TestValueRange:
    """Bernstein value ranges"""

    def test_maze_bounds_cover_short_episodes(self):
        """Test the maze range admits episodes shorter than the noiseless optimum"""
        low, high = _value_range(SimpleNamespace(env_id="simple-maze"), SimpleNamespace(range=None))
        assert low == 0.0
        assert high >= 0.99 ** 14

    def test_explicit_range_wins(self):
        """Test --range overrides the environment bounds"""
        batch = SimpleNamespace(env_id="simple-maze")
        assert _value_range(batch, SimpleNamespace(range=[-1.0, 2.0])) == (-1.0, 2.0)

    def test_unbounded_env(self):
        """Test environments without declared bounds give no range"""
        assert _value_range(SimpleNamespace(env_id="bairds"), SimpleNamespace(range=None)) is None
