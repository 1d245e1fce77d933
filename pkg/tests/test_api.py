"""
API tests - thin handlers over the core statistics
"""

import pytest
from fastapi.testclient import TestClient

from app.api.main import app, get_record_store
from app.core.harness import PairingMode, RunBatch
from app.services.storage import InMemoryRecordStore

from tests.conftest import make_record

client = TestClient(app)


@pytest.fixture
def store():
    """In-memory record store holding one two-run batch"""
    memory = InMemoryRecordStore()
    records = [make_record([0.0, 1.0, 1.0, 0.0], run_index=i) for i in range(2)]
    memory.save("esarsa-ffff", RunBatch("f" * 16, "simple-maze", "esarsa", 0,
                                        PairingMode.REPEATED_MEASURES, 4, records))
    app.dependency_overrides[get_record_store] = lambda: memory
    yield memory
    app.dependency_overrides.clear()


class TestRoot:
    """Info and health endpoints"""

    def test_root(self):
        """Test the root lists endpoints"""
        response = client.get("/")
        assert response.status_code == 200
        assert response.json()["endpoints"]["interval"] == "/api/v1/stats/interval"

    def test_health(self):
        """Test health reports the storage backend"""
        body = client.get("/health").json()
        assert body["status"] == "healthy"
        assert "storage_type" in body["config"]


class TestStats:
    """Statistics endpoints"""

    def test_t_interval(self):
        """Test a known Student-t interval"""
        response = client.post("/api/v1/stats/interval", json={"samples": [1, 2, 3, 4, 5]})
        assert response.status_code == 200
        body = response.json()
        assert body["kind"] == "confidence"
        assert body["center"] == pytest.approx(3.0)
        assert body["upper"] - body["center"] == pytest.approx(1.9632, abs=1e-3)

    def test_bootstrap_seeded(self):
        """Test the same seed gives the same bootstrap interval"""
        payload = {"samples": [0.1, 0.4, 0.35, 0.8, 0.5], "method": "bootstrap", "resamples": 500, "seed": 4}
        first = client.post("/api/v1/stats/interval", json=payload).json()
        assert first == client.post("/api/v1/stats/interval", json=payload).json()

    def test_tolerance_too_few_runs(self):
        """Test a tolerance interval with 30 runs is rejected"""
        response = client.post("/api/v1/stats/interval", json={
            "samples": [float(i) for i in range(30)], "method": "tolerance", "beta": 0.9,
        })
        assert response.status_code == 422

    def test_tolerance(self):
        """Test 50 runs give a tolerance interval"""
        response = client.post("/api/v1/stats/interval", json={
            "samples": [float(i) for i in range(50)], "method": "tolerance", "beta": 0.9,
        })
        assert response.status_code == 200
        assert response.json()["beta"] == 0.9

    def test_bernstein_needs_range(self):
        """Test Bernstein without value_range"""
        response = client.post("/api/v1/stats/interval", json={"samples": [0.1, 0.2], "method": "bernstein"})
        assert response.status_code == 422

    def test_validation(self):
        """Test schema violations"""
        assert client.post("/api/v1/stats/interval", json={"samples": []}).status_code == 422
        assert client.post("/api/v1/stats/interval", json={"samples": [1.0], "alpha": 1.5}).status_code == 422
        assert client.post("/api/v1/stats/interval", json={"samples": [1.0], "method": "z"}).status_code == 422

    def test_iqm(self):
        """Test the interquartile mean"""
        body = client.post("/api/v1/stats/iqm", json={"samples": [1, 2, 3, 4, 5, 6, 7, 8]}).json()
        assert body["iqm"] == pytest.approx(4.5)
        assert body["n_samples"] == 8

    def test_distribution(self):
        """Test histogram masses sum to one"""
        body = client.post("/api/v1/stats/distribution", json={"samples": [0.0, 0.1, 0.2, 0.9, 1.0]}).json()
        assert sum(body["masses"]) == pytest.approx(1.0)
        assert len(body["modes"]) >= 1

    def test_t_multiplier(self):
        """Test the t multiplier for ten runs"""
        body = client.get("/api/v1/stats/t-multiplier", params={"n": 10}).json()
        assert body["multiplier"] == pytest.approx(2.262, abs=1e-3)


class TestCompare:
    """Comparison endpoint"""

    def test_paired(self):
        """Test a consistent per-run improvement is significant"""
        response = client.post("/api/v1/compare/paired", json={
            "samples_a": [10.5, 20.4, 30.6, 40.5, 50.5],
            "samples_b": [10.0, 20.0, 30.0, 40.0, 50.0],
            "k_comparisons": 5,
        })
        assert response.status_code == 200
        body = response.json()
        assert body["significant"]
        assert body["effect_size"] == pytest.approx(0.5)
        assert body["effective_alpha"] == pytest.approx(0.01)

    def test_unpaired(self):
        """Test Welch on the same data finds nothing"""
        body = client.post("/api/v1/compare/paired", json={
            "samples_a": [10.5, 20.4, 30.6, 40.5, 50.5],
            "samples_b": [10.0, 20.0, 30.0, 40.0, 50.0],
            "paired": False,
        }).json()
        assert not body["significant"]
        assert body["interval"]["method"] == "welch"

    def test_paired_lengths(self):
        """Test paired samples must match run for run"""
        response = client.post("/api/v1/compare/paired", json={"samples_a": [1, 2, 3], "samples_b": [1, 2]})
        assert response.status_code == 422


class TestHyper:
    """Hyperparameter endpoints"""

    def test_bootstrap_max(self):
        """Test winner counts cover every resample"""
        body = client.post("/api/v1/hyper/bootstrap-max", json={
            "configs": [[0.1, 0.2, 0.3], [0.5, 0.6, 0.4]], "resamples": 200,
        }).json()
        assert sum(body["winner_counts"]) == 200
        assert body["interval"]["method"] == "bootstrap-max"

    def test_sensitivity(self):
        """Test an edge best value is flagged"""
        body = client.post("/api/v1/hyper/sensitivity", json={
            "configs": [[0.1, 0.2], [0.3, 0.4], [0.8, 0.9]], "values": [0.1, 0.2, 0.4], "resamples": 200,
        }).json()
        assert body["best_index"] == 2
        assert body["boundary_flag"]
        assert body["rows"][2]["best"]

    def test_sensitivity_value_count(self):
        """Test values must match configs"""
        response = client.post("/api/v1/hyper/sensitivity", json={"configs": [[0.1, 0.2]], "values": [1, 2]})
        assert response.status_code == 422

    def test_fair_set(self):
        """Test the under-tuned algorithm is reported"""
        body = client.post("/api/v1/hyper/fair-set", json={"config_counts": {"a": 36, "b": 36, "c": 20}}).json()
        assert body == {"ok": False, "reference_count": 36, "violators": ["c"]}

    def test_overreport(self):
        """Test 36 equal configs over-report in most simulated sweeps"""
        body = client.post("/api/v1/hyper/overreport", json={"H": 36, "N": 10, "trials": 1000}).json()
        assert body["fraction"] > 0.9
        assert body["closed_form"] == pytest.approx(1.0 - 0.5 ** 36)


class TestRecords:
    """Stored batch endpoints"""

    def test_list(self, store):
        """Test keys are listed and filtered"""
        assert client.get("/api/v1/records").json() == ["esarsa-ffff"]
        assert client.get("/api/v1/records", params={"pattern": "sarsa*"}).json() == []

    def test_summary(self, store):
        """Test the batch summary"""
        body = client.get("/api/v1/records/esarsa-ffff").json()
        assert body["runs"] == 2
        assert body["step_budget"] == 4
        assert body["mean_return_rate"] == pytest.approx(0.5)

    def test_missing(self, store):
        """Test an unknown key"""
        assert client.get("/api/v1/records/nope").status_code == 404

    def test_metric(self, store):
        """Test per-run metric values"""
        body = client.get("/api/v1/records/esarsa-ffff/metric").json()
        assert body["values"] == [0.5, 0.5]

    def test_offline_metric_without_checkpoints(self, store):
        """Test an offline metric on an online batch"""
        response = client.get("/api/v1/records/esarsa-ffff/metric", params={"metric": "final_eval"})
        assert response.status_code == 422

    def test_store_not_initialized(self):
        """Test requests before startup"""
        assert client.get("/api/v1/records").status_code == 503
