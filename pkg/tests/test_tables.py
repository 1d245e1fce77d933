"""
Table output tests
"""

import numpy as np
import pytest

from app.core.exceptions import ConfigurationError
from app.core.metrics import PerfSampleSet
from app.core.stats import perf_distribution, student_t_ci
from app.services.tables import (
    band_rows,
    distribution_rows,
    format_table,
    interval_header,
    metric_rows,
    write_table
)


class TestFormatTable:
    """CSV with comment headers"""

    def test_header_then_csv(self):
        """Test the provenance lines come first in a fixed order"""
        text = format_table([{"run_index": 0, "value": 0.5}],
                            {"fingerprint": "abc", "method": "t", "alpha": 0.05, "n": 1, "env": "maze"})
        lines = text.splitlines()
        assert lines[:6] == [
            "# method: t",
            "# alpha: 0.05",
            "# beta: ",
            "# n: 1",
            "# fingerprint: abc",
            "# env: maze",
        ]
        assert lines[6] == "run_index,value"
        assert lines[7] == "0,0.5"

    def test_explicit_fieldnames(self):
        """Test column order follows fieldnames and missing cells are blank"""
        text = format_table([{"a": 1}], {}, fieldnames=["b", "a"])
        assert text.splitlines()[-2:] == ["b,a", ",1"]

    def test_empty_rows(self):
        """Test an empty table still carries its header"""
        assert format_table([], {"method": "t"}).startswith("# method: t\n")

    def test_numpy_scalars(self):
        """Test numpy scalars render as plain numbers in cells and headers"""
        text = format_table([{"rate": np.float64(0.785), "width": np.float32(0.5), "hits": np.int64(3)}],
                            {"alpha": np.float64(0.05)})
        lines = text.splitlines()
        assert "# alpha: 0.05" in lines
        assert lines[-1] == "0.785,0.5,3"
        assert "np." not in text


class TestWriteTable:
    """Table files"""

    def test_creates_parents(self, tmp_path):
        """Test nested output directories are created"""
        path = write_table(tmp_path / "a" / "b.csv", [{"x": 1}], {})
        assert path.read_text(encoding="utf-8").endswith("x\n1\n")

    def test_unwritable(self, tmp_path):
        """Test a directory in place of the file"""
        (tmp_path / "taken").mkdir()
        with pytest.raises(ConfigurationError):
            write_table(tmp_path / "taken", [{"x": 1}], {})


class TestRowBuilders:
    """Rows for metrics, bands and distributions"""

    def test_metric_rows(self):
        """Test run indices pair with values"""
        rows = metric_rows(PerfSampleSet(np.array([0.1, 0.2]), "return_rate", ""), [4, 7])
        assert rows == [{"run_index": 4, "value": 0.1}, {"run_index": 7, "value": 0.2}]

    def test_band_stride(self):
        """Test strided band rows keep the step index"""
        bands = [student_t_ci([float(t), t + 1.0, t + 2.0]) for t in range(5)]
        assert [row["step"] for row in band_rows(bands, stride=2)] == [0, 2, 4]

    def test_distribution_rows(self, rng):
        """Test histogram masses sum to one"""
        tables = distribution_rows(perf_distribution(rng.normal(size=200)))
        assert sum(row["mass"] for row in tables["histogram"]) == pytest.approx(1.0)
        assert len(tables["density"]) == 512
        assert len(tables["modes"]) >= 1

    def test_interval_header(self):
        """Test headers describe how an interval was made"""
        header = interval_header(student_t_ci([1.0, 2.0, 3.0]), "fp", metric="return_rate")
        assert header["method"] == "t"
        assert header["n"] == 3
        assert header["metric"] == "return_rate"
