import numpy as np
import pandas as pd
import pytest

from nethermind.labelprop.bench import (
    EvalReport,
    confidence_interval,
    standard_error,
    write_report_csv,
    write_sweep_csv,
)


def _report(accuracies, tag="tpn", stderr=None, seconds=1.5):
    return EvalReport(
        tag=tag, n_way=5, k_shot=1, query=15, accuracies=np.asarray(accuracies), seconds=seconds, stderr=stderr
    )


class TestStatistics:
    def test_confidence_interval(self):
        accuracies = np.array([0.5, 0.7, 0.9, 0.7])
        assert confidence_interval(accuracies) == pytest.approx(1.96 * np.sqrt(0.02) / 2.0)

    def test_constant_accuracies(self):
        assert confidence_interval(np.ones(10)) == 0.0
        assert standard_error(np.ones(3)) == 0.0

    def test_empty(self):
        assert confidence_interval(np.array([])) == 0.0

    def test_report_properties(self):
        report = _report([1.0, 0.0, 1.0, 1.0])
        assert report.episodes == 4
        assert report.mean_acc == 0.75


class TestReportFiles:
    def test_columns_and_header(self, tmp_path):
        path = tmp_path / "eval.csv"
        write_report_csv([_report([0.5, 1.0])], path, header={"command": "eval", "seed": 3})

        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[:2] == ["# command = eval", "# seed = 3"]
        assert lines[2] == "tag,n_way,k_shot,query,episodes,mean_acc,ci95,seconds"
        assert lines[3] == "tpn,5,1,15,2,0.750000,0.346482,"

    def test_timing_fills_seconds(self, tmp_path):
        path = tmp_path / "eval.csv"
        write_report_csv([_report([0.5, 1.0])], path, timing=True)
        frame = pd.read_csv(path)
        assert frame["seconds"].tolist() == [1.5]

    def test_reports_are_reproducible(self, tmp_path):
        write_report_csv([_report([0.2, 0.4], seconds=1.0)], tmp_path / "a.csv")
        write_report_csv([_report([0.2, 0.4], seconds=9.0)], tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_stderr_column(self, tmp_path):
        path = tmp_path / "semi.csv"
        write_report_csv([_report([0.5, 1.0], tag="tpn-semi-m4", stderr=0.01)], path)
        frame = pd.read_csv(path)
        assert frame.columns[-1] == "stderr"
        assert frame["stderr"].tolist() == [0.01]

    def test_sweep_columns(self, tmp_path):
        path = tmp_path / "sweep.csv"
        rows = [("alpha", 0.5, _report([0.6], tag="alpha=0.5")), ("alpha", 0.9, _report([0.8], tag="alpha=0.9"))]
        write_sweep_csv(rows, path)

        frame = pd.read_csv(path)
        assert list(frame.columns[:3]) == ["param", "value", "tag"]
        assert frame["value"].tolist() == [0.5, 0.9]
        assert frame["mean_acc"].tolist() == [0.6, 0.8]
