import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd
from rich.table import Table

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("bench").getChild("reports")

REPORT_COLUMNS = ["tag", "n_way", "k_shot", "query", "episodes", "mean_acc", "ci95", "seconds"]
SWEEP_COLUMNS = ["param", "value"]
FLOAT_FORMAT = "%.6f"


def confidence_interval(accuracies: np.ndarray) -> float:
    """95% confidence half-width 1.96 * std / sqrt(E), with the population standard deviation"""
    accuracies = np.asarray(accuracies, dtype=np.float64)
    if accuracies.size == 0:
        return 0.0
    return float(1.96 * accuracies.std() / np.sqrt(accuracies.size))


def standard_error(values: np.ndarray) -> float:
    """Standard error of the mean, std / sqrt(n)"""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return 0.0
    return float(values.std() / np.sqrt(values.size))


@dataclass
class EvalReport:  # pylint: disable=too-many-instance-attributes
    """Accuracy over a set of evaluation episodes.  ``query`` is the number of queries per class"""

    tag: str
    n_way: int
    k_shot: int
    query: int
    accuracies: np.ndarray
    seconds: float = 0.0
    stderr: float | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def episodes(self) -> int:
        return int(self.accuracies.size)

    @property
    def mean_acc(self) -> float:
        return float(self.accuracies.mean()) if self.accuracies.size else 0.0

    @property
    def ci95(self) -> float:
        return confidence_interval(self.accuracies)

    def row(self, timing: bool = False) -> dict[str, Any]:
        """CSV row.  seconds is left empty unless timing is requested, so reports are reproducible byte for byte"""
        row: dict[str, Any] = {
            "tag": self.tag,
            "n_way": self.n_way,
            "k_shot": self.k_shot,
            "query": self.query,
            "episodes": self.episodes,
            "mean_acc": self.mean_acc,
            "ci95": self.ci95,
            "seconds": self.seconds if timing else None,
        }
        if self.stderr is not None:
            row["stderr"] = self.stderr
        return row


def _write(frame: pd.DataFrame, path: str | Path, header: dict[str, Any] | None) -> None:
    with open(path, "wt", encoding="utf-8", newline="") as handle:
        for key, value in (header or {}).items():
            handle.write(f"# {key} = {value}\n")
        frame.to_csv(handle, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


def report_frame(reports: Sequence[EvalReport], timing: bool = False) -> pd.DataFrame:
    columns = list(REPORT_COLUMNS)
    if any(report.stderr is not None for report in reports):
        columns.append("stderr")
    return pd.DataFrame([report.row(timing) for report in reports], columns=columns)


def write_report_csv(
    reports: Sequence[EvalReport], path: str | Path, header: dict[str, Any] | None = None, timing: bool = False
) -> None:
    """
    Writes one row per report.  The resolved configuration is written first as ``# key = value`` lines.  Semi
    supervised reports add a trailing ``stderr`` column.
    """
    _write(report_frame(reports, timing), path, header)
    logger.info(f"Wrote {len(reports)} report rows to {path}")


def write_sweep_csv(
    rows: Sequence[tuple[str, Any, EvalReport]],
    path: str | Path,
    header: dict[str, Any] | None = None,
    timing: bool = False,
) -> None:
    """Writes one row per swept value, with leading ``param,value`` columns"""
    frame = report_frame([report for _, _, report in rows], timing)
    frame.insert(0, "value", [value for _, value, _ in rows])
    frame.insert(0, "param", [param for param, _, _ in rows])
    _write(frame, path, header)
    logger.info(f"Wrote {len(rows)} sweep rows to {path}")


def report_table(reports: Sequence[EvalReport], title: str = "Evaluation") -> Table:
    table = Table(title=title, min_width=80)
    for column in ("Tag", "Way", "Shot", "Query", "Episodes"):
        table.add_column(column, justify="right" if column != "Tag" else "left")
    table.add_column("Accuracy", justify="right")
    for report in reports:
        accuracy = f"{100 * report.mean_acc:.2f} +- {100 * report.ci95:.2f}%"
        if report.stderr is not None:
            accuracy += f" (se {100 * report.stderr:.2f})"
        table.add_row(
            report.tag, str(report.n_way), str(report.k_shot), str(report.query), str(report.episodes), accuracy
        )
    return table
