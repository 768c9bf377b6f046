import logging
import os.path
import time
from abc import abstractmethod
from dataclasses import astuple, fields
from pathlib import Path

from nethermind.labelprop.types import EpisodeRecord, ValidationRecord

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("training").getChild("sinks")


class AbstractMetricsSink:
    """Receives per-episode training metrics and periodic validation results"""

    init_time: float
    records_saved: int = 0

    def __init__(self):
        self.init_time = time.time()

    @abstractmethod
    def write(self, record: EpisodeRecord) -> None:
        raise NotImplementedError

    @abstractmethod
    def write_validation(self, record: ValidationRecord) -> None:
        raise NotImplementedError

    def close(self) -> None:
        """Perform any cleanup and log export stats"""
        minutes, seconds = divmod(time.time() - self.init_time, 60)
        logger.info(f"Recorded {self.records_saved} training episodes in {int(minutes)} minutes {seconds:.1f} seconds")


class MemoryMetricsSink(AbstractMetricsSink):
    """Keeps every record in lists, for tests and sweeps"""

    def __init__(self):
        super().__init__()
        self.records: list[EpisodeRecord] = []
        self.validation: list[ValidationRecord] = []

    def write(self, record: EpisodeRecord) -> None:
        self.records.append(record)
        self.records_saved += 1

    def write_validation(self, record: ValidationRecord) -> None:
        self.validation.append(record)


def _csv_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


class _CsvFile:
    """Append-only CSV file.  Headers are written only when the file starts out empty"""

    separator = ","

    def __init__(self, file_name: str | Path, headers: list[str], append: bool = True):
        self.file_name = str(file_name)
        mode = "at" if append else "wt"
        self.file_handle = open(self.file_name, mode, encoding="utf-8")  # pylint: disable=consider-using-with
        self.write_headers = os.path.getsize(self.file_name) == 0
        self.headers = headers

    def write_row(self, values: tuple) -> None:
        if self.write_headers:
            self.file_handle.write(self.separator.join(self.headers) + "\n")
            self.write_headers = False
        self.file_handle.write(self.separator.join(_csv_value(value) for value in values) + "\n")

    def close(self) -> None:
        self.file_handle.close()


class CsvMetricsSink(AbstractMetricsSink):
    """
    Writes ``episode,loss,lr,query_acc`` rows to a CSV file, and validation rows to ``<stem>.val.csv`` next to it.
    Files are opened in append mode so a resumed run continues the same files.
    """

    def __init__(self, file_name: str | Path, append: bool = True):
        super().__init__()
        path = Path(file_name)
        if path.suffix != ".csv":
            raise ValueError("Metrics file name must be a .csv file")

        self.path = path
        self.validation_path = path.with_name(f"{path.stem}.val.csv")
        self.episodes = _CsvFile(path, [f.name for f in fields(EpisodeRecord)], append)
        self.validation: _CsvFile | None = None
        self.append = append

    def write(self, record: EpisodeRecord) -> None:
        self.episodes.write_row(astuple(record))
        self.records_saved += 1

    def write_validation(self, record: ValidationRecord) -> None:
        if self.validation is None:
            self.validation = _CsvFile(self.validation_path, [f.name for f in fields(ValidationRecord)], self.append)
        self.validation.write_row(astuple(record))

    def close(self) -> None:
        super().close()
        self.episodes.close()
        if self.validation is not None:
            self.validation.close()
