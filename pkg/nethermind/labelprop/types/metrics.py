from dataclasses import dataclass
from typing import Protocol


@dataclass(slots=True)
class EpisodeRecord:
    """Metrics emitted after every training episode"""

    episode: int
    loss: float
    lr: float
    query_acc: float


@dataclass(slots=True)
class ValidationRecord:
    """Periodic accuracy on the validation split"""

    episode: int
    val_acc: float
    val_ci95: float


class MetricsSink(Protocol):
    """Receives training metrics.  Implementations may buffer, but must flush on close()"""

    def write(self, record: EpisodeRecord) -> None:
        ...

    def write_validation(self, record: ValidationRecord) -> None:
        ...

    def close(self) -> None:
        ...
