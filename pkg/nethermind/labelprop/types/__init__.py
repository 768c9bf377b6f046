from .enums import (
    BaselineKind,
    EmbeddingVariant,
    LabelInit,
    LossScope,
    PropagationMode,
    RngStream,
    Split,
    SyntheticKind,
)
from .metrics import EpisodeRecord, MetricsSink, ValidationRecord
