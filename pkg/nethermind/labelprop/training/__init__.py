from .adam import AdamState, adam_step
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .config import TrainConfig, resolve_config
from .gradcheck import GradcheckReport, gradcheck
from .schedule import lr_at
from .sinks import CsvMetricsSink, MemoryMetricsSink
from .trainer import Trainer, train
