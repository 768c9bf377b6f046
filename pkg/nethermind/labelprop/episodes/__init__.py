from .dataset import ClassRecord, Dataset, LabeledPartition, partition_labeled
from .fsds import load_fsds, read_split_manifest, save_fsds, write_split_manifest
from .rng import StreamCounters, stream_rng
from .sampler import Episode, SemiEpisode, sample_episode, sample_semi_episode
from .synthetic import assign_splits, gen_synthetic
