from .labels import UNKNOWN_LABEL, LabelMatrix, build_label_matrix, corrupt_labels
from .loss import accuracy, episode_loss, loss_mask
from .semi import classify_semi, classify_semi_queries
from .solvers import DEFAULT_ALPHA, PropagationResult, propagate_closed, propagate_iterative, to_result
