from enum import Enum

# Enum members mirror the values accepted on the command line and in config files
# pylint: disable=invalid-name


class EmbeddingVariant(Enum):
    """Embedding network family.  conv4 consumes image batches, mlp consumes flat feature vectors"""

    conv4 = "conv4"
    mlp = "mlp"

    def pretty(self) -> str:
        """Returns a human readable name for tables"""
        match self:
            case EmbeddingVariant.conv4:
                return "Conv-4"
            case EmbeddingVariant.mlp:
                return "MLP"
            case _:
                return self.value


class LossScope(Enum):
    """Rows of the propagated score matrix that contribute to the episode loss"""

    union = "union"
    query_only = "query_only"


class PropagationMode(Enum):
    """Closed form solve (I - aS)^-1 Y, or a fixed number of unrolled propagation steps"""

    closed = "closed"
    iterative = "iterative"


class Split(Enum):
    """Disjoint class splits of a dataset"""

    train = "train"
    val = "val"
    test = "test"


class SyntheticKind(Enum):
    """Synthetic datasets with low dimensional manifold structure"""

    gaussian_blobs = "gaussian-blobs"
    concentric_rings = "concentric-rings"
    noisy_arcs = "noisy-arcs"


class BaselineKind(Enum):
    """Non-learned comparison methods"""

    fixed_sigma_lp = "fixed_sigma_lp"
    prototype = "prototype"

    def pretty(self) -> str:
        """Returns a human readable name for tables"""
        match self:
            case BaselineKind.fixed_sigma_lp:
                return "Label Propagation (fixed sigma)"
            case BaselineKind.prototype:
                return "Prototype"
            case _:
                return self.value


class LabelInit(Enum):
    """Initial values of the non-support rows of the label matrix"""

    zeros = "zeros"
    uniform = "uniform"
    normal = "normal"


class RngStream(Enum):
    """Independent counter-based random streams.  The value is folded into the spawn key"""

    sampling = 0
    init = 1
    noise = 2
    partition = 3
    label_noise = 4
    splits = 5
