import logging

import numpy as np

from nethermind.labelprop.exceptions import ConfigError, DimensionError
from nethermind.labelprop.tensor import Tensor, ops
from nethermind.labelprop.types import EmbeddingVariant

from .init import conv_params, dense_params
from .params import EmbeddingParams

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("networks").getChild("embedding")

CONV_BLOCKS = 4
CONV_FILTERS = 64
MLP_HIDDEN = 64


def conv_block(params: dict[str, Tensor], prefix: str, x: Tensor) -> Tensor:
    """conv 3x3 -> batchnorm -> relu -> maxpool 2x2"""
    x = ops.conv2d(x, params[f"{prefix}.conv.weight"], params[f"{prefix}.conv.bias"])
    x = ops.batchnorm(x, params[f"{prefix}.bn.gamma"], params[f"{prefix}.bn.beta"])
    return ops.maxpool2d(ops.relu(x))


def dense(params: dict[str, Tensor], prefix: str, x: Tensor) -> Tensor:
    return ops.matmul(x, params[f"{prefix}.weight"]) + params[f"{prefix}.bias"]


def conv4_output_shape(in_shape: tuple[int, ...]) -> tuple[int, int, int]:
    """Feature map shape (64, H', W') after four pooled blocks"""
    _, height, width = in_shape
    for _ in range(CONV_BLOCKS):
        height, width = height // 2, width // 2
    return CONV_FILTERS, height, width


def init_embedding(
    variant: EmbeddingVariant,
    in_shape: tuple[int, ...],
    embed_dim: int,
    rng: np.random.Generator,
    hidden_dim: int = MLP_HIDDEN,
) -> EmbeddingParams:
    """
    Initializes the embedding network.

    * conv4: four blocks of (3x3 conv with 64 filters, batchnorm, relu, 2x2 maxpool).  in_shape is (C, H, W)
    * mlp: in -> hidden -> relu -> hidden -> relu -> embed_dim.  in_shape is (d,)

    :param variant: network family
    :param in_shape: shape of a single example
    :param embed_dim: output width of the mlp (ignored by conv4)
    :param rng: init stream generator
    :param hidden_dim: mlp hidden width
    """
    tensors: dict[str, Tensor] = {}
    match variant:
        case EmbeddingVariant.conv4:
            if len(in_shape) != 3:
                raise ConfigError(f"conv4 embedding expects (C, H, W) examples, received {in_shape}")
            if min(in_shape[1:]) < 2**CONV_BLOCKS:
                raise ConfigError(f"conv4 embedding needs spatial dims of at least 16, received {in_shape}")
            channels = in_shape[0]
            for block in range(1, CONV_BLOCKS + 1):
                tensors.update(conv_params(rng, f"block{block}", channels, CONV_FILTERS))
                channels = CONV_FILTERS

        case EmbeddingVariant.mlp:
            if len(in_shape) != 1:
                raise ConfigError(f"mlp embedding expects flat (d,) examples, received {in_shape}")
            tensors.update(dense_params(rng, "fc1", in_shape[0], hidden_dim))
            tensors.update(dense_params(rng, "fc2", hidden_dim, hidden_dim))
            tensors.update(dense_params(rng, "fc3", hidden_dim, embed_dim))

        case _:
            raise ConfigError(f"Unknown embedding variant {variant}")

    params = EmbeddingParams(variant=variant, tensors=tensors)
    logger.debug(f"Initialized {variant.pretty()} embedding with {params.parameter_count} parameters")
    return params


def embed(params: EmbeddingParams, batch: Tensor) -> Tensor:
    """
    Embeds a batch (the full S u Q of an episode, so batchnorm sees the union).

    :return: B x 64 x H/16 x W/16 feature maps for conv4, B x embed_dim for mlp
    """
    match params.variant:
        case EmbeddingVariant.conv4:
            expected = params["block1.conv.weight"].shape[1]
            if batch.ndim != 4 or batch.shape[1] != expected:
                raise DimensionError(f"conv4 embedding expects B x {expected} x H x W input, received {batch.shape}")
            x = batch
            for block in range(1, CONV_BLOCKS + 1):
                x = conv_block(params.tensors, f"block{block}", x)
            return x

        case EmbeddingVariant.mlp:
            expected = params["fc1.weight"].shape[0]
            if batch.ndim != 2 or batch.shape[1] != expected:
                raise DimensionError(f"mlp embedding expects B x {expected} input, received {batch.shape}")
            x = ops.relu(dense(params.tensors, "fc1", batch))
            x = ops.relu(dense(params.tensors, "fc2", x))
            return dense(params.tensors, "fc3", x)

        case _:
            raise DimensionError(f"Unknown embedding variant {params.variant}")
