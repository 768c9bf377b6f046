"""Example-wise length-scale network: sigma_i = softplus(g(f(x_i))) + 0.01"""
import numpy as np

from nethermind.labelprop.exceptions import ConfigError, DimensionError
from nethermind.labelprop.tensor import Tensor, ops
from nethermind.labelprop.types import EmbeddingVariant

from .embedding import conv_block, dense
from .init import conv_params, dense_params
from .params import SigmaNetParams

SIGMA_FLOOR = 0.01
SIGMA_HIDDEN = 8
FINAL_WEIGHT_SCALE = 0.1
FINAL_BIAS = 1.0
FINAL_LAYER = "fc2"


def init_sigma_net(
    variant: EmbeddingVariant, feature_shape: tuple[int, ...], rng: np.random.Generator
) -> SigmaNetParams:
    """
    Initializes g.  The conv pairing takes the 64 x H x W feature map through two blocks (64 filters, then 1
    filter) and two dense layers (8 units, then 1).  The mlp pairing is embed_dim -> 8 -> relu -> 1.

    The final layer starts with small weights and bias 1, so initial raw outputs are close to 1.

    :param feature_shape: shape of one embedded example
    """
    tensors: dict[str, Tensor] = {}
    match variant:
        case EmbeddingVariant.conv4:
            channels, height, width = feature_shape
            height, width = height // 2 // 2, width // 2 // 2
            if height < 1 or width < 1:
                raise ConfigError(f"sigma network needs feature maps of at least 4x4, received {feature_shape}")
            tensors.update(conv_params(rng, "sblock1", channels, 64))
            tensors.update(conv_params(rng, "sblock2", 64, 1))
            tensors.update(dense_params(rng, "fc1", height * width, SIGMA_HIDDEN))

        case EmbeddingVariant.mlp:
            tensors.update(dense_params(rng, "fc1", feature_shape[0], SIGMA_HIDDEN))

        case _:
            raise ConfigError(f"Unknown embedding variant {variant}")

    tensors.update(dense_params(rng, FINAL_LAYER, SIGMA_HIDDEN, 1, scale=FINAL_WEIGHT_SCALE, bias=FINAL_BIAS))
    return SigmaNetParams(variant=variant, tensors=tensors)


def sigma_raw(params: SigmaNetParams, features: Tensor) -> Tensor:
    """Unconstrained scalar output per example, shape (B,)"""
    match params.variant:
        case EmbeddingVariant.conv4:
            if features.ndim != 4:
                raise DimensionError(f"conv sigma network expects B x C x H x W features, received {features.shape}")
            x = conv_block(params.tensors, "sblock1", features)
            x = conv_block(params.tensors, "sblock2", x)
            x = ops.relu(dense(params.tensors, "fc1", ops.flatten_rows(x)))
        case EmbeddingVariant.mlp:
            if features.ndim != 2:
                raise DimensionError(f"mlp sigma network expects B x d features, received {features.shape}")
            x = ops.relu(dense(params.tensors, "fc1", features))
        case _:
            raise DimensionError(f"Unknown sigma network variant {params.variant}")

    raw = dense(params.tensors, FINAL_LAYER, x)
    return ops.reshape(raw, (raw.shape[0],))


def sigma(params: SigmaNetParams, features: Tensor) -> Tensor:
    """Strictly positive length-scales softplus(raw) + 0.01, shape (B,)"""
    return ops.softplus(sigma_raw(params, features)) + SIGMA_FLOOR


def zero_final_layer(params: SigmaNetParams) -> None:
    """Zeroes the last dense layer in place, making every sigma equal to ln 2 + 0.01"""
    for suffix in ("weight", "bias"):
        tensor = params[f"{FINAL_LAYER}.{suffix}"]
        tensor.data[...] = 0.0
