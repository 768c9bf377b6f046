import numpy as np

from nethermind.labelprop.tensor import Tensor


def he_uniform(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, scale: float = 1.0) -> np.ndarray:
    """Zero-mean uniform weights in [-b, b] with b = scale * sqrt(6 / fan_in)"""
    bound = scale * np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def leaf(name: str, data: np.ndarray) -> Tensor:
    """Trainable leaf tensor"""
    return Tensor(data, requires_grad=True, name=name)


def conv_params(rng: np.random.Generator, prefix: str, in_channels: int, filters: int) -> dict[str, Tensor]:
    """3x3 conv weights and a batchnorm (gamma=1, beta=0) for one block"""
    return {
        f"{prefix}.conv.weight": leaf(
            f"{prefix}.conv.weight", he_uniform(rng, (filters, in_channels, 3, 3), in_channels * 9)
        ),
        f"{prefix}.conv.bias": leaf(f"{prefix}.conv.bias", np.zeros(filters)),
        f"{prefix}.bn.gamma": leaf(f"{prefix}.bn.gamma", np.ones(filters)),
        f"{prefix}.bn.beta": leaf(f"{prefix}.bn.beta", np.zeros(filters)),
    }


def dense_params(
    rng: np.random.Generator, prefix: str, fan_in: int, fan_out: int, scale: float = 1.0, bias: float = 0.0
) -> dict[str, Tensor]:
    """Fully connected layer stored as (fan_in x fan_out) so that outputs are x @ W + b"""
    return {
        f"{prefix}.weight": leaf(f"{prefix}.weight", he_uniform(rng, (fan_in, fan_out), fan_in, scale)),
        f"{prefix}.bias": leaf(f"{prefix}.bias", np.full(fan_out, bias)),
    }
