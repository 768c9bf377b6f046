from dataclasses import dataclass, field

import numpy as np

from nethermind.labelprop.exceptions import DimensionError
from nethermind.labelprop.tensor import Tensor

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class AdamState:
    """First and second moment buffers keyed by parameter name, plus the shared step counter"""

    m: dict[str, np.ndarray] = field(default_factory=dict)  # pylint: disable=invalid-name
    v: dict[str, np.ndarray] = field(default_factory=dict)  # pylint: disable=invalid-name
    step: int = 0
    beta1: float = BETA1
    beta2: float = BETA2
    eps: float = EPSILON

    @classmethod
    def zeros_like(cls, params: dict[str, Tensor]) -> "AdamState":
        return cls(
            m={name: np.zeros_like(tensor.data) for name, tensor in params.items()},
            v={name: np.zeros_like(tensor.data) for name, tensor in params.items()},
        )


def adam_step(params: dict[str, Tensor], state: AdamState, lr: float) -> None:
    """
    Applies one bias-corrected Adam update in place, then clears every gradient.  Parameters without a gradient
    are treated as having a zero gradient.

    :raises DimensionError: if a gradient or moment buffer does not match its parameter
    """
    state.step += 1
    correction1 = 1.0 - state.beta1**state.step
    correction2 = 1.0 - state.beta2**state.step

    for name, param in params.items():
        grad = param.grad if param.grad is not None else np.zeros_like(param.data)
        if name not in state.m:
            state.m[name] = np.zeros_like(param.data)
            state.v[name] = np.zeros_like(param.data)
        if grad.shape != param.shape or state.m[name].shape != param.shape:
            raise DimensionError(
                f"adam_step: parameter '{name}' {param.shape}, gradient {grad.shape}, moments {state.m[name].shape}"
            )

        state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * grad
        state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * grad * grad
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        param.data -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
        param.zero_grad()
