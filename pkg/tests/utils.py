from typing import Callable

import numpy as np

from nethermind.labelprop.tensor import Tensor, backward, no_grad


def numeric_grad(fn: Callable[[], Tensor], leaf: Tensor, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar-valued fn with respect to every element of leaf"""
    grad = np.zeros_like(leaf.data)
    flat = leaf.data.reshape(-1)
    for position in range(flat.size):
        original = flat[position]
        flat[position] = original + step
        with no_grad():
            upper = fn().item()
        flat[position] = original - step
        with no_grad():
            lower = fn().item()
        flat[position] = original
        grad.reshape(-1)[position] = (upper - lower) / (2 * step)
    return grad


def analytic_grad(fn: Callable[[], Tensor], *leaves: Tensor) -> list[np.ndarray]:
    """Runs fn forward and backward, returning the gradient of every leaf"""
    for leaf in leaves:
        leaf.zero_grad()
    backward(fn())
    return [leaf.grad.copy() for leaf in leaves]


def assert_grads_match(fn: Callable[[], Tensor], *leaves: Tensor, rtol: float = 1e-5, atol: float = 1e-7):
    for leaf, analytic in zip(leaves, analytic_grad(fn, *leaves)):
        np.testing.assert_allclose(analytic, numeric_grad(fn, leaf), rtol=rtol, atol=atol)
