"""
Differentiable operations on :class:`~nethermind.labelprop.tensor.core.Tensor`.

Every op computes its forward value with numpy, and when any input requires gradients, records a backward
closure on the active tape.  Backward closures return one gradient per input (``None`` for constants).
"""
import logging
import warnings
from typing import Any, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.special import expit, log_softmax

from nethermind.labelprop.exceptions import DimensionError, LabelError, SingularMatrixError

from .core import BackwardFn, Tensor, current_tape

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("tensor").getChild("ops")

PIVOT_THRESHOLD = 1e-12
BATCHNORM_EPS = 1e-5

# pylint: disable=redefined-builtin,invalid-name


def as_tensor(value: Any) -> Tensor:
    """Wraps numbers and arrays as constant tensors.  Tensors are returned unchanged"""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def _make(data: np.ndarray, op: str, inputs: tuple[Tensor, ...], backward_fn: BackwardFn) -> Tensor:
    out = Tensor.wrap(data)
    if not any(t.requires_grad for t in inputs):
        return out

    tape = current_tape()
    if not tape.recording:
        return out

    out.tape_id = tape.record(op, inputs, backward_fn)
    out.tape = tape
    out.generation = tape.generation
    out.requires_grad = True
    return out


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sums grad over the axes that numpy broadcasting expanded to reach shape"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_check(op: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError:
        raise DimensionError(f"{op}: cannot broadcast {a.shape} with {b.shape}")


# -------------------------------------------------------
#    Elementwise Arithmetic
# -------------------------------------------------------
def add(a: Any, b: Any) -> Tensor:
    """Elementwise a + b"""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_check("add", a, b)

    def _backward(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _make(a.data + b.data, "add", (a, b), _backward)


def sub(a: Any, b: Any) -> Tensor:
    """Elementwise a - b"""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_check("sub", a, b)

    def _backward(g: np.ndarray):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _make(a.data - b.data, "sub", (a, b), _backward)


def mul(a: Any, b: Any) -> Tensor:
    """Elementwise a * b"""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_check("mul", a, b)

    def _backward(g: np.ndarray):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _make(a.data * b.data, "mul", (a, b), _backward)


def div(a: Any, b: Any) -> Tensor:
    """Elementwise a / b"""
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_check("div", a, b)
    out = a.data / b.data

    def _backward(g: np.ndarray):
        return _unbroadcast(g / b.data, a.shape), _unbroadcast(-g * out / b.data, b.shape)

    return _make(out, "div", (a, b), _backward)


def neg(a: Tensor) -> Tensor:
    """Elementwise -a"""

    def _backward(g: np.ndarray):
        return (-g,)

    return _make(-a.data, "neg", (a,), _backward)


def exp(a: Tensor) -> Tensor:
    """Elementwise e^a"""
    out = np.exp(a.data)

    def _backward(g: np.ndarray):
        return (g * out,)

    return _make(out, "exp", (a,), _backward)


def log(a: Tensor) -> Tensor:
    """Elementwise natural log"""

    def _backward(g: np.ndarray):
        return (g / a.data,)

    return _make(np.log(a.data), "log", (a,), _backward)


def power(a: Tensor, exponent: float) -> Tensor:
    """Elementwise a ** exponent for a constant exponent"""

    def _backward(g: np.ndarray):
        return (g * exponent * np.power(a.data, exponent - 1),)

    return _make(np.power(a.data, exponent), "power", (a,), _backward)


def square(a: Tensor) -> Tensor:
    """Elementwise a * a"""

    def _backward(g: np.ndarray):
        return (2.0 * g * a.data,)

    return _make(a.data * a.data, "square", (a,), _backward)


def clamp_min(a: Tensor, floor: float) -> Tensor:
    """Elementwise max(a, floor).  Gradient is blocked where the floor is active"""
    active = a.data >= floor

    def _backward(g: np.ndarray):
        return (np.where(active, g, 0.0),)

    return _make(np.where(active, a.data, floor), "clamp_min", (a,), _backward)


def relu(a: Tensor) -> Tensor:
    """Elementwise max(a, 0).  Subgradient at 0 is 0"""
    positive = a.data > 0

    def _backward(g: np.ndarray):
        return (np.where(positive, g, 0.0),)

    return _make(np.where(positive, a.data, 0.0), "relu", (a,), _backward)


def softplus(a: Tensor) -> Tensor:
    """Elementwise ln(1 + e^a), evaluated without overflow for large inputs"""

    def _backward(g: np.ndarray):
        return (g * expit(a.data),)

    return _make(np.logaddexp(0.0, a.data), "softplus", (a,), _backward)


# -------------------------------------------------------
#    Reductions & Shape Manipulation
# -------------------------------------------------------
def sum(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    """Sum over axis (all axes when None)"""
    out = a.data.sum(axis=axis, keepdims=keepdims)

    def _backward(g: np.ndarray):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return (np.broadcast_to(g, a.shape).copy(),)

    return _make(np.asarray(out, dtype=np.float64), "sum", (a,), _backward)


def mean(a: Tensor, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
    """Mean over axis (all axes when None)"""
    count = a.data.size if axis is None else int(np.prod([a.shape[ax] for ax in np.atleast_1d(axis)]))
    return div(sum(a, axis=axis, keepdims=keepdims), float(count))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    """Reshape without copying data"""
    try:
        out = a.data.reshape(shape)
    except ValueError:
        raise DimensionError(f"reshape: cannot reshape {a.shape} into {tuple(shape)}")

    def _backward(g: np.ndarray):
        return (g.reshape(a.shape),)

    return _make(out, "reshape", (a,), _backward)


def flatten_rows(a: Tensor) -> Tensor:
    """Flattens every axis after the first, ie. (B, C, H, W) -> (B, C*H*W)"""
    return reshape(a, (a.shape[0], -1))


def transpose(a: Tensor) -> Tensor:
    """Transpose of a 2-D tensor"""
    if a.ndim != 2:
        raise DimensionError(f"transpose: expected a 2-D tensor, received {a.shape}")

    def _backward(g: np.ndarray):
        return (g.T,)

    return _make(a.data.T.copy(), "transpose", (a,), _backward)


def take_rows(a: Tensor, index: Sequence[int] | np.ndarray) -> Tensor:
    """Gathers rows of a by integer index"""
    index = np.asarray(index, dtype=np.int64)

    def _backward(g: np.ndarray):
        grad = np.zeros_like(a.data)
        np.add.at(grad, index, g)
        return (grad,)

    return _make(a.data[index], "take_rows", (a,), _backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """
    Matrix product of a (m x k) and b (k x n)

    :raises DimensionError: if either input is not 2-D, or inner dimensions disagree
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise DimensionError(f"matmul: {a.shape} @ {b.shape}")

    def _backward(g: np.ndarray):
        return g @ b.data.T, a.data.T @ g

    return _make(a.data @ b.data, "matmul", (a, b), _backward)


# -------------------------------------------------------
#    Convolutional Layers
# -------------------------------------------------------
def _windows_3x3(padded: np.ndarray) -> np.ndarray:
    """(B, C, H+2, W+2) -> (B, C, H, W, 3, 3) strided view"""
    return sliding_window_view(padded, (3, 3), axis=(2, 3))


def _pad_hw(array: np.ndarray) -> np.ndarray:
    return np.pad(array, ((0, 0), (0, 0), (1, 1), (1, 1)))


def conv2d(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """
    3x3 cross-correlation with stride 1 and zero padding 1, so spatial size is preserved.

    :param x: B x C x H x W input
    :param weight: F x C x 3 x 3 filters
    :param bias: F biases
    :return: B x F x H x W
    """
    if x.ndim != 4 or weight.ndim != 4 or weight.shape[2:] != (3, 3):
        raise DimensionError(
            f"conv2d: expected B x C x H x W input and F x C x 3 x 3 kernel, got {x.shape}, {weight.shape}"
        )
    if x.shape[1] != weight.shape[1]:
        raise DimensionError(f"conv2d: input channels {x.shape} do not match kernel channels {weight.shape}")
    if bias.shape != (weight.shape[0],):
        raise DimensionError(f"conv2d: bias {bias.shape} does not match filter count {weight.shape}")

    cols = _windows_3x3(_pad_hw(x.data))
    out = np.einsum("bchwij,fcij->bfhw", cols, weight.data, optimize=True) + bias.data[None, :, None, None]

    def _backward(g: np.ndarray):
        grad_w = np.einsum("bchwij,bfhw->fcij", cols, g, optimize=True)
        grad_b = g.sum(axis=(0, 2, 3))
        flipped = weight.data[:, :, ::-1, ::-1]
        grad_x = np.einsum("bfhwij,fcij->bchw", _windows_3x3(_pad_hw(g)), flipped, optimize=True)
        return grad_x, grad_w, grad_b

    return _make(out, "conv2d", (x, weight, bias), _backward)


def maxpool2d(x: Tensor) -> Tensor:
    """
    2x2 max pooling with stride 2.  Odd trailing rows and columns are dropped.  The gradient of each window is
    routed to its maximum, with ties resolved to the first cell in row-major order.
    """
    if x.ndim != 4:
        raise DimensionError(f"maxpool2d: expected B x C x H x W input, got {x.shape}")
    batch, channels, height, width = x.shape
    if height < 2 or width < 2:
        raise DimensionError(f"maxpool2d: spatial dims must be at least 2x2, got {x.shape}")

    h2, w2 = height // 2, width // 2
    cropped = x.data[:, :, : h2 * 2, : w2 * 2]
    windows = cropped.reshape(batch, channels, h2, 2, w2, 2).transpose(0, 1, 2, 4, 3, 5)
    windows = windows.reshape(batch, channels, h2, w2, 4)
    argmax = windows.argmax(axis=-1)[..., None]
    out = np.take_along_axis(windows, argmax, axis=-1)[..., 0]

    def _backward(g: np.ndarray):
        routed = np.zeros_like(windows)
        np.put_along_axis(routed, argmax, g[..., None], axis=-1)
        grad = np.zeros_like(x.data)
        blocks = routed.reshape(batch, channels, h2, w2, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        grad[:, :, : h2 * 2, : w2 * 2] = blocks.reshape(batch, channels, h2 * 2, w2 * 2)
        return (grad,)

    return _make(out, "maxpool2d", (x,), _backward)


def batchnorm(x: Tensor, gamma: Tensor, beta: Tensor) -> Tensor:
    """
    Per-channel normalization with the statistics of the current batch.  Statistics are always taken from the
    batch (the episode's S u Q), both in training and evaluation.  Variance is biased, with eps=1e-5.

    :param x: B x C x ... input
    """
    if x.ndim < 2:
        raise DimensionError(f"batchnorm: expected B x C x ... input, got {x.shape}")
    if x.shape[0] < 2:
        raise DimensionError(f"batchnorm: variance is undefined for batch size {x.shape[0]}")
    channels = x.shape[1]
    if gamma.shape != (channels,) or beta.shape != (channels,):
        raise DimensionError(f"batchnorm: gamma {gamma.shape} / beta {beta.shape} do not match input {x.shape}")

    axes = (0,) + tuple(range(2, x.ndim))
    bcast = (1, channels) + (1,) * (x.ndim - 2)
    count = x.data.size // channels

    mu = x.data.mean(axis=axes, keepdims=True)
    var = x.data.var(axis=axes, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + BATCHNORM_EPS)
    x_hat = (x.data - mu) * inv_std
    out = gamma.data.reshape(bcast) * x_hat + beta.data.reshape(bcast)

    def _backward(g: np.ndarray):
        grad_gamma = (g * x_hat).sum(axis=axes)
        grad_beta = g.sum(axis=axes)
        d_hat = g * gamma.data.reshape(bcast)
        grad_x = (inv_std / count) * (
            count * d_hat
            - d_hat.sum(axis=axes, keepdims=True)
            - x_hat * (d_hat * x_hat).sum(axis=axes, keepdims=True)
        )
        return grad_x, grad_gamma, grad_beta

    return _make(out, "batchnorm", (x, gamma, beta), _backward)


# -------------------------------------------------------
#    Linear Algebra
# -------------------------------------------------------
def linsolve(a: Tensor, b: Tensor) -> Tensor:
    """
    Solves A X = B with LU factorization (partial pivoting).  The factorization is kept for the backward pass,
    where dL/dB = A^-T G and dL/dA = -(A^-T G) X^T.

    :param a: n x n system matrix
    :param b: n x m right hand side
    :raises SingularMatrixError: when a pivot falls below 1e-12 in magnitude
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"linsolve: system matrix must be square, got {a.shape}")
    if b.ndim != 2 or b.shape[0] != a.shape[0]:
        raise DimensionError(f"linsolve: right hand side {b.shape} does not match system {a.shape}")

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(a.data, check_finite=False)

    pivots = np.abs(np.diag(lu))
    bad = np.flatnonzero(~(pivots >= PIVOT_THRESHOLD))
    if bad.size:
        raise SingularMatrixError(
            f"linsolve: pivot {int(bad[0])} has magnitude {pivots[bad[0]]:.3e} below {PIVOT_THRESHOLD}",
            pivot_index=int(bad[0]),
        )

    x = lu_solve((lu, piv), b.data, check_finite=False)

    def _backward(g: np.ndarray):
        grad_b = lu_solve((lu, piv), g, trans=1, check_finite=False)
        return -grad_b @ x.T, grad_b

    return _make(x, "linsolve", (a, b), _backward)


def pairwise_sq_dists(points: Tensor) -> Tensor:
    """
    Squared euclidean distance between every pair of rows.  The result is exactly symmetric, non-negative, and
    has an exactly zero diagonal.

    :param points: n x d
    :return: n x n
    """
    if points.ndim != 2:
        raise DimensionError(f"pairwise_sq_dists: expected n x d points, got {points.shape}")

    p = points.data
    sq_norms = (p * p).sum(axis=1)
    dists = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (p @ p.T)
    dists = 0.5 * (dists + dists.T)
    np.fill_diagonal(dists, 0.0)
    active = dists > 0.0
    dists = np.where(active, dists, 0.0)

    def _backward(g: np.ndarray):
        sym = np.where(active, g + g.T, 0.0)
        return (2.0 * (sym.sum(axis=1)[:, None] * p - sym @ p),)

    return _make(dists, "pairwise_sq_dists", (points,), _backward)


def masked_symmetric_max(w: Tensor, mask: np.ndarray) -> Tensor:
    """
    Computes max(M, M^T) for M = w * mask, with the mask held constant.  Gradients flow only through the
    entries that survive the mask, to whichever of (i, j) / (j, i) supplied the maximum.
    """
    if w.ndim != 2 or w.shape[0] != w.shape[1] or mask.shape != w.shape:
        raise DimensionError(f"masked_symmetric_max: expected square matrix and mask, got {w.shape}, {mask.shape}")

    kept = mask.astype(np.float64)
    masked = w.data * kept
    from_self = masked >= masked.T

    def _backward(g: np.ndarray):
        direct = np.where(from_self, g, 0.0)
        mirrored = np.where(from_self, 0.0, g).T
        return ((direct + mirrored) * kept,)

    return _make(np.maximum(masked, masked.T), "masked_symmetric_max", (w,), _backward)


# -------------------------------------------------------
#    Loss
# -------------------------------------------------------
def row_softmax_ce(scores: Tensor, labels: Sequence[int] | np.ndarray, mask: Sequence[bool] | np.ndarray) -> Tensor:
    """
    Summed cross-entropy of row-wise softmax over the rows selected by mask.

    :param scores: n x N score matrix
    :param labels: n integer labels (only rows in mask are read)
    :param mask: n booleans
    :return: scalar tensor, sum over masked rows of -log P(y_i)
    """
    labels = np.asarray(labels, dtype=np.int64)
    mask = np.asarray(mask, dtype=bool)
    if scores.ndim != 2 or labels.shape != (scores.shape[0],) or mask.shape != (scores.shape[0],):
        raise DimensionError(
            f"row_softmax_ce: scores {scores.shape}, labels {labels.shape} and mask {mask.shape} do not align"
        )
    if not mask.any():
        raise LabelError("row_softmax_ce: loss mask selects no rows")

    rows = np.flatnonzero(mask)
    targets = labels[rows]
    n_classes = scores.shape[1]
    if targets.min() < 0 or targets.max() >= n_classes:
        raise LabelError(f"row_softmax_ce: labels must lie in [0, {n_classes}), found {targets.min()}..{targets.max()}")

    log_probs = log_softmax(scores.data[rows], axis=1)
    picked = np.arange(rows.size)
    loss = -log_probs[picked, targets].sum()

    def _backward(g: np.ndarray):
        grad_rows = np.exp(log_probs)
        grad_rows[picked, targets] -= 1.0
        grad = np.zeros_like(scores.data)
        grad[rows] = grad_rows * g
        return (grad,)

    return _make(np.asarray(loss, dtype=np.float64), "row_softmax_ce", (scores,), _backward)
