import contextvars
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from nethermind.labelprop.exceptions import TapeError

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("tensor")

# pylint: disable=import-outside-toplevel

BackwardFn = Callable[[np.ndarray], Sequence[np.ndarray | None]]


@dataclass(slots=True)
class TapeNode:
    """Single recorded operation.  backward maps the output gradient to one gradient per input"""

    op: str
    inputs: tuple["Tensor", ...]
    backward: BackwardFn


class Tape:
    """
    Ordered record of differentiable operations.  Nodes are appended in creation order, and
    :func:`backward` walks them in strict reverse creation order.

    A tape is consumable exactly once per forward pass.  After backward() the node list is released, and
    the next recorded operation starts a new generation.  Tensors from an older generation can no longer be
    used as inputs to recorded operations.
    """

    def __init__(self) -> None:
        self.nodes: list[TapeNode] = []
        self.generation: int = 0
        self.consumed: bool = False
        self.recording: bool = True

    def __len__(self) -> int:
        return len(self.nodes)

    def reset(self) -> None:
        """Drops all recorded nodes and starts a new generation"""
        self.nodes.clear()
        self.generation += 1
        self.consumed = False

    def record(self, op: str, inputs: tuple["Tensor", ...], backward_fn: BackwardFn) -> int:
        """Appends a node to the tape and returns its handle"""
        if self.consumed:
            self.reset()

        for tensor in inputs:
            if tensor.tape_id is None:
                continue
            if tensor.tape is not self or tensor.generation != self.generation:
                raise TapeError(
                    f"Input to '{op}' was produced by a forward pass that has already been consumed by backward()"
                )

        self.nodes.append(TapeNode(op=op, inputs=inputs, backward=backward_fn))
        return len(self.nodes) - 1

    def backward(self, loss: "Tensor") -> None:
        """Accumulates d(loss)/d(leaf) into every requires_grad leaf reachable from loss"""
        if loss.data.size != 1:
            raise TapeError(f"backward() requires a scalar loss, but received shape {loss.shape}")
        if loss.tape_id is None or loss.tape is not self:
            raise TapeError("backward() called on a tensor that does not depend on any parameter")
        if self.consumed or loss.generation != self.generation:
            raise TapeError("Tape already consumed.  Run a new forward pass before calling backward() again")

        grads: dict[int, np.ndarray] = {loss.tape_id: np.ones_like(loss.data)}
        leaves: dict[int, Tensor] = {}

        for index in range(loss.tape_id, -1, -1):
            node = self.nodes[index]
            for tensor in node.inputs:
                if tensor.tape_id is None and tensor.requires_grad:
                    leaves[id(tensor)] = tensor

            upstream = grads.pop(index, None)
            if upstream is None:
                continue

            for tensor, grad in zip(node.inputs, node.backward(upstream)):
                if grad is None or not tensor.requires_grad:
                    continue
                if tensor.tape_id is None:
                    tensor.accumulate_grad(grad)
                elif tensor.tape_id in grads:
                    grads[tensor.tape_id] = grads[tensor.tape_id] + grad
                else:
                    grads[tensor.tape_id] = grad

        # Leaves that took part in the forward pass but do not influence the loss get an explicit zero
        for leaf in leaves.values():
            if leaf.grad is None:
                leaf.grad = np.zeros_like(leaf.data)

        logger.debug(f"Backward pass over {len(self.nodes)} nodes touched {len(leaves)} leaves")
        self.nodes.clear()
        self.consumed = True


_active_tape: contextvars.ContextVar[Tape | None] = contextvars.ContextVar("labelprop_tape", default=None)


def current_tape() -> Tape:
    """Returns the tape bound to the current context, creating one on first use"""
    tape = _active_tape.get()
    if tape is None:
        tape = Tape()
        _active_tape.set(tape)
    return tape


@contextmanager
def no_grad() -> Iterator[None]:
    """Disables recording on the current tape.  Used for evaluation passes over frozen parameters"""
    tape = current_tape()
    previous = tape.recording
    tape.recording = False
    try:
        yield
    finally:
        tape.recording = previous


class Tensor:
    """
    Dense float64 array participating in reverse-mode differentiation.

    Leaves are created directly by users (parameters, inputs).  Every op that receives a tensor with
    ``requires_grad`` records a node on the active tape, and its output carries a ``tape_id`` handle to
    that node.  Gradients are only ever accumulated into leaves.
    """

    __slots__ = ("data", "requires_grad", "grad", "tape_id", "tape", "generation", "name")
    __array_ufunc__ = None  # numpy defers mixed arithmetic to the Tensor operators

    def __init__(self, data: Any, requires_grad: bool = False, name: str | None = None):
        self.data: np.ndarray = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = None
        self.tape_id: int | None = None
        self.tape: Tape | None = None
        self.generation: int = -1
        self.name = name

    @classmethod
    def wrap(cls, data: np.ndarray) -> "Tensor":
        """Wraps a freshly computed array without copying it"""
        tensor = cls.__new__(cls)
        tensor.data = data if data.dtype == np.float64 else data.astype(np.float64)
        tensor.requires_grad = False
        tensor.grad = None
        tensor.tape_id = None
        tensor.tape = None
        tensor.generation = -1
        tensor.name = None
        return tensor

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def is_leaf(self) -> bool:
        return self.tape_id is None

    def item(self) -> float:
        """Returns the value of a single element tensor as a python float"""
        return float(self.data.reshape(-1)[0])

    def numpy(self) -> np.ndarray:
        """Returns a copy of the underlying array"""
        return self.data.copy()

    def detach(self) -> "Tensor":
        """Returns a constant copy that is disconnected from the tape"""
        return Tensor.wrap(self.data.copy())

    def accumulate_grad(self, grad: np.ndarray) -> None:
        """Adds grad into the gradient buffer, allocating it on first use"""
        if not self.requires_grad:
            return
        if grad.shape != self.data.shape:
            grad = np.broadcast_to(grad, self.data.shape)
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64)
        else:
            self.grad += grad

    def zero_grad(self) -> None:
        """Clears the gradient buffer"""
        self.grad = None

    def backward(self) -> None:
        """Shortcut for :func:`backward`"""
        backward(self)

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}{label}, requires_grad={self.requires_grad})"

    # -------------------------------------------------------
    #    Operator overloads
    # -------------------------------------------------------
    def __add__(self, other):
        from .ops import add

        return add(self, other)

    def __radd__(self, other):
        from .ops import add

        return add(other, self)

    def __sub__(self, other):
        from .ops import sub

        return sub(self, other)

    def __rsub__(self, other):
        from .ops import sub

        return sub(other, self)

    def __mul__(self, other):
        from .ops import mul

        return mul(self, other)

    def __rmul__(self, other):
        from .ops import mul

        return mul(other, self)

    def __truediv__(self, other):
        from .ops import div

        return div(self, other)

    def __rtruediv__(self, other):
        from .ops import div

        return div(other, self)

    def __neg__(self):
        from .ops import neg

        return neg(self)

    def __matmul__(self, other):
        from .ops import matmul

        return matmul(self, other)

    @property
    def T(self) -> "Tensor":  # pylint: disable=invalid-name
        from .ops import transpose

        return transpose(self)


def backward(loss: Tensor) -> None:
    """
    Runs reverse-mode differentiation from a scalar loss.  Every requires_grad leaf that took part in the
    forward pass has its gradient accumulated.  The tape is consumed, and a second call without a new forward
    pass raises :class:`~nethermind.labelprop.exceptions.TapeError`.
    """
    if loss.tape is None:
        raise TapeError("backward() called on a tensor that does not depend on any parameter")
    loss.tape.backward(loss)
