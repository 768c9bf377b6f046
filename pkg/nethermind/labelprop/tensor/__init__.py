from . import ops
from .core import Tape, Tensor, backward, current_tape, no_grad
