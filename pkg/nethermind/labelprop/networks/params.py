from dataclasses import dataclass
from typing import Iterator

import numpy as np

from nethermind.labelprop.tensor import Tensor
from nethermind.labelprop.types import EmbeddingVariant


@dataclass
class ParamGroup:
    """Named trainable tensors of one network.  Names are stable, and define checkpoint blob names"""

    variant: EmbeddingVariant
    tensors: dict[str, Tensor]

    def __getitem__(self, name: str) -> Tensor:
        return self.tensors[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self.tensors)

    def items(self):
        return self.tensors.items()

    @property
    def parameter_count(self) -> int:
        return sum(int(tensor.data.size) for tensor in self.tensors.values())

    def zero_grad(self) -> None:
        for tensor in self.tensors.values():
            tensor.zero_grad()

    def clone(self) -> "ParamGroup":
        """Deep copy with fresh leaves, for read-only evaluation workers"""
        return type(self)(
            variant=self.variant,
            tensors={
                name: Tensor(tensor.data.copy(), requires_grad=tensor.requires_grad, name=name)
                for name, tensor in self.tensors.items()
            },
        )

    def state(self) -> dict[str, np.ndarray]:
        return {name: tensor.data for name, tensor in self.tensors.items()}


class EmbeddingParams(ParamGroup):
    """Parameters of the embedding network f"""


class SigmaNetParams(ParamGroup):
    """Parameters of the length-scale network g"""


def parameter_count(*groups: ParamGroup) -> int:
    """Total scalar parameter count over groups"""
    return sum(group.parameter_count for group in groups)
