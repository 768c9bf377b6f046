import logging
from dataclasses import dataclass

import numpy as np

from nethermind.labelprop.graph import DEFAULT_K, EpisodeGraph, build_graph
from nethermind.labelprop.networks import (
    EmbeddingParams,
    SigmaNetParams,
    conv4_output_shape,
    embed,
    init_embedding,
    init_sigma_net,
    sigma,
)
from nethermind.labelprop.propagation import (
    DEFAULT_ALPHA,
    LabelMatrix,
    PropagationResult,
    episode_loss,
    propagate_closed,
    propagate_iterative,
)
from nethermind.labelprop.tensor import Tensor, no_grad
from nethermind.labelprop.types import EmbeddingVariant, LossScope, PropagationMode

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("model")


@dataclass(slots=True)
class ForwardPass:
    """Everything produced by one episode forward pass"""

    loss: Tensor
    result: PropagationResult
    graph: EpisodeGraph


class PropagationNetwork:
    """
    Embedding f, length-scale network g, episode graph and label propagation composed into one model.
    Parameter names are prefixed with their group, ie. ``embedding.block1.conv.weight`` and ``sigma.fc2.bias``.
    """

    def __init__(  # pylint: disable=too-many-arguments
        self,
        embedding: EmbeddingParams,
        sigma_net: SigmaNetParams,
        alpha: float = DEFAULT_ALPHA,
        k_graph: int = DEFAULT_K,
        propagation: PropagationMode = PropagationMode.closed,
        iter_steps: int = 10,
    ):
        self.embedding = embedding
        self.sigma_net = sigma_net
        self.alpha = alpha
        self.k_graph = k_graph
        self.propagation = propagation
        self.iter_steps = iter_steps

    @classmethod
    def initialize(  # pylint: disable=too-many-arguments
        cls,
        variant: EmbeddingVariant,
        in_shape: tuple[int, ...],
        rng: np.random.Generator,
        embed_dim: int = 16,
        hidden_dim: int = 64,
        **kwargs,
    ) -> "PropagationNetwork":
        """Fresh model with both networks drawn from one init stream"""
        embedding = init_embedding(variant, in_shape, embed_dim, rng, hidden_dim=hidden_dim)
        match variant:
            case EmbeddingVariant.conv4:
                feature_shape: tuple[int, ...] = conv4_output_shape(in_shape)
            case _:
                feature_shape = (embed_dim,)
        return cls(embedding, init_sigma_net(variant, feature_shape, rng), **kwargs)

    # -------------------------------------------------------
    #    Parameters
    # -------------------------------------------------------
    def groups(self) -> dict[str, EmbeddingParams | SigmaNetParams]:
        return {"embedding": self.embedding, "sigma": self.sigma_net}

    def parameters(self) -> dict[str, Tensor]:
        """Every trainable tensor keyed by its fully qualified name, in a stable order"""
        return {
            f"{group_name}.{name}": tensor
            for group_name, group in self.groups().items()
            for name, tensor in group.items()
        }

    @property
    def parameter_count(self) -> int:
        return sum(group.parameter_count for group in self.groups().values())

    def zero_grad(self) -> None:
        for group in self.groups().values():
            group.zero_grad()

    def clone(self) -> "PropagationNetwork":
        """Copy with independent parameter buffers"""
        return PropagationNetwork(
            self.embedding.clone(),  # type: ignore[arg-type]
            self.sigma_net.clone(),  # type: ignore[arg-type]
            alpha=self.alpha,
            k_graph=self.k_graph,
            propagation=self.propagation,
            iter_steps=self.iter_steps,
        )

    # -------------------------------------------------------
    #    Forward
    # -------------------------------------------------------
    def features(self, batch: np.ndarray | Tensor) -> Tensor:
        """Embeds a batch of examples"""
        return embed(self.embedding, batch if isinstance(batch, Tensor) else Tensor(batch))

    def graph(self, batch: np.ndarray | Tensor) -> EpisodeGraph:
        """Embeds the batch, predicts length-scales and builds the episode graph"""
        features = self.features(batch)
        return build_graph(features, sigma(self.sigma_net, features), self.k_graph)

    def propagate(self, graph: EpisodeGraph, labels: LabelMatrix) -> PropagationResult:
        match self.propagation:
            case PropagationMode.closed:
                return propagate_closed(graph.S_norm, labels, self.alpha)
            case PropagationMode.iterative:
                return propagate_iterative(graph.S_norm, labels, self.alpha, self.iter_steps)
            case _:
                raise ValueError(f"Unknown propagation mode {self.propagation}")

    def forward(self, batch: np.ndarray, labels: LabelMatrix, scope: LossScope = LossScope.union) -> ForwardPass:
        """Differentiable pass from raw examples to the episode loss"""
        graph = self.graph(batch)
        result = self.propagate(graph, labels)
        return ForwardPass(loss=episode_loss(result, labels, scope), result=result, graph=graph)

    def predict(self, batch: np.ndarray, labels: LabelMatrix) -> PropagationResult:
        """Transductive inference over a batch whose first rows are labeled.  Nothing is recorded on the tape"""
        with no_grad():
            return self.propagate(self.graph(batch), labels)
