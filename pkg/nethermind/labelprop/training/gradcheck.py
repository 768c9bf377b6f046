import logging
from dataclasses import dataclass, field

import numpy as np
from rich.table import Table

from nethermind.labelprop.episodes import Dataset, gen_synthetic, sample_episode, stream_rng
from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.model import PropagationNetwork
from nethermind.labelprop.networks import zero_final_layer
from nethermind.labelprop.propagation import build_label_matrix
from nethermind.labelprop.tensor import backward, no_grad
from nethermind.labelprop.types import EmbeddingVariant, RngStream, SyntheticKind

from .config import TrainConfig

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("training").getChild("gradcheck")

STEP = 1e-5
REL_TOL = 1e-4
ABS_TOL = 1e-6
ZERO_TOL = 1e-10


@dataclass(slots=True)
class ParameterCheck:
    """Worst elementwise agreement between autodiff and central differences for one tensor"""

    name: str
    group: str
    size: int
    max_abs_err: float
    max_rel_err: float
    failures: int
    zero_zero: bool

    @property
    def passed(self) -> bool:
        return self.failures == 0


@dataclass
class GradcheckReport:
    checks: list[ParameterCheck] = field(default_factory=list)
    loss: float = 0.0

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def groups(self) -> dict[str, float]:
        """Maximum relative error per parameter group"""
        worst: dict[str, float] = {}
        for check in self.checks:
            worst[check.group] = max(worst.get(check.group, 0.0), check.max_rel_err)
        return worst

    def table(self) -> Table:
        table = Table(title="Gradient Check", min_width=80)
        table.add_column("Parameter")
        table.add_column("Size", justify="right")
        table.add_column("Max Abs Err", justify="right")
        table.add_column("Max Rel Err", justify="right")
        table.add_column("Status")
        for check in self.checks:
            if not check.passed:
                status = "[red]FAIL"
            elif check.zero_zero:
                status = "[yellow]zero"
            else:
                status = "[green]ok"
            table.add_row(
                check.name, str(check.size), f"{check.max_abs_err:.2e}", f"{check.max_rel_err:.2e}", status
            )
        return table


def gradcheck(
    config: TrainConfig,
    dataset: Dataset | None = None,
    zero_sigma_head: bool = False,
) -> GradcheckReport:
    """
    Compares the autodiff gradient of the episode loss with central finite differences (h = 1e-5) for every
    parameter element.  An element passes when its absolute error is within 1e-6 or its relative error within
    1e-4.  Tensors whose analytic and numeric gradients are both zero are flagged, not failed.

    Intended for tiny configurations: an mlp embedding, 2-way 1-shot episodes with one query per class.

    :param config: model configuration (embedding must be mlp)
    :param dataset: episode source.  Defaults to a small gaussian-blobs dataset
    :param zero_sigma_head: zero the final sigma layer before checking
    """
    if config.embedding != EmbeddingVariant.mlp:
        raise ConfigError("gradcheck runs on the mlp embedding only")
    if dataset is None:
        dataset = gen_synthetic(SyntheticKind.gaussian_blobs, config.n_way, 20, 2, 1.0, config.seed, (1.0, 0.0, 0.0))

    model = PropagationNetwork.initialize(
        config.embedding,
        tuple(dataset.example_shape),
        stream_rng(config.seed, RngStream.init, 0),
        embed_dim=config.embed_dim,
        hidden_dim=config.hidden_dim,
        alpha=config.alpha,
        k_graph=config.k_graph,
        propagation=config.propagation,
        iter_steps=config.iter_steps,
    )
    if zero_sigma_head:
        zero_final_layer(model.sigma_net)

    episode = sample_episode(
        dataset, config.n_way, config.k_test, config.query, stream_rng(config.seed, RngStream.sampling, 0)
    )
    labels = build_label_matrix(episode.support_labels, episode.n_way, episode.size, episode.query_labels)
    batch = episode.batch()

    def loss_value() -> float:
        with no_grad():
            return model.forward(batch, labels, config.loss_scope).loss.item()

    passed = model.forward(batch, labels, config.loss_scope)
    report = GradcheckReport(loss=passed.loss.item())
    backward(passed.loss)

    for full_name, tensor in model.parameters().items():
        analytic = tensor.grad.copy() if tensor.grad is not None else np.zeros_like(tensor.data)
        numeric = np.zeros_like(tensor.data)
        flat = tensor.data.reshape(-1)
        for position in range(flat.size):
            original = flat[position]
            flat[position] = original + STEP
            upper = loss_value()
            flat[position] = original - STEP
            lower = loss_value()
            flat[position] = original
            numeric.reshape(-1)[position] = (upper - lower) / (2.0 * STEP)

        abs_err = np.abs(analytic - numeric)
        scale = np.maximum(np.abs(analytic), np.abs(numeric))
        rel_err = np.divide(abs_err, scale, out=np.zeros_like(abs_err), where=scale > 0)
        report.checks.append(
            ParameterCheck(
                name=full_name,
                group=full_name.split(".", 1)[0],
                size=int(tensor.data.size),
                max_abs_err=float(abs_err.max(initial=0.0)),
                max_rel_err=float(rel_err.max(initial=0.0)),
                failures=int(np.sum((abs_err > ABS_TOL) & (rel_err > REL_TOL))),
                zero_zero=bool(scale.max(initial=0.0) < ZERO_TOL),
            )
        )
        tensor.zero_grad()

    logger.info(f"Gradient check over {model.parameter_count} parameters: worst relative error {report.groups()}")
    return report
