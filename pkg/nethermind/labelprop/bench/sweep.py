import logging
from dataclasses import dataclass
from typing import Any, Callable, Sequence

from nethermind.labelprop.episodes import Dataset
from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.training import Checkpoint, TrainConfig, train
from nethermind.labelprop.types import Split

from .evaluate import DEFAULT_EPISODES, evaluate
from .reports import EvalReport

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("bench").getChild("sweep")


@dataclass(frozen=True)
class SweepParam:
    """How a swept value is applied.  Test-time params reuse one model, the others retrain per value"""

    parse: Callable[[str], Any]
    retrain: bool
    apply: Callable[[TrainConfig, Any], TrainConfig]


SWEEP_PARAMS: dict[str, SweepParam] = {
    "query": SweepParam(int, False, lambda cfg, v: cfg.replace(query=v)),
    "test_shot": SweepParam(int, False, lambda cfg, v: cfg.replace(k_test=v)),
    "alpha": SweepParam(float, True, lambda cfg, v: cfg.replace(alpha=v)),
    "k_graph": SweepParam(int, True, lambda cfg, v: cfg.replace(k_graph=v)),
    "train_shot": SweepParam(int, True, lambda cfg, v: cfg.replace(k_train=v)),
    "train_query": SweepParam(int, True, lambda cfg, v: cfg.replace(train_query=v)),
    "matched_query": SweepParam(int, True, lambda cfg, v: cfg.replace(query=v, train_query=v)),
}


def sweep_param(name: str) -> SweepParam:
    """
    :raises ConfigError: for unknown names, listing the valid ones
    """
    try:
        return SWEEP_PARAMS[name]
    except KeyError:
        raise ConfigError(f"Invalid sweep parameter '{name}'.  Valid parameters: {', '.join(SWEEP_PARAMS)}")


def parse_values(name: str, raw: str | Sequence[str]) -> list[Any]:
    """Parses comma separated values for a sweep parameter"""
    param = sweep_param(name)
    items = raw.split(",") if isinstance(raw, str) else list(raw)
    try:
        values = [param.parse(item.strip()) for item in items if str(item).strip()]
    except ValueError:
        raise ConfigError(f"Invalid values for sweep parameter '{name}': {raw!r}")
    if not values:
        raise ConfigError(f"Sweep over '{name}' needs at least one value")
    return values


def sweep(  # pylint: disable=too-many-arguments
    param: str,
    values: Sequence[Any],
    base_config: TrainConfig,
    dataset: Dataset,
    checkpoint: Checkpoint | None = None,
    episodes: int = DEFAULT_EPISODES,
    seed: int = 0,
    workers: int = 1,
) -> list[tuple[str, Any, EvalReport]]:
    """
    Runs one evaluation per value.  Test-time params (``query``, ``test_shot``) evaluate a single model: the
    given checkpoint, or one trained from base_config.  Every other param trains a fresh model from the
    modified config before evaluating it.

    :return: (param, value, report) rows, one per value, in the given order
    """
    spec = sweep_param(param)
    if not values:
        raise ConfigError(f"Sweep over '{param}' needs at least one value")

    test_set = dataset.for_split(Split.test)
    shared = checkpoint
    if not spec.retrain and shared is None:
        logger.info(f"Training one model from the base config for the '{param}' sweep")
        shared = train(dataset, base_config)

    rows = []
    for value in values:
        config = spec.apply(shared.config if shared is not None and not spec.retrain else base_config, value)
        if spec.retrain:
            logger.info(f"Training for {param} = {value}")
            model_ckpt = train(dataset, config)
        else:
            assert shared is not None
            model_ckpt = shared

        report = evaluate(
            model_ckpt,
            test_set,
            config.n_way,
            config.k_test,
            config.query,
            episodes,
            seed,
            tag=f"{param}={value}",
            workers=workers,
        )
        rows.append((param, value, report))
    return rows
