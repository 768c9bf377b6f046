import configparser
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, fields
from dataclasses import replace as dataclass_replace
from enum import Enum
from pathlib import Path
from typing import Any, Callable

from nethermind.labelprop.exceptions import ConfigError
from nethermind.labelprop.types import EmbeddingVariant, LossScope, PropagationMode

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("training").getChild("config")

_SECTION = "labelprop"


def _passthrough(value: Any) -> Any:
    return value.strip() if isinstance(value, str) else value


def _optional_int(value: Any) -> int | None:
    if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none")):
        return None
    return int(value)


@dataclass(slots=True)
class TrainConfig:  # pylint: disable=too-many-instance-attributes
    """
    Episodic training configuration.  Training episodes are ``n_way_train``-way ``k_train``-shot with
    ``train_query`` queries per class, and evaluation episodes are ``n_way``-way ``k_test``-shot with ``query``
    queries per class.  ``k_train > k_test`` is the Higher Shot setup.
    """

    n_way: int = 5
    n_way_train: int | None = None
    k_train: int = 5
    k_test: int = 1
    query: int = 15
    train_query: int | None = None
    alpha: float = 0.99
    k_graph: int = 20
    lr0: float = 1e-3
    halve_every: int = 10_000
    max_episodes: int = 20_000
    loss_scope: LossScope = LossScope.union
    embedding: EmbeddingVariant = EmbeddingVariant.mlp
    embed_dim: int = 16
    hidden_dim: int = 64
    propagation: PropagationMode = PropagationMode.closed
    iter_steps: int = 10
    seed: int = 0
    checkpoint_every: int = 1_000
    val_every: int = 0
    val_episodes: int = 100

    def __post_init__(self):
        self.loss_scope = _enum(LossScope, "loss_scope", self.loss_scope)
        self.embedding = _enum(EmbeddingVariant, "embedding", self.embedding)
        self.propagation = _enum(PropagationMode, "propagation", self.propagation)

        if self.n_way < 2 or (self.n_way_train is not None and self.n_way_train < 2):
            raise ConfigError("n_way and n_way_train must be at least 2")
        for name in ("k_train", "k_test", "query", "k_graph", "halve_every", "embed_dim", "hidden_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, received {getattr(self, name)}")
        if self.train_query is not None and self.train_query < 1:
            raise ConfigError(f"train_query must be positive, received {self.train_query}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), received {self.alpha}")
        if self.lr0 <= 0.0:
            raise ConfigError(f"lr0 must be positive, received {self.lr0}")
        if self.max_episodes < 0 or self.seed < 0:
            raise ConfigError("max_episodes and seed must be non-negative")
        if self.checkpoint_every < 1 or self.iter_steps < 1 or self.val_episodes < 1 or self.val_every < 0:
            raise ConfigError("checkpoint_every, iter_steps and val_episodes must be positive, val_every >= 0")

    @property
    def train_n_way(self) -> int:
        return self.n_way_train if self.n_way_train is not None else self.n_way

    @property
    def train_query_per_class(self) -> int:
        return self.train_query if self.train_query is not None else self.query

    # -------------------------------------------------------
    #    Serialization
    # -------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {key: value.value if isinstance(value, Enum) else value for key, value in asdict(self).items()}

    def to_json(self) -> str:
        """Canonical JSON: sorted keys, no whitespace"""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def fingerprint(self) -> bytes:
        """SHA-256 of the canonical JSON"""
        return hashlib.sha256(self.to_json().encode("utf-8")).digest()

    def replace(self, **changes) -> "TrainConfig":
        """Copy with changes applied and validated"""
        unknown = set(changes) - set(field_names())
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")
        return dataclass_replace(self, **changes)

    @classmethod
    def from_mapping(cls, values: dict[str, Any]) -> "TrainConfig":
        """Builds a config from loosely typed values (strings from files, JSON values from checkpoints)"""
        known = field_names()
        unknown = sorted(set(values) - set(known))
        if unknown:
            raise ConfigError(f"Unknown config keys: {unknown}.  Valid keys: {', '.join(known)}")

        parsed = {}
        for key, raw in values.items():
            try:
                parsed[key] = _CONVERTERS[key](raw)
            except (TypeError, ValueError):
                raise ConfigError(f"Invalid value for '{key}': {raw!r}")
        return cls(**parsed)

    @classmethod
    def from_json(cls, text: str) -> "TrainConfig":
        return cls.from_mapping(json.loads(text))

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "TrainConfig":
        """
        Reads a ``key = value`` config file.  Blank lines and ``#`` comments are ignored.  Overrides that are not
        None replace file values.
        """
        values = read_config_file(path)
        values.update({key: value for key, value in overrides.items() if value is not None})
        return cls.from_mapping(values)


def read_config_file(path: str | Path) -> dict[str, Any]:
    """Raw ``key = value`` pairs of a config file, unconverted"""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    try:
        parser.read_string(f"[{_SECTION}]\n" + Path(path).read_text(encoding="utf-8"))
    except configparser.Error as exc:
        raise ConfigError(f"Could not parse config file {path}: {exc}")
    return dict(parser[_SECTION])


def field_names() -> list[str]:
    return [field.name for field in fields(TrainConfig)]


def _enum(enum_cls: type[Enum], name: str, value: Any) -> Any:
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        valid = ", ".join(member.value for member in enum_cls)  # type: ignore[attr-defined]
        raise ConfigError(f"Invalid {name} '{value}'.  Valid values: {valid}")


_CONVERTERS: dict[str, Callable[[Any], Any]] = {
    "n_way": int,
    "n_way_train": _optional_int,
    "k_train": int,
    "k_test": int,
    "query": int,
    "train_query": _optional_int,
    "alpha": float,
    "k_graph": int,
    "lr0": float,
    "halve_every": int,
    "max_episodes": int,
    "loss_scope": _passthrough,
    "embedding": _passthrough,
    "embed_dim": int,
    "hidden_dim": int,
    "propagation": _passthrough,
    "iter_steps": int,
    "seed": int,
    "checkpoint_every": int,
    "val_every": int,
    "val_episodes": int,
}


def resolve_config(
    config_file: str | Path | None = None, defaults: dict[str, Any] | None = None, **overrides
) -> TrainConfig:
    """
    Layers configuration values, later layers winning: ``defaults``, then the config file, then the overrides
    that are not None.  Fields missing from every layer keep the TrainConfig defaults.
    """
    values: dict[str, Any] = dict(defaults or {})
    if config_file is not None:
        values.update(read_config_file(config_file))
    values.update({key: value for key, value in overrides.items() if value is not None})
    return TrainConfig.from_mapping(values)
