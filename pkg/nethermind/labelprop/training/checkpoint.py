"""
TPNC checkpoint files.

All integers are little-endian.  Layout::

    magic "TPNC" | version u16 = 1 | config fingerprint (32 bytes) | config_len u32 | config JSON (utf-8)
    input rank u8 | input dims (rank x u32) | episodes_seen u64 | adam step u64
    counter_count u16 | per counter: name_len u16 | name | value u64
    blob_count u32 | per blob: name_len u16 | name | rank u8 | dims (rank x u32) | payload (f64)
    crc32 u32 of every preceding byte

Blobs hold the model parameters (``embedding.*`` and ``sigma.*``) followed by the Adam moments
(``adam.m.<param>`` and ``adam.v.<param>``).
"""
import logging
import struct
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from nethermind.labelprop.exceptions import ConfigError, FormatError
from nethermind.labelprop.model import PropagationNetwork
from nethermind.labelprop.networks import EmbeddingParams, SigmaNetParams
from nethermind.labelprop.tensor import Tensor

from .adam import AdamState
from .config import TrainConfig

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("training").getChild("checkpoint")

MAGIC = b"TPNC"
VERSION = 1

_PREAMBLE = struct.Struct("<4sH32sI")
_U8 = struct.Struct("<B")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")

_ADAM_M = "adam.m."
_ADAM_V = "adam.v."


@dataclass
class Checkpoint:  # pylint: disable=too-many-instance-attributes
    """Trainable parameters, optimizer state and stream counters, sufficient to resume training exactly"""

    config: TrainConfig
    in_shape: tuple[int, ...]
    params: dict[str, np.ndarray]
    adam: AdamState
    episodes_seen: int = 0
    rng_counters: dict[str, int] = field(default_factory=dict)
    version: int = VERSION

    @property
    def fingerprint(self) -> bytes:
        return self.config.fingerprint()

    @property
    def parameter_count(self) -> int:
        return sum(int(array.size) for array in self.params.values())

    @classmethod
    def from_model(  # pylint: disable=too-many-arguments
        cls,
        model: PropagationNetwork,
        config: TrainConfig,
        in_shape: tuple[int, ...],
        adam: AdamState,
        episodes_seen: int,
        rng_counters: dict[str, int],
    ) -> "Checkpoint":
        """Snapshot of a model.  Arrays are copied, so later training does not alter the checkpoint"""
        return cls(
            config=config,
            in_shape=tuple(in_shape),
            params={name: tensor.data.copy() for name, tensor in model.parameters().items()},
            adam=AdamState(
                m={name: array.copy() for name, array in adam.m.items()},
                v={name: array.copy() for name, array in adam.v.items()},
                step=adam.step,
            ),
            episodes_seen=episodes_seen,
            rng_counters=dict(rng_counters),
        )

    def to_model(self) -> PropagationNetwork:
        """Rebuilds the model with trainable leaves holding copies of the stored arrays"""
        groups: dict[str, dict[str, Tensor]] = {"embedding": {}, "sigma": {}}
        for full_name, array in self.params.items():
            group, name = full_name.split(".", 1)
            if group not in groups:
                raise FormatError(f"Checkpoint parameter '{full_name}' belongs to no parameter group")
            groups[group][name] = Tensor(array.copy(), requires_grad=True, name=name)

        cfg = self.config
        return PropagationNetwork(
            EmbeddingParams(variant=cfg.embedding, tensors=groups["embedding"]),
            SigmaNetParams(variant=cfg.embedding, tensors=groups["sigma"]),
            alpha=cfg.alpha,
            k_graph=cfg.k_graph,
            propagation=cfg.propagation,
            iter_steps=cfg.iter_steps,
        )

    def name_table(self) -> list[tuple[str, tuple[int, ...]]]:
        """(blob name, shape) for every stored blob, in file order"""
        table = [(name, tuple(array.shape)) for name, array in self.params.items()]
        table += [(_ADAM_M + name, tuple(array.shape)) for name, array in self.adam.m.items()]
        table += [(_ADAM_V + name, tuple(array.shape)) for name, array in self.adam.v.items()]
        return table


# -------------------------------------------------------
#    Encoding
# -------------------------------------------------------
def _name(value: str) -> bytes:
    encoded = value.encode("utf-8")
    return _U16.pack(len(encoded)) + encoded


def _dims(shape: tuple[int, ...]) -> bytes:
    return _U8.pack(len(shape)) + struct.pack(f"<{len(shape)}I", *shape)


def encode_checkpoint(ckpt: Checkpoint) -> bytes:
    config_json = ckpt.config.to_json().encode("utf-8")
    chunks = [
        _PREAMBLE.pack(MAGIC, ckpt.version, ckpt.fingerprint, len(config_json)),
        config_json,
        _dims(ckpt.in_shape),
        _U64.pack(ckpt.episodes_seen),
        _U64.pack(ckpt.adam.step),
        _U16.pack(len(ckpt.rng_counters)),
    ]
    for name, value in sorted(ckpt.rng_counters.items()):
        chunks += [_name(name), _U64.pack(value)]

    blobs = list(ckpt.params.items())
    blobs += [(_ADAM_M + name, array) for name, array in ckpt.adam.m.items()]
    blobs += [(_ADAM_V + name, array) for name, array in ckpt.adam.v.items()]
    chunks.append(_U32.pack(len(blobs)))
    for name, array in blobs:
        chunks += [_name(name), _dims(tuple(array.shape)), np.ascontiguousarray(array, dtype="<f8").tobytes()]

    body = b"".join(chunks)
    return body + _U32.pack(zlib.crc32(body))


class _Reader:
    def __init__(self, buffer: bytes):
        self.buffer = buffer
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.buffer):
            raise FormatError(f"Truncated checkpoint while reading {what}", offset=self.offset)
        chunk = self.buffer[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: struct.Struct, what: str) -> tuple:
        return fmt.unpack(self.take(fmt.size, what))

    def name(self, what: str) -> str:
        (length,) = self.unpack(_U16, f"{what} length")
        start = self.offset
        try:
            return self.take(length, what).decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"{what} is not valid utf-8", offset=start)

    def dims(self, what: str) -> tuple[int, ...]:
        (rank,) = self.unpack(_U8, f"{what} rank")
        return tuple(struct.unpack(f"<{rank}I", self.take(4 * rank, f"{what} dims")))


def decode_checkpoint(buffer: bytes) -> Checkpoint:  # pylint: disable=too-many-locals
    """
    Parses TPNC bytes

    :raises FormatError: on bad magic, version mismatch, fingerprint mismatch, truncation or checksum mismatch
    """
    reader = _Reader(buffer)
    magic, version, fingerprint, config_len = reader.unpack(_PREAMBLE, "preamble")
    if magic != MAGIC:
        raise FormatError(f"Bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"Unsupported checkpoint version {version}", offset=4)

    config_offset = reader.offset
    try:
        config = TrainConfig.from_json(reader.take(config_len, "config").decode("utf-8"))
    except (UnicodeDecodeError, ValueError, ConfigError) as exc:
        raise FormatError(f"Unreadable checkpoint config: {exc}", offset=config_offset)
    if config.fingerprint() != fingerprint:
        raise FormatError("Config fingerprint does not match the stored config", offset=6)

    in_shape = reader.dims("input shape")
    (episodes_seen,) = reader.unpack(_U64, "episodes_seen")
    (adam_step,) = reader.unpack(_U64, "adam step")

    (counter_count,) = reader.unpack(_U16, "counter count")
    counters = {}
    for _ in range(counter_count):
        name = reader.name("counter name")
        (counters[name],) = reader.unpack(_U64, f"counter '{name}'")

    (blob_count,) = reader.unpack(_U32, "blob count")
    params: dict[str, np.ndarray] = {}
    adam = AdamState(step=adam_step)
    for _ in range(blob_count):
        name = reader.name("blob name")
        shape = reader.dims(f"blob '{name}'")
        payload = reader.take(8 * int(np.prod(shape, dtype=np.int64)), f"blob '{name}'")
        array = np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(shape)
        if name.startswith(_ADAM_M):
            adam.m[name.removeprefix(_ADAM_M)] = array
        elif name.startswith(_ADAM_V):
            adam.v[name.removeprefix(_ADAM_V)] = array
        else:
            params[name] = array

    crc_offset = reader.offset
    (stored_crc,) = reader.unpack(_U32, "checksum")
    if stored_crc != zlib.crc32(buffer[:crc_offset]):
        raise FormatError("Checksum mismatch", offset=crc_offset)
    if reader.offset != len(buffer):
        raise FormatError(f"{len(buffer) - reader.offset} trailing bytes after checksum", offset=reader.offset)

    return Checkpoint(
        config=config,
        in_shape=in_shape,
        params=params,
        adam=adam,
        episodes_seen=episodes_seen,
        rng_counters=counters,
        version=version,
    )


def save_checkpoint(ckpt: Checkpoint, path: str | Path) -> None:
    """Writes atomically through a temporary sibling file"""
    path = Path(path)
    staging = path.with_name(path.name + ".tmp")
    staging.write_bytes(encode_checkpoint(ckpt))
    staging.replace(path)
    logger.info(f"Saved checkpoint after {ckpt.episodes_seen} episodes to {path}")


def load_checkpoint(path: str | Path) -> Checkpoint:
    path = Path(path)
    ckpt = decode_checkpoint(path.read_bytes())
    logger.debug(f"Loaded checkpoint from {path} ({ckpt.parameter_count} parameters, {ckpt.episodes_seen} episodes)")
    return ckpt
