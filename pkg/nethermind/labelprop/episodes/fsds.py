"""
FSDS binary dataset files.

All integers are little-endian.  Layout::

    magic "FSDS" | version u16 = 1 | flags u16 = 0 | class_count u32
    per class:  name_len u16 | name (utf-8) | sample_count u32 | rank u8 | dims (rank x u32) | payload (f32)
    crc32 u32 of every preceding byte

Split tags live in a plain-text sidecar ``<stem>.split`` with one ``class_name<TAB>split`` line per class.
"""
import logging
import struct
import zlib
from pathlib import Path

import numpy as np

from nethermind.labelprop.exceptions import FormatError
from nethermind.labelprop.types import Split

from .dataset import ClassRecord, Dataset

root_logger = logging.getLogger("nethermind")
logger = root_logger.getChild("labelprop").getChild("episodes").getChild("fsds")

MAGIC = b"FSDS"
VERSION = 1

_HEADER = struct.Struct("<4sHHI")
_NAME_LEN = struct.Struct("<H")
_COUNT_RANK = struct.Struct("<IB")
_CRC = struct.Struct("<I")


def manifest_path(path: Path) -> Path:
    """Sidecar split manifest for a dataset file"""
    return path.with_suffix(".split")


def encode_fsds(ds: Dataset) -> bytes:
    """Serializes a dataset to FSDS bytes (split tags are not part of the binary file)"""
    chunks = [_HEADER.pack(MAGIC, VERSION, 0, len(ds.classes))]
    dims = ds.example_shape
    for record in ds.classes:
        name = record.name.encode("utf-8")
        chunks.append(_NAME_LEN.pack(len(name)))
        chunks.append(name)
        chunks.append(_COUNT_RANK.pack(record.count, len(dims)))
        chunks.append(struct.pack(f"<{len(dims)}I", *dims))
        chunks.append(np.ascontiguousarray(record.examples, dtype="<f4").tobytes())

    body = b"".join(chunks)
    return body + _CRC.pack(zlib.crc32(body))


class _Reader:
    def __init__(self, buffer: bytes):
        self.buffer = buffer
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.buffer):
            raise FormatError(f"Truncated file while reading {what}", offset=self.offset)
        chunk = self.buffer[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: struct.Struct, what: str) -> tuple:
        return fmt.unpack(self.take(fmt.size, what))


def decode_fsds(buffer: bytes) -> Dataset:
    """
    Parses FSDS bytes into a dataset with untagged classes

    :raises FormatError: on bad magic, unsupported version, truncation, inconsistent shapes or checksum mismatch
    """
    reader = _Reader(buffer)
    magic, version, flags, class_count = reader.unpack(_HEADER, "header")
    if magic != MAGIC:
        raise FormatError(f"Bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"Unsupported FSDS version {version}", offset=4)
    if flags != 0:
        raise FormatError(f"Unsupported FSDS flags {flags:#06x}", offset=6)

    records: list[ClassRecord] = []
    example_shape: tuple[int, ...] | None = None
    for class_index in range(class_count):
        class_offset = reader.offset
        (name_len,) = reader.unpack(_NAME_LEN, f"name length of class {class_index}")
        try:
            name = reader.take(name_len, f"name of class {class_index}").decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"Class {class_index} name is not valid utf-8", offset=class_offset + 2)

        count, rank = reader.unpack(_COUNT_RANK, f"sample count of class '{name}'")
        dims_offset = reader.offset
        dims = struct.unpack(f"<{rank}I", reader.take(4 * rank, f"dims of class '{name}'"))
        if example_shape is None:
            example_shape = tuple(dims)
        elif tuple(dims) != example_shape:
            raise FormatError(f"Class '{name}' has dims {dims}, expected {example_shape}", offset=dims_offset)

        payload = reader.take(4 * count * int(np.prod(dims, dtype=np.int64)), f"payload of class '{name}'")
        examples = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape((count, *dims))
        records.append(ClassRecord(id=class_index, name=name, examples=examples))

    crc_offset = reader.offset
    (stored_crc,) = reader.unpack(_CRC, "checksum")
    if stored_crc != zlib.crc32(buffer[:crc_offset]):
        raise FormatError("Checksum mismatch", offset=crc_offset)
    if reader.offset != len(buffer):
        raise FormatError(f"{len(buffer) - reader.offset} trailing bytes after checksum", offset=reader.offset)

    return Dataset(classes=records, example_shape=example_shape or ())


def write_split_manifest(ds: Dataset, path: Path) -> None:
    """Writes ``class_name<TAB>split`` lines for every tagged class"""
    lines = [f"{record.name}\t{record.split.value}\n" for record in ds.classes if record.split is not None]
    path.write_text("".join(lines), encoding="utf-8")


def read_split_manifest(path: Path) -> dict[str, Split]:
    """Parses a split manifest into {class_name: split}"""
    splits: dict[str, Split] = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            name, tag = line.split("\t")
            splits[name] = Split(tag.strip())
        except ValueError:
            raise FormatError(f"Malformed split manifest line {line_no} in {path}: {line!r}")
    return splits


def save_fsds(ds: Dataset, path: str | Path) -> None:
    """Writes the dataset file, and its split manifest when the dataset carries split tags"""
    path = Path(path)
    path.write_bytes(encode_fsds(ds))
    if ds.has_split_tags():
        write_split_manifest(ds, manifest_path(path))
    logger.info(f"Saved {len(ds.classes)} classes ({ds.num_examples} examples) to {path}")


def load_fsds(path: str | Path) -> Dataset:
    """
    Loads a dataset file.  When a split manifest sits next to the file, class split tags are applied from it.

    :raises FormatError: on malformed files, or manifests naming unknown classes
    """
    path = Path(path)
    ds = decode_fsds(path.read_bytes())

    sidecar = manifest_path(path)
    if sidecar.exists():
        splits = read_split_manifest(sidecar)
        known = {record.name for record in ds.classes}
        unknown = sorted(set(splits) - known)
        if unknown:
            raise FormatError(f"Split manifest {sidecar} names unknown classes: {unknown}")
        for record in ds.classes:
            record.split = splits.get(record.name)

    logger.debug(f"Loaded {len(ds.classes)} classes with example shape {ds.example_shape} from {path}")
    return ds
