"""Versioned binary checkpoints.

Layout (all integers little-endian)::

    magic        8 bytes  b"MSEQCKPT"
    version      u32
    header_len   u32, followed by a UTF-8 JSON header {"config": ..., "metadata": ...}
    count        u32 number of stored parameters
    per parameter:
        name_len u32, name (UTF-8)
        ndim     u32, then ndim x u32 extents
        dtype    u8 (1 = float32, 2 = float64)
        data     product(extents) little-endian scalars

Aliased parameters (shared encoders, tied embeddings) are stored once.
"""

from __future__ import annotations

import json
import logging
import struct
from pathlib import Path
from typing import Any, Optional, Union

import numpy as np

from multiseq.errors import CheckpointError, ConfigurationError
from multiseq.numerics.tensor import Tensor
from multiseq.seqmodel.config import ModelConfig
from multiseq.seqmodel.params import ModelParams

logger = logging.getLogger(__name__)

MAGIC = b"MSEQCKPT"
FORMAT_VERSION = 1
_DTYPE_CODES = {np.dtype("<f4"): 1, np.dtype("<f8"): 2}
_CODE_DTYPES = {code: dtype for dtype, code in _DTYPE_CODES.items()}


def encode_checkpoint(params: ModelParams, metadata: Optional[dict[str, Any]] = None) -> bytes:
    header = json.dumps(
        {"config": params.config.to_dict(), "metadata": metadata or {}},
        sort_keys=True,
        ensure_ascii=False,
    ).encode("utf-8")
    chunks = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(header)), header]
    named = params.named_parameters()
    chunks.append(struct.pack("<I", len(named)))
    for name, tensor in named:
        raw_name = name.encode("utf-8")
        data = tensor.data.astype(tensor.data.dtype.newbyteorder("<"), copy=False)
        code = _DTYPE_CODES.get(data.dtype)
        if code is None:
            msg = f"parameter {name} has unsupported dtype {data.dtype}"
            raise CheckpointError(msg)
        chunks.append(struct.pack("<I", len(raw_name)))
        chunks.append(raw_name)
        chunks.append(struct.pack(f"<I{data.ndim}I", data.ndim, *data.shape))
        chunks.append(struct.pack("<B", code))
        chunks.append(np.ascontiguousarray(data).tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, payload: bytes, source: str) -> None:
        self.payload = payload
        self.offset = 0
        self.source = source

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            msg = (
                f"{self.source}: truncated checkpoint "
                f"(needed {size} bytes at offset {self.offset})"
            )
            raise CheckpointError(msg)
        chunk = self.payload[self.offset : end]
        self.offset = end
        return chunk

    def unpack(self, fmt: str) -> tuple[Any, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def decode_checkpoint(
    payload: bytes, source: str = "<bytes>"
) -> tuple[ModelParams, dict[str, Any]]:
    """Parse a checkpoint; nothing is returned unless the whole file is valid."""
    reader = _Reader(payload, source)
    if reader.take(len(MAGIC)) != MAGIC:
        msg = f"{source}: not a multiseq checkpoint"
        raise CheckpointError(msg)
    version, header_len = reader.unpack("<II")
    if version != FORMAT_VERSION:
        msg = f"{source}: unsupported checkpoint version {version} (expected {FORMAT_VERSION})"
        raise CheckpointError(msg)
    try:
        header = json.loads(reader.take(header_len).decode("utf-8"))
        config = ModelConfig.from_dict(header["config"])
    except (ValueError, KeyError, ConfigurationError) as exc:
        msg = f"{source}: invalid checkpoint header: {exc}"
        raise CheckpointError(msg) from exc

    (count,) = reader.unpack("<I")
    tensors: dict[str, Tensor] = {}
    for _ in range(count):
        (name_len,) = reader.unpack("<I")
        try:
            name = reader.take(name_len).decode("utf-8")
        except UnicodeDecodeError as exc:
            msg = f"{source}: parameter name is not valid UTF-8"
            raise CheckpointError(msg) from exc
        (ndim,) = reader.unpack("<I")
        shape = reader.unpack(f"<{ndim}I") if ndim else ()
        (code,) = reader.unpack("<B")
        dtype = _CODE_DTYPES.get(code)
        if dtype is None:
            msg = f"{source}: parameter {name} has unknown dtype code {code}"
            raise CheckpointError(msg)
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        data = np.frombuffer(reader.take(size), dtype=dtype).reshape(shape)
        native = data.astype(dtype.newbyteorder("="), copy=True)
        tensors[name] = Tensor(native, dtype=data.dtype.type)
    if reader.offset != len(payload):
        msg = f"{source}: {len(payload) - reader.offset} trailing bytes after the last parameter"
        raise CheckpointError(msg)
    return ModelParams(config, tensors), header.get("metadata", {})


def save_checkpoint(
    path: Union[str, Path], params: ModelParams, metadata: Optional[dict[str, Any]] = None
) -> Path:
    """Write ``params`` and ``metadata`` to ``path`` through a temporary file."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    staging = target.with_name(target.name + ".tmp")
    staging.write_bytes(encode_checkpoint(params, metadata))
    staging.replace(target)
    logger.info("saved checkpoint %s (%d arrays)", target, len(params))
    return target


def load_checkpoint(path: Union[str, Path]) -> tuple[ModelParams, dict[str, Any]]:
    """Read a checkpoint.

    Raises:
        CheckpointError: bad magic or version, truncation, or a parameter whose
            name or shape disagrees with the stored configuration.
    """
    source = Path(path)
    try:
        payload = source.read_bytes()
    except OSError as exc:
        msg = f"cannot read checkpoint {source}: {exc}"
        raise CheckpointError(msg) from exc
    return decode_checkpoint(payload, str(source))
