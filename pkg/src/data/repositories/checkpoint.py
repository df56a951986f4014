"""
Checkpoint files.

Layout (little-endian): magic "HSGK", u32 config length, UTF-8 key=value
config block, then one record per parameter in canonical order:
u32 name length, UTF-8 name, u32 rank, rank x u32 dims, f64 payload.
"""

import math
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from src.business.models import RegistrationModel
from src.config import logger
from src.data.repositories.run_config import (
    network_config_from_values,
    network_config_text,
    parse_config_text,
)
from src.data.schemas import NetworkConfig
from src.errors import FormatException, ResourceNotFoundException, TruncatedFileException

checkpoint_logger = logger.getChild("checkpoint")

CHECKPOINT_MAGIC = b"HSGK"
U32 = struct.Struct("<I")


def encode_checkpoint(model: RegistrationModel) -> bytes:
    config_block = network_config_text(model.config).encode("utf-8")
    chunks = [CHECKPOINT_MAGIC, U32.pack(len(config_block)), config_block]
    for name, param in model.named_parameters():
        encoded_name = name.encode("utf-8")
        chunks.append(U32.pack(len(encoded_name)))
        chunks.append(encoded_name)
        chunks.append(U32.pack(param.ndim))
        chunks.extend(U32.pack(d) for d in param.shape)
        chunks.append(param.data.astype("<f8").tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, raw: bytes, source: str):
        self.raw = raw
        self.source = source
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.raw):
            raise TruncatedFileException(self.source, end, len(self.raw))
        chunk = self.raw[self.offset : end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return U32.unpack(self.take(U32.size))[0]

    @property
    def exhausted(self) -> bool:
        return self.offset >= len(self.raw)


def decode_checkpoint(raw: bytes, source: str = "<bytes>") -> Tuple[NetworkConfig, "OrderedDict[str, np.ndarray]"]:
    reader = _Reader(raw, source)
    magic = reader.take(len(CHECKPOINT_MAGIC))
    if magic != CHECKPOINT_MAGIC:
        raise FormatException(f"{source}: bad checkpoint magic {magic!r}, expected {CHECKPOINT_MAGIC!r}")
    try:
        config_text = reader.take(reader.u32()).decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatException(f"{source}: config block is not valid UTF-8: {exc}")
    config = network_config_from_values(parse_config_text(config_text, source), source)

    tensors: "OrderedDict[str, np.ndarray]" = OrderedDict()
    while not reader.exhausted:
        name_offset = reader.offset
        try:
            name = reader.take(reader.u32()).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatException(f"{source}: tensor name at byte offset {name_offset} is not valid UTF-8: {exc}")
        rank = reader.u32()
        dims = tuple(reader.u32() for _ in range(rank))
        # u32 dims from the file can overflow a fixed-width product
        count = math.prod(dims)
        payload = reader.take(8 * count)
        tensors[name] = np.frombuffer(payload, dtype="<f8").reshape(dims).astype(np.float64)
    return config, tensors


def write_checkpoint(path: Union[str, Path], model: RegistrationModel) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(model))
    checkpoint_logger.info(f"Saved checkpoint with {model.param_count()} parameters to {path}")
    return path


def read_checkpoint(path: Union[str, Path]) -> RegistrationModel:
    """Rebuild the model described by the checkpoint's config and load every tensor by name."""
    path = Path(path)
    if not path.is_file():
        raise ResourceNotFoundException(f"Checkpoint not found: {path}")
    config, tensors = decode_checkpoint(path.read_bytes(), str(path))
    model = RegistrationModel(config)
    expected = [name for name, _ in model.named_parameters()]
    unexpected = [name for name in tensors if name not in set(expected)]
    if unexpected:
        raise FormatException(f"{path}: tensors not in the model: {', '.join(unexpected)}")
    missing = [name for name in expected if name not in tensors]
    if missing:
        raise ResourceNotFoundException(f"{path}: checkpoint has no tensor named '{missing[0]}'")
    model.load_state_dict(tensors)
    checkpoint_logger.info(f"Loaded checkpoint {path} ({model.param_count()} parameters)")
    return model

