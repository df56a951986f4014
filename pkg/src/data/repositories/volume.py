"""
RVF volume files.

Layout: 33-byte little-endian header (magic "RVF1", u8 kind, u32 D, H, W,
16 reserved zero bytes) followed by the raw payload: f32 intensities,
u16 labels or f32 [3,D,H,W] displacement components.
"""

import struct
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from src.config import logger
from src.data.schemas import RVF_MAGIC, RVFHeader, RVFKind
from src.errors import FormatException, ResourceNotFoundException, ShapeException, TruncatedFileException

volume_logger = logger.getChild("rvf")

HEADER_STRUCT = struct.Struct("<4sB3I16s")
HEADER_SIZE = HEADER_STRUCT.size

PAYLOAD_DTYPES = {
    RVFKind.INTENSITY: np.dtype("<f4"),
    RVFKind.LABELS: np.dtype("<u2"),
    RVFKind.FIELD: np.dtype("<f4"),
}

PathLike = Union[str, Path]


def infer_kind(data: np.ndarray) -> RVFKind:
    if data.ndim == 4 and data.shape[0] == 3:
        return RVFKind.FIELD
    if np.issubdtype(data.dtype, np.integer):
        return RVFKind.LABELS
    return RVFKind.INTENSITY


def _payload_shape(header: RVFHeader) -> Tuple[int, ...]:
    return ((3,) if header.kind == RVFKind.FIELD else ()) + tuple(header.dims)


def encode_volume(data: np.ndarray, kind: Optional[RVFKind] = None) -> bytes:
    kind = infer_kind(data) if kind is None else RVFKind(kind)
    spatial = data.shape[1:] if kind == RVFKind.FIELD else data.shape
    if len(spatial) != 3 or (kind == RVFKind.FIELD and data.shape[0] != 3):
        raise ShapeException(f"Cannot store array of shape {data.shape} as RVF kind {kind.name}")
    if kind == RVFKind.LABELS and data.size and (data.min() < 0 or data.max() > np.iinfo(np.uint16).max):
        raise FormatException(f"Label values must fit in u16, got range [{data.min()}, {data.max()}]")
    header = RVFHeader(kind=kind, dims=tuple(int(d) for d in spatial))
    packed = HEADER_STRUCT.pack(header.magic, int(header.kind), *header.dims, header.reserved)
    payload = np.ascontiguousarray(data).astype(PAYLOAD_DTYPES[kind], copy=False).tobytes()
    return packed + payload


def decode_volume(raw: bytes, source: str = "<bytes>") -> Tuple[RVFHeader, np.ndarray]:
    if len(raw) < HEADER_SIZE:
        raise TruncatedFileException(source, HEADER_SIZE, len(raw))
    magic, kind, d, h, w, reserved = HEADER_STRUCT.unpack_from(raw, 0)
    if magic != RVF_MAGIC:
        raise FormatException(f"{source}: bad magic {magic!r}, expected {RVF_MAGIC!r}")
    try:
        kind = RVFKind(kind)
    except ValueError:
        raise FormatException(f"{source}: unknown RVF kind {kind}")
    header = RVFHeader(kind=kind, dims=(d, h, w), reserved=reserved)
    expected_end = HEADER_SIZE + header.payload_bytes
    if len(raw) < expected_end:
        raise TruncatedFileException(source, expected_end, len(raw))
    if len(raw) > expected_end:
        raise FormatException(
            f"{source}: {len(raw) - expected_end} unexpected bytes after payload end at byte offset {expected_end}"
        )
    data = np.frombuffer(raw, dtype=PAYLOAD_DTYPES[kind], offset=HEADER_SIZE)
    return header, data.reshape(_payload_shape(header)).copy()


def write_volume(path: PathLike, data: np.ndarray, kind: Optional[RVFKind] = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_volume(np.asarray(data), kind))
    volume_logger.debug(f"Wrote {path} ({data.shape})")
    return path


def read_volume(path: PathLike, expected_kind: Optional[RVFKind] = None) -> np.ndarray:
    """Read an RVF payload; f32 kinds come back as float32, labels as uint16."""
    path = Path(path)
    if not path.is_file():
        raise ResourceNotFoundException(f"Volume file not found: {path}")
    header, data = decode_volume(path.read_bytes(), str(path))
    if expected_kind is not None and header.kind != RVFKind(expected_kind):
        raise FormatException(
            f"{path}: expected an RVF {RVFKind(expected_kind).name} file, found {header.kind.name}"
        )
    volume_logger.debug(f"Read {path}: {header.kind.name} {header.dims}")
    return data
