"""Two-phase block-wise symmetric quantization over minishards.

Phase 1 scans a minishard's chunks into one 8x128 scale grid: the abs-max
over the chunk axis at each (i, j), divided by the codec's max magnitude.
Phase 2 divides every chunk by the grid and encodes. Scales stay float32
end to end; a position whose abs-max is exactly 0 gets scale 1.0 (its
codes are all 0, and division stays defined).

Phase 1 may run per-microshard: partial grids merge by elementwise max.
The merge must happen on raw abs-max values, before the zero -> 1.0
fixup, or a position that is zero in one microshard but not another
would merge to the wrong scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layout import CHUNK_COLS, CHUNK_ELEMS, CHUNK_ROWS
from .numerics import Codec, decode, encode

GRID_BYTES = CHUNK_ELEMS * 4  # one float32 scale grid


def absmax_grid(chunks: np.ndarray) -> np.ndarray:
    """Raw 8x128 abs-max over the chunk axis. Mergeable by np.maximum."""
    return np.max(np.abs(chunks), axis=0)


def scales_from_absmax(absmax: np.ndarray, codec: Codec) -> np.ndarray:
    scales = (absmax / np.float32(codec.max_magnitude)).astype(np.float32)
    return np.where(absmax == 0.0, np.float32(1.0), scales)


def scan_scale_grid(chunks: np.ndarray, codec: Codec) -> np.ndarray:
    """Phase 1 over a full minishard."""
    return scales_from_absmax(absmax_grid(chunks), codec)


def apply_scale_grid(chunks: np.ndarray, grid: np.ndarray, codec: Codec) -> np.ndarray:
    """Phase 2: scale each chunk by the grid and encode to uint8 codes."""
    return encode(chunks / grid, codec)


def dequantize_chunks(codes: np.ndarray, grid: np.ndarray, codec: Codec) -> np.ndarray:
    return (decode(codes, codec) * grid).astype(np.float32)


@dataclass(frozen=True)
class QuantizedShard:
    """One shard's codes plus its per-minishard scale grids.

    payload: uint8 (chunks, 8, 128); grids: float32 (m, 8, 128). On the
    wire the metadata (all grids, in minishard order) precedes the payload
    (microshards in order): receivers need scales before data arrives.
    """

    shard_index: int
    codec: Codec
    payload: np.ndarray
    grids: np.ndarray

    def __post_init__(self):
        if self.payload.dtype != np.uint8 or self.payload.shape[1:] != (CHUNK_ROWS, CHUNK_COLS):
            raise ValueError(f"bad payload shape/dtype: {self.payload.shape} {self.payload.dtype}")
        if self.grids.shape[1:] != (CHUNK_ROWS, CHUNK_COLS) or self.grids.dtype != np.float32:
            raise ValueError(f"bad grids shape/dtype: {self.grids.shape} {self.grids.dtype}")
        if self.payload.shape[0] % self.grids.shape[0]:
            raise ValueError("chunk count must divide evenly across minishard grids")

    @property
    def minishards(self) -> int:
        return self.grids.shape[0]

    @property
    def wire_bytes(self) -> int:
        return self.payload.size + self.grids.shape[0] * GRID_BYTES

    def to_bytes(self) -> bytes:
        return self.grids.astype("<f4").tobytes() + self.payload.tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes, codec: Codec, minishards: int, shard_index: int = 0):
        meta = minishards * GRID_BYTES
        if len(buf) < meta or (len(buf) - meta) % CHUNK_ELEMS:
            raise ValueError(f"buffer length {len(buf)} does not parse as {minishards} grids + chunks")
        grids = np.frombuffer(buf, dtype="<f4", count=minishards * CHUNK_ELEMS)
        grids = grids.astype(np.float32).reshape(minishards, CHUNK_ROWS, CHUNK_COLS)
        payload = np.frombuffer(buf, dtype=np.uint8, offset=meta)
        payload = payload.reshape(-1, CHUNK_ROWS, CHUNK_COLS).copy()
        return cls(shard_index, codec, payload, grids)


def quantize_shard(
    blocks: np.ndarray, codec: Codec, minishards: int = 1, shard_index: int = 0
) -> QuantizedShard:
    """Scan and encode a whole shard, one scale grid per minishard."""
    c = blocks.shape[0]
    if c % minishards:
        raise ValueError(f"{c} chunks do not split across {minishards} minishards")
    grouped = blocks.reshape(minishards, c // minishards, CHUNK_ROWS, CHUNK_COLS)
    grids = scales_from_absmax(np.max(np.abs(grouped), axis=1), codec)
    codes = encode(grouped / grids[:, None], codec)
    return QuantizedShard(shard_index, codec, codes.reshape(c, CHUNK_ROWS, CHUNK_COLS), grids)


def dequantize_shard(q: QuantizedShard) -> np.ndarray:
    """Restore float32 chunks: decode(code) * scale at every position."""
    c = q.payload.shape[0]
    grouped = decode(q.payload, q.codec).reshape(q.minishards, -1, CHUNK_ROWS, CHUNK_COLS)
    out = (grouped * q.grids[:, None]).astype(np.float32)
    return out.reshape(c, CHUNK_ROWS, CHUNK_COLS)
