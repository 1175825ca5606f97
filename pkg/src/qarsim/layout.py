"""Tensor partitioning: device shards, minishards, microshards, 8x128 chunks.

A tensor is linearized row-major and cut into N contiguous equal shards
(shard i lives on device i). Each shard is a run of 8x128 chunks, grouped
into m minishards (the quantization-block granularity: one scale grid per
minishard, so one scale covers position (i, j) of every chunk in it) and
each minishard into u microshards (the pipelining granularity). Shapes
that do not divide evenly are rejected, never padded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHUNK_ROWS = 8
CHUNK_COLS = 128
CHUNK_ELEMS = CHUNK_ROWS * CHUNK_COLS


class DivisibilityError(ValueError):
    """Element count does not divide across chunks/devices/minishards/microshards."""


class MissingShardError(ValueError):
    """Reassembly input does not cover every shard index exactly once."""


class ShapeMismatchError(ValueError):
    """Reassembly target shape disagrees with the supplied shard data."""


@dataclass(frozen=True)
class PartitionSpec:
    num_devices: int
    minishards_per_shard: int = 1
    microshards_per_minishard: int = 1

    def __post_init__(self):
        if self.num_devices < 2:
            raise ValueError(f"num_devices must be >= 2, got {self.num_devices}")
        if self.minishards_per_shard < 1 or self.microshards_per_minishard < 1:
            raise ValueError("minishard/microshard counts must be >= 1")

    def validate_element_count(self, n: int) -> None:
        """Raise DivisibilityError naming the first factor that fails to divide."""
        if n <= 0 or n % CHUNK_ELEMS:
            raise DivisibilityError(
                f"element count {n} is not a multiple of the {CHUNK_ROWS}x{CHUNK_COLS} "
                f"chunk size ({CHUNK_ELEMS})"
            )
        chunks = n // CHUNK_ELEMS
        if chunks % self.num_devices:
            raise DivisibilityError(
                f"{chunks} chunks do not split across num_devices={self.num_devices}"
            )
        per_shard = chunks // self.num_devices
        if per_shard % self.minishards_per_shard:
            raise DivisibilityError(
                f"{per_shard} chunks per shard do not split across "
                f"minishards_per_shard={self.minishards_per_shard}"
            )
        per_mini = per_shard // self.minishards_per_shard
        if per_mini % self.microshards_per_minishard:
            raise DivisibilityError(
                f"{per_mini} chunks per minishard do not split across "
                f"microshards_per_minishard={self.microshards_per_minishard}"
            )

    def chunks_per_shard(self, n: int) -> int:
        return n // CHUNK_ELEMS // self.num_devices

    def chunks_per_minishard(self, n: int) -> int:
        return self.chunks_per_shard(n) // self.minishards_per_shard


@dataclass(frozen=True)
class TensorBuf:
    """Flat float32 buffer with a nominal (rows, cols) shape."""

    data: np.ndarray
    rows: int
    cols: int

    def __post_init__(self):
        if self.data.ndim != 1 or self.data.dtype != np.float32:
            raise ValueError("TensorBuf.data must be a flat float32 array")
        if self.data.size != self.rows * self.cols:
            raise ShapeMismatchError(
                f"data length {self.data.size} != rows*cols = {self.rows * self.cols}"
            )


@dataclass(frozen=True)
class ShardView:
    """One device's contiguous slice of the tensor, as (chunks, 8, 128)."""

    shard_index: int
    chunks: np.ndarray
    spec: PartitionSpec

    def __post_init__(self):
        c = self.chunks
        if c.ndim != 3 or c.shape[1:] != (CHUNK_ROWS, CHUNK_COLS):
            raise ValueError(f"chunks must be (c, {CHUNK_ROWS}, {CHUNK_COLS}), got {c.shape}")
        if c.shape[0] % self.spec.minishards_per_shard:
            raise DivisibilityError(
                f"{c.shape[0]} chunks do not split across "
                f"{self.spec.minishards_per_shard} minishards"
            )

    @property
    def chunk_count(self) -> int:
        return self.chunks.shape[0]

    @property
    def chunks_per_minishard(self) -> int:
        return self.chunk_count // self.spec.minishards_per_shard

    @property
    def block_size(self) -> int:
        # Elements sharing one scale factor = one per chunk of the minishard.
        return self.chunks_per_minishard

    @property
    def element_count(self) -> int:
        return self.chunk_count * CHUNK_ELEMS

    def minishard(self, g: int) -> np.ndarray:
        per = self.chunks_per_minishard
        return self.chunks[g * per : (g + 1) * per]

    def microshard(self, g: int, j: int) -> np.ndarray:
        per = self.chunks_per_minishard // self.spec.microshards_per_minishard
        base = g * self.chunks_per_minishard
        return self.chunks[base + j * per : base + (j + 1) * per]


def partition(t: TensorBuf, spec: PartitionSpec) -> list[ShardView]:
    """Split a tensor into N ShardViews; concatenation in index order is the identity."""
    spec.validate_element_count(t.data.size)
    per_shard = spec.chunks_per_shard(t.data.size)
    blocks = t.data.reshape(spec.num_devices, per_shard, CHUNK_ROWS, CHUNK_COLS)
    return [ShardView(i, blocks[i], spec) for i in range(spec.num_devices)]


def reassemble(shards: list[ShardView], rows: int, cols: int) -> TensorBuf:
    """Inverse of partition; insensitive to input order (keyed by shard_index)."""
    if not shards:
        raise MissingShardError("no shards supplied")
    n = shards[0].spec.num_devices
    by_index = {s.shard_index: s for s in shards}
    missing = sorted(set(range(n)) - set(by_index))
    if missing or len(shards) != n:
        raise MissingShardError(f"expected shard indices 0..{n - 1}, missing {missing}")
    total = sum(s.element_count for s in by_index.values())
    if total != rows * cols:
        raise ShapeMismatchError(f"{total} elements cannot fill a {rows}x{cols} tensor")
    flat = np.concatenate([by_index[i].chunks.reshape(-1) for i in range(n)])
    return TensorBuf(flat, rows, cols)
