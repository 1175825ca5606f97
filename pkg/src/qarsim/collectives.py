"""Value-level ring collectives: baseline, quantized, and naive low-precision.

AllReduce = reduce-scatter then all-gather on a ring of N devices. Two
reduce-scatter shapes are implemented:

  full loop  N-1 iterations; the partial for shard s starts at device s+1
             and visits every device once, ending at the owner s. Deployed
             as two counter-rotating rings, each carrying half of every
             shard (by minishard when quantized, by element midpoint when
             raw), which only permutes hop order functionally.
  semi loop  N even, N/2 iterations; shard s receives two arcs that meet
             at the owner: devices s-1 .. s-(N/2-1) chain clockwise (merged
             into the owner's local value first) and devices s+1 .. s+N/2
             chain counter-clockwise (merged last), a balanced adder tree
             with at most N/2 quantize/dequantize pairs on any path.

Inputs are rounded to BF16 on ingest (the wire format of the baseline).
Quantized hops carry codes plus scale grids; the receiver dequantizes to
FP32, adds its local shard, and re-quantizes for the next hop. Raw hops
carry BF16-rounded partials (round after every addition). The all-gather
quantizes each shard once at its source and every device, the source
included, decodes the same codes, so outputs are bit-identical across
devices. Final outputs are BF16-rounded.

The naive low-precision AllReduce is the overflow-prone strawman: inputs
are cast elementwise to the codec with no scaling, each hop decodes, adds
in FP32 and re-encodes (saturating), and the all-gather forwards codes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .layout import (
    CHUNK_COLS,
    CHUNK_ELEMS,
    CHUNK_ROWS,
    MissingShardError,
    PartitionSpec,
    TensorBuf,
)
from .numerics import Codec, decode, encode, round_to_bf16
from .quant import dequantize_shard, quantize_shard


class Variant(enum.Enum):
    FULL_LOOP = "full_loop"
    SEMI_LOOP = "semi_loop"


class SemiLoopOddNError(ValueError):
    """Semi-loop pairs the ring into two arcs and needs an even device count."""


@dataclass(frozen=True)
class CollectiveConfig:
    variant: Variant
    spec: PartitionSpec
    quantize_rs: bool = False
    quantize_ag: bool = False
    codec: Codec = Codec.INT8

    def __post_init__(self):
        if self.variant is Variant.SEMI_LOOP and self.spec.num_devices % 2:
            raise SemiLoopOddNError(
                f"semi-loop requires an even ring, got num_devices={self.spec.num_devices}"
            )


LocalFn = Callable[[int], np.ndarray]


def _ingest(inputs: Sequence[TensorBuf], spec: PartitionSpec) -> np.ndarray:
    """BF16-round every input and shard it: result[d, s] = device d's shard s."""
    n = spec.num_devices
    if len(inputs) != n:
        raise ValueError(f"expected {n} device inputs, got {len(inputs)}")
    rows, cols = inputs[0].rows, inputs[0].cols
    size = inputs[0].data.size
    spec.validate_element_count(size)
    per = spec.chunks_per_shard(size)
    out = np.empty((n, n, per, CHUNK_ROWS, CHUNK_COLS), dtype=np.float32)
    for d, t in enumerate(inputs):
        if (t.rows, t.cols) != (rows, cols):
            raise ValueError(f"device {d} input shape {(t.rows, t.cols)} != {(rows, cols)}")
        out[d] = round_to_bf16(t.data).reshape(n, per, CHUNK_ROWS, CHUNK_COLS)
    return out


def _ring_chain(s: int, n: int, step: int) -> list[int]:
    """Devices visited by shard s's partial, owner last. step +1 is CW, -1 CCW."""
    return [(s + step * k) % n for k in range(1, n)] + [s]


def _quant_arc(local: LocalFn, devices: list[int], codec: Codec, minishards: int):
    """Partial after the last arc device: quantize at the head, then Dq+add+Q per hop."""
    q = quantize_shard(local(devices[0]), codec, minishards)
    for dev in devices[1:]:
        q = quantize_shard(dequantize_shard(q) + local(dev), codec, minishards)
    return q


def _bf16_arc(local: LocalFn, devices: list[int]) -> np.ndarray:
    """Raw partial after the last arc device, rounded to BF16 after every add."""
    wire = local(devices[0])
    for dev in devices[1:]:
        wire = round_to_bf16(wire + local(dev))
    return wire


def _rs_full(ing: np.ndarray, cfg: CollectiveConfig) -> list[np.ndarray]:
    n = cfg.spec.num_devices
    per = ing.shape[2]
    m = cfg.spec.minishards_per_shard
    elems = per * CHUNK_ELEMS
    out = []
    for s in range(n):
        cw = _ring_chain(s, n, +1)
        ccw = _ring_chain(s, n, -1)
        if cfg.quantize_rs:
            # CW ring carries the first ceil(m/2) minishards, CCW the rest;
            # each direction keeps whole minishards so grids stay intact.
            h = (m + 1) // 2
            c_split = h * (per // m)
            parts = []
            if h:
                loc = lambda d, s=s, c=c_split: ing[d, s, :c]
                parts.append(dequantize_shard(_quant_arc(loc, cw[:-1], cfg.codec, h)) + loc(s))
            if m - h:
                loc = lambda d, s=s, c=c_split: ing[d, s, c:]
                parts.append(
                    dequantize_shard(_quant_arc(loc, ccw[:-1], cfg.codec, m - h)) + loc(s)
                )
            res = np.concatenate(parts, axis=0)
        else:
            mid = elems // 2
            lo = lambda d, s=s: ing[d, s].reshape(elems)[:mid]
            hi = lambda d, s=s: ing[d, s].reshape(elems)[mid:]
            half_lo = round_to_bf16(_bf16_arc(lo, cw[:-1]) + lo(s))
            half_hi = round_to_bf16(_bf16_arc(hi, ccw[:-1]) + hi(s))
            res = np.concatenate([half_lo, half_hi]).reshape(per, CHUNK_ROWS, CHUNK_COLS)
        out.append(res)
    return out


def _semi_arcs(s: int, n: int) -> tuple[list[int], list[int]]:
    half = n // 2
    arc_a = [(s - half + 1 + j) % n for j in range(half - 1)]  # chains CW into s
    arc_b = [(s + half - j) % n for j in range(half)]  # chains CCW into s
    return arc_a, arc_b


def _rs_semi(ing: np.ndarray, cfg: CollectiveConfig) -> list[np.ndarray]:
    n = cfg.spec.num_devices
    m = cfg.spec.minishards_per_shard
    out = []
    for s in range(n):
        arc_a, arc_b = _semi_arcs(s, n)
        loc = lambda d, s=s: ing[d, s]
        if cfg.quantize_rs:
            acc = loc(s)
            if arc_a:
                acc = dequantize_shard(_quant_arc(loc, arc_a, cfg.codec, m)) + acc
            res = dequantize_shard(_quant_arc(loc, arc_b, cfg.codec, m)) + acc
        else:
            acc = loc(s)
            if arc_a:
                acc = round_to_bf16(acc + _bf16_arc(loc, arc_a))
            res = round_to_bf16(acc + _bf16_arc(loc, arc_b))
        out.append(res)
    return out


def reduce_scatter_full_loop(inputs: Sequence[TensorBuf], cfg: CollectiveConfig):
    """Device d ends up holding shard d of the elementwise sum (float32 blocks)."""
    if cfg.variant is not Variant.FULL_LOOP:
        raise ValueError(f"config variant is {cfg.variant}, expected FULL_LOOP")
    return _rs_full(_ingest(inputs, cfg.spec), cfg)


def reduce_scatter_semi_loop(inputs: Sequence[TensorBuf], cfg: CollectiveConfig):
    """Same result target as full-loop via two arcs per shard meeting at the owner."""
    if cfg.variant is not Variant.SEMI_LOOP:
        raise ValueError(f"config variant is {cfg.variant}, expected SEMI_LOOP")
    return _rs_semi(_ingest(inputs, cfg.spec), cfg)


def all_gather(
    shards: Sequence[np.ndarray],
    quantize: bool,
    codec: Codec,
    spec: PartitionSpec,
    rows: int,
    cols: int,
) -> list[TensorBuf]:
    """Broadcast shard s from device s to everyone; outputs are BF16-rounded.

    With quantize set each shard is encoded once at its source and forwarded
    unchanged, so every device (the source included) decodes identical codes.
    All returned TensorBufs share one read-only buffer; outputs are
    bit-identical across devices by construction.
    """
    n = spec.num_devices
    if len(shards) != n or any(b is None for b in shards):
        raise MissingShardError(f"need shard results from all {n} devices")
    gathered = []
    for s in range(n):
        if quantize:
            q = quantize_shard(shards[s], codec, spec.minishards_per_shard, shard_index=s)
            gathered.append(round_to_bf16(dequantize_shard(q)).reshape(-1))
        else:
            gathered.append(round_to_bf16(shards[s]).reshape(-1))
    flat = np.concatenate(gathered)
    flat.setflags(write=False)
    return [TensorBuf(flat, rows, cols) for _ in range(n)]


def all_reduce(inputs: Sequence[TensorBuf], cfg: CollectiveConfig) -> list[TensorBuf]:
    """Reduce-scatter (per cfg.variant) then all-gather, each optionally quantized."""
    ing = _ingest(inputs, cfg.spec)
    rs = _rs_semi(ing, cfg) if cfg.variant is Variant.SEMI_LOOP else _rs_full(ing, cfg)
    return all_gather(rs, cfg.quantize_ag, cfg.codec, cfg.spec, inputs[0].rows, inputs[0].cols)


def baseline_allreduce_bf16(inputs: Sequence[TensorBuf], spec: PartitionSpec):
    """Full-loop AllReduce with no quantization: the MSE reference."""
    return all_reduce(inputs, CollectiveConfig(Variant.FULL_LOOP, spec))


def naive_lowp_allreduce(inputs: Sequence[TensorBuf], codec: Codec, spec: PartitionSpec):
    """Cast-without-scaling strawman: saturating adds in the codec's range."""
    ing = _ingest(inputs, spec)
    n = spec.num_devices
    per = ing.shape[2]
    elems = per * CHUNK_ELEMS
    codes = np.empty(ing.shape, dtype=np.uint8)
    for d in range(n):
        codes[d] = encode(ing[d], codec)
    out_shards = []
    for s in range(n):
        mid = elems // 2
        halves = []
        for step, sl in ((+1, slice(0, mid)), (-1, slice(mid, elems))):
            chain = _ring_chain(s, n, step)
            loc = lambda d, s=s, sl=sl: codes[d, s].reshape(elems)[sl]
            cur = loc(chain[0])
            for dev in chain[1:]:
                cur = encode(decode(cur, codec) + decode(loc(dev), codec), codec)
            halves.append(cur)
        out_shards.append(round_to_bf16(decode(np.concatenate(halves), codec)))
    flat = np.concatenate(out_shards)
    flat.setflags(write=False)
    rows, cols = inputs[0].rows, inputs[0].cols
    return [TensorBuf(flat, rows, cols) for _ in range(n)]
