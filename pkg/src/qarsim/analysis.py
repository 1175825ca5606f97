"""Experiment harnesses: error/speedup trade-off studies and size sweeps.

Per-device inputs are standard normal, generated by numpy's PCG64
(np.random.default_rng) with seed = base_seed + device_index, so every
reported number is exactly reproducible from (seed, shape, N, flavor).
MSE against the BF16 baseline accumulates in float64.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .collectives import (
    CollectiveConfig,
    Variant,
    all_reduce,
    baseline_allreduce_bf16,
    naive_lowp_allreduce,
)
from .layout import CHUNK_ELEMS, PartitionSpec, ShapeMismatchError, TensorBuf
from .numerics import Codec
from .presets import DEFAULT_PRESET, load_preset
from .simnet import ComputeParams, LinkParams, simulate, simulate_naive

FLAVORS = (
    "baseline",
    "naive",
    "full_rs",
    "full_ag",
    "full_both",
    "semi_rs",
    "semi_ag",
    "semi_both",
)

# flavor -> (variant, quantize_rs, quantize_ag, stages tag)
_FLAVOR_DEFS = {
    "full_rs": (Variant.FULL_LOOP, True, False, "rs"),
    "full_ag": (Variant.FULL_LOOP, False, True, "ag"),
    "full_both": (Variant.FULL_LOOP, True, True, "both"),
    "semi_rs": (Variant.SEMI_LOOP, True, False, "rs"),
    "semi_ag": (Variant.SEMI_LOOP, False, True, "ag"),
    "semi_both": (Variant.SEMI_LOOP, True, True, "both"),
}

CSV_COLUMNS = (
    "flavor",
    "variant",
    "stages",
    "codec",
    "N",
    "rows",
    "cols",
    "m",
    "u",
    "seed",
    "mse",
    "predicted_speedup",
)

SWEEP_COLUMNS = ("size_bytes", "flavor_time_s", "baseline_time_s", "ratio")


def mse(a, b) -> float:
    """Mean squared elementwise difference, accumulated in float64."""
    da = a.data if isinstance(a, TensorBuf) else np.asarray(a)
    db = b.data if isinstance(b, TensorBuf) else np.asarray(b)
    if da.shape != db.shape:
        raise ShapeMismatchError(f"shapes {da.shape} and {db.shape} differ")
    diff = da.astype(np.float64) - db.astype(np.float64)
    return float(np.mean(diff * diff))


def device_inputs(rows: int, cols: int, num_devices: int, seed: int) -> list[TensorBuf]:
    """Standard-normal float32 tensors; device d draws from PCG64(seed + d)."""
    out = []
    for d in range(num_devices):
        rng = np.random.default_rng(seed + d)
        out.append(TensorBuf(rng.standard_normal(rows * cols, dtype=np.float32), rows, cols))
    return out


def auto_minishards(total_elems: int, num_devices: int) -> int:
    """Largest minishard count that keeps blocks at ~64 chunks per scale grid."""
    per_shard = total_elems // CHUNK_ELEMS // num_devices
    return math.gcd(per_shard, max(1, per_shard // 64))


@dataclass(frozen=True)
class FlavorResult:
    flavor: str
    variant: str
    stages: str
    codec: str
    num_devices: int
    rows: int
    cols: int
    minishards: int
    microshards: int
    seed: int
    mse: float
    predicted_speedup: float

    def to_row(self) -> dict:
        return {
            "flavor": self.flavor,
            "variant": self.variant,
            "stages": self.stages,
            "codec": self.codec,
            "N": self.num_devices,
            "rows": self.rows,
            "cols": self.cols,
            "m": self.minishards,
            "u": self.microshards,
            "seed": self.seed,
            "mse": self.mse,
            "predicted_speedup": self.predicted_speedup,
        }


def tradeoff_study(
    rows: int,
    cols: int,
    num_devices: int = 8,
    codec: Codec = Codec.INT8,
    seed: int = 0,
    minishards: int | None = None,
    microshards: int = 2,
    preset: str = DEFAULT_PRESET,
    link: LinkParams | None = None,
    compute: ComputeParams | None = None,
) -> list[FlavorResult]:
    """Run all 8 flavors on identical inputs; MSE vs baseline plus predicted speedup."""
    if link is None or compute is None:
        p_link, p_compute = load_preset(preset)
        link = link or p_link
        compute = compute or p_compute
    m = minishards if minishards is not None else auto_minishards(rows * cols, num_devices)
    spec = PartitionSpec(num_devices, m, microshards)
    inputs = device_inputs(rows, cols, num_devices, seed)
    tensor_bytes = rows * cols * 2

    base_out = baseline_allreduce_bf16(inputs, spec)[0]
    base_cfg = CollectiveConfig(Variant.FULL_LOOP, spec)
    t_base = simulate(base_cfg, tensor_bytes, link, compute).total_time

    def result(flavor, variant, stages, codec_name, err, t_flavor):
        return FlavorResult(
            flavor, variant.value, stages, codec_name, num_devices, rows, cols,
            m, microshards, seed, err, t_base / t_flavor,
        )

    out = [result("baseline", Variant.FULL_LOOP, "none", "bf16", 0.0, t_base)]

    naive_out = naive_lowp_allreduce(inputs, Codec.F8E5M2, spec)[0]
    t_naive = simulate_naive(spec, tensor_bytes, link, compute).total_time
    out.append(
        result("naive", Variant.FULL_LOOP, "cast", Codec.F8E5M2.value, mse(base_out, naive_out), t_naive)
    )

    for flavor in FLAVORS[2:]:
        variant, q_rs, q_ag, stages = _FLAVOR_DEFS[flavor]
        cfg = CollectiveConfig(variant, spec, quantize_rs=q_rs, quantize_ag=q_ag, codec=codec)
        flavor_out = all_reduce(inputs, cfg)[0]
        t_flavor = simulate(cfg, tensor_bytes, link, compute).total_time
        out.append(result(flavor, variant, stages, codec.value, mse(base_out, flavor_out), t_flavor))
    return out


@dataclass(frozen=True)
class SweepPoint:
    size_bytes: int
    flavor_time_s: float
    baseline_time_s: float
    ratio: float

    def to_row(self) -> dict:
        return {
            "size_bytes": self.size_bytes,
            "flavor_time_s": self.flavor_time_s,
            "baseline_time_s": self.baseline_time_s,
            "ratio": self.ratio,
        }


def size_sweep(
    sizes: list[int],
    variant: Variant = Variant.FULL_LOOP,
    codec: Codec = Codec.INT8,
    num_devices: int = 8,
    quantize_rs: bool = True,
    quantize_ag: bool = True,
    minishards: int | None = None,
    microshards: int = 2,
    preset: str = DEFAULT_PRESET,
    link: LinkParams | None = None,
    compute: ComputeParams | None = None,
) -> list[SweepPoint]:
    """Predicted flavor-vs-baseline time ratio per tensor size (BF16 bytes).

    With minishards unset each size picks its own block-preserving count, the
    same rule tradeoff_study uses.
    """
    if link is None or compute is None:
        p_link, p_compute = load_preset(preset)
        link = link or p_link
        compute = compute or p_compute
    out = []
    for size in sizes:
        elems = size // 2
        m = minishards if minishards is not None else auto_minishards(elems, num_devices)
        spec = PartitionSpec(num_devices, m, microshards)
        cfg = CollectiveConfig(variant, spec, quantize_rs=quantize_rs,
                               quantize_ag=quantize_ag, codec=codec)
        t_base = simulate(CollectiveConfig(Variant.FULL_LOOP, spec), size, link, compute).total_time
        t_flavor = simulate(cfg, size, link, compute).total_time
        out.append(SweepPoint(size, t_flavor, t_base, t_flavor / t_base))
    return out


def render_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def render_json(rows: list[dict]) -> str:
    return json.dumps(rows, indent=2) + "\n"
