"""Block-wise quantized ring AllReduce: functional reference and simulator."""

from .analysis import (
    FLAVORS,
    FlavorResult,
    SweepPoint,
    auto_minishards,
    device_inputs,
    mse,
    size_sweep,
    tradeoff_study,
)
from .collectives import (
    CollectiveConfig,
    SemiLoopOddNError,
    Variant,
    all_gather,
    all_reduce,
    baseline_allreduce_bf16,
    naive_lowp_allreduce,
    reduce_scatter_full_loop,
    reduce_scatter_semi_loop,
)
from .layout import (
    CHUNK_COLS,
    CHUNK_ELEMS,
    CHUNK_ROWS,
    DivisibilityError,
    MissingShardError,
    PartitionSpec,
    ShapeMismatchError,
    ShardView,
    TensorBuf,
    partition,
    reassemble,
)
from .numerics import BF16_MAX, Codec, decode, encode, round_to_bf16
from .quant import (
    GRID_BYTES,
    QuantizedShard,
    absmax_grid,
    apply_scale_grid,
    dequantize_chunks,
    dequantize_shard,
    quantize_shard,
    scales_from_absmax,
    scan_scale_grid,
)
from .simnet import (
    ComputeParams,
    LinkParams,
    Timeline,
    TimelineEvent,
    idle_time,
    lower_bound,
    predict_speedup,
    simulate,
    simulate_ideal_2to1,
    simulate_naive,
)

__version__ = "0.1.0"
