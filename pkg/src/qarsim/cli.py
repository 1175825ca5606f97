"""Command-line front end.

One JSON config document drives every subcommand; individual flags override
config-file fields, which override the named preset. Unknown keys anywhere in
the config are rejected rather than ignored.

Exit codes: 0 success, 2 config/validation problems (bad JSON, unknown or
ill-typed fields, bad enum values), 3 domain errors from the collective
itself (divisibility, odd-N semi loop, missing or mismatched shards).
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

from .analysis import (
    CSV_COLUMNS,
    SWEEP_COLUMNS,
    auto_minishards,
    device_inputs,
    mse,
    render_csv,
    render_json,
    size_sweep,
    tradeoff_study,
)
from .collectives import (
    CollectiveConfig,
    SemiLoopOddNError,
    Variant,
    all_reduce,
    baseline_allreduce_bf16,
    naive_lowp_allreduce,
)
from .layout import (
    DivisibilityError,
    MissingShardError,
    PartitionSpec,
    ShapeMismatchError,
)
from .numerics import Codec
from .presets import DEFAULT_PRESET, available_presets, load_preset
from .simnet import (
    ComputeParams,
    LinkParams,
    idle_time,
    lower_bound,
    simulate,
    simulate_naive,
)

MIB = 1 << 20

TIMELINE_COLUMNS = ("device", "resource", "start_s", "end_s", "label")


class ConfigError(ValueError):
    """Raised for malformed, unknown, or ill-typed configuration."""


@dataclass
class RunConfig:
    variant: str = "full_loop"
    quantize_rs: bool = True
    quantize_ag: bool = True
    codec: str = "int8"
    naive: bool = False
    num_devices: int = 8
    rows: int = 4096
    cols: int = 4096
    minishards_per_shard: int | None = None
    microshards_per_minishard: int = 2
    seed: int = 0
    preset: str = DEFAULT_PRESET
    link: dict = field(default_factory=dict)
    compute: dict = field(default_factory=dict)
    sizes: list = field(default_factory=lambda: [MIB << i for i in range(9)])
    output: str | None = None
    format: str | None = None  # per-command default: JSONL for timeline, CSV otherwise
    timestamp: bool = False


_LINK_FIELDS = {f.name for f in dataclasses.fields(LinkParams)}
_COMPUTE_FIELDS = {f.name for f in dataclasses.fields(ComputeParams)}
_CONFIG_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}

_VARIANTS = {v.value for v in Variant}
_CODECS = {c.value for c in Codec}
_FORMATS = {"csv", "json"}


def parse_size(token) -> int:
    """Byte count from an int or a string like '4MiB', '512KiB', '1GiB'."""
    if isinstance(token, bool):
        raise ConfigError(f"bad size value {token!r}")
    if isinstance(token, int):
        return token
    text = str(token).strip()
    mult = 1
    for suffix, m in (("KiB", 1 << 10), ("MiB", 1 << 20), ("GiB", 1 << 30)):
        if text.endswith(suffix):
            text, mult = text[: -len(suffix)], m
            break
    try:
        return int(text) * mult
    except ValueError:
        raise ConfigError(f"bad size value {token!r}") from None


def _check_type(name, value, kinds):
    if isinstance(value, bool) and bool not in kinds:
        raise ConfigError(f"field '{name}' has wrong type {type(value).__name__}")
    if not isinstance(value, tuple(kinds)):
        raise ConfigError(f"field '{name}' has wrong type {type(value).__name__}")


def _validate(cfg: RunConfig) -> RunConfig:
    if cfg.variant not in _VARIANTS:
        raise ConfigError(f"field 'variant' must be one of {sorted(_VARIANTS)}, got {cfg.variant!r}")
    if cfg.codec not in _CODECS:
        raise ConfigError(f"field 'codec' must be one of {sorted(_CODECS)}, got {cfg.codec!r}")
    if cfg.format is not None and cfg.format not in _FORMATS:
        raise ConfigError(f"field 'format' must be one of {sorted(_FORMATS)}, got {cfg.format!r}")
    if cfg.preset not in available_presets():
        raise ConfigError(f"field 'preset' must be one of {available_presets()}, got {cfg.preset!r}")
    for name in ("quantize_rs", "quantize_ag", "naive", "timestamp"):
        _check_type(name, getattr(cfg, name), (bool,))
    for name in ("num_devices", "rows", "cols", "microshards_per_minishard", "seed"):
        _check_type(name, getattr(cfg, name), (int,))
    if cfg.minishards_per_shard is not None:
        _check_type("minishards_per_shard", cfg.minishards_per_shard, (int,))
    for name in ("num_devices", "rows", "cols", "microshards_per_minishard"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"field '{name}' must be positive, got {getattr(cfg, name)}")
    for scope, given, known in (("link", cfg.link, _LINK_FIELDS), ("compute", cfg.compute, _COMPUTE_FIELDS)):
        _check_type(scope, given, (dict,))
        for key, val in given.items():
            if key not in known:
                raise ConfigError(f"unknown {scope} field '{key}'")
            if key == "fuse_recv_pass":
                _check_type(f"{scope}.{key}", val, (bool,))
            else:
                _check_type(f"{scope}.{key}", val, (int, float))
    _check_type("sizes", cfg.sizes, (list,))
    cfg.sizes = [parse_size(s) for s in cfg.sizes]
    return cfg


def load_config_file(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config JSON parse error at line {e.lineno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    for key in doc:
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"unknown config field '{key}'")
    return doc


# CLI flag dest -> (config field, converter). Booleans use BooleanOptionalAction.
_FLAG_FIELDS = {
    "variant": "variant",
    "codec": "codec",
    "quantize_rs": "quantize_rs",
    "quantize_ag": "quantize_ag",
    "naive": "naive",
    "num_devices": "num_devices",
    "rows": "rows",
    "cols": "cols",
    "minishards": "minishards_per_shard",
    "microshards": "microshards_per_minishard",
    "seed": "seed",
    "preset": "preset",
    "output": "output",
    "format": "format",
    "timestamp": "timestamp",
}
_LINK_FLAGS = {"bandwidth": "bandwidth_bytes_per_s", "hop_latency": "hop_latency_s"}
_COMPUTE_FLAGS = {
    "dequant_rate": "dequant_rate",
    "add_rate": "add_rate",
    "scan_rate": "scan_rate",
    "encode_rate": "encode_rate",
    "cast_rate": "cast_rate",
    "fuse_recv_pass": "fuse_recv_pass",
}


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        for key, val in load_config_file(args.config).items():
            setattr(cfg, key, val)
    for dest, name in _FLAG_FIELDS.items():
        val = getattr(args, dest, None)
        if val is not None:
            setattr(cfg, name, val)
    for dest, name in _LINK_FLAGS.items():
        val = getattr(args, dest, None)
        if val is not None:
            cfg.link = dict(cfg.link)
            cfg.link[name] = val
    for dest, name in _COMPUTE_FLAGS.items():
        val = getattr(args, dest, None)
        if val is not None:
            cfg.compute = dict(cfg.compute)
            cfg.compute[name] = val
    if getattr(args, "sizes", None) is not None:
        cfg.sizes = [tok.strip() for tok in args.sizes.split(",") if tok.strip()]
    return _validate(cfg)


def resolve_params(cfg: RunConfig) -> tuple[LinkParams, ComputeParams]:
    link, compute = load_preset(cfg.preset)
    if cfg.link:
        link = dataclasses.replace(link, **cfg.link)
    if cfg.compute:
        compute = dataclasses.replace(compute, **cfg.compute)
    return link, compute


def _partition_spec(cfg: RunConfig) -> PartitionSpec:
    m = cfg.minishards_per_shard
    if m is None:
        m = auto_minishards(cfg.rows * cfg.cols, cfg.num_devices)
    return PartitionSpec(cfg.num_devices, m, cfg.microshards_per_minishard)


def _stages_tag(cfg: RunConfig) -> str:
    if cfg.naive:
        return "cast"
    return {(False, False): "none", (True, False): "rs",
            (False, True): "ag", (True, True): "both"}[(cfg.quantize_rs, cfg.quantize_ag)]


def _stamp(rows: list[dict], cfg: RunConfig) -> list[dict]:
    if cfg.timestamp:
        now = time.time()
        rows = [dict(r, timestamp=now) for r in rows]
    return rows


def _render(rows: list[dict], columns, cfg: RunConfig) -> str:
    rows = _stamp(rows, cfg)
    if cfg.timestamp:
        columns = tuple(columns) + ("timestamp",)
    if cfg.format == "json":
        return render_json(rows)
    return render_csv(rows, columns)


def cmd_simulate(cfg: RunConfig) -> str:
    link, compute = resolve_params(cfg)
    spec = _partition_spec(cfg)
    inputs = device_inputs(cfg.rows, cfg.cols, cfg.num_devices, cfg.seed)
    tensor_bytes = cfg.rows * cfg.cols * 2
    base_out = baseline_allreduce_bf16(inputs, spec)[0]
    if cfg.naive:
        out = naive_lowp_allreduce(inputs, Codec(cfg.codec), spec)[0]
        tl = simulate_naive(spec, tensor_bytes, link, compute)
    else:
        ccfg = CollectiveConfig(Variant(cfg.variant), spec, quantize_rs=cfg.quantize_rs,
                                quantize_ag=cfg.quantize_ag, codec=Codec(cfg.codec))
        out = all_reduce(inputs, ccfg)[0]
        tl = simulate(ccfg, tensor_bytes, link, compute)
    row = {
        "variant": cfg.variant,
        "stages": _stages_tag(cfg),
        "codec": cfg.codec,
        "N": cfg.num_devices,
        "rows": cfg.rows,
        "cols": cfg.cols,
        "m": spec.minishards_per_shard,
        "u": spec.microshards_per_minishard,
        "seed": cfg.seed,
        "mse": mse(base_out, out),
        "total_time_s": tl.total_time,
        "idle_time_s": idle_time(tl),
    }
    return _render([row], tuple(row), cfg)


def cmd_tradeoff(cfg: RunConfig) -> str:
    link, compute = resolve_params(cfg)
    results = tradeoff_study(
        cfg.rows, cfg.cols, cfg.num_devices, codec=Codec(cfg.codec), seed=cfg.seed,
        minishards=cfg.minishards_per_shard, microshards=cfg.microshards_per_minishard,
        link=link, compute=compute,
    )
    return _render([r.to_row() for r in results], CSV_COLUMNS, cfg)


def cmd_sweep(cfg: RunConfig) -> str:
    link, compute = resolve_params(cfg)
    points = size_sweep(
        cfg.sizes, variant=Variant(cfg.variant), codec=Codec(cfg.codec),
        num_devices=cfg.num_devices, quantize_rs=cfg.quantize_rs, quantize_ag=cfg.quantize_ag,
        minishards=cfg.minishards_per_shard, microshards=cfg.microshards_per_minishard,
        link=link, compute=compute,
    )
    return _render([p.to_row() for p in points], SWEEP_COLUMNS, cfg)


def cmd_timeline(cfg: RunConfig) -> str:
    link, compute = resolve_params(cfg)
    spec = _partition_spec(cfg)
    tensor_bytes = cfg.rows * cfg.cols * 2
    if cfg.naive:
        tl = simulate_naive(spec, tensor_bytes, link, compute)
    else:
        ccfg = CollectiveConfig(Variant(cfg.variant), spec, quantize_rs=cfg.quantize_rs,
                                quantize_ag=cfg.quantize_ag, codec=Codec(cfg.codec))
        tl = simulate(ccfg, tensor_bytes, link, compute)
    if cfg.format == "csv":
        rows = [dataclasses.asdict(e) for e in tl.events]
        return _render(rows, TIMELINE_COLUMNS, cfg)
    return tl.to_jsonl()


def cmd_bounds(cfg: RunConfig) -> str:
    link, _ = resolve_params(cfg)
    d_bytes = cfg.rows * cfg.cols * 2
    row = {
        "N": cfg.num_devices,
        "tensor_bytes": d_bytes,
        "bandwidth_bytes_per_s": link.bandwidth_bytes_per_s,
        "full_loop_bound_s": lower_bound(Variant.FULL_LOOP, cfg.num_devices,
                                         d_bytes, link.bandwidth_bytes_per_s),
        "semi_loop_bound_s": lower_bound(Variant.SEMI_LOOP, cfg.num_devices,
                                         d_bytes, link.bandwidth_bytes_per_s),
    }
    return _render([row], tuple(row), cfg)


COMMANDS = {
    "simulate": cmd_simulate,
    "tradeoff": cmd_tradeoff,
    "sweep": cmd_sweep,
    "timeline": cmd_timeline,
    "bounds": cmd_bounds,
}


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a JSON config document")
    common.add_argument("--seed", type=int)
    common.add_argument("--preset")
    common.add_argument("--output", help="result file path (default: stdout)")
    common.add_argument("--format", choices=sorted(_FORMATS))
    common.add_argument("--timestamp", action=argparse.BooleanOptionalAction)
    common.add_argument("--variant", choices=sorted(_VARIANTS))
    common.add_argument("--codec", choices=sorted(_CODECS))
    common.add_argument("--quantize-rs", action=argparse.BooleanOptionalAction)
    common.add_argument("--quantize-ag", action=argparse.BooleanOptionalAction)
    common.add_argument("--naive", action=argparse.BooleanOptionalAction)
    common.add_argument("--num-devices", type=int)
    common.add_argument("--rows", type=int)
    common.add_argument("--cols", type=int)
    common.add_argument("--minishards", type=int)
    common.add_argument("--microshards", type=int)
    common.add_argument("--bandwidth", type=float)
    common.add_argument("--hop-latency", type=float)
    common.add_argument("--dequant-rate", type=float)
    common.add_argument("--add-rate", type=float)
    common.add_argument("--scan-rate", type=float)
    common.add_argument("--encode-rate", type=float)
    common.add_argument("--cast-rate", type=float)
    common.add_argument("--fuse-recv-pass", action=argparse.BooleanOptionalAction)
    common.add_argument("--sizes", help="comma list of sizes for sweep, e.g. '1MiB,4MiB,64MiB'")

    parser = argparse.ArgumentParser(
        prog="qarsim",
        description="Quantized ring AllReduce: functional reference plus performance simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common],
                   help="one flavor end to end: MSE vs baseline, total and idle time")
    sub.add_parser("tradeoff", parents=[common],
                   help="all flavors on identical inputs: MSE and predicted speedup")
    sub.add_parser("sweep", parents=[common],
                   help="flavor-vs-baseline time ratio across tensor sizes")
    sub.add_parser("timeline", parents=[common],
                   help="per-event schedule of one simulated run (JSONL by default)")
    sub.add_parser("bounds", parents=[common],
                   help="bandwidth lower bounds for both ring variants")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        cfg = build_config(args)
        if cfg.format is None:
            cfg.format = "json" if args.command == "timeline" else "csv"
        text = COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (DivisibilityError, SemiLoopOddNError, MissingShardError, ShapeMismatchError) as e:
        print(f"{type(e).__name__}: {e}", file=sys.stderr)
        return 3
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        print(text, end="")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
