"""Deterministic cost-model simulator for the ring collectives.

Each device owns three serial resources: its clockwise link, its
counter-clockwise link, and a vector unit (VPU) that executes dequantize /
add / abs-max scan / scale-encode passes at configured element rates. The
schedule is a static task DAG walked in one canonical order: a task starts
at max(resource free time, dependency completion times); a transfer of b
bytes occupies the sender's link for b / bandwidth seconds and becomes
visible to the receiver one hop latency later. Identical inputs therefore
produce bit-identical timelines, and total time is non-increasing in
bandwidth and in every compute rate (a fixed order can never invert).

Dependency rules mirror the functional collectives: a microshard's
dequantize waits for its payload bytes and for its minishard's metadata;
add follows dequantize; the scale-encode of any microshard in a minishard
waits for the abs-max scans of all u microshards of that minishard; each
iteration's metadata is enqueued on the link before its payloads; the next
iteration's send waits for the receive pass that produced its data.
Send-side encode of one microshard overlaps the link transfer of the
previous one (software pipelining), and raw (unquantized) hops carry
BF16 shards with no compute except the add.

Tensor sizes are given in bytes of the BF16 tensor, so element count is
bytes / 2; quantized payloads put 1 byte per element on the wire plus
4 KiB of float32 scales per minishard grid per hop.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import zip_longest

from .collectives import CollectiveConfig, Variant
from .layout import DivisibilityError, PartitionSpec
from .quant import GRID_BYTES

RES_LINK_CW = "LINK_CW"
RES_LINK_CCW = "LINK_CCW"
RES_VPU = "VPU"

_LINK_OF = {"cw": RES_LINK_CW, "ccw": RES_LINK_CCW}
_STEP_OF = {"cw": +1, "ccw": -1}


@dataclass(frozen=True)
class LinkParams:
    bandwidth_bytes_per_s: float
    hop_latency_s: float = 0.0

    def __post_init__(self):
        if self.bandwidth_bytes_per_s <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.hop_latency_s < 0:
            raise ValueError("hop latency must be >= 0")


@dataclass(frozen=True)
class ComputeParams:
    dequant_rate: float
    add_rate: float
    scan_rate: float
    encode_rate: float
    cast_rate: float
    fuse_recv_pass: bool = False

    def __post_init__(self):
        for name in ("dequant_rate", "add_rate", "scan_rate", "encode_rate", "cast_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


@dataclass(frozen=True)
class TimelineEvent:
    device: int
    resource: str
    start_s: float
    end_s: float
    label: str


@dataclass
class Timeline:
    events: list[TimelineEvent] = field(default_factory=list)

    @property
    def total_time(self) -> float:
        return max((e.end_s for e in self.events), default=0.0)

    def stage_end(self, prefix: str) -> float:
        """Latest end among events whose label starts with prefix (e.g. 'rs', 'ag')."""
        return max((e.end_s for e in self.events if e.label.startswith(prefix)), default=0.0)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps(
                {
                    "device": e.device,
                    "resource": e.resource,
                    "start_s": e.start_s,
                    "end_s": e.end_s,
                    "label": e.label,
                }
            )
            for e in self.events
        ]
        return "\n".join(lines) + "\n" if lines else ""


def idle_time(t: Timeline) -> float:
    """Sum over links of idle gaps between each link's first and last transfer."""
    windows: dict[tuple[int, str], list[float]] = {}
    for e in t.events:
        if e.resource == RES_VPU:
            continue
        w = windows.setdefault((e.device, e.resource), [math.inf, 0.0, 0.0])
        w[0] = min(w[0], e.start_s)
        w[1] = max(w[1], e.end_s)
        w[2] += e.end_s - e.start_s
    return sum(last - first - busy for first, last, busy in windows.values())


def lower_bound(variant: Variant, num_devices: int, d_bytes: float, bandwidth: float) -> float:
    """Bandwidth lower bound on reduce-scatter time for d_bytes moved at bandwidth B."""
    if num_devices < 2:
        raise ValueError("need at least 2 devices")
    if variant is Variant.SEMI_LOOP:
        return d_bytes / (2.0 * bandwidth)
    return (num_devices - 1) * d_bytes / (2.0 * num_devices * bandwidth)


class _Sched:
    """Static-order list scheduler over per-device link and VPU resources."""

    def __init__(self, link: LinkParams, compute: ComputeParams):
        self.link = link
        self.compute = compute
        self.free: dict[tuple[int, str], float] = {}
        self.done: dict[tuple, float] = {}
        self.events: list[TimelineEvent] = []

    def _run(self, device: int, resource: str, label: str, dur: float, deps) -> float:
        t0 = self.free.get((device, resource), 0.0)
        for d in deps:
            dt = self.done[d]
            if dt > t0:
                t0 = dt
        t1 = t0 + dur
        self.free[(device, resource)] = t1
        self.events.append(TimelineEvent(device, resource, t0, t1, label))
        return t1

    def vpu(self, device: int, keys, label: str, nelems: float, rate: float, deps=()):
        t1 = self._run(device, RES_VPU, label, nelems / rate, deps)
        for k in keys:
            self.done[k] = t1

    def send(self, device: int, direction: str, key, label: str, nbytes: float, deps=()):
        t1 = self._run(device, _LINK_OF[direction], label, nbytes / self.link.bandwidth_bytes_per_s, deps)
        # Receiver-side visibility: one hop latency after the wire drains.
        self.done[key] = t1 + self.link.hop_latency_s

    def join(self, key, deps):
        self.done[key] = max((self.done[d] for d in deps), default=0.0)

    def finish(self) -> Timeline:
        # Per-resource construction order is execution order; verify no overlap.
        prev: dict[tuple[int, str], float] = {}
        for e in self.events:
            k = (e.device, e.resource)
            assert e.start_s >= prev.get(k, 0.0) - 1e-12, f"overlap on {k} at {e.label}"
            prev[k] = e.end_s
        return Timeline(self.events)


def _interleave(*seqs):
    out = []
    for row in zip_longest(*seqs):
        out.extend(x for x in row if x is not None)
    return out


def _recv_micro(s: _Sched, dev: int, tag: str, e: float, arrive, add_key, scan_key):
    """Dq + Add (+ abs-max scan) of one arriving microshard on the device VPU.

    With fuse_recv_pass the phases collapse into one pass gated by the
    slowest participating rate.
    """
    c = s.compute
    if c.fuse_recv_pass:
        rates = [c.dequant_rate, c.add_rate] + ([c.scan_rate] if scan_key else [])
        keys = [add_key] + ([scan_key] if scan_key else [])
        s.vpu(dev, keys, f"rs:fused{tag}", e, min(rates), arrive)
        return
    dq_key = ("dq",) + add_key
    s.vpu(dev, [dq_key], f"rs:dq{tag}", e, c.dequant_rate, arrive)
    s.vpu(dev, [add_key], f"rs:add{tag}", e, c.add_rate, [dq_key])
    if scan_key:
        s.vpu(dev, [scan_key], f"rs:scan{tag}", e, c.scan_rate, [add_key])


def _dir_minishards(m: int) -> dict[str, range]:
    # CW ring carries the first ceil(m/2) minishards, CCW the rest.
    h = (m + 1) // 2
    return {"cw": range(0, h), "ccw": range(h, m)}


def _prep_quant(s, dev, dname, gs, u, e_micro, scan_key, enc_key, stage, deps=()):
    """Send-side phase-1 scans (all microshards) then phase-2 encodes."""
    c = s.compute
    for g in gs:
        for j in range(u):
            tag = f":prep:{dname}:g={g}:j={j}"
            s.vpu(dev, [scan_key(g, j)], f"{stage}:scan{tag}", e_micro, c.scan_rate, deps)
    for g in gs:
        s.join(scan_key(g, None), [scan_key(g, j) for j in range(u)])
        for j in range(u):
            tag = f":prep:{dname}:g={g}:j={j}"
            s.vpu(dev, [enc_key(g, j)], f"{stage}:enc{tag}", e_micro, c.encode_rate, [scan_key(g, None)])


def _build_rs_full_quant(s: _Sched, spec: PartitionSpec, elems: int):
    n, m, u = spec.num_devices, spec.minishards_per_shard, spec.microshards_per_minishard
    e_shard = elems // n
    e_micro = e_shard // (m * u)
    dirs = _dir_minishards(m)

    for d in range(n):
        for dname, gs in dirs.items():
            scan_k = lambda g, j, d=d, dn=dname: ("rscan", 1, d, dn, g, j) if j is not None else ("rscanj", 1, d, dn, g)
            enc_k = lambda g, j, d=d, dn=dname: ("renc", 1, d, dn, g, j)
            _prep_quant(s, d, dname, gs, u, e_micro, scan_k, enc_k, "rs")

    for it in range(1, n):
        last = it == n - 1
        for d in range(n):
            for dname, gs in dirs.items():
                if not gs:
                    continue
                meta_deps = [("rscanj", it, d, dname, g) for g in gs]
                s.send(d, dname, ("rmeta", it, d, dname), f"rs:meta:it={it}:{dname}",
                       len(gs) * GRID_BYTES, meta_deps)
                for g in gs:
                    for j in range(u):
                        s.send(d, dname, ("rpay", it, d, dname, g, j),
                               f"rs:pay:it={it}:{dname}:g={g}:j={j}", e_micro,
                               [("renc", it, d, dname, g, j)])
        for d in range(n):
            streams = []
            for dname, gs in dirs.items():
                snd = (d - _STEP_OF[dname]) % n
                streams.append([(dname, snd, g) for g in gs])
            for dname, snd, g in _interleave(*streams):
                meta = ("rmeta", it, snd, dname)
                for j in range(u):
                    tag = f":it={it}:{dname}:g={g}:j={j}"
                    arrive = [("rpay", it, snd, dname, g, j), meta]
                    add_key = ("radd", it, d, dname, g, j)
                    scan_key = None if last else ("rscan", it + 1, d, dname, g, j)
                    _recv_micro(s, d, tag, e_micro, arrive, add_key, scan_key)
                if not last:
                    s.join(("rscanj", it + 1, d, dname, g),
                           [("rscan", it + 1, d, dname, g, j) for j in range(u)])
                    for j in range(u):
                        s.vpu(d, [("renc", it + 1, d, dname, g, j)],
                              f"rs:enc:it={it + 1}:{dname}:g={g}:j={j}", e_micro,
                              s.compute.encode_rate, [("rscanj", it + 1, d, dname, g)])

    for d in range(n):
        finals = [("radd", n - 1, d, dn, g, j) for dn, gs in dirs.items() for g in gs for j in range(u)]
        s.join(("rs_done", d), finals)


def _build_rs_full_raw(s: _Sched, spec: PartitionSpec, elems: int):
    """Unquantized reduce-scatter: BF16 half-shards, add is the only compute."""
    n = spec.num_devices
    e_half = elems // n // 2  # elements per direction (bytes on the wire = 2x)
    for it in range(1, n):
        for d in range(n):
            for dname in ("cw", "ccw"):
                deps = [] if it == 1 else [("rradd", it - 1, d, dname)]
                s.send(d, dname, ("rraw", it, d, dname), f"rs:raw:it={it}:{dname}", 2 * e_half, deps)
        for d in range(n):
            for dname in ("cw", "ccw"):
                snd = (d - _STEP_OF[dname]) % n
                s.vpu(d, [("rradd", it, d, dname)], f"rs:add:it={it}:{dname}", e_half,
                      s.compute.add_rate, [("rraw", it, snd, dname)])
    for d in range(n):
        s.join(("rs_done", d), [("rradd", n - 1, d, dn) for dn in ("cw", "ccw")])


def _semi_hops(s_idx: int, n: int, t: int) -> list[tuple[str, int, int]]:
    """(direction, sender, receiver) hops of shard s_idx at semi-loop iteration t."""
    half = n // 2
    hops = []
    if t <= half - 1:
        hops.append(("cw", (s_idx - half + t) % n, (s_idx - half + t + 1) % n))
    if t <= half:
        hops.append(("ccw", (s_idx + half - t + 1) % n, (s_idx + half - t) % n))
    return hops


def _build_rs_semi_quant(s: _Sched, spec: PartitionSpec, elems: int):
    n, m, u = spec.num_devices, spec.minishards_per_shard, spec.microshards_per_minishard
    half = n // 2
    e_shard = elems // n
    e_micro = e_shard // (m * u)

    # Arc heads quantize their local shard: device d starts shard d+half-1
    # clockwise (when the CW arc exists) and shard d-half counter-clockwise.
    for d in range(n):
        for dname in (("cw", "ccw") if half > 1 else ("ccw",)):
            scan_k = lambda g, j, d=d, dn=dname: ("sscan", 1, d, dn, g, j) if j is not None else ("sscanj", 1, d, dn, g)
            enc_k = lambda g, j, d=d, dn=dname: ("senc", 1, d, dn, g, j)
            _prep_quant(s, d, dname, range(m), u, e_micro, scan_k, enc_k, "rs")

    for t in range(1, half + 1):
        sends = []  # (dname, sender, receiver, owner_merge)
        for s_idx in range(n):
            for dname, snd, rcv in _semi_hops(s_idx, n, t):
                sends.append((dname, snd, rcv, rcv == s_idx, s_idx))
        for dname, snd, rcv, _, _ in sends:
            meta_deps = [("sscanj", t, snd, dname, g) for g in range(m)]
            s.send(snd, dname, ("smeta", t, snd, dname), f"rs:meta:it={t}:{dname}",
                   m * GRID_BYTES, meta_deps)
            for g in range(m):
                for j in range(u):
                    s.send(snd, dname, ("spay", t, snd, dname, g, j),
                           f"rs:pay:it={t}:{dname}:g={g}:j={j}", e_micro,
                           [("senc", t, snd, dname, g, j)])
        by_receiver: dict[int, list] = {}
        for dname, snd, rcv, is_owner, s_idx in sends:
            by_receiver.setdefault(rcv, []).append((dname, snd, is_owner, s_idx))
        for d in range(n):
            streams = [[(a, g) for g in range(m)] for a in by_receiver.get(d, [])]
            for (dname, snd, is_owner, s_idx), g in _interleave(*streams):
                meta = ("smeta", t, snd, dname)
                for j in range(u):
                    tag = f":it={t}:{dname}:g={g}:j={j}"
                    arrive = [("spay", t, snd, dname, g, j), meta]
                    if is_owner and dname == "ccw" and half > 1:
                        # Final merge folds into the accumulator made by the CW arc.
                        arrive = arrive + [("sacc", s_idx, g, j)]
                    if is_owner:
                        key = ("sacc", s_idx, g, j) if dname == "cw" else ("sfin", s_idx, g, j)
                        _recv_micro(s, d, tag, e_micro, arrive, key, None)
                    else:
                        _recv_micro(s, d, tag, e_micro, arrive,
                                    ("sadd", t, d, dname, g, j), ("sscan", t + 1, d, dname, g, j))
                if not is_owner:
                    s.join(("sscanj", t + 1, d, dname, g),
                           [("sscan", t + 1, d, dname, g, j) for j in range(u)])
                    for j in range(u):
                        s.vpu(d, [("senc", t + 1, d, dname, g, j)],
                              f"rs:enc:it={t + 1}:{dname}:g={g}:j={j}", e_micro,
                              s.compute.encode_rate, [("sscanj", t + 1, d, dname, g)])

    for d in range(n):
        s.join(("rs_done", d), [("sfin", d, g, j) for g in range(m) for j in range(u)])


def _build_rs_semi_raw(s: _Sched, spec: PartitionSpec, elems: int):
    n = spec.num_devices
    half = n // 2
    e_shard = elems // n
    for t in range(1, half + 1):
        hops = [h + (s_idx,) for s_idx in range(n) for h in _semi_hops(s_idx, n, t)]
        for dname, snd, rcv, s_idx in hops:
            deps = [] if t == 1 else [("sradd", t - 1, snd, dname)]
            s.send(snd, dname, ("sraw", t, snd, dname), f"rs:raw:it={t}:{dname}", 2 * e_shard, deps)
        for dname, snd, rcv, s_idx in hops:
            owner = rcv == s_idx
            deps = [("sraw", t, snd, dname)]
            if owner and dname == "ccw" and half > 1:
                deps.append(("sracc", s_idx))
            key = (("sracc", s_idx) if dname == "cw" else ("srfin", s_idx)) if owner \
                else ("sradd", t, rcv, dname)
            s.vpu(rcv, [key], f"rs:add:it={t}:{dname}", e_shard, s.compute.add_rate, deps)
    for d in range(n):
        s.join(("rs_done", d), [("srfin", d)])


def _build_ag_full_quant(s: _Sched, spec: PartitionSpec, elems: int):
    n, m, u = spec.num_devices, spec.minishards_per_shard, spec.microshards_per_minishard
    e_shard = elems // n
    e_micro = e_shard // (m * u)
    dirs = _dir_minishards(m)
    c = s.compute

    for d in range(n):
        for dname, gs in dirs.items():
            scan_k = lambda g, j, d=d, dn=dname: ("ascan", d, dn, g, j) if j is not None else ("ascanj", d, dn, g)
            enc_k = lambda g, j, d=d, dn=dname: ("aenc", d, dn, g, j)
            _prep_quant(s, d, dname, gs, u, e_micro, scan_k, enc_k, "ag", deps=[("rs_done", d)])
        # The source decodes its own codes too, so outputs match everywhere.
        for dname, gs in dirs.items():
            for g in gs:
                for j in range(u):
                    s.vpu(d, [], f"ag:dq:own:{dname}:g={g}:j={j}", e_micro, c.dequant_rate,
                          [("aenc", d, dname, g, j)])

    for t in range(1, n):
        for d in range(n):
            for dname, gs in dirs.items():
                if not gs:
                    continue
                prev = (d - _STEP_OF[dname]) % n
                if t == 1:
                    meta_deps = [("ascanj", d, dname, g) for g in gs]
                else:
                    meta_deps = [("ameta", t - 1, prev, dname)]
                s.send(d, dname, ("ameta", t, d, dname), f"ag:meta:it={t}:{dname}",
                       len(gs) * GRID_BYTES, meta_deps)
                for g in gs:
                    for j in range(u):
                        dep = [("aenc", d, dname, g, j)] if t == 1 else \
                            [("apay", t - 1, prev, dname, g, j)]
                        s.send(d, dname, ("apay", t, d, dname, g, j),
                               f"ag:pay:it={t}:{dname}:g={g}:j={j}", e_micro, dep)
        for d in range(n):
            streams = []
            for dname, gs in dirs.items():
                snd = (d - _STEP_OF[dname]) % n
                streams.append([(dname, snd, g) for g in gs])
            for dname, snd, g in _interleave(*streams):
                for j in range(u):
                    s.vpu(d, [], f"ag:dq:it={t}:{dname}:g={g}:j={j}", e_micro, c.dequant_rate,
                          [("apay", t, snd, dname, g, j), ("ameta", t, snd, dname)])


def _build_ag_full_raw(s: _Sched, spec: PartitionSpec, elems: int):
    n = spec.num_devices
    e_half_bytes = elems // n  # half the shard's elements at 2 bytes each
    for t in range(1, n):
        for d in range(n):
            for dname in ("cw", "ccw"):
                prev = (d - _STEP_OF[dname]) % n
                deps = [("rs_done", d)] if t == 1 else [("araw", t - 1, prev, dname)]
                s.send(d, dname, ("araw", t, d, dname), f"ag:raw:it={t}:{dname}", e_half_bytes, deps)
        for d in range(n):
            for dname in ("cw", "ccw"):
                snd = (d - _STEP_OF[dname]) % n
                # Zero-cost landing marker: completion includes the final hop latency.
                s.vpu(d, [], f"ag:land:it={t}:{dname}", 0.0, 1.0, [("araw", t, snd, dname)])


def _build_ag_semi_quant(s: _Sched, spec: PartitionSpec, elems: int):
    n, m, u = spec.num_devices, spec.minishards_per_shard, spec.microshards_per_minishard
    half = n // 2
    e_shard = elems // n
    e_micro = e_shard // (m * u)
    c = s.compute
    iters = {"cw": half, "ccw": half - 1}

    for d in range(n):
        scan_k = lambda g, j, d=d: ("ascan", d, "", g, j) if j is not None else ("ascanj", d, "", g)
        enc_k = lambda g, j, d=d: ("aenc", d, "", g, j)
        _prep_quant(s, d, "own", range(m), u, e_micro, scan_k, enc_k, "ag", deps=[("rs_done", d)])
        for g in range(m):
            for j in range(u):
                s.vpu(d, [], f"ag:dq:own:g={g}:j={j}", e_micro, c.dequant_rate,
                      [("aenc", d, "", g, j)])

    for t in range(1, half + 1):
        for d in range(n):
            for dname in ("cw", "ccw"):
                if t > iters[dname]:
                    continue
                prev = (d - _STEP_OF[dname]) % n
                if t == 1:
                    meta_deps = [("ascanj", d, "", g) for g in range(m)]
                else:
                    meta_deps = [("ameta", t - 1, prev, dname)]
                s.send(d, dname, ("ameta", t, d, dname), f"ag:meta:it={t}:{dname}",
                       m * GRID_BYTES, meta_deps)
                for g in range(m):
                    for j in range(u):
                        dep = [("aenc", d, "", g, j)] if t == 1 else \
                            [("apay", t - 1, prev, dname, g, j)]
                        s.send(d, dname, ("apay", t, d, dname, g, j),
                               f"ag:pay:it={t}:{dname}:g={g}:j={j}", e_micro, dep)
        for d in range(n):
            streams = []
            for dname in ("cw", "ccw"):
                if t > iters[dname]:
                    continue
                snd = (d - _STEP_OF[dname]) % n
                streams.append([(dname, snd, g) for g in range(m)])
            for dname, snd, g in _interleave(*streams):
                for j in range(u):
                    s.vpu(d, [], f"ag:dq:it={t}:{dname}:g={g}:j={j}", e_micro, c.dequant_rate,
                          [("apay", t, snd, dname, g, j), ("ameta", t, snd, dname)])


def _build_ag_semi_raw(s: _Sched, spec: PartitionSpec, elems: int):
    n = spec.num_devices
    half = n // 2
    shard_bytes = 2 * (elems // n)
    iters = {"cw": half, "ccw": half - 1}
    for t in range(1, half + 1):
        for d in range(n):
            for dname in ("cw", "ccw"):
                if t > iters[dname]:
                    continue
                prev = (d - _STEP_OF[dname]) % n
                deps = [("rs_done", d)] if t == 1 else [("araw", t - 1, prev, dname)]
                s.send(d, dname, ("araw", t, d, dname), f"ag:raw:it={t}:{dname}", shard_bytes, deps)
        for d in range(n):
            for dname in ("cw", "ccw"):
                if t > iters[dname]:
                    continue
                snd = (d - _STEP_OF[dname]) % n
                s.vpu(d, [], f"ag:land:it={t}:{dname}", 0.0, 1.0, [("araw", t, snd, dname)])


def simulate(cfg: CollectiveConfig, tensor_bytes: int, link: LinkParams,
             compute: ComputeParams) -> Timeline:
    """Schedule one AllReduce of a BF16 tensor of tensor_bytes and return its timeline."""
    if tensor_bytes % 2:
        raise DivisibilityError(f"tensor_bytes={tensor_bytes} is not a whole BF16 element count")
    elems = tensor_bytes // 2
    cfg.spec.validate_element_count(elems)
    s = _Sched(link, compute)
    semi = cfg.variant is Variant.SEMI_LOOP
    if cfg.quantize_rs:
        (_build_rs_semi_quant if semi else _build_rs_full_quant)(s, cfg.spec, elems)
    else:
        (_build_rs_semi_raw if semi else _build_rs_full_raw)(s, cfg.spec, elems)
    if cfg.quantize_ag:
        (_build_ag_semi_quant if semi else _build_ag_full_quant)(s, cfg.spec, elems)
    else:
        (_build_ag_semi_raw if semi else _build_ag_full_raw)(s, cfg.spec, elems)
    return s.finish()


def _build_lowp_ring(s: _Sched, spec: PartitionSpec, elems: int, with_codec: bool):
    """Full-loop ring at 1 byte per element; optional cast/recode compute passes."""
    n = spec.num_devices
    e_half = elems // n // 2
    c = s.compute
    if with_codec:
        for d in range(n):
            for dname in ("cw", "ccw"):
                s.vpu(d, [("ncast", d, dname)], f"rs:cast:prep:{dname}", e_half, c.cast_rate)
    for it in range(1, n):
        for d in range(n):
            for dname in ("cw", "ccw"):
                if it == 1:
                    deps = [("ncast", d, dname)] if with_codec else []
                else:
                    deps = [("nred", it - 1, d, dname)]
                s.send(d, dname, ("npay", it, d, dname), f"rs:pay:it={it}:{dname}", e_half, deps)
        for d in range(n):
            for dname in ("cw", "ccw"):
                snd = (d - _STEP_OF[dname]) % n
                if with_codec:
                    s.vpu(d, [("nadd", it, d, dname)], f"rs:add:it={it}:{dname}", e_half,
                          c.add_rate, [("npay", it, snd, dname)])
                    s.vpu(d, [("nred", it, d, dname)], f"rs:recode:it={it}:{dname}", e_half,
                          c.cast_rate, [("nadd", it, d, dname)])
                else:
                    s.vpu(d, [("nred", it, d, dname)], f"rs:add:it={it}:{dname}", e_half,
                          c.add_rate, [("npay", it, snd, dname)])
    for t in range(1, n):
        for d in range(n):
            for dname in ("cw", "ccw"):
                prev = (d - _STEP_OF[dname]) % n
                deps = [("nred", n - 1, d, dname)] if t == 1 else [("nagp", t - 1, prev, dname)]
                s.send(d, dname, ("nagp", t, d, dname), f"ag:pay:it={t}:{dname}", e_half, deps)
        for d in range(n):
            for dname in ("cw", "ccw"):
                snd = (d - _STEP_OF[dname]) % n
                if with_codec:
                    s.vpu(d, [], f"ag:dec:it={t}:{dname}", e_half, c.cast_rate,
                          [("nagp", t, snd, dname)])
                else:
                    s.vpu(d, [], f"ag:land:it={t}:{dname}", 0.0, 1.0, [("nagp", t, snd, dname)])
    if with_codec:
        for d in range(n):
            for dname in ("cw", "ccw"):
                s.vpu(d, [], f"ag:dec:own:{dname}", e_half, c.cast_rate,
                      [("nred", n - 1, d, dname)])


def simulate_naive(spec: PartitionSpec, tensor_bytes: int, link: LinkParams,
                   compute: ComputeParams) -> Timeline:
    """Naive cast-to-8-bit AllReduce: half the wire bytes plus cast/recode passes."""
    if tensor_bytes % 2:
        raise DivisibilityError(f"tensor_bytes={tensor_bytes} is not a whole BF16 element count")
    elems = tensor_bytes // 2
    spec.validate_element_count(elems)
    s = _Sched(link, compute)
    _build_lowp_ring(s, spec, elems, with_codec=True)
    return s.finish()


def simulate_ideal_2to1(spec: PartitionSpec, tensor_bytes: int, link: LinkParams,
                        compute: ComputeParams) -> Timeline:
    """Hypothetical lossless 2:1 compression: half the wire bytes, add-only compute."""
    if tensor_bytes % 2:
        raise DivisibilityError(f"tensor_bytes={tensor_bytes} is not a whole BF16 element count")
    elems = tensor_bytes // 2
    spec.validate_element_count(elems)
    s = _Sched(link, compute)
    _build_lowp_ring(s, spec, elems, with_codec=False)
    return s.finish()


def predict_speedup(cfg_a: CollectiveConfig, cfg_b: CollectiveConfig, tensor_bytes: int,
                    link: LinkParams, compute: ComputeParams) -> float:
    """How much faster cfg_a runs than cfg_b: time(b) / time(a)."""
    ta = simulate(cfg_a, tensor_bytes, link, compute).total_time
    tb = simulate(cfg_b, tensor_bytes, link, compute).total_time
    return tb / ta
