"""Named link/compute calibration profiles, shipped as JSON package data.

The "v5e-like" profile is calibrated at ratio level only: per-direction
bandwidth, hop latency, and VPU pass rates are chosen so the baseline
BF16 AllReduce is latency-bound below a few MiB and bandwidth-bound
above, matching the regime boundaries the quantized variants are judged
against. Absolute hardware rates are not modeled.
"""

from __future__ import annotations

import json
from importlib import resources

from .simnet import ComputeParams, LinkParams

DEFAULT_PRESET = "v5e-like"


def _preset_dir():
    return resources.files(__package__).joinpath("presets")


def available_presets() -> list[str]:
    names = []
    for entry in _preset_dir().iterdir():
        if entry.name.endswith(".json"):
            names.append(entry.name[: -len(".json")].replace("_", "-"))
    return sorted(names)


def load_preset(name: str) -> tuple[LinkParams, ComputeParams]:
    path = _preset_dir().joinpath(name.replace("-", "_") + ".json")
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(available_presets())}")
    return LinkParams(**raw["link"]), ComputeParams(**raw["compute"])
