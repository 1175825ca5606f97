#!/usr/bin/env python3
"""Predicted quantized-vs-baseline time ratio across tensor sizes.

Sweeps 1 MiB through 1 GiB on the v5e-like profile at 8 devices and writes
size_sweep_n8.csv next to this script unless --output is given. The ratio
starts near 1.0 in the latency-bound regime and settles toward the halved
wire time once payload dominates.
"""

import pathlib
import sys

from qarsim.cli import main

SIZES = ",".join(f"{1 << i}MiB" for i in range(11))

if __name__ == "__main__":
    args = sys.argv[1:]
    if not any(a.startswith("--output") for a in args):
        out = pathlib.Path(__file__).parent / "size_sweep_n8.csv"
        args = ["--output", str(out)] + args
        print(f"writing {out}")
    sys.exit(main(["sweep", "--sizes", SIZES, "--num-devices", "8"] + args))
