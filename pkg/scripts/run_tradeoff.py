#!/usr/bin/env python3
"""Reproduce the headline error/speedup table: 4096x4096, 8 devices, INT8.

Writes tradeoff_4096x4096_n8.csv next to this script unless --output is given.
Pass --rows/--cols/--seed etc. to vary the setup; see `qarsim tradeoff -h`.
"""

import pathlib
import sys

from qarsim.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if not any(a.startswith("--output") for a in args):
        out = pathlib.Path(__file__).parent / "tradeoff_4096x4096_n8.csv"
        args = ["--output", str(out)] + args
        print(f"writing {out}")
    sys.exit(main(["tradeoff", "--rows", "4096", "--cols", "4096",
                   "--num-devices", "8", "--seed", "0"] + args))
