#!/usr/bin/env python3
"""Score optimized fields on systems they were not tuned for.

Reproduces the degradation table: each Hadamard artifact field is
re-scored at a different qubit-environment coupling (default: the
closed-system field at gamma = 0.02, and vice versa).
"""
import argparse
import json
from pathlib import Path

from spinctrl.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--artifact", default="hadamard_n1_closed")
    parser.add_argument("--gamma", type=float, default=0.02)
    parser.add_argument("--out", default="out/crossapply")
    args = parser.parse_args()

    art = ROOT / "artifacts" / args.artifact
    rc = cli_main(["crossapply", "--config", str(art / "config.json"),
                   "--field", str(art / "field.csv"),
                   "--gamma", str(args.gamma), "--out", args.out])
    raise SystemExit(rc)
