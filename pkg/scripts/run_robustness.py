#!/usr/bin/env python3
"""Parameter-scatter statistics for an optimized field (one target per run).

Replays an artifact field on ensembles with normally perturbed couplings
(sigma = gamma/8) and frequencies (sigma = omega/25) and prints the
summary table; histograms land next to the ensemble report.
"""
import argparse
import json
from pathlib import Path

from spinctrl.cli import main as cli_main

ROOT = Path(__file__).resolve().parent.parent

if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--artifact", default="hadamard_n1",
                        help="artifact directory name under artifacts/")
    parser.add_argument("--size", type=int, default=10_000,
                        help="ensemble size (10^5 reproduces the reference scale)")
    parser.add_argument("--out", default="out/robustness")
    parser.add_argument("--seed", type=int, default=7070)
    args = parser.parse_args()

    art = ROOT / "artifacts" / args.artifact
    base = json.loads((art / "config.json").read_text())
    for target in ("couplings", "frequencies"):
        cfg = json.loads(json.dumps(base))
        cfg["robustness"] = {"target": target, "size": args.size,
                             "coupling_divisor": 8.0, "frequency_divisor": 25.0}
        cfg["threads"] = 2
        out = Path(args.out) / args.artifact / target
        path = Path(args.out) / f"{args.artifact}.{target}.config.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(cfg, indent=1))
        rc = cli_main(["robustness", "--config", str(path),
                       "--field", str(art / "field.csv"),
                       "--out", str(out), "--seed", str(args.seed)])
        assert rc == 0, target
