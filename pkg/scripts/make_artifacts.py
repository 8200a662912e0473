#!/usr/bin/env python3
"""Produce the optimized-field artifacts shipped under artifacts/.

Each run goes through the CLI so it leaves a manifest with the exact
config and seed; re-running this script reproduces every file bit for
bit. Budgets are desk-scale: minutes for the one-qubit gates, tens of
minutes for CNOT, hours for the six-spin environment (pass --only to
cherry-pick).
"""
import argparse
import json
import sys
import time
from pathlib import Path

from spinctrl.cli import main as cli_main
from spinctrl.config import preset_config

ROOT = Path(__file__).resolve().parent.parent
ARTIFACTS = ROOT / "artifacts"


def patch(base: dict, **sections) -> dict:
    cfg = json.loads(json.dumps(base))
    for key, value in sections.items():
        if isinstance(value, dict):
            cfg[key].update(value)
        else:
            cfg[key] = value
    return cfg


def run(name: str, cfg: dict) -> None:
    out = ARTIFACTS / name
    out.mkdir(parents=True, exist_ok=True)
    cfg["output_dir"] = str(out)
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(cfg, indent=1, sort_keys=True))
    print(f"=== {name}", flush=True)
    t0 = time.time()
    rc = cli_main(["optimize", "--config", str(cfg_path)])
    print(f"=== {name} done rc={rc} in {time.time() - t0:.0f}s", flush=True)
    if rc != 0:
        sys.exit(rc)


def hadamard_n1() -> dict:
    return patch(
        preset_config("one_qubit_n1").to_dict(),
        seed=11, threads=2,
        ga={"dt": 0.04, "population_size": 120, "generations": 40,
            "mutation_scale": 0.15, "fitness_target": 0.95},
        grad={"alpha": 1e-5, "tolerance": 1e-11, "patience": 150,
              "schedule": [[0.08, 12000], [0.04, 6000], [0.02, 4000], [0.01, 3000]]},
    )


def hadamard_n1_closed() -> dict:
    cfg = hadamard_n1()
    cfg["seed"] = 12
    cfg["system"]["gamma"] = 0.0
    cfg["grad"]["alpha"] = 1e-6
    return cfg


def hadamard_n2() -> dict:
    return patch(
        preset_config("one_qubit_n2").to_dict(),
        seed=21, threads=2,
        ga={"dt": 0.04, "population_size": 120, "generations": 40,
            "mutation_scale": 0.15, "fitness_target": 0.95},
        grad={"alpha": 1e-5, "tolerance": 1e-11, "patience": 150,
              "schedule": [[0.08, 8000], [0.04, 5000], [0.02, 3000], [0.01, 2500]]},
    )


def hadamard_n4() -> dict:
    return patch(
        preset_config("one_qubit_n4").to_dict(),
        seed=31, threads=2,
        ga={"dt": 0.1, "population_size": 80, "generations": 25,
            "mutation_scale": 0.15, "fitness_target": 0.95},
        grad={"alpha": 1e-5, "tolerance": 1e-11, "patience": 120,
              "schedule": [[0.1, 3000], [0.05, 1500], [0.02, 800]]},
    )


def hadamard_n6() -> dict:
    return patch(
        preset_config("one_qubit_n6").to_dict(),
        seed=41, threads=2,
        ga={"dt": 0.25, "population_size": 30, "generations": 8,
            "mutation_scale": 0.15, "fitness_target": 0.9},
        grad={"alpha": 1e-5, "tolerance": 1e-11, "patience": 100,
              "schedule": [[0.25, 1500], [0.1, 600], [0.05, 250], [0.02, 100]]},
    )


def cnot() -> dict:
    return patch(
        preset_config("cnot_n1").to_dict(),
        seed=51, threads=2,
        ga={"dt": 0.08, "population_size": 120, "generations": 30,
            "mutation_scale": 0.15, "fitness_target": 0.9},
        grad={"alpha": 1e-5, "tolerance": 1e-11, "patience": 150,
              "schedule": [[0.16, 5000], [0.08, 3000], [0.04, 1500], [0.02, 800]]},
    )


BUILDERS = {
    "hadamard_n1": hadamard_n1,
    "hadamard_n1_closed": hadamard_n1_closed,
    "hadamard_n2": hadamard_n2,
    "hadamard_n4": hadamard_n4,
    "hadamard_n6": hadamard_n6,
    "cnot_g001": cnot,
}


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--only", nargs="*", choices=sorted(BUILDERS),
                        help="subset of artifacts to (re)build")
    args = parser.parse_args()
    names = args.only or [n for n in BUILDERS if n != "hadamard_n6"]
    for name in names:
        run(name, BUILDERS[name]())
