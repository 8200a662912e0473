"""Command-line front end: config-driven experiments with reproducible outputs.

Subcommands
  simulate    propagate a field (zero or CSV) and export t,S_vN,F,K21_fr
  optimize    run the GA + gradient pipeline, write report.json and field.csv
  crossapply  score an existing field on a system with a different coupling
  robustness  Monte Carlo parameter-scatter statistics for a fixed field

Every run writes a manifest.json (config snapshot, seed, versions, hash)
sufficient to reproduce the outputs bit for bit.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 optimization
budget exhausted below the configured target fidelity.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (ConfigError, ExperimentConfig, build_field, build_ga_config,
                     build_gate, build_grad_config, build_grid, build_schedule,
                     build_system, config_from_json, override_gamma, preset_config,
                     PRESET_NAMES)
from .diagnostics import (entropy_trajectory, fidelity_trajectory,
                          nonunitarity_trajectory, reduced_density,
                          reference_initial_state, von_neumann_entropy,
                          write_trajectory_csv)
from .model import assemble_hamiltonian
from .objective import gate_distance
from .optimize import (OptimizationError, ga_optimize, grad_optimize,
                       grad_optimize_schedule, optimize)
from .propagation import (ControlField, field_from_csv, field_to_csv,
                          final_unitary, propagate_forward)
from .robustness import EnsembleSpec, evaluate_ensemble, write_histogram_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_BUDGET = 4


def _load_config(args) -> ExperimentConfig:
    if args.config:
        cfg = config_from_json(args.config)
    elif args.preset:
        cfg = preset_config(args.preset)
    else:
        raise ConfigError("provide --config PATH or --preset NAME")
    data = cfg.to_dict()
    if args.preset and args.config:
        raise ConfigError("--config and --preset are mutually exclusive")
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output_dir"] = args.out
    if args.threads is not None:
        data["threads"] = args.threads
    if getattr(args, "field", None):
        data["field"] = {"kind": "csv", "path": args.field}
    from .config import config_from_dict
    cfg = config_from_dict(data)
    if getattr(args, "gamma", None) is not None:
        cfg = override_gamma(cfg, args.gamma)
    return cfg


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out: Path, command: str, cfg: ExperimentConfig) -> None:
    manifest = {
        "command": command,
        "argv": sys.argv[1:],
        "config": cfg.to_dict(),
        "config_sha256": cfg.sha256(),
        "seed": cfg.seed,
        "versions": {"spinctrl": __version__, "numpy": np.__version__,
                     "python": sys.version.split()[0]},
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def _env_populations(psi0: np.ndarray, m: int, n: int) -> np.ndarray:
    """Diagonal environment occupations of a product initial state."""
    mat = psi0.reshape(2 ** m, 2 ** n)
    return (np.abs(mat) ** 2).sum(axis=0)


def cmd_simulate(cfg: ExperimentConfig) -> int:
    system = build_system(cfg)
    gate = build_gate(cfg)
    terms = assemble_hamiltonian(system)
    field = build_field(cfg)
    prop = propagate_forward(terms, field)
    psi0 = reference_initial_state(system.m, system.n)
    entropy = entropy_trajectory(prop, psi0, system.m, system.n)
    fid = fidelity_trajectory(prop, gate.matrix, system.m, system.n)
    nonu = nonunitarity_trajectory(prop, _env_populations(psi0, system.m, system.n),
                                   system.m, system.n)
    out = _out_dir(cfg)
    write_trajectory_csv(out / "trajectory.csv", field.grid.times, entropy, fid, nonu)
    write_manifest(out, "simulate", cfg)
    print(f"simulate: wrote {out / 'trajectory.csv'} "
          f"(final S_vN={entropy[-1]:.3e}, F={fid[-1]:.6f})")
    return EXIT_OK


def cmd_optimize(cfg: ExperimentConfig) -> int:
    system = build_system(cfg)
    gate = build_gate(cfg)
    out = _out_dir(cfg)
    grad_cfg = build_grad_config(cfg, checkpoint_path=out / "checkpoint_field.csv")
    schedule = build_schedule(cfg)
    if cfg.field.kind == "csv":
        # resume: skip the genetic stage, refine the given field
        initial = field_from_csv(cfg.field.path)
        if schedule:
            report = grad_optimize_schedule(system, gate, initial, grad_cfg, schedule)
        else:
            report = grad_optimize(system, gate, initial, grad_cfg)
        report.seed = cfg.seed
    elif cfg.grad.enabled:
        report = optimize(system, gate, cfg.grid.dt, build_ga_config(cfg), grad_cfg,
                          threads=cfg.threads, schedule=schedule, ga_dt=cfg.ga.dt)
    else:
        report = ga_optimize(system, gate, build_ga_config(cfg),
                             cfg.ga.dt or cfg.grid.dt,
                             threads=cfg.threads, alpha=grad_cfg.alpha)
    report.write_json(out / "report.json")
    field_to_csv(report.field, out / "field.csv")
    write_manifest(out, "optimize", cfg)
    print(f"optimize: F={report.fidelity:.6f} J={report.distance:.3e} "
          f"E={report.fluence:.3f} S_vN(t_f)={report.final_entropy:.3e} "
          f"({report.termination}, {report.wall_time:.1f}s)")
    if cfg.target_fidelity is not None and report.fidelity < cfg.target_fidelity:
        print(f"optimize: fidelity below target {cfg.target_fidelity}", file=sys.stderr)
        return EXIT_BUDGET
    return EXIT_OK


def cmd_crossapply(cfg: ExperimentConfig) -> int:
    if cfg.field.kind != "csv":
        raise ConfigError("crossapply needs --field CSV (the field to re-score)")
    system = build_system(cfg)
    gate = build_gate(cfg)
    terms = assemble_hamiltonian(system)
    field = field_from_csv(cfg.field.path)
    u = final_unitary(terms, field)
    dist = gate_distance(u, gate.matrix, system.m, system.n)
    psi0 = reference_initial_state(system.m, system.n)
    entropy = von_neumann_entropy(reduced_density(u, psi0, system.m, system.n))
    out = _out_dir(cfg)
    result = {"fidelity": dist.fidelity, "distance": dist.distance,
              "final_entropy": entropy, "field": str(cfg.field.path),
              "gamma": cfg.system.gamma if cfg.system.topology != "two_qubit_triangle"
              else cfg.system.gamma13}
    with open(out / "crossapply.json", "w") as fh:
        json.dump(result, fh, indent=1)
    write_manifest(out, "crossapply", cfg)
    print(f"crossapply: F={dist.fidelity:.6f} S_vN(t_f)={entropy:.3e}")
    return EXIT_OK


def cmd_robustness(cfg: ExperimentConfig) -> int:
    if cfg.field.kind != "csv":
        raise ConfigError("robustness needs --field CSV (the optimized field)")
    system = build_system(cfg)
    gate = build_gate(cfg)
    field = field_from_csv(cfg.field.path)
    spec = EnsembleSpec(target=cfg.robustness.target, size=cfg.robustness.size,
                        coupling_divisor=cfg.robustness.coupling_divisor,
                        frequency_divisor=cfg.robustness.frequency_divisor,
                        seed=cfg.seed)
    report = evaluate_ensemble(system, field, gate, spec, threads=cfg.threads)
    out = _out_dir(cfg)
    report.write_json(out / "ensemble.json")
    write_histogram_csv(out / "fidelity_hist.csv", report.fidelity_counts,
                        report.fidelity_edges)
    write_histogram_csv(out / "entropy_hist.csv", report.entropy_counts,
                        report.entropy_edges)
    write_manifest(out, "robustness", cfg)
    print(f"robustness[{spec.target}]: mean F={report.mean_fidelity:.6f} "
          f"sigma_F={report.std_fidelity:.3e} (nominal {report.nominal_fidelity:.6f})")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinctrl",
        description="Optimal control of quantum gates on interacting spin systems")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("simulate", cmd_simulate), ("optimize", cmd_optimize),
                     ("crossapply", cmd_crossapply), ("robustness", cmd_robustness)):
        p = sub.add_parser(name)
        p.add_argument("--config", help="experiment config JSON")
        p.add_argument("--preset", choices=PRESET_NAMES,
                       help="named parameter set instead of a config file")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="master RNG seed")
        p.add_argument("--threads", type=int, help="worker cap for parallel maps")
        p.add_argument("--field", help="control-field CSV (t,C)")
        p.add_argument("--gamma", type=float,
                       help="override the qubit-environment coupling strength")
        p.set_defaults(fn=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.fn(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OptimizationError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
