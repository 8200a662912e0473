"""Experiment configuration: a versioned JSON schema plus named presets.

Configs are plain dataclasses of JSON-native values so that
parse -> serialize -> parse is the identity. Builders at the bottom turn a
config into the runtime objects (SpinSystem, TimeGrid, GaConfig, ...).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field as dc_field
from typing import Any, Optional

import numpy as np

from .model import TOPOLOGY_KINDS, SpinSystem, make_topology
from .objective import GATES, GateTarget, gate_from_csv, gate_target
from .optimize import GaConfig, GradConfig
from .propagation import ControlField, TimeGrid, field_from_csv, grid_for

CONFIG_VERSION = 1


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


@dataclass
class SystemSection:
    m: int = 1
    n: int = 1
    topology: str = "star"
    frequencies: list[float] = dc_field(default_factory=lambda: [1.0])
    gamma: Optional[float] = None
    gamma12: Optional[float] = None
    gamma13: Optional[float] = None
    gamma23: Optional[float] = None


@dataclass
class GridSection:
    t_final: float = 25.0
    dt: float = 0.01


@dataclass
class FieldSection:
    kind: str = "zero"  # "zero" or "csv"
    path: Optional[str] = None


@dataclass
class GaSection:
    enabled: bool = True
    dt: Optional[float] = None  # fitness grid step; defaults to the working grid
    population_size: int = 250
    generations: int = 40
    crossover_rate: float = 0.3
    mutation_rate: float = 0.3
    elite: int = 2
    tournament_size: int = 3
    mutation_scale: float = 0.1
    amplitude_max: float = 4.0
    frequency_max: float = 4.0
    tfinal_bounds: Optional[list[float]] = None  # default: grid t_final, fixed
    fitness_target: Optional[float] = 0.95


@dataclass
class GradSection:
    enabled: bool = True
    alpha: float = 1e-4
    beta: float = 0.5
    envelope_power: float = 1.0
    max_iterations: int = 2000
    tolerance: float = 1e-9
    patience: int = 25
    max_backtracks: int = 50
    beta_max: float = 1.0
    max_doublings: int = 4
    amplitude_clamp: Optional[float] = None
    checkpoint_every: Optional[int] = None
    # coarse-to-fine continuation: [dt, max_iterations] pairs, finest last
    schedule: Optional[list[list[float]]] = None


@dataclass
class RobustnessSection:
    target: str = "couplings"
    size: int = 10_000
    coupling_divisor: float = 8.0
    frequency_divisor: float = 25.0


@dataclass
class ExperimentConfig:
    version: int = CONFIG_VERSION
    preset: Optional[str] = None
    seed: int = 0
    threads: int = 1
    output_dir: str = "out"
    system: SystemSection = dc_field(default_factory=SystemSection)
    gate: str = "hadamard"
    gate_csv: Optional[str] = None
    grid: GridSection = dc_field(default_factory=GridSection)
    field: FieldSection = dc_field(default_factory=FieldSection)
    ga: GaSection = dc_field(default_factory=GaSection)
    grad: GradSection = dc_field(default_factory=GradSection)
    robustness: RobustnessSection = dc_field(default_factory=RobustnessSection)
    target_fidelity: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    def sha256(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()


_SECTION_TYPES = {
    "system": SystemSection,
    "grid": GridSection,
    "field": FieldSection,
    "ga": GaSection,
    "grad": GradSection,
    "robustness": RobustnessSection,
}


def _build_section(cls, data: dict, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    allowed = set(cls.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    version = data.get("version", CONFIG_VERSION)
    if version != CONFIG_VERSION:
        raise ConfigError(f"version: unsupported config version {version}")
    allowed = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        else:
            kwargs[key] = value
    try:
        cfg = ExperimentConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    validate_config(cfg)
    return cfg


def config_from_json(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_dict(data)


def validate_config(cfg: ExperimentConfig) -> None:
    sys_ = cfg.system
    if sys_.topology not in TOPOLOGY_KINDS:
        raise ConfigError(f"system.topology: unknown kind {sys_.topology!r}")
    n_expected = sys_.m + sys_.n
    if len(sys_.frequencies) != n_expected:
        raise ConfigError(
            f"system.frequencies: need {n_expected} values, got {len(sys_.frequencies)}")
    if sys_.topology == "two_qubit_triangle":
        if sys_.gamma12 is None or sys_.gamma13 is None or sys_.gamma23 is None:
            raise ConfigError("system: two_qubit_triangle needs gamma12/gamma13/gamma23")
    elif sys_.gamma is None:
        raise ConfigError(f"system.gamma: required for topology {sys_.topology!r}")
    if cfg.gate_csv is None and cfg.gate.lower() not in GATES:
        raise ConfigError(f"gate: unknown gate {cfg.gate!r}; "
                          f"choose from {sorted(GATES)} or provide gate_csv")
    if cfg.grid.t_final <= 0 or cfg.grid.dt <= 0:
        raise ConfigError("grid: t_final and dt must be positive")
    if cfg.field.kind not in ("zero", "csv"):
        raise ConfigError(f"field.kind: must be 'zero' or 'csv', got {cfg.field.kind!r}")
    if cfg.field.kind == "csv" and not cfg.field.path:
        raise ConfigError("field.path: required when field.kind is 'csv'")
    if cfg.threads < 1:
        raise ConfigError("threads: must be >= 1")
    if cfg.robustness.target not in ("couplings", "frequencies"):
        raise ConfigError("robustness.target: must be 'couplings' or 'frequencies'")
    if cfg.grad.schedule is not None:
        for pair in cfg.grad.schedule:
            if len(pair) != 2 or pair[0] <= 0 or pair[1] < 1:
                raise ConfigError("grad.schedule: entries must be [dt, iterations]")
        if abs(cfg.grad.schedule[-1][0] - cfg.grid.dt) > 1e-12:
            raise ConfigError("grad.schedule: the last stage must end on grid.dt")


# --- presets: the parameter sets used throughout the study ---

_X_LADDER = (2.14, 2.1, 2.0)


def _ladder_frequencies(n: int) -> list[float]:
    """Qubit at omega_1 = 1 plus environment pairs ((pi-x)^-1, pi-x)."""
    freqs = [1.0]
    for x in _X_LADDER[: n // 2]:
        freqs.extend([1.0 / (np.pi - x), np.pi - x])
    return freqs


def _one_qubit_preset(n: int, topology: str, t_final: float, dt: float,
                      amplitude_max: float) -> dict:
    return {
        "preset": f"one_qubit_n{n}",
        "system": {
            "m": 1, "n": n, "topology": topology,
            "frequencies": _ladder_frequencies(n) if n >= 2 else [1.0, 1.0 / (np.pi - 2.14)],
            "gamma": 0.02,
        },
        "gate": "hadamard",
        "grid": {"t_final": t_final, "dt": dt},
        "ga": {"amplitude_max": amplitude_max,
               "tfinal_bounds": [t_final, t_final]},
    }


def preset_config(name: str) -> ExperimentConfig:
    """Named parameter sets; durations and amplitude bounds follow the
    reported optimal-gate runs."""
    presets = {
        "one_qubit_n1": lambda: _one_qubit_preset(1, "star", 25.0, 0.01, 2.0),
        "one_qubit_n2": lambda: _one_qubit_preset(2, "star", 15.4, 0.01, 4.0),
        "one_qubit_n4": lambda: _one_qubit_preset(4, "lattice_2d", 25.0, 0.02, 4.0),
        "one_qubit_n6": lambda: _one_qubit_preset(6, "lattice_3d", 25.0, 0.02, 2.5),
        "cnot_n1": lambda: {
            "preset": "cnot_n1",
            "system": {
                "m": 2, "n": 1, "topology": "two_qubit_triangle",
                "frequencies": [1.0, np.pi - 2.05, 1.0 / (np.pi - 2.14)],
                "gamma12": 0.1, "gamma13": 0.01, "gamma23": 0.01,
            },
            "gate": "cnot",
            "grid": {"t_final": 121.1, "dt": 0.02},
            "ga": {"amplitude_max": 4.0, "tfinal_bounds": [121.1, 121.1]},
        },
    }
    if name not in presets:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(presets)}")
    return config_from_dict(presets[name]())


PRESET_NAMES = ("one_qubit_n1", "one_qubit_n2", "one_qubit_n4", "one_qubit_n6",
                "cnot_n1")


# --- builders ---

def build_system(cfg: ExperimentConfig) -> SpinSystem:
    s = cfg.system
    if s.topology == "two_qubit_triangle":
        topo = make_topology(s.topology, s.m, s.n, gamma12=s.gamma12,
                             gamma13=s.gamma13, gamma23=s.gamma23)
    else:
        topo = make_topology(s.topology, s.m, s.n, gamma=s.gamma)
    try:
        return SpinSystem(m=s.m, n=s.n, frequencies=np.array(s.frequencies),
                          couplings=topo.coupling, topology=s.topology)
    except ValueError as exc:
        raise ConfigError(f"system: {exc}") from exc


def override_gamma(cfg: ExperimentConfig, gamma: float) -> ExperimentConfig:
    """New config with the qubit-environment coupling strength replaced.

    For the two-qubit triangle this rescales gamma13 = gamma23 = gamma and
    leaves the qubit-qubit coupling untouched.
    """
    data = cfg.to_dict()
    if cfg.system.topology == "two_qubit_triangle":
        data["system"]["gamma13"] = gamma
        data["system"]["gamma23"] = gamma
    else:
        data["system"]["gamma"] = gamma
    return config_from_dict(data)


def build_gate(cfg: ExperimentConfig) -> GateTarget:
    if cfg.gate_csv is not None:
        return gate_from_csv(cfg.gate_csv)
    try:
        return gate_target(cfg.gate)
    except KeyError as exc:
        raise ConfigError(str(exc)) from exc


def build_grid(cfg: ExperimentConfig) -> TimeGrid:
    return grid_for(cfg.grid.t_final, cfg.grid.dt)


def build_field(cfg: ExperimentConfig, grid: Optional[TimeGrid] = None) -> ControlField:
    if cfg.field.kind == "csv":
        return field_from_csv(cfg.field.path)
    if grid is None:
        grid = build_grid(cfg)
    return ControlField.zero(grid)


def build_ga_config(cfg: ExperimentConfig) -> GaConfig:
    g = cfg.ga
    bounds = g.tfinal_bounds or [cfg.grid.t_final, cfg.grid.t_final]
    return GaConfig(population_size=g.population_size, generations=g.generations,
                    crossover_rate=g.crossover_rate, mutation_rate=g.mutation_rate,
                    elite=g.elite, tournament_size=g.tournament_size,
                    mutation_scale=g.mutation_scale, amplitude_max=g.amplitude_max,
                    frequency_max=g.frequency_max,
                    tfinal_bounds=(bounds[0], bounds[1]),
                    fitness_target=g.fitness_target, seed=cfg.seed)


def build_grad_config(cfg: ExperimentConfig, checkpoint_path=None) -> GradConfig:
    g = cfg.grad
    return GradConfig(alpha=g.alpha, beta=g.beta, envelope_power=g.envelope_power,
                      max_iterations=g.max_iterations, tolerance=g.tolerance,
                      patience=g.patience, max_backtracks=g.max_backtracks,
                      beta_max=g.beta_max, max_doublings=g.max_doublings,
                      amplitude_clamp=g.amplitude_clamp,
                      checkpoint_every=g.checkpoint_every,
                      checkpoint_path=checkpoint_path)


def build_schedule(cfg: ExperimentConfig) -> Optional[list[tuple[float, int]]]:
    if cfg.grad.schedule is None:
        return None
    return [(float(dt), int(iters)) for dt, iters in cfg.grad.schedule]
