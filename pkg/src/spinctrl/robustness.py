"""Monte Carlo sensitivity of a fixed control field to parameter scatter.

A field optimized for one system is replayed, unchanged, on an ensemble of
systems whose couplings or frequencies are independently drawn from normal
laws centered at the nominal values. The report collects the resulting
fidelity and final-time entropy statistics and histograms.
"""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .diagnostics import reduced_density, reference_initial_state, von_neumann_entropy
from .model import SpinSystem, assemble_hamiltonian
from .objective import GateTarget, gate_distance
from .propagation import ControlField, final_unitary

PERTURBATION_TARGETS = ("couplings", "frequencies")


class EnsembleError(RuntimeError):
    """A single ensemble member failed to propagate."""


@dataclass
class EnsembleSpec:
    """What to perturb and how hard.

    Standard deviations are relative to each parameter's nominal value:
    sigma = nominal / coupling_divisor for couplings (default 8) and
    sigma = nominal / frequency_divisor for frequencies (default 25).
    Negative coupling draws are rejected and redrawn.
    """

    target: str
    size: int = 10_000
    coupling_divisor: float = 8.0
    frequency_divisor: float = 25.0
    seed: int = 0
    max_redraws: int = 1000

    def __post_init__(self) -> None:
        if self.target not in PERTURBATION_TARGETS:
            raise ValueError(f"target must be one of {PERTURBATION_TARGETS}")
        if self.size < 1:
            raise ValueError("ensemble size must be >= 1")
        if self.coupling_divisor <= 0 or self.frequency_divisor <= 0:
            raise ValueError("sigma divisors must be positive")


def _sample(nominal: SpinSystem, spec: EnsembleSpec,
            rng: np.random.Generator) -> tuple[SpinSystem, int]:
    redraws = 0
    if spec.target == "couplings":
        c = nominal.couplings.copy()
        nn = nominal.n_particles
        for i in range(nn):
            for j in range(i + 1, nn):
                g = c[i, j]
                if g == 0.0:
                    continue
                sigma = g / spec.coupling_divisor
                draw = rng.normal(g, sigma)
                while draw < 0.0:
                    redraws += 1
                    if redraws > spec.max_redraws:
                        raise EnsembleError("too many negative coupling redraws")
                    draw = rng.normal(g, sigma)
                c[i, j] = c[j, i] = draw
        return nominal.replace_couplings(c), redraws
    w = nominal.frequencies.copy()
    sigma = np.abs(w) / spec.frequency_divisor
    w = rng.normal(w, sigma)
    return nominal.replace_frequencies(w), redraws


def sample_system(nominal: SpinSystem, spec: EnsembleSpec,
                  rng: np.random.Generator) -> SpinSystem:
    """One perturbed copy of the nominal system.

    Only the targeted parameter family changes; coupling symmetry is kept
    by drawing once per (i, j) pair.
    """
    return _sample(nominal, spec, rng)[0]


@dataclass
class EnsembleReport:
    """Summary statistics and histograms over the ensemble.

    Standard deviations use the population convention (divide by L).
    Histogram bins follow the Freedman-Diaconis rule.
    """

    target: str
    size: int
    seed: int
    nominal_fidelity: float
    nominal_entropy: float
    mean_fidelity: float
    std_fidelity: float
    mean_entropy: float
    std_entropy: float
    fidelity_counts: np.ndarray
    fidelity_edges: np.ndarray
    entropy_counts: np.ndarray
    entropy_edges: np.ndarray
    redraws: int = 0

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "size": self.size,
            "seed": self.seed,
            "nominal_fidelity": self.nominal_fidelity,
            "nominal_entropy": self.nominal_entropy,
            "mean_fidelity": self.mean_fidelity,
            "std_fidelity": self.std_fidelity,
            "mean_entropy": self.mean_entropy,
            "std_entropy": self.std_entropy,
            "redraws": self.redraws,
            "fidelity_hist": {"counts": self.fidelity_counts.tolist(),
                              "edges": self.fidelity_edges.tolist()},
            "entropy_hist": {"counts": self.entropy_counts.tolist(),
                             "edges": self.entropy_edges.tolist()},
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)


def write_histogram_csv(path, counts: np.ndarray, edges: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, c in zip(edges[:-1], edges[1:], counts):
            writer.writerow([repr(float(lo)), repr(float(hi)), int(c)])


def _histogram(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if np.ptp(values) == 0.0:
        v = values[0]
        return np.array([len(values)]), np.array([v - 0.5, v + 0.5])
    counts, edges = np.histogram(values, bins="fd")
    return counts, edges


def evaluate_ensemble(nominal: SpinSystem, field: ControlField, gate: GateTarget,
                      spec: EnsembleSpec, threads: int = 1) -> EnsembleReport:
    """Replay the fixed field on `spec.size` perturbed systems.

    Per-member RNG streams are spawned from the master seed, so the result
    is independent of evaluation order and worker count. Any propagation
    failure aborts with the member index and seed in the message.
    """
    m, n = nominal.m, nominal.n
    psi0 = reference_initial_state(m, n)
    gmat = gate.matrix

    def score(system: SpinSystem) -> tuple[float, float]:
        terms = assemble_hamiltonian(system)
        u = final_unitary(terms, field)
        f = gate_distance(u, gmat, m, n).fidelity
        s = von_neumann_entropy(reduced_density(u, psi0, m, n))
        return f, s

    nominal_f, nominal_s = score(nominal)

    seeds = np.random.SeedSequence(spec.seed).spawn(spec.size)
    systems = []
    redraws = 0
    for ss in seeds:
        system, r = _sample(nominal, spec, np.random.default_rng(ss))
        systems.append(system)
        redraws += r

    def safe_score(item: tuple[int, SpinSystem]) -> tuple[float, float]:
        idx, system = item
        try:
            return score(system)
        except Exception as exc:  # propagate which member broke
            raise EnsembleError(
                f"ensemble member {idx} (seed {spec.seed}/{idx}) failed: {exc}"
            ) from exc

    items = list(enumerate(systems))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            scores = list(ex.map(safe_score, items))
    else:
        scores = [safe_score(it) for it in items]
    fvals = np.array([s[0] for s in scores])
    svals = np.array([s[1] for s in scores])

    f_counts, f_edges = _histogram(fvals)
    s_counts, s_edges = _histogram(svals)
    return EnsembleReport(
        target=spec.target, size=spec.size, seed=spec.seed,
        nominal_fidelity=nominal_f, nominal_entropy=nominal_s,
        mean_fidelity=float(fvals.mean()), std_fidelity=float(fvals.std()),
        mean_entropy=float(svals.mean()), std_entropy=float(svals.std()),
        fidelity_counts=f_counts, fidelity_edges=f_edges,
        entropy_counts=s_counts, entropy_edges=s_edges, redraws=redraws)
