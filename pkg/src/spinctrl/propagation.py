"""Time evolution of the composite unitary and its backward adjoint.

The evolution U(t) solves dU/dt = -i H(t) U with U(0) = I. On a uniform
grid the integrator is the piecewise-constant midpoint exponential: over
each step the Hamiltonian is frozen at the field's midpoint value and
exponentiated exactly through an eigendecomposition (dimensions stay at
or below 256, so per-step dense eigensolves are cheap, and batching all
steps into one LAPACK call keeps Python overhead out of the loop).

The backward adjoint B(t) solves dB/dt = +i B H(t) from a terminal
condition at t_f. It reuses the identical per-step propagators, so the
pair (U, B) is adjoint-consistent to rounding: Tr[B(t) U(t)] is constant
along the grid.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid with K steps on [0, t_final]; nodes t_k = k * dt."""

    t_final: float
    steps: int

    def __post_init__(self) -> None:
        if self.steps < 1:
            raise ValueError("grid needs at least one step")
        if not (self.t_final > 0.0 and np.isfinite(self.t_final)):
            raise ValueError("t_final must be positive and finite")

    @property
    def dt(self) -> float:
        return self.t_final / self.steps

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_final, self.steps + 1)


def grid_for(t_final: float, dt: float) -> TimeGrid:
    """Grid with step closest to `dt` that divides t_final exactly."""
    steps = max(1, round(t_final / dt))
    return TimeGrid(t_final=t_final, steps=steps)


@dataclass
class ControlField:
    """Scalar control sampled at the K+1 nodes of a TimeGrid.

    Between nodes the field is linearly interpolated; propagation uses the
    midpoint values 0.5 * (C_k + C_{k+1}).
    """

    grid: TimeGrid
    samples: np.ndarray

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.shape != (self.grid.steps + 1,):
            raise ValueError(
                f"field needs {self.grid.steps + 1} samples, got {self.samples.shape}")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("field samples must be finite")

    @classmethod
    def zero(cls, grid: TimeGrid) -> "ControlField":
        return cls(grid, np.zeros(grid.steps + 1))

    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.samples[:-1] + self.samples[1:])

    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.samples)))


@dataclass
class PropagationResult:
    """Unitary trajectory U(t_k), k = 0..K, stacked as (K+1, d, d)."""

    grid: TimeGrid
    unitaries: np.ndarray

    @property
    def final(self) -> np.ndarray:
        return self.unitaries[-1]


@dataclass
class AdjointState:
    """Backward trajectory B(t_k), k = 0..K, stacked as (K+1, d, d)."""

    grid: TimeGrid
    matrices: np.ndarray

    @property
    def initial(self) -> np.ndarray:
        return self.matrices[0]


def _check_grid(field: ControlField, grid: Optional[TimeGrid]) -> TimeGrid:
    if grid is not None and grid != field.grid:
        raise ValueError(f"grid mismatch: field grid {field.grid}, requested {grid}")
    return field.grid


def step_propagators(terms, field: ControlField, grid: Optional[TimeGrid] = None) -> np.ndarray:
    """exp(-i (h_drift + c_mid h_ctrl) dt) for every step, stacked (K, d, d).

    Repeated midpoint values (constant or zero fields) are exponentiated
    once and broadcast back to the step axis.
    """
    grid = _check_grid(field, grid)
    dt = grid.dt
    c_mid = field.midpoints()
    if not np.all(np.isfinite(c_mid)):
        raise ValueError("non-finite field sample")
    values, inverse = np.unique(c_mid, return_inverse=True)
    hs = terms.h_drift[None, :, :] + values[:, None, None] * terms.h_ctrl[None, :, :]
    w, v = np.linalg.eigh(hs)
    phases = np.exp(-1j * dt * w)
    props = (v * phases[:, None, :]) @ np.conj(np.swapaxes(v, 1, 2))
    return props[inverse]


def propagate_forward(terms, field: ControlField, grid: Optional[TimeGrid] = None,
                      steps: Optional[np.ndarray] = None) -> PropagationResult:
    """Forward trajectory on the grid; `steps` reuses precomputed propagators."""
    grid = _check_grid(field, grid)
    if steps is None:
        steps = step_propagators(terms, field)
    d = steps.shape[1]
    unitaries = np.empty((grid.steps + 1, d, d), dtype=complex)
    unitaries[0] = np.eye(d)
    for k in range(grid.steps):
        np.matmul(steps[k], unitaries[k], out=unitaries[k + 1])
    return PropagationResult(grid=grid, unitaries=unitaries)


def final_unitary(terms, field: ControlField, grid: Optional[TimeGrid] = None,
                  steps: Optional[np.ndarray] = None) -> np.ndarray:
    """U(t_final) only, without storing the trajectory."""
    grid = _check_grid(field, grid)
    if steps is None:
        steps = step_propagators(terms, field)
    d = steps.shape[1]
    u = np.eye(d, dtype=complex)
    out = np.empty_like(u)
    for k in range(grid.steps):
        np.matmul(steps[k], u, out=out)
        u, out = out, u
    return u.copy()


def propagate_backward(terms, field: ControlField, b_final: np.ndarray,
                       grid: Optional[TimeGrid] = None,
                       steps: Optional[np.ndarray] = None) -> AdjointState:
    """Backward trajectory B(t_k) = B(t_{k+1}) exp(-i H_k dt) from B(t_K) = b_final."""
    grid = _check_grid(field, grid)
    if steps is None:
        steps = step_propagators(terms, field)
    b_final = np.asarray(b_final, dtype=complex)
    d = steps.shape[1]
    if b_final.shape != (d, d):
        raise ValueError("terminal matrix has wrong shape")
    matrices = np.empty((grid.steps + 1, d, d), dtype=complex)
    matrices[-1] = b_final
    for k in range(grid.steps - 1, -1, -1):
        np.matmul(matrices[k + 1], steps[k], out=matrices[k])
    return AdjointState(grid=grid, matrices=matrices)


def unitarity_defect(u: np.ndarray) -> float:
    """max-entry norm of U^dag U - I."""
    d = u.shape[-1]
    return float(np.max(np.abs(np.conj(np.swapaxes(u, -2, -1)) @ u - np.eye(d))))


def resample_field(field: ControlField, dt: float) -> ControlField:
    """Same field on a grid with step ~dt, via its defining linear interpolation."""
    grid = grid_for(field.grid.t_final, dt)
    if grid == field.grid:
        return field
    samples = np.interp(grid.times, field.grid.times, field.samples)
    return ControlField(grid, samples)


# --- closed-form two-particle dynamics (one qubit, one environment spin) ---

def rabi_frequency(omega1: float, omega2: float, gamma: float) -> float:
    """Flip-flop frequency 0.5 * sqrt((omega1 - omega2)^2 + gamma^2)."""
    return 0.5 * np.hypot(omega1 - omega2, gamma)


@dataclass
class TwoParticleSolution:
    """Uncontrolled two-particle state from |-,+>: amplitudes and reduced state.

    amp_minus_plus / amp_plus_minus are the amplitudes on |-,+> and |+,->;
    rho_q is the reduced qubit density matrix (diagonal in the |+>, |->
    basis), shaped (..., 2, 2) when t is an array.
    """

    rabi: float
    amp_minus_plus: np.ndarray
    amp_plus_minus: np.ndarray
    rho_q: np.ndarray

    def populations(self) -> tuple[np.ndarray, np.ndarray]:
        """(p_plus, p_minus) diagonal entries of rho_q."""
        return self.rho_q[..., 0, 0].real, self.rho_q[..., 1, 1].real


def analytic_two_particle(omega1: float, omega2: float, gamma: float,
                          t: np.ndarray | float) -> TwoParticleSolution:
    """Exact uncontrolled evolution for m = n = 1 starting from |-> x |+>.

    With Omega the flip-flop frequency and delta = omega1 - omega2:
      |psi(t)> = e^{-i gamma t / 4} { cos(Omega t) |-,+>
                 + i sin(Omega t) [ delta/(2 Omega) |-,+> + gamma/(2 Omega) |+,-> ] }
    Complete coherence revivals occur at t_k = k pi / Omega (and twice as
    often when omega1 = omega2).
    """
    t = np.asarray(t, dtype=float)
    omega = rabi_frequency(omega1, omega2, gamma)
    delta = omega1 - omega2
    phase = np.exp(-0.25j * gamma * t)
    a_mp = phase * (np.cos(omega * t) + 1j * np.sin(omega * t) * delta / (2.0 * omega))
    a_pm = phase * 1j * np.sin(omega * t) * gamma / (2.0 * omega)
    p_plus = np.abs(a_pm) ** 2
    p_minus = np.abs(a_mp) ** 2
    rho = np.zeros(t.shape + (2, 2), dtype=complex)
    rho[..., 0, 0] = p_plus
    rho[..., 1, 1] = p_minus
    return TwoParticleSolution(rabi=float(omega), amp_minus_plus=a_mp,
                               amp_plus_minus=a_pm, rho_q=rho)


def revival_time(omega1: float, omega2: float, gamma: float, k: int = 1) -> float:
    """k-th complete coherence-revival time k pi / Omega."""
    return k * np.pi / rabi_frequency(omega1, omega2, gamma)


# --- field CSV I/O ---

def field_to_csv(field: ControlField, path) -> None:
    """Write the field as two full-precision columns with header t,C."""
    times = field.grid.times
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "C"])
        for t, c in zip(times, field.samples):
            writer.writerow([repr(float(t)), repr(float(c))])


def field_from_csv(path) -> ControlField:
    """Read a t,C file back into a ControlField on its uniform grid."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 2:
        raise ValueError(f"{path}: expected two columns t,C")
    t, c = data[:, 0], data[:, 1]
    if len(t) < 2:
        raise ValueError(f"{path}: need at least two samples")
    if abs(t[0]) > 1e-12:
        raise ValueError(f"{path}: time axis must start at 0")
    dts = np.diff(t)
    if np.max(np.abs(dts - dts[0])) > 1e-9 * max(dts[0], 1e-30):
        raise ValueError(f"{path}: time axis must be uniform")
    grid = TimeGrid(t_final=float(t[-1]), steps=len(t) - 1)
    return ControlField(grid=grid, samples=c)
