"""Composite spin system: qubits plus environment particles, couplings, Hamiltonians.

The system is a register of N = m + n two-level particles. The first m
particles are the directly driven qubits, the remaining n form the
environment. Everything is dense: N <= 8 keeps the Hilbert space at
dim <= 256, where sparse machinery buys nothing.

Conventions (fixed, other modules rely on them):
  * natural units, hbar = 1 and omega_1 = 1 by default;
  * tensor slot 1 is the leftmost Kronecker factor; qubits occupy the
    leading slots, environment particles the trailing ones;
  * single-particle basis |+>, |-> with S_z|+/-> = +/- 1/2 |+/->, mapped to
    the standard basis vectors e_0, e_1.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

_PAULI = {
    "x": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}

TOPOLOGY_KINDS = ("star", "chain_nn", "lattice_2d", "lattice_3d", "two_qubit_triangle")


def spin_operator(n_particles: int, index: int, axis: str) -> np.ndarray:
    """Spin-1/2 operator (sigma_axis / 2) for particle `index` (1-based).

    Returns the 2^N x 2^N matrix I x ... x (sigma/2) x ... x I with the
    nontrivial factor in tensor slot `index`.
    """
    if axis not in _PAULI:
        raise ValueError(f"axis must be one of x, y, z, got {axis!r}")
    if not 1 <= index <= n_particles:
        raise IndexError(f"particle index {index} out of range 1..{n_particles}")
    op = np.eye(1, dtype=complex)
    eye2 = np.eye(2, dtype=complex)
    for slot in range(1, n_particles + 1):
        op = np.kron(op, 0.5 * _PAULI[axis] if slot == index else eye2)
    return op


@dataclass
class SpinSystem:
    """Static model parameters: particle counts, frequencies, dipoles, couplings.

    `couplings[i, j]` is the isotropic Heisenberg exchange constant between
    particles i and j (0-based); the matrix must be symmetric with zero
    diagonal and nonnegative entries.
    """

    m: int
    n: int
    frequencies: np.ndarray
    couplings: np.ndarray
    dipoles: Optional[np.ndarray] = None
    topology: Optional[str] = None

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("need at least one qubit (m >= 1)")
        if self.n < 0:
            raise ValueError("environment size n must be >= 0")
        N = self.m + self.n
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        if self.frequencies.shape != (N,):
            raise ValueError(f"frequencies must have length N = {N}")
        self.couplings = np.asarray(self.couplings, dtype=float)
        if self.couplings.shape != (N, N):
            raise ValueError(f"couplings must be an {N}x{N} matrix")
        if not np.array_equal(self.couplings, self.couplings.T):
            raise ValueError("couplings must be symmetric")
        if np.any(np.diag(self.couplings) != 0.0):
            raise ValueError("couplings must have zero diagonal")
        if np.any(self.couplings < 0.0):
            raise ValueError("couplings must be nonnegative")
        if self.dipoles is None:
            self.dipoles = np.ones(self.m)
        else:
            self.dipoles = np.asarray(self.dipoles, dtype=float)
            if self.dipoles.shape != (self.m,):
                raise ValueError(f"dipoles must have length m = {self.m}")

    @property
    def n_particles(self) -> int:
        return self.m + self.n

    @property
    def dim(self) -> int:
        return 2 ** self.n_particles

    def replace_couplings(self, couplings: np.ndarray) -> "SpinSystem":
        return SpinSystem(self.m, self.n, self.frequencies.copy(),
                          np.asarray(couplings, dtype=float),
                          self.dipoles.copy(), self.topology)

    def replace_frequencies(self, frequencies: np.ndarray) -> "SpinSystem":
        return SpinSystem(self.m, self.n, np.asarray(frequencies, dtype=float),
                          self.couplings.copy(), self.dipoles.copy(), self.topology)


@dataclass(frozen=True)
class Topology:
    """Coupling scheme tag plus the generated N x N coupling matrix."""

    kind: str
    coupling: np.ndarray


def make_topology(kind: str, m: int, n: int, gamma: float | None = None,
                  gamma12: float | None = None, gamma13: float | None = None,
                  gamma23: float | None = None) -> Topology:
    """Build the coupling matrix for one of the supported schemes.

    star          one qubit coupled with strength gamma to every environment
                  particle; no environment-environment couplings
    chain_nn      one qubit at the center of a five-site chain (n = 4),
                  nearest-neighbor couplings only: e4-e2-q1-e3-e5
    lattice_2d    qubit at the center of a square plaquette (n = 4); corner
                  particles are dropped, so the couplings reduce to the star
    lattice_3d    qubit at the center of an octahedron (n = 6); same reduction
    two_qubit_triangle
                  two qubits and one environment particle, all pairwise
                  coupled (gamma12, gamma13, gamma23)
    """
    N = m + n
    if kind == "two_qubit_triangle":
        if (m, n) != (2, 1):
            raise ValueError("two_qubit_triangle requires m = 2, n = 1")
        if gamma12 is None or gamma13 is None or gamma23 is None:
            raise ValueError("two_qubit_triangle requires gamma12, gamma13, gamma23")
        c = np.zeros((3, 3))
        c[0, 1] = c[1, 0] = gamma12
        c[0, 2] = c[2, 0] = gamma13
        c[1, 2] = c[2, 1] = gamma23
        return Topology(kind, c)

    if gamma is None:
        raise ValueError(f"{kind} requires a coupling strength gamma")
    if m != 1:
        raise ValueError(f"{kind} requires m = 1")
    if kind == "star":
        c = np.zeros((N, N))
        c[0, 1:] = c[1:, 0] = gamma
        return Topology(kind, c)
    if kind == "chain_nn":
        if n != 4:
            raise ValueError("chain_nn is defined for n = 4")
        c = np.zeros((5, 5))
        for i, j in ((0, 1), (0, 2), (1, 3), (2, 4)):
            c[i, j] = c[j, i] = gamma
        return Topology(kind, c)
    if kind == "lattice_2d":
        if n != 4:
            raise ValueError("lattice_2d is defined for n = 4")
        return Topology(kind, make_topology("star", m, n, gamma).coupling)
    if kind == "lattice_3d":
        if n != 6:
            raise ValueError("lattice_3d is defined for n = 6")
        return Topology(kind, make_topology("star", m, n, gamma).coupling)
    raise ValueError(f"unknown topology kind {kind!r}")


@dataclass(frozen=True)
class HamiltonianTerms:
    """Drift and control parts of H(t) = h_drift + C(t) * h_ctrl.

    h_drift collects the free precession and the Heisenberg exchange;
    h_ctrl = -sum_i mu_i S_ix over the qubits only, so the dipole operator
    that couples to the field is mu_op = -h_ctrl.
    """

    h_drift: np.ndarray
    h_ctrl: np.ndarray

    @property
    def dim(self) -> int:
        return self.h_drift.shape[0]

    @property
    def mu_op(self) -> np.ndarray:
        return -self.h_ctrl


def assemble_hamiltonian(system: SpinSystem) -> HamiltonianTerms:
    """Assemble dense drift and control matrices for a spin system.

    h_drift = sum_i omega_i S_iz - sum_{i<j} gamma_ij S_i . S_j
    h_ctrl  = -sum_{i<=m} mu_i S_ix
    """
    N = system.n_particles
    dim = system.dim
    h_drift = np.zeros((dim, dim), dtype=complex)
    sx = [spin_operator(N, i, "x") for i in range(1, N + 1)]
    sy = [spin_operator(N, i, "y") for i in range(1, N + 1)]
    sz = [spin_operator(N, i, "z") for i in range(1, N + 1)]
    for i in range(N):
        h_drift += system.frequencies[i] * sz[i]
    for i in range(N):
        for j in range(i + 1, N):
            g = system.couplings[i, j]
            if g != 0.0:
                h_drift -= g * (sx[i] @ sx[j] + sy[i] @ sy[j] + sz[i] @ sz[j])
    h_ctrl = np.zeros((dim, dim), dtype=complex)
    for i in range(system.m):
        h_ctrl -= system.dipoles[i] * sx[i]
    return HamiltonianTerms(h_drift=h_drift, h_ctrl=h_ctrl)
