"""State-independent gate distance and its derivative with respect to U.

The figure of merit compares the full evolution operator U of qubits plus
environment against a target gate G acting on the qubits alone. A perfect
gate only requires U = G x Phi for some unitary Phi on the environment, so
the distance minimizes the Frobenius gap over all such Phi. The minimum
has a closed form through the environment-indexed overlap matrix

    Q[nu, nu'] = sum_{i,i'} conj(G[i, i']) <i,nu| U |i',nu'>,

namely  J = sqrt(1 - 2^{-N} * sum of singular values of Q),  attained at
the unitary polar factor of Q. J lies in [0, 1]; the gate fidelity is
F = 1 - J. No initial state enters anywhere.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Optional

import numpy as np

SV_FLOOR = 1e-10

_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)

GATES = {
    "hadamard": _H,
    "identity": np.eye(2, dtype=complex),
    "pi8": np.array([[1.0, 0.0], [0.0, np.exp(0.25j * np.pi)]], dtype=complex),
    "cnot": np.array([[1, 0, 0, 0],
                      [0, 1, 0, 0],
                      [0, 0, 0, 1],
                      [0, 0, 1, 0]], dtype=complex),
}


@dataclass(frozen=True)
class GateTarget:
    """Named unitary target acting on the 2^m-dimensional qubit register."""

    name: str
    matrix: np.ndarray

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.matrix.shape[0])))


def gate_target(name: str) -> GateTarget:
    key = name.lower()
    if key not in GATES:
        raise KeyError(f"unknown gate {name!r}; choose from {sorted(GATES)}")
    return GateTarget(name=key, matrix=GATES[key].copy())


def gate_from_csv(path) -> GateTarget:
    """Load a custom target from rows of re,im pairs (one row per matrix row)."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            vals = [float(x) for x in row]
            if len(vals) % 2 != 0:
                raise ValueError(f"{path}: rows must hold re,im pairs")
            rows.append([complex(vals[2 * j], vals[2 * j + 1])
                         for j in range(len(vals) // 2)])
    g = np.array(rows, dtype=complex)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise ValueError(f"{path}: matrix must be square, got {g.shape}")
    d = g.shape[0]
    if d & (d - 1) or d < 2:
        raise ValueError(f"{path}: dimension must be a power of two >= 2")
    if np.max(np.abs(g.conj().T @ g - np.eye(d))) > 1e-10:
        raise ValueError(f"{path}: matrix is not unitary")
    return GateTarget(name="custom", matrix=g)


def env_overlap(u: np.ndarray, gate: np.ndarray, m: int, n: int) -> np.ndarray:
    """Contract U with the conjugated target over the qubit indices.

    Returns the 2^n x 2^n matrix whose singular values determine the gate
    distance. Relies on the qubits-first tensor ordering: composite index
    a = i * 2^n + nu.
    """
    dm, dn = 2 ** m, 2 ** n
    if u.shape != (dm * dn, dm * dn):
        raise ValueError(f"U must be {dm * dn}x{dm * dn}, got {u.shape}")
    if gate.shape != (dm, dm):
        raise ValueError(f"gate must be {dm}x{dm}, got {gate.shape}")
    u4 = u.reshape(dm, dn, dm, dn)
    return np.einsum("ik,iakb->ab", gate.conj(), u4)


@dataclass
class DistanceResult:
    """Distance J, fidelity F = 1 - J, and the overlap data behind them.

    env_unitary is the environment transformation closest to factorizing U,
    recovered from the polar decomposition of the overlap matrix.
    """

    distance: float
    fidelity: float
    overlap: np.ndarray
    singular_values: np.ndarray
    env_unitary: np.ndarray

    @property
    def rank_deficient(self) -> bool:
        return bool(self.singular_values.min() < SV_FLOOR)


def gate_distance(u: np.ndarray, gate: np.ndarray, m: int, n: int) -> DistanceResult:
    """Distance between U and the target gate, minimized over environment unitaries.

    The raw value 1 - 2^{-N} sum(sigma) is clamped to [0, 1] against
    rounding at the 1e-12 level before the square root.
    """
    q = env_overlap(u, gate, m, n)
    uq, s, vqh = np.linalg.svd(q)
    raw = 1.0 - s.sum() / 2 ** (m + n)
    j = float(np.sqrt(np.clip(raw, 0.0, 1.0)))
    return DistanceResult(distance=j, fidelity=1.0 - j, overlap=q,
                          singular_values=s, env_unitary=uq @ vqh)


def closed_distance(u_qubit: np.ndarray, gate: np.ndarray) -> tuple[float, float]:
    """(J, J_cs) for a closed qubit register with unitary evolution u_qubit.

    J = sqrt(1 - 2^{-m} |Tr(G^dag U_q)|); J_cs = J^2 is the squared variant
    quoted in closed-system work. Insensitive to a global phase of u_qubit.
    """
    dm = gate.shape[0]
    raw = float(np.clip(1.0 - abs(np.trace(gate.conj().T @ u_qubit)) / dm, 0.0, 1.0))
    return float(np.sqrt(raw)), raw


def distance_gradient(u: np.ndarray, gate: np.ndarray, m: int, n: int,
                      dist: Optional[DistanceResult] = None) -> np.ndarray:
    """Derivative of the distance with respect to the entries of U.

    This is the generalized complex (Wirtinger) derivative: conj(U) is held
    fixed, so the sensitivity of J to a real perturbation of Re/Im U[a, b]
    is twice the real/negative-imaginary part of the returned entry. In
    closed form,

        dJ/dU = -(2^{-N} / (4 J)) * kron(conj(G), W^T),
        W = (Q^dag Q)^{-1/2} Q^dag = V U^dag  from the SVD  Q = U S V^dag.

    Singular values below SV_FLOOR are regularized (sigma / SV_FLOOR in
    place of 1), which callers can detect via dist.rank_deficient. At the
    exact optimum J = 0 the gradient is the zero matrix.
    """
    if dist is None:
        dist = gate_distance(u, gate, m, n)
    dim = 2 ** (m + n)
    if dist.distance == 0.0:
        return np.zeros((dim, dim), dtype=complex)
    uq, s, vqh = np.linalg.svd(dist.overlap)
    scale = s / np.maximum(s, SV_FLOOR)
    w = (vqh.conj().T * scale) @ uq.conj().T
    coeff = -(1.0 / dim) / (4.0 * dist.distance)
    return coeff * np.kron(gate.conj(), w.T)


def adjoint_terminal(u: np.ndarray, gate: np.ndarray, m: int, n: int,
                     dist: Optional[DistanceResult] = None) -> np.ndarray:
    """Terminal condition for the backward adjoint: B(t_f) = -(dJ/dU)^T."""
    return -distance_gradient(u, gate, m, n, dist).T
