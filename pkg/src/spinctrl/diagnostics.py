"""Reduced-state diagnostics: entropy, time-resolved fidelity, Kraus maps.

These are read-only views on a propagated trajectory. The composite system
always evolves unitarily; decoherence shows up only after tracing out the
environment, and these helpers quantify it.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .objective import gate_distance
from .propagation import PropagationResult

ENTROPY_CLIP = 1e-12


def reference_initial_state(m: int, n: int) -> np.ndarray:
    """Product state with all qubits in |-> and all environment spins in |+>.

    Used for entropy and Kraus diagnostics only; the gate distance itself
    never sees an initial state.
    """
    dim = 2 ** (m + n)
    psi = np.zeros(dim, dtype=complex)
    psi[(2 ** m - 1) * 2 ** n] = 1.0
    return psi


def partial_trace_env(psi: np.ndarray, m: int, n: int) -> np.ndarray:
    """Reduced qubit density matrix of a pure composite state."""
    mat = np.asarray(psi, dtype=complex).reshape(2 ** m, 2 ** n)
    return mat @ mat.conj().T


def reduced_density(u_t: np.ndarray, psi0: np.ndarray, m: int, n: int) -> np.ndarray:
    """Qubit state after evolving psi0 with u_t and tracing out the environment."""
    return partial_trace_env(u_t @ psi0, m, n)


def von_neumann_entropy(rho: np.ndarray, trace_tol: float = 1e-6,
                        psd_tol: float = 1e-8) -> float:
    """-Tr(rho ln rho) with 0 ln 0 = 0.

    Accepts slightly non-PSD inputs: eigenvalues above -psd_tol are clipped
    to zero, anything lower raises. The trace must be 1 within trace_tol.
    """
    rho = np.asarray(rho)
    tr = np.trace(rho).real
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace {tr} deviates from 1")
    lam = np.linalg.eigvalsh(rho)
    if lam.min() < -psd_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam.min()}")
    lam = lam[lam > ENTROPY_CLIP]
    return float(-(lam * np.log(lam)).sum())


def _batch_entropy(rhos: np.ndarray) -> np.ndarray:
    lam = np.linalg.eigvalsh(rhos)
    lam = np.where(lam > ENTROPY_CLIP, lam, 1.0)  # ln 1 = 0 removes the clipped terms
    return -(lam * np.log(lam)).sum(axis=-1)


def entropy_trajectory(prop: PropagationResult, psi0: np.ndarray,
                       m: int, n: int) -> np.ndarray:
    """Qubit entropy at every grid node for the given initial state."""
    states = prop.unitaries @ psi0
    mats = states.reshape(-1, 2 ** m, 2 ** n)
    rhos = mats @ np.conj(np.swapaxes(mats, 1, 2))
    return _batch_entropy(rhos)


def fidelity_trajectory(prop: PropagationResult, gate: np.ndarray,
                        m: int, n: int) -> np.ndarray:
    """F(t_k) = 1 - J(U(t_k), gate) along the trajectory."""
    dm, dn = 2 ** m, 2 ** n
    u4 = prop.unitaries.reshape(-1, dm, dn, dm, dn)
    q = np.einsum("ik,tiakb->tab", gate.conj(), u4)
    s = np.linalg.svd(q, compute_uv=False)
    j = np.sqrt(np.clip(1.0 - s.sum(axis=-1) / (dm * dn), 0.0, 1.0))
    return 1.0 - j


@dataclass
class KrausSet:
    """Operator-sum representation of the reduced qubit dynamics.

    operators[nu, nu'] is the 2^m x 2^m block sqrt(p[nu']) <nu|U|nu'>
    (matrix elements taken in the environment basis); env_populations p
    are the initial environment occupation probabilities, assumed diagonal
    in the same basis.
    """

    operators: np.ndarray
    env_populations: np.ndarray

    def apply(self, rho_q: np.ndarray) -> np.ndarray:
        ops = self.operators.reshape(-1, *self.operators.shape[2:])
        return sum(k @ rho_q @ k.conj().T for k in ops)

    def completeness_defect(self) -> float:
        ops = self.operators.reshape(-1, *self.operators.shape[2:])
        acc = sum(k.conj().T @ k for k in ops)
        return float(np.max(np.abs(acc - np.eye(acc.shape[0]))))

    def offdiagonal_norms(self) -> np.ndarray:
        """Frobenius norms of the blocks that mix distinct environment states."""
        dn = self.operators.shape[0]
        norms = np.sqrt((np.abs(self.operators) ** 2).sum(axis=(-2, -1)))
        return norms[~np.eye(dn, dtype=bool)]


def frobenius_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x, "fro"))


def kraus_operators(u_t: np.ndarray, env_populations: np.ndarray,
                    m: int, n: int) -> KrausSet:
    """Kraus blocks of the reduced map at one time, from the composite unitary."""
    p = np.asarray(env_populations, dtype=float)
    dn = 2 ** n
    if p.shape != (dn,):
        raise ValueError(f"environment populations must have length {dn}")
    if np.any(p < -1e-12) or abs(p.sum() - 1.0) > 1e-10:
        raise ValueError("environment populations must form a probability vector")
    dm = 2 ** m
    u4 = u_t.reshape(dm, dn, dm, dn)
    ops = np.sqrt(np.clip(p, 0.0, None))[None, :, None, None] * u4.transpose(1, 3, 0, 2)
    return KrausSet(operators=ops, env_populations=p)


def kraus_nonunitarity(ks: KrausSet) -> float:
    """Root-sum-square Frobenius norm of the environment-mixing Kraus blocks.

    For one qubit and one environment spin prepared in |+> this reduces to
    the norm of the single block connecting |+> to |->.
    """
    return float(np.sqrt((ks.offdiagonal_norms() ** 2).sum()))


def nonunitarity_trajectory(prop: PropagationResult, env_populations: np.ndarray,
                            m: int, n: int) -> np.ndarray:
    """kraus_nonunitarity along the whole trajectory, vectorized."""
    p = np.asarray(env_populations, dtype=float)
    dm, dn = 2 ** m, 2 ** n
    u4 = prop.unitaries.reshape(-1, dm, dn, dm, dn)
    blocks = np.sqrt(np.clip(p, 0.0, None))[None, None, :, None, None] \
        * u4.transpose(0, 2, 4, 1, 3)
    norms_sq = (np.abs(blocks) ** 2).sum(axis=(-2, -1))
    off = ~np.eye(dn, dtype=bool)
    return np.sqrt(norms_sq[:, off].sum(axis=-1))


def write_trajectory_csv(path, times: np.ndarray, entropy: np.ndarray,
                         fidelity: np.ndarray, nonunitarity: np.ndarray) -> None:
    """Plot-ready trajectory export with columns t,S_vN,F,K21_fr."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "S_vN", "F", "K21_fr"])
        for row in zip(times, entropy, fidelity, nonunitarity):
            writer.writerow([repr(float(x)) for x in row])
