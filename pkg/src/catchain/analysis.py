"""Reduced density matrices, spectra, entanglement entropy and fidelities."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from catchain.chain import BipartiteState
from catchain.ensemble import EnsembleDim, log_binomial_row, xnumber_overlap_coherent

JACOBI_OFF_THRESHOLD = 1e-13
JACOBI_MAX_SWEEPS = 100
EIG_CLAMP_WINDOW = -1e-10


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace density matrix of a single ensemble."""

    dim: EnsembleDim
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (self.dim.size, self.dim.size):
            raise ValueError(f"expected shape {(self.dim.size,) * 2}, got {entries.shape}")
        if np.max(np.abs(entries - entries.conj().T)) > 1e-12 * max(1.0, np.abs(entries).max()):
            raise ValueError("matrix is not Hermitian within tolerance")
        if abs(np.trace(entries).real - 1.0) > 1e-10:
            raise ValueError(f"trace is {np.trace(entries).real}, expected 1")
        object.__setattr__(self, "entries", entries)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigenvalues of a density matrix, descending, clamped and renormalized."""

    eigenvalues: np.ndarray


def reduced_density(state: BipartiteState, keep: str) -> DensityMatrix:
    """Partial trace of |Psi><Psi| / p over the discarded end ensemble.

    Computed as a Gram matrix of the normalized amplitude matrix, so the
    result is Hermitian positive semidefinite by construction.
    """
    if state.norm_sq <= 0.0:
        raise ValueError("zero-norm state has no density matrix (impossible outcome)")
    b = state.amps / math.sqrt(state.norm_sq)
    if keep == "first":
        rho = b @ b.conj().T
    elif keep == "last":
        rho = b.T @ b.conj()
    else:
        raise ValueError(f"keep must be 'first' or 'last', got {keep!r}")
    return DensityMatrix(state.dim, rho)


def jacobi_eigenvalues(mat: np.ndarray) -> np.ndarray:
    """Eigenvalues of a complex Hermitian matrix by cyclic Jacobi rotations.

    Each pivot is phased to a real 2x2 symmetric problem and annihilated
    with the standard stable rotation.  Sweeps stop when the off-diagonal
    Frobenius norm falls below threshold (at most 100 sweeps).
    """
    a = np.asarray(mat, dtype=complex)
    size = a.shape[0]
    if a.shape != (size, size):
        raise ValueError(f"expected a square matrix, got {a.shape}")
    scale = max(1.0, float(np.linalg.norm(a)))
    if np.max(np.abs(a - a.conj().T)) > 1e-10 * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    a = a.copy()
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(max(0.0, float(np.sum(np.abs(a) ** 2) - np.sum(np.abs(np.diag(a)) ** 2))))
        if off <= JACOBI_OFF_THRESHOLD * scale:
            break
        for p in range(size - 1):
            for q in range(p + 1, size):
                z = a[p, q]
                if abs(z) <= 1e-150 * scale:  # negligible and tau would overflow
                    continue
                phase = np.conj(z) / abs(z)
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2 * abs(z))
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1 + tau * tau))
                c = 1 / math.sqrt(1 + t * t)
                s = t * c
                # unitary on the (p, q) block: [[c, s], [-s*phase, c*phase]]
                col_p = c * a[:, p] - s * phase * a[:, q]
                col_q = s * a[:, p] + c * phase * a[:, q]
                a[:, p] = col_p
                a[:, q] = col_q
                row_p = c * a[p, :] - s * np.conj(phase) * a[q, :]
                row_q = s * a[p, :] + c * np.conj(phase) * a[q, :]
                a[p, :] = row_p
                a[q, :] = row_q
    return np.sort(np.diag(a).real)[::-1]


def hermitian_eigenvalues(mat: DensityMatrix) -> Spectrum:
    """Spectrum of a density matrix: Jacobi eigenvalues, clamped to [0, 1]."""
    eig = jacobi_eigenvalues(mat.entries)
    if eig.min() < EIG_CLAMP_WINDOW:
        raise ValueError(f"eigenvalue {eig.min()} below the clamping window")
    eig = np.clip(eig, 0.0, None)
    return Spectrum(eig / eig.sum())


def von_neumann_entropy(spec: Spectrum) -> float:
    """Entropy in bits, -sum lambda log2 lambda, with 0 log 0 := 0."""
    lam = spec.eigenvalues
    lam = lam[lam > 0]
    return float(-np.sum(lam * np.log2(lam)))


def entanglement_entropy(state: BipartiteState) -> float:
    """Entropy of either end ensemble of a pure bipartite state, in bits."""
    return von_neumann_entropy(hermitian_eigenvalues(reduced_density(state, "last")))


def fidelity(a: BipartiteState, b: BipartiteState) -> float:
    """|<a|b>|^2 after normalizing both states."""
    if a.norm_sq <= 0.0 or b.norm_sq <= 0.0:
        raise ValueError("fidelity of a zero-norm state is undefined")
    overlap = np.vdot(a.amps, b.amps)
    return float(abs(overlap) ** 2 / (a.norm_sq * b.norm_sq))


def target_m2(dim: EnsembleDim, t: float) -> BipartiteState:
    """The two-ensemble post-interaction state, the even-parity target."""
    n = dim.n_atoms
    w = np.exp(0.5 * log_binomial_row(n) - 0.5 * n * math.log(2))
    k = np.arange(n + 1)
    amps = np.outer(w, w) * np.exp(1j * t * np.outer(k, k))
    return BipartiteState.from_amps(dim, amps)


def target_m3(dim: EnsembleDim, t: float) -> BipartiteState:
    """The three-ensemble state projected on q_2 = N (offset 0), odd-parity target."""
    n = dim.n_atoms
    w = np.exp(0.5 * log_binomial_row(n))
    omega = np.array(
        [[xnumber_overlap_coherent(dim, n, (k1 - k3) * t) for k3 in range(n + 1)] for k1 in range(n + 1)]
    )
    amps = np.outer(w, w) * omega
    amps = amps / np.linalg.norm(amps)
    return BipartiteState.from_amps(dim, amps)
