"""Exact symmetric-subspace math for a single ensemble of N qubits.

Everything lives in the bosonic (Dicke/Fock) basis |k>, k = 0..N, of the
fully symmetric subspace.  Binomial magnitudes are handled in log space
throughout, with signs and phases tracked separately, so the functions
stay finite well past the point where C(N, k) overflows a double.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

# S^z |k> = (2k - N) |k> in the Pauli-sum convention used here.

SPIN_MATRIX_MAX_ATOMS = 30  # spin_operator_matrix is a test utility only


@dataclass(frozen=True)
class EnsembleDim:
    """Number of bosons/qubits per ensemble; Fock basis size is n_atoms + 1."""

    n_atoms: int

    def __post_init__(self):
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")

    @property
    def size(self) -> int:
        return self.n_atoms + 1


@dataclass(frozen=True, eq=False)
class FockVector:
    """Complex amplitudes of one ensemble over number states k = 0..N."""

    dim: EnsembleDim
    amps: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (self.dim.size,):
            raise ValueError(f"expected {self.dim.size} amplitudes, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("non-finite amplitude")
        object.__setattr__(self, "amps", amps)

    @property
    def norm_sq(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))


@dataclass(frozen=True)
class EquatorialCoherent:
    """Spin coherent state |e^{i alpha}/sqrt2, 1/sqrt2>> on the Bloch equator."""

    dim: EnsembleDim
    alpha: float

    @property
    def alpha_mod(self) -> float:
        """Angle reduced mod 2*pi, for comparisons only."""
        return self.alpha % (2 * math.pi)

    def fock(self) -> FockVector:
        return equatorial_fock(self.dim, self.alpha)


def log_binomial(n: int, k: int) -> float:
    """Natural log of C(n, k), via log-gamma."""
    if n < 0 or k < 0 or k > n:
        raise ValueError(f"log_binomial domain error: n={n}, k={k}")
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


def log_binomial_row(n: int) -> np.ndarray:
    """log C(n, k) for all k = 0..n."""
    k = np.arange(n + 1)
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def _weighted_powers(k: np.ndarray, weight: complex, n_max: int) -> np.ndarray:
    """log|weight|*k as an array, with 0 * log(0) := 0 for the k = 0 term."""
    mag = abs(weight)
    if mag == 0.0:
        out = np.full(k.shape, -np.inf)
        out[k == 0] = 0.0
        return out
    return k * math.log(mag)


def coherent_fock(dim: EnsembleDim, alpha_weight: complex, beta_weight: complex) -> FockVector:
    """Spin coherent state |alpha, beta>>: amplitude sqrt(C_N^k) alpha^k beta^{N-k}."""
    norm = abs(alpha_weight) ** 2 + abs(beta_weight) ** 2
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"(alpha, beta) not normalized: |a|^2+|b|^2 = {norm}")
    n = dim.n_atoms
    k = np.arange(n + 1)
    log_mag = (
        0.5 * log_binomial_row(n)
        + _weighted_powers(k, alpha_weight, n)
        + _weighted_powers(n - k, beta_weight, n)
    )
    phase = k * np.angle(alpha_weight) + (n - k) * np.angle(beta_weight)
    amps = np.exp(log_mag) * np.exp(1j * phase)
    return FockVector(dim, amps)


def equatorial_fock(dim: EnsembleDim, alpha: float) -> FockVector:
    """Equatorial coherent state with phase angle alpha."""
    return coherent_fock(dim, np.exp(1j * alpha) / math.sqrt(2), 1 / math.sqrt(2))


@lru_cache(maxsize=32)
def _xnumber_matrix(n_atoms: int) -> np.ndarray:
    """Real matrix X[q, k] = <q|^(x) |k>, i.e. columns of e^{-i S^y pi/4}.

    The alternating inner sum over the double-sum formula is evaluated with
    exact integer arithmetic (it is a Kravchuk polynomial value), so there is
    no cancellation error; only the final scaling is done in log space.
    """
    n = n_atoms
    out = np.empty((n + 1, n + 1))
    lg = gammaln(np.arange(n + 1) + 1)  # lg[j] = log j!
    for q in range(n + 1):
        for k in range(n + 1):
            lo = max(0, k - (n - q))
            hi = min(q, k)
            acc = 0
            for l in range(lo, hi + 1):
                m = k - l
                term = math.comb(q, l) * math.comb(n - q, m)
                acc += -term if (n - q - m) % 2 else term
            if acc == 0:
                out[q, k] = 0.0
                continue
            log_scale = 0.5 * (lg[k] + lg[n - k] - lg[q] - lg[n - q]) - 0.5 * n * math.log(2)
            out[q, k] = math.copysign(math.exp(math.log(abs(acc)) + log_scale), acc)
    return out


def xnumber_matrix(dim: EnsembleDim) -> np.ndarray:
    """Full (N+1)x(N+1) basis-change matrix [<q|^(x)|k>] (cached per N)."""
    return _xnumber_matrix(dim.n_atoms)


def xnumber_overlap_fock(dim: EnsembleDim, q: int, k: int) -> complex:
    """<q|^(x) |k> from the double-sum formula (real-valued)."""
    n = dim.n_atoms
    if not (0 <= q <= n and 0 <= k <= n):
        raise ValueError(f"index out of range: q={q}, k={k}, N={n}")
    return complex(_xnumber_matrix(n)[q, k])


def xnumber_overlap_coherent(dim: EnsembleDim, q: int, alpha: float) -> complex:
    """<q|^(x) | e^{i alpha}/sqrt2, 1/sqrt2>>, closed form.

    Equals i^{N-q} e^{i N alpha/2} sqrt(C_N^q) cos^q(alpha/2) sin^{N-q}(alpha/2);
    agrees with contracting the double-sum matrix against the coherent
    amplitudes (checked in tests, no global-phase discrepancy).
    """
    n = dim.n_atoms
    if not 0 <= q <= n:
        raise ValueError(f"q out of range: q={q}, N={n}")
    c = math.cos(alpha / 2)
    s = math.sin(alpha / 2)
    if (c == 0.0 and q > 0) or (s == 0.0 and q < n):
        return 0j
    log_mag = 0.5 * log_binomial(n, q)
    sign = 1.0
    if q > 0:
        log_mag += q * math.log(abs(c))
        sign *= (-1.0) ** q if c < 0 else 1.0
    if q < n:
        log_mag += (n - q) * math.log(abs(s))
        sign *= (-1.0) ** (n - q) if s < 0 else 1.0
    return complex(sign * math.exp(log_mag) * (1j) ** ((n - q) % 4) * np.exp(1j * n * alpha / 2))


def phase_rotation(state: FockVector, phi: float) -> FockVector:
    """Equatorial rotation e^{i n^a phi}: amplitude on |k> gains e^{i k phi}."""
    k = np.arange(state.dim.size)
    return FockVector(state.dim, state.amps * np.exp(1j * k * phi))


def spin_operator_matrix(dim: EnsembleDim, axis: str) -> np.ndarray:
    """S^x, S^y, S^z or n^a in the number basis.  Test utility, N <= 30."""
    n = dim.n_atoms
    if n > SPIN_MATRIX_MAX_ATOMS:
        raise ValueError(f"spin_operator_matrix is a test utility, refuses N={n} > {SPIN_MATRIX_MAX_ATOMS}")
    k = np.arange(n + 1)
    if axis == "z":
        return np.diag((2 * k - n).astype(complex))
    if axis == "number":
        return np.diag(k.astype(complex))
    # a^dag b raises k with matrix element sqrt((k+1)(N-k))
    raise_elem = np.sqrt((k[:-1] + 1) * (n - k[:-1]))
    up = np.diag(raise_elem, -1)  # [k+1, k] block
    if axis == "x":
        return (up + up.T).astype(complex)
    if axis == "y":
        return -1j * up + 1j * up.T
    raise ValueError(f"unknown axis {axis!r}")
