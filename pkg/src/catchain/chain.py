"""Chain construction, projection and outcome sampling.

The post-interaction chain state is never built explicitly (it lives in a
(N+1)^M dimensional space).  Projecting the intermediate ensembles onto
x-basis number states factorizes the amplitude into nearest-neighbor
kernels over the odd-site number indices, so the exact unnormalized
bipartite state of the two end ensembles is a transfer-matrix contraction
costing O(M N^2) per outcome vector.  A literal full-state oracle is kept
for validation at small (N, M).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import fftconvolve

from catchain.ensemble import (
    EnsembleDim,
    log_binomial_row,
    xnumber_matrix,
    xnumber_overlap_coherent,
)

ORACLE_MAX_AMPLITUDES = 2_000_000

Outcomes = tuple[int, ...]


@dataclass(frozen=True)
class ChainSpec:
    """Chain of m_sites ensembles, interaction time and measurement offset."""

    m_sites: int
    dim: EnsembleDim
    time: float
    offset: float = 0.0

    def __post_init__(self):
        if self.m_sites < 2:
            raise ValueError(f"m_sites must be >= 2, got {self.m_sites}")

    @property
    def n_outcomes(self) -> int:
        """Number of intermediate measured sites (2..M-1)."""
        return self.m_sites - 2


@dataclass(frozen=True, eq=False)
class BipartiteState:
    """(N+1)x(N+1) amplitude matrix over (k_1, k_M) with its squared norm.

    When produced by projection the state is unnormalized and norm_sq is
    the outcome probability p_q.
    """

    dim: EnsembleDim
    amps: np.ndarray
    norm_sq: float

    @classmethod
    def from_amps(cls, dim: EnsembleDim, amps: np.ndarray) -> "BipartiteState":
        amps = np.asarray(amps, dtype=complex)
        if amps.shape != (dim.size, dim.size):
            raise ValueError(f"expected {(dim.size, dim.size)} amplitudes, got {amps.shape}")
        return cls(dim, amps, float(np.sum(np.abs(amps) ** 2)))


def _check_outcomes(spec: ChainSpec, outcomes: Sequence[int]) -> Outcomes:
    q = tuple(int(x) for x in outcomes)
    if len(q) != spec.n_outcomes:
        raise ValueError(f"expected {spec.n_outcomes} outcomes for M={spec.m_sites}, got {len(q)}")
    n = spec.dim.n_atoms
    if any(not 0 <= x <= n for x in q):
        raise ValueError(f"outcomes must lie in [0, {n}]: {q}")
    return q


def _end_weights(dim: EnsembleDim) -> np.ndarray:
    """sqrt(C_N^k / 2^N), the Fock weights of an equatorial coherent state."""
    n = dim.n_atoms
    return np.exp(0.5 * log_binomial_row(n) - 0.5 * n * math.log(2))


def _coherent_overlap_row(spec: ChainSpec, q: int) -> np.ndarray:
    """g[d+N] = <q|^(x) |coh(d*t + offset)>> for d = -N..N."""
    n = spec.dim.n_atoms
    return np.array(
        [xnumber_overlap_coherent(spec.dim, q, d * spec.time + spec.offset) for d in range(-n, n + 1)]
    )


def _even_kernel(spec: ChainSpec, q: int) -> np.ndarray:
    """G[k, k'] = <q|^(x) |coh((k - k')t + offset)>> for an even measured site."""
    n = spec.dim.n_atoms
    g = _coherent_overlap_row(spec, q)
    diff = np.subtract.outer(np.arange(n + 1), np.arange(n + 1))
    return g[diff + n]


def _odd_diag(spec: ChainSpec, q: int) -> np.ndarray:
    """d[k] = e^{ik phi} sqrt(C_N^k / 2^N) <q|^(x)|k> for an odd measured site."""
    n = spec.dim.n_atoms
    k = np.arange(n + 1)
    return np.exp(1j * k * spec.offset) * _end_weights(spec.dim) * xnumber_matrix(spec.dim)[q]


def _final_coherent_matrix(spec: ChainSpec) -> np.ndarray:
    """E[k', k_M] = sqrt(C_N^{k_M} / 2^N) e^{i k' k_M t}, the even-M end expansion."""
    n = spec.dim.n_atoms
    k = np.arange(n + 1)
    return np.exp(1j * spec.time * np.outer(k, k)) * _end_weights(spec.dim)[None, :]


def build_projected_state(spec: ChainSpec, outcomes: Sequence[int]) -> BipartiteState:
    """Exact unnormalized end-to-end state for a full set of measurement outcomes.

    Contracts boundary weights, even-site coherent kernels and odd-site
    diagonal factors left to right; norm_sq of the result is the outcome
    probability p_q.
    """
    q = _check_outcomes(spec, outcomes)
    m = spec.m_sites
    mat = np.diag(_end_weights(spec.dim)).astype(complex)
    for j in range(2, m):
        qj = q[j - 2]
        if j % 2 == 0:
            mat = mat @ _even_kernel(spec, qj)
        else:
            mat = mat * _odd_diag(spec, qj)[None, :]
    if m % 2 == 0:
        amps = mat @ _final_coherent_matrix(spec)
    else:
        amps = mat * _end_weights(spec.dim)[None, :]
    return BipartiteState.from_amps(spec.dim, amps)


def outcome_probability(spec: ChainSpec, outcomes: Sequence[int]) -> float:
    """p_q = <Psi_q|Psi_q> of the projected state."""
    return build_projected_state(spec, outcomes).norm_sq


# ---------------------------------------------------------------------------
# Exact sequential outcome sampling.
#
# Marginals over unmeasured suffixes use a doubled (density-layer) transfer
# contraction: summing a measured site's outcome over q collapses, by
# completeness, to a coherent-state overlap for even sites and to a Kronecker
# delta (unitarity of the x-basis change) for odd sites.


def _pair_overlap_row(spec: ChainSpec) -> np.ndarray:
    """F[d + 2N] = ((1 + e^{i d t}) / 2)^N for d = -2N..2N."""
    n = spec.dim.n_atoms
    d = np.arange(-2 * n, 2 * n + 1)
    return ((1 + np.exp(1j * d * spec.time)) / 2) ** n


def _toeplitz_from_diffs(h: np.ndarray, size: int) -> np.ndarray:
    """Matrix T[k, kb] = h[(k - kb) + center] from a vector over differences."""
    center = (len(h) - 1) // 2
    diff = np.subtract.outer(np.arange(size), np.arange(size))
    return h[diff + center]


def _diff_sums(mat: np.ndarray) -> np.ndarray:
    """g[s + n] = sum of mat[k, kb] over the diagonals k - kb = s, s = -n..n."""
    n = mat.shape[0] - 1
    return np.array([np.trace(mat, offset=-s) for s in range(-n, n + 1)])


def _suffix_environment(spec: ChainSpec, first_site: int) -> np.ndarray:
    """Env[k, kb] contracting sites first_site..M with all outcomes summed over.

    The paired index (k, kb) is the transfer variable entering site
    first_site (ket and bra layers).
    """
    n = spec.dim.n_atoms
    m = spec.m_sites
    pair = _pair_overlap_row(spec)
    c_row = np.exp(log_binomial_row(n) - n * math.log(2))
    if m % 2 == 0:
        env = _toeplitz_from_diffs(pair, n + 1)  # closure over the final coherent site
    else:
        env = np.diag(c_row).astype(complex)  # closure over the final number-basis site
    for j in range(m - 1, first_site - 1, -1):
        if j % 2 == 0:
            # Env'[k, kb] = sum_{s} pair[(k - kb) - s] g[s], g from diagonal sums
            g = _diff_sums(env)
            h = np.convolve(pair, g)[n : n + 4 * n + 1]  # index d + 2n, d = -2n..2n
            env = _toeplitz_from_diffs(h, n + 1)
        else:
            env = np.diag(c_row * np.diag(env))
    return env


def outcome_marginals(spec: ChainSpec, prefix: Sequence[int]) -> np.ndarray:
    """Joint probabilities p(prefix, q) for every outcome q at the next site.

    `prefix` fixes the outcomes of sites 2..len(prefix)+1; the remaining
    suffix is summed over exactly.
    """
    prefix = tuple(int(x) for x in prefix)
    if len(prefix) >= spec.n_outcomes:
        raise ValueError("prefix already covers all measured sites")
    n = spec.dim.n_atoms
    v = _end_weights(spec.dim)
    # ensemble 1 is unmeasured, so its ket and bra indices are contracted
    # diagonally from the start
    pair = np.diag(v**2).astype(complex)
    for idx, qj in enumerate(prefix):
        j = idx + 2
        if j % 2 == 0:
            g = _even_kernel(spec, qj)
            pair = g.T @ pair @ np.conj(g)
        else:
            d = _odd_diag(spec, qj)
            pair = pair * np.outer(d, np.conj(d))
    j = len(prefix) + 2  # site being measured now
    env = _suffix_environment(spec, j + 1)
    if j % 2 == 0:
        # p(q) = sum_{d,db} g_q[d] conj(g_q[db]) S[d, db] with
        # S[d, db] = sum_{k,kb} pair[k, kb] env[k - d, kb - db]; the lag matrix
        # S is the cross-correlation of pair with env, indexed d + n, db + n.
        s_mat = fftconvolve(pair, env[::-1, ::-1])
        gd = np.array([_coherent_overlap_row(spec, q) for q in range(n + 1)])
        probs = np.real(np.einsum("qd,de,qe->q", gd, s_mat, np.conj(gd), optimize=True))
    else:
        t_mat = pair * env
        x = xnumber_matrix(spec.dim)
        k = np.arange(n + 1)
        d_all = np.exp(1j * k * spec.offset)[None, :] * v[None, :] * x  # [q, k]
        probs = np.real(np.einsum("qk,kl,ql->q", d_all, t_mat, np.conj(d_all), optimize=True))
    return np.clip(probs, 0.0, None)


def sample_outcomes(spec: ChainSpec, rng_seed: int) -> tuple[Outcomes, float]:
    """Draw a full outcome vector from its exact joint distribution.

    Outcomes are drawn site by site from the exact conditional
    distributions; identical seeds give identical results (PCG64 stream
    via numpy's default_rng).  Returns (outcomes, probability).
    """
    rng = np.random.default_rng(rng_seed)
    if spec.n_outcomes == 0:
        return (), 1.0
    drawn: list[int] = []
    for _ in range(spec.n_outcomes):
        joint = outcome_marginals(spec, drawn)
        total = joint.sum()
        drawn.append(int(rng.choice(spec.dim.size, p=joint / total)))
    return tuple(drawn), outcome_probability(spec, drawn)


# ---------------------------------------------------------------------------
# Brute-force oracle.


def oracle_full_state(spec: ChainSpec) -> np.ndarray:
    """Literal (N+1)^M amplitude tensor of the post-interaction chain state.

    U is diagonal in the number product basis, so this is a single pass of
    phase multiplication over the initial product of coherent states.
    """
    n = spec.dim.n_atoms
    m = spec.m_sites
    total = (n + 1) ** m
    if total > ORACLE_MAX_AMPLITUDES:
        raise ValueError(
            f"oracle refuses (N+1)^M = {total} > {ORACLE_MAX_AMPLITUDES} amplitudes"
        )
    w = _end_weights(spec.dim)
    amps = np.ones((), dtype=complex)
    for _ in range(m):
        amps = np.multiply.outer(amps, w)
    k = np.arange(n + 1)
    phase = np.zeros(amps.shape)
    for j in range(1, m):  # Hamiltonian term (-1)^j n_j^a n_{j+1}^a, 1-indexed
        shape_a = [1] * m
        shape_a[j - 1] = n + 1
        shape_b = [1] * m
        shape_b[j] = n + 1
        phase = phase + ((-1) ** j) * k.reshape(shape_a) * k.reshape(shape_b)
    return amps * np.exp(-1j * spec.time * phase)


def oracle_project(full: np.ndarray, spec: ChainSpec, outcomes: Sequence[int]) -> BipartiteState:
    """Project intermediate sites of the full tensor: V(offset) then <q|^(x)."""
    q = _check_outcomes(spec, outcomes)
    n = spec.dim.n_atoms
    if full.shape != (n + 1,) * spec.m_sites:
        raise ValueError(f"full state shape {full.shape} does not match spec")
    x = xnumber_matrix(spec.dim)
    k = np.arange(n + 1)
    rot = np.exp(1j * k * spec.offset)
    out = full
    for j in range(spec.m_sites - 1, 1, -1):  # descending keeps earlier axes stable
        vec = x[q[j - 2]] * rot
        out = np.tensordot(out, vec, axes=([j - 1], [0]))
    return BipartiteState.from_amps(spec.dim, out)
