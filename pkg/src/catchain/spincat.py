"""Spin-cat states, magic-time machinery and the deterministic protocol runner.

At interaction time t = 2*pi/L the chain state factorizes over L cat
branches.  With the measurement offset phi = pi/(2L) every outcome
collapses each intermediate ensemble onto a single coherent branch, the
branch labels are read off the outcome via Gaussian peak positions, and
local phase rotations correct the end state to a fixed entangled target.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from catchain.analysis import fidelity
from catchain.chain import BipartiteState, ChainSpec, build_projected_state, sample_outcomes
from catchain.ensemble import (
    EnsembleDim,
    FockVector,
    equatorial_fock,
    log_binomial_row,
    xnumber_matrix,
)


@dataclass(frozen=True)
class MagicSpec:
    """Magic-time parameters: L branches fix t = 2*pi/L and phi = pi/(2L)."""

    l_branches: int
    dim: EnsembleDim

    def __post_init__(self):
        if self.l_branches < 1:
            raise ValueError(f"l_branches must be >= 1, got {self.l_branches}")

    @property
    def time(self) -> float:
        return 2 * math.pi / self.l_branches

    @property
    def offset(self) -> float:
        return math.pi / (2 * self.l_branches)

    @property
    def branches_separated(self) -> bool:
        """Coherent branches are approximately orthogonal when L <= sqrt(N)."""
        return self.l_branches <= math.sqrt(self.dim.n_atoms)

    def chain(self, m_sites: int) -> ChainSpec:
        return ChainSpec(m_sites, self.dim, self.time, self.offset)


@dataclass(frozen=True)
class CatLabel:
    """Residue class m (mod L) with the exact log of Z_m = sum_{k=m mod L} C_N^k."""

    l_branches: int
    residue: int
    log_norm_z: float

    @property
    def norm_z(self) -> float:
        return math.exp(self.log_norm_z)


def cat_label(dim: EnsembleDim, l_branches: int, residue: int) -> CatLabel:
    if not 0 <= residue < l_branches:
        raise ValueError(f"residue {residue} not in [0, {l_branches})")
    logc = log_binomial_row(dim.n_atoms)
    mask = np.arange(dim.size) % l_branches == residue
    return CatLabel(l_branches, residue, float(logsumexp(logc[mask])))


def cat_state(dim: EnsembleDim, label: CatLabel) -> FockVector:
    """|C_m> supported on k = m (mod L), exactly normalized via log-space Z_m."""
    logc = log_binomial_row(dim.n_atoms)
    k = np.arange(dim.size)
    amps = np.where(
        k % label.l_branches == label.residue,
        np.exp(0.5 * logc - 0.5 * label.log_norm_z),
        0.0,
    )
    return FockVector(dim, amps)


def _cat_amps(dim: EnsembleDim, l_branches: int, residue: int) -> np.ndarray:
    return cat_state(dim, cat_label(dim, l_branches, residue % l_branches)).amps


@dataclass(frozen=True)
class FourierReport:
    """Deviations of the cat/coherent Fourier pair, with the analytic bound."""

    forward_deviation: float
    inverse_deviation: float
    bound: float


def cat_fourier_pair(dim: EnsembleDim, l_branches: int) -> FourierReport:
    """Check both Fourier identities between cat states and coherent states.

    Forward: (1/sqrt L) sum_m e^{-2 pi i n m / L} |C_m> vs coh(-2 pi n / L).
    Inverse: |C_m> vs (1/sqrt L) sum_n e^{2 pi i n m / L} coh(-2 pi n / L).
    Both deviations are bounded by 10 cos^N(pi / L).
    """
    big_l = l_branches
    cats = [_cat_amps(dim, big_l, m) for m in range(big_l)]
    cohs = [equatorial_fock(dim, -2 * math.pi * n / big_l).amps for n in range(big_l)]
    fwd = 0.0
    inv = 0.0
    for n in range(big_l):
        mix = sum(
            np.exp(-2j * math.pi * n * m / big_l) * cats[m] for m in range(big_l)
        ) / math.sqrt(big_l)
        fwd = max(fwd, float(np.max(np.abs(mix - cohs[n]))))
    for m in range(big_l):
        mix = sum(
            np.exp(2j * math.pi * n * m / big_l) * cohs[n] for n in range(big_l)
        ) / math.sqrt(big_l)
        inv = max(inv, float(np.max(np.abs(mix - cats[m]))))
    analytic = 10 * abs(math.cos(math.pi / big_l)) ** dim.n_atoms if big_l > 1 else 0.0
    bound = max(analytic, 1e-12)  # floor covers rounding when the bound is exact 0
    return FourierReport(fwd, inv, bound)


def rotated_cat_distribution(dim: EnsembleDim, label: CatLabel, phi: float) -> np.ndarray:
    """p_q = |<q|^(x) e^{i phi n^a} |C_m>|^2 over q = 0..N; sums to 1."""
    amps = cat_state(dim, label).amps * np.exp(1j * np.arange(dim.size) * phi)
    return np.abs(xnumber_matrix(dim) @ amps) ** 2


def peak_position(dim: EnsembleDim, l_branches: int, phi: float, label: int, site_parity: str) -> float:
    """Gaussian peak center q_peak of the outcome distribution for a branch label.

    Odd sites measure a collapsed cat branch at angle -(2 pi n/L - phi); even
    sites measure a conditionally rotated coherent state at 2 pi m/L + phi.
    Both give q_peak = N cos^2(theta) with theta = label*pi/L -/+ phi/2.
    """
    if site_parity == "odd":
        theta = label * math.pi / l_branches - phi / 2
    elif site_parity == "even":
        theta = label * math.pi / l_branches + phi / 2
    else:
        raise ValueError(f"site_parity must be 'even' or 'odd', got {site_parity!r}")
    return dim.n_atoms * math.cos(theta) ** 2


def classify_outcome(dim: EnsembleDim, l_branches: int, phi: float, q: int, site_parity: str) -> int:
    """Branch label whose q_peak is closest to the outcome (ties to the smaller)."""
    if not 0 <= q <= dim.n_atoms:
        raise ValueError(f"q out of range: {q}")
    dists = [
        abs(q - peak_position(dim, l_branches, phi, label, site_parity))
        for label in range(l_branches)
    ]
    return int(np.argmin(dists))


@dataclass(frozen=True)
class CollapseRecord:
    """Per-site collapse labels of the intermediate ensembles.

    even_labels covers the even intermediate sites in ascending site order,
    odd_labels the odd ones; the site index sets depend on the parity of
    m_sites, so the chain length is carried along.
    """

    m_sites: int
    l_branches: int
    even_labels: tuple[int, ...]
    odd_labels: tuple[int, ...]

    def __post_init__(self):
        even_sites = [j for j in range(2, self.m_sites) if j % 2 == 0]
        odd_sites = [j for j in range(2, self.m_sites) if j % 2 == 1]
        if len(self.even_labels) != len(even_sites) or len(self.odd_labels) != len(odd_sites):
            raise ValueError(
                f"label counts {len(self.even_labels)}/{len(self.odd_labels)} do not "
                f"match M={self.m_sites} ({len(even_sites)} even, {len(odd_sites)} odd sites)"
            )
        if any(not 0 <= x < self.l_branches for x in self.even_labels + self.odd_labels):
            raise ValueError("labels must lie in [0, L)")

    @property
    def m_even_total(self) -> int:
        return sum(self.even_labels) % self.l_branches

    @property
    def n_odd_total(self) -> int:
        return sum(self.odd_labels) % self.l_branches


def classify_outcomes(spec: MagicSpec, m_sites: int, outcomes: Sequence[int]) -> CollapseRecord:
    """Classify every intermediate outcome into its collapse label."""
    if len(outcomes) != m_sites - 2:
        raise ValueError(f"expected {m_sites - 2} outcomes, got {len(outcomes)}")
    even, odd = [], []
    for j, q in zip(range(2, m_sites), outcomes):
        parity = "even" if j % 2 == 0 else "odd"
        label = classify_outcome(spec.dim, spec.l_branches, spec.offset, int(q), parity)
        (even if j % 2 == 0 else odd).append(label)
    return CollapseRecord(m_sites, spec.l_branches, tuple(even), tuple(odd))


def approx_projected_state(spec: MagicSpec, m_sites: int, record: CollapseRecord) -> BipartiteState:
    """Normalized cat-branch approximation of the projected end-to-end state.

    Even M pairs cat states with coherent branches shifted by -m_even_total;
    odd M pairs cat states with label-shifted cat states.  (The shift sign
    is the one that matches the exact engine.)
    """
    if record.m_sites != m_sites or record.l_branches != spec.l_branches:
        raise ValueError("collapse record does not match the requested chain")
    big_l = spec.l_branches
    dim = spec.dim
    amps = np.zeros((dim.size, dim.size), dtype=complex)
    for m in range(big_l):
        phase = np.exp(2j * math.pi * m * record.n_odd_total / big_l)
        left = _cat_amps(dim, big_l, m)
        if m_sites % 2 == 0:
            right = equatorial_fock(dim, 2 * math.pi * (m - record.m_even_total) / big_l).amps
        else:
            right = _cat_amps(dim, big_l, m - record.m_even_total)
        amps += phase * np.outer(left, right)
    amps /= np.linalg.norm(amps)
    return BipartiteState.from_amps(dim, amps)


def _zero_record(m_sites: int, l_branches: int) -> CollapseRecord:
    n_even = len([j for j in range(2, m_sites) if j % 2 == 0])
    n_odd = m_sites - 2 - n_even
    return CollapseRecord(m_sites, l_branches, (0,) * n_even, (0,) * n_odd)


def bell_cat_target(dim: EnsembleDim, l_branches: int, parity: str) -> BipartiteState:
    """The ideal magic-time end state: cat-coherent (even) or cat-cat (odd)."""
    if parity == "even":
        m_sites = 4
    elif parity == "odd":
        m_sites = 3
    else:
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    spec = MagicSpec(l_branches, dim)
    return approx_projected_state(spec, m_sites, _zero_record(m_sites, l_branches))


def shifted_cat_target(dim: EnsembleDim, l_branches: int, shift: int) -> BipartiteState:
    """sum_m |C_m>|C_{m-shift}> / sqrt(L), the odd-M post-correction target."""
    spec = MagicSpec(l_branches, dim)
    record = CollapseRecord(3, l_branches, (shift % l_branches,), ())
    return approx_projected_state(spec, 3, record)


def apply_corrections(state: BipartiteState, record: CollapseRecord, l_branches: int) -> BipartiteState:
    """Local phase rotations undoing the collapse labels.

    Rows (ensemble 1) gain e^{-2 pi i n_odd_total k / L}; for even chains the
    columns (ensemble M) gain e^{+2 pi i m_even_total k / L}.  For odd chains
    only the row correction applies; the residual label shift is compared
    against the shifted cat target instead.
    """
    k = np.arange(state.dim.size)
    row = np.exp(-2j * math.pi * record.n_odd_total * k / l_branches)
    amps = state.amps * row[:, None]
    if record.m_sites % 2 == 0:
        col = np.exp(2j * math.pi * record.m_even_total * k / l_branches)
        amps = amps * col[None, :]
    return BipartiteState(state.dim, amps, state.norm_sq)


@dataclass(frozen=True)
class ProtocolReport:
    """One end-to-end protocol run: outcomes, labels and fidelities."""

    spec: MagicSpec
    m_sites: int
    seed: int
    outcomes: tuple[int, ...]
    record: CollapseRecord
    probability: float
    fidelity_pre: float
    fidelity_post: float


def run_protocol(spec: MagicSpec, m_sites: int, rng_seed: int) -> ProtocolReport:
    """Sample a measurement record at the magic time and correct the end state.

    Steps: implicit chain preparation and interaction for t = 2 pi / L,
    offset rotation by pi / (2L), exact outcome sampling, classification of
    every outcome into a collapse label, and the local phase corrections.
    Reports fidelities to the parity-matched target before and after the
    correction.
    """
    chain = spec.chain(m_sites)
    outcomes, prob = sample_outcomes(chain, rng_seed)
    state = build_projected_state(chain, outcomes)
    record = classify_outcomes(spec, m_sites, outcomes)
    parity = "even" if m_sites % 2 == 0 else "odd"
    pre_target = bell_cat_target(spec.dim, spec.l_branches, parity)
    corrected = apply_corrections(state, record, spec.l_branches)
    if parity == "even":
        post_target = pre_target
    else:
        post_target = shifted_cat_target(spec.dim, spec.l_branches, record.m_even_total)
    return ProtocolReport(
        spec=spec,
        m_sites=m_sites,
        seed=rng_seed,
        outcomes=outcomes,
        record=record,
        probability=prob,
        fidelity_pre=fidelity(state, pre_target),
        fidelity_post=fidelity(corrected, post_target),
    )
