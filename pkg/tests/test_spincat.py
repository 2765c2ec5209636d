"""Cat states, magic-time classification, corrections and the protocol."""
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from catchain.analysis import entanglement_entropy, fidelity
from catchain.chain import ChainSpec, build_projected_state
from catchain.ensemble import EnsembleDim, equatorial_fock, log_binomial_row
from catchain.spincat import (
    CollapseRecord,
    MagicSpec,
    approx_projected_state,
    apply_corrections,
    bell_cat_target,
    cat_fourier_pair,
    cat_label,
    cat_state,
    classify_outcome,
    classify_outcomes,
    peak_position,
    rotated_cat_distribution,
    run_protocol,
    shifted_cat_target,
)


def test_magic_spec_derived_quantities():
    spec = MagicSpec(4, EnsembleDim(100))
    assert spec.time == pytest.approx(math.pi / 2)
    assert spec.offset == pytest.approx(math.pi / 8)
    assert spec.branches_separated
    assert not MagicSpec(5, EnsembleDim(20)).branches_separated
    with pytest.raises(ValueError):
        MagicSpec(0, EnsembleDim(4))


def test_cat_norms_partition_binomials():
    # sum_m Z_m = 2^N, checked in log space
    n = 37
    logs = [cat_label(EnsembleDim(n), 5, m).log_norm_z for m in range(5)]
    assert logsumexp(logs) == pytest.approx(n * math.log(2), abs=1e-10)


def test_cat_l1_is_coherent():
    dim = EnsembleDim(9)
    cat = cat_state(dim, cat_label(dim, 1, 0))
    assert cat.amps == pytest.approx(equatorial_fock(dim, 0.0).amps, abs=1e-12)


def test_cat_orthonormality():
    dim = EnsembleDim(10)
    cats = [cat_state(dim, cat_label(dim, 2, m)).amps for m in range(2)]
    assert np.vdot(cats[0], cats[1]) == 0.0
    for c in cats:
        assert np.vdot(c, c).real == pytest.approx(1.0, abs=1e-12)


def test_cat_inverse_fourier_sum():
    # |C_m> equals the inverse Fourier sum of coherent states up to cos^N(pi/L)
    dim = EnsembleDim(30)
    big_l = 3
    for m in range(big_l):
        mix = sum(
            np.exp(2j * math.pi * n * m / big_l) * equatorial_fock(dim, -2 * math.pi * n / big_l).amps
            for n in range(big_l)
        ) / math.sqrt(big_l)
        cat = cat_state(dim, cat_label(dim, big_l, m)).amps
        assert np.max(np.abs(mix - cat)) < 1e-6


def test_fourier_pair_bounds():
    assert cat_fourier_pair(EnsembleDim(14), 2).forward_deviation < 1e-12
    assert cat_fourier_pair(EnsembleDim(14), 2).inverse_deviation < 1e-12
    rep3 = cat_fourier_pair(EnsembleDim(30), 3)
    assert max(rep3.forward_deviation, rep3.inverse_deviation) < 1e-6
    rep4 = cat_fourier_pair(EnsembleDim(16), 4)
    assert max(rep4.forward_deviation, rep4.inverse_deviation) < rep4.bound


def test_rotated_cat_distribution_sums_to_one():
    dim = EnsembleDim(24)
    for big_l, phi in ((2, 0.0), (3, math.pi / 6), (4, 0.41)):
        p = rotated_cat_distribution(dim, cat_label(dim, big_l, 1 % big_l), phi)
        assert p.sum() == pytest.approx(1.0, abs=1e-10)
        assert p.min() >= 0.0


def test_classification_examples():
    dim = EnsembleDim(100)
    phi = math.pi / 8
    assert classify_outcome(dim, 4, phi, 96, "odd") == 0
    assert peak_position(dim, 4, phi, 0, "odd") == pytest.approx(
        100 * math.cos(math.pi / 16) ** 2
    )
    # outcome exactly at a peak returns that label
    for label in range(4):
        q = round(peak_position(dim, 4, phi, label, "odd"))
        assert classify_outcome(dim, 4, phi, q, "odd") == label
    with pytest.raises(ValueError):
        classify_outcome(dim, 4, phi, 101, "odd")


def test_peak_map_injective_with_offset():
    for n, big_l in ((20, 4), (100, 4), (50, 3)):
        dim = EnsembleDim(n)
        phi = math.pi / (2 * big_l)
        for parity in ("even", "odd"):
            peaks = [round(peak_position(dim, big_l, phi, lab, parity)) for lab in range(big_l)]
            assert len(set(peaks)) == big_l


def test_collapse_record_validation():
    rec = CollapseRecord(6, 3, (1, 2), (2, 2))
    assert rec.m_even_total == 0
    assert rec.n_odd_total == 1
    with pytest.raises(ValueError):
        CollapseRecord(6, 3, (1,), (2, 2))
    with pytest.raises(ValueError):
        CollapseRecord(6, 3, (1, 3), (2, 2))


def test_classify_outcomes_site_parity():
    spec = MagicSpec(2, EnsembleDim(100))
    rec = classify_outcomes(spec, 6, (100, 0, 100, 0))
    assert rec.even_labels == (0, 0)  # sites 2 and 4
    assert rec.odd_labels == (1, 1)  # sites 3 and 5
    with pytest.raises(ValueError):
        classify_outcomes(spec, 6, (1, 2))


def test_bell_cat_target_entropies():
    assert entanglement_entropy(bell_cat_target(EnsembleDim(20), 1, "even")) < 1e-10
    assert entanglement_entropy(bell_cat_target(EnsembleDim(20), 2, "even")) == pytest.approx(
        1.0, abs=1e-10
    )
    assert entanglement_entropy(bell_cat_target(EnsembleDim(30), 3, "odd")) == pytest.approx(
        math.log2(3), abs=1e-5
    )
    with pytest.raises(ValueError):
        bell_cat_target(EnsembleDim(10), 2, "both")


def test_approx_state_all_zero_labels_is_bell_cat():
    dim = EnsembleDim(40)
    spec = MagicSpec(2, dim)
    rec = CollapseRecord(4, 2, (0,), (0,))
    assert fidelity(approx_projected_state(spec, 4, rec), bell_cat_target(dim, 2, "even")) == pytest.approx(1.0, abs=1e-12)


def test_approx_matches_exact_engine():
    # the branch approximation tracks the exact state for every single outcome
    dim = EnsembleDim(100)
    spec = MagicSpec(3, dim)
    chain = spec.chain(3)
    for q2 in (0, 50, 100):
        exact = build_projected_state(chain, (q2,))
        rec = classify_outcomes(spec, 3, (q2,))
        assert fidelity(exact, approx_projected_state(spec, 3, rec)) >= 0.95


def test_apply_corrections_zero_record_is_identity():
    dim = EnsembleDim(10)
    spec = MagicSpec(3, dim)
    state = build_projected_state(spec.chain(4), (4, 7))
    rec = CollapseRecord(4, 3, (0,), (0,))
    assert np.array_equal(apply_corrections(state, rec, 3).amps, state.amps)


def test_corrections_improve_even_chain_fidelity():
    dim = EnsembleDim(50)
    for big_l in (2, 3):
        spec = MagicSpec(big_l, dim)
        chain = spec.chain(4)
        target = bell_cat_target(dim, big_l, "even")
        fids = []
        for seed in range(5):
            from catchain.chain import sample_outcomes

            outcomes, _ = sample_outcomes(chain, seed)
            state = build_projected_state(chain, outcomes)
            rec = classify_outcomes(spec, 4, outcomes)
            corrected = apply_corrections(state, rec, big_l)
            assert fidelity(corrected, target) >= fidelity(state, target) - 1e-12
            fids.append(fidelity(corrected, target))
        # corrected fidelity is outcome independent
        assert max(fids) - min(fids) < 0.02


def test_shifted_cat_target_shape():
    dim = EnsembleDim(12)
    plain = shifted_cat_target(dim, 3, 0)
    assert fidelity(plain, bell_cat_target(dim, 3, "odd")) == pytest.approx(1.0, abs=1e-12)
    shifted = shifted_cat_target(dim, 3, 1)
    assert fidelity(plain, shifted) < 1e-10


def test_run_protocol_l1_is_exact():
    report = run_protocol(MagicSpec(1, EnsembleDim(15)), 4, 3)
    assert report.fidelity_post == pytest.approx(1.0, abs=1e-9)


def test_forced_all_n_outcomes_zero_offset():
    # q_j = N, phi=0 at t=pi gives the ideal Bell-cat end state exactly
    n = 20
    dim = EnsembleDim(n)
    state = build_projected_state(ChainSpec(6, dim, math.pi, 0.0), (n,) * 4)
    assert fidelity(state, bell_cat_target(dim, 2, "even")) >= 1 - 1e-8


def test_run_protocol_reports_consistent_fields():
    spec = MagicSpec(2, EnsembleDim(30))
    report = run_protocol(spec, 5, 11)
    assert len(report.outcomes) == 3
    assert 0.0 < report.probability <= 1.0
    assert 0.0 <= report.fidelity_pre <= 1.0 + 1e-12
    assert report.fidelity_post >= report.fidelity_pre - 1e-12
