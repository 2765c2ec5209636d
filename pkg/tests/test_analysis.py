"""Density matrices, Jacobi spectra, entropy and fidelity."""
import math

import numpy as np
import pytest

from catchain.analysis import (
    DensityMatrix,
    entanglement_entropy,
    fidelity,
    hermitian_eigenvalues,
    jacobi_eigenvalues,
    reduced_density,
    target_m2,
    target_m3,
    von_neumann_entropy,
)
from catchain.chain import BipartiteState, ChainSpec, build_projected_state
from catchain.ensemble import EnsembleDim, equatorial_fock
from catchain.spincat import bell_cat_target, cat_label, cat_state


def _random_state(n, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=(n + 1, n + 1)) + 1j * rng.normal(size=(n + 1, n + 1))
    return BipartiteState.from_amps(EnsembleDim(n), amps)


def test_density_matrix_validation():
    dim = EnsembleDim(1)
    with pytest.raises(ValueError):
        DensityMatrix(dim, np.array([[0.5, 1.0], [0.0, 0.5]]))
    with pytest.raises(ValueError):
        DensityMatrix(dim, np.array([[0.7, 0.0], [0.0, 0.7]]))


def test_reduced_density_product_state_is_rank_one():
    dim = EnsembleDim(4)
    v = equatorial_fock(dim, 0.9).amps
    state = BipartiteState.from_amps(dim, np.outer(v, v))
    rho = reduced_density(state, "last")
    eig = hermitian_eigenvalues(rho).eigenvalues
    assert eig[0] == pytest.approx(1.0, abs=1e-12)
    assert np.max(np.abs(eig[1:])) < 1e-12


def test_reduced_density_trace_and_errors():
    state = _random_state(5, 1)
    for keep in ("first", "last"):
        rho = reduced_density(state, keep)
        assert np.trace(rho.entries).real == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        reduced_density(state, "middle")
    zero = BipartiteState.from_amps(EnsembleDim(2), np.zeros((3, 3)))
    with pytest.raises(ValueError):
        reduced_density(zero, "first")


def test_bell_cat_l2_eigenvalues():
    state = bell_cat_target(EnsembleDim(10), 2, "odd")
    eig = hermitian_eigenvalues(reduced_density(state, "first")).eigenvalues
    assert eig[0] == pytest.approx(0.5, abs=1e-12)
    assert eig[1] == pytest.approx(0.5, abs=1e-12)
    assert np.max(np.abs(eig[2:])) < 1e-12


def test_jacobi_trivial_spectra():
    assert jacobi_eigenvalues(np.eye(6) / 6) == pytest.approx(np.full(6, 1 / 6))
    assert jacobi_eigenvalues(np.diag([0.3, 0.7])) == pytest.approx([0.7, 0.3])


def test_jacobi_rejects_non_hermitian():
    with pytest.raises(ValueError):
        jacobi_eigenvalues(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_jacobi_against_determinant_oracle():
    # each returned eigenvalue must be a root of det(A - lambda I)
    rng = np.random.default_rng(7)
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    a = a + a.conj().T
    for lam in jacobi_eigenvalues(a):
        assert abs(np.linalg.det(a - lam * np.eye(4))) < 1e-8 * np.linalg.norm(a) ** 3


def test_jacobi_moment_identities():
    rng = np.random.default_rng(19)
    a = rng.normal(size=(21, 21)) + 1j * rng.normal(size=(21, 21))
    a = (a + a.conj().T) / 2
    eig = jacobi_eigenvalues(a)
    assert eig.sum() == pytest.approx(np.trace(a).real, abs=1e-9 * np.linalg.norm(a))
    assert np.sum(eig**2) == pytest.approx(np.linalg.norm(a) ** 2, rel=1e-9)
    assert np.sum(eig**3) == pytest.approx(np.trace(a @ a @ a).real, rel=1e-9)


def test_entropy_values():
    from catchain.analysis import Spectrum

    assert von_neumann_entropy(Spectrum(np.array([1.0, 0.0]))) == 0.0
    assert von_neumann_entropy(Spectrum(np.array([0.5, 0.5]))) == pytest.approx(1.0)
    assert von_neumann_entropy(Spectrum(np.full(8, 1 / 8))) == pytest.approx(3.0)


def test_fidelity_basics():
    a = _random_state(4, 2)
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-12)
    dim = EnsembleDim(4)
    c0 = np.outer(cat_state(dim, cat_label(dim, 2, 0)).amps, [1, 0, 0, 0, 0])
    c1 = np.outer(cat_state(dim, cat_label(dim, 2, 1)).amps, [1, 0, 0, 0, 0])
    assert fidelity(
        BipartiteState.from_amps(dim, c0), BipartiteState.from_amps(dim, c1)
    ) == pytest.approx(0.0, abs=1e-14)
    zero = BipartiteState.from_amps(dim, np.zeros((5, 5)))
    with pytest.raises(ValueError):
        fidelity(a, zero)


def test_engine_fidelity_at_magic_time():
    n = 20
    t = 2 * math.pi / 3
    target = target_m2(EnsembleDim(n), t)
    for m in (4, 6):
        state = build_projected_state(ChainSpec(m, EnsembleDim(n), t, 0.0), (n,) * (m - 2))
        assert fidelity(state, target) >= 1 - 1e-6


def test_target_m2_entropies():
    dim = EnsembleDim(20)
    assert entanglement_entropy(target_m2(dim, 0.0)) == pytest.approx(0.0, abs=1e-12)
    assert entanglement_entropy(target_m2(dim, math.pi)) == pytest.approx(1.0, abs=1e-10)
    assert entanglement_entropy(target_m2(dim, 2 * math.pi / 3)) == pytest.approx(
        math.log2(3), abs=1e-4
    )


def test_target_m3_structure():
    dim = EnsembleDim(12)
    state = target_m3(dim, math.pi)
    bell = bell_cat_target(dim, 2, "odd")
    assert fidelity(state, bell) >= 1 - 1e-10
    sym = target_m3(dim, 2 * math.pi / 3)
    assert np.max(np.abs(sym.amps - sym.amps.T)) < 1e-12
    assert sym.norm_sq == pytest.approx(1.0, abs=1e-12)
