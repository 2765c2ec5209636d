"""Simulator for macroscopic entanglement distribution on chains of bosonic qubit ensembles."""

from catchain.ensemble import (
    EnsembleDim,
    EquatorialCoherent,
    FockVector,
    coherent_fock,
    equatorial_fock,
    log_binomial,
    phase_rotation,
    spin_operator_matrix,
    xnumber_overlap_coherent,
    xnumber_overlap_fock,
)
from catchain.chain import (
    BipartiteState,
    ChainSpec,
    build_projected_state,
    oracle_full_state,
    oracle_project,
    outcome_marginals,
    outcome_probability,
    sample_outcomes,
)
from catchain.spincat import (
    CatLabel,
    CollapseRecord,
    MagicSpec,
    ProtocolReport,
    apply_corrections,
    approx_projected_state,
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
from catchain.analysis import (
    DensityMatrix,
    Spectrum,
    entanglement_entropy,
    fidelity,
    hermitian_eigenvalues,
    jacobi_eigenvalues,
    reduced_density,
    target_m2,
    target_m3,
    von_neumann_entropy,
)

__all__ = [name for name in dir() if not name.startswith("_")]
