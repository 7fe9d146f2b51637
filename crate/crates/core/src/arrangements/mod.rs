//! Sparsity-indexed structures on coefficient vectors and experiments on
//! how a norm distorts along subspaces spanned by basis vectors.

pub mod io;
mod refute;
mod subspace;
mod support;

pub use refute::{linfty_eps_limit, linfty_refute, loc_hilbert_check, LinftyWitness, LocHilbertOptions, LocHilbertReport, Side};
pub use subspace::{
    asymptotic_block_size, block_decomposition, default_block_size, john_cross_polytope, kashin_experiment,
    random_basis_experiment, subspace_distortion, BasisExperiment, BasisOrigin, BasisRow, BlockReport, BlockRow,
    DistortionBounds, DistortionSearch, KashinRow, SubspaceBasis,
};
pub use support::{
    bit_string, cyclic_length, cyclic_length_of, distortion_budget, elias_gamma, indicator, kol_encode, kol_encode_bits,
    kol_proxy, profile_of, sparsity, support_indicator, SparsityProfile,
};
