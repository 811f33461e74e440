//! Exact finite-volume realisation of the augmented-space generators: the
//! fixed-ω super-operator and Pillet's formula, the momentum fibres 𝓛̂_k,
//! their block decomposition, Γ_k(w), Λ(t,k,z) and the diffusion matrix.

mod blocks;
mod checks;
mod error;
mod fiber;
mod gamma;
mod omega;
mod schur;
mod smallg;
mod superop;
mod tauberian;

pub use blocks::{block_decompose, current_profiles, Block, BlockDecomp, RANGE_THRESHOLD};
pub use checks::{
    h3_dissipation_probe, resolvent_limit_check, sector_scan, ResolventReport, SectorReport,
};
pub use error::AugmentedError;
pub use fiber::{FiberModel, FiberParts, NoiseBasis, SiteFrame, DENSE_BUDGET};
pub use gamma::{admissible_times, gamma_kw, lambda_tkz, sector_budget, GammaReport, PieceNorms};
pub use omega::OmegaSpace;
pub use schur::{
    diffusion_schur, diffusion_schur_from, restricted_m, FiberBlocks, DENSE_SCHUR_LIMIT,
    SOLVE_TOLERANCE,
};
pub use smallg::{
    kernel_dimension, small_g_coefficient, small_g_from, SmallGReport, STABILIZATION_TOLERANCE,
};
pub use superop::{
    accretivity_probe, build_l_fixed_omega, build_lhat_k, fiber_consistency, lhat_from_fiber,
    pillet_expectation, SuperBasis, SuperOperator, PADE_LIMIT,
};
pub use tauberian::{
    default_eta_grid, diffusion_tauberian, resolvent_pairs, tauberian_sequence, TauberianReport,
};
