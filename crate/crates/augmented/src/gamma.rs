//! Γ_k(w) with its accretivity, dissipation and norm bounds, and
//! Λ(t,k,z) = t⟨f_q, Γ_q(z/t) f_q⟩ with q = k/√t.

use crate::blocks::BlockDecomp;
use crate::error::AugmentedError;
use crate::schur::FiberBlocks;
use fluxlat_noise::nondegeneracy_chi;
use fluxlat_numeric::{
    dense::{
        hermitian_eigenvalues, hermitian_part, inner, min_hermitian_part_eigenvalue, spectral_norm,
    },
    CMatrix, Real, C,
};

/// Operator-norm bounds of the fibre pieces: ‖K̂_k‖ ≤ 2Σ|h|, ‖Û‖ = max|ω(x) − ω(0)|,
/// ‖V̂‖ ≤ 2 max|v|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PieceNorms<T> {
    pub kinetic: T,
    pub potential: T,
    pub coupling: T,
}

impl<T: Real> PieceNorms<T> {
    pub fn of(decomp: &BlockDecomp<T>) -> Self {
        let fm = &decomp.fiber;
        let kinetic = fm
            .hopping
            .entries
            .iter()
            .fold(T::zero(), |a, e| a + e.amp.norm_sqr().sqrt())
            * T::lit(2.0);
        let potential = fm.omega.lambda * T::lit(if fm.w_dim() > 1 { 2.0 } else { 0.0 });
        let vmax = fm
            .chain
            .observable
            .iter()
            .fold(T::zero(), |a, v| a.max(v.abs()));
        Self {
            kinetic,
            potential,
            coupling: vmax * T::lit(2.0),
        }
    }

    /// N̄ = ‖K̂‖ + ‖Û‖ + g‖V̂‖.
    pub fn total(&self, g: T) -> T {
        self.kinetic + self.potential + g * self.coupling
    }
}

#[derive(Debug, Clone)]
pub struct GammaReport<T: Real> {
    pub w: C<T>,
    pub gamma: CMatrix<T>,
    pub norm: T,
    /// min eigenvalue of the Hermitian part of Γ⁻¹.
    pub accretivity: T,
    /// min over unit f ∈ Ĥ₂ of Re⟨f, V̂†(w + L̂₃)⁻¹V̂f⟩.
    pub dissipation: T,
    pub dissipation_bound: T,
    /// (τ/g²χ)(1 + τ(N̄ + 1 + M̄))².
    pub norm_bound: T,
    pub n_bar: T,
    pub m_bar: T,
    pub chi: T,
    pub tau: T,
}

/// Sector budget b' = 2b + ‖K̂‖ + ‖Û‖ + g‖V̂‖ used for the default M̄ = b' + 1.
pub fn sector_budget<T: Real>(decomp: &BlockDecomp<T>, g: T) -> T {
    T::lit(2.0) * decomp.fiber.generator.sector.0 + PieceNorms::of(decomp).total(g)
}

pub fn gamma_kw<T: Real>(
    decomp: &BlockDecomp<T>,
    g: T,
    k: &[T],
    w: C<T>,
    twisted: bool,
    m_bar: Option<T>,
) -> Result<GammaReport<T>, AugmentedError> {
    if w.re <= T::zero() {
        return Err(AugmentedError::NotAccretive { re: w.re.as_f64() });
    }
    let fm = &decomp.fiber;
    let blocks = FiberBlocks::new(decomp, k, g, twisted)?;
    let n2 = blocks.h2_dim();
    let eye = CMatrix::identity(n2, n2);
    let coupling = blocks.coupling(w, &eye)?;
    let mut inv = blocks.l2.clone()
        + &blocks.q * blocks.q.adjoint() / w
        + &coupling * C::new(g * g, T::zero());
    for i in 0..n2 {
        inv[(i, i)] += w;
    }
    let gamma = fluxlat_numeric::dense::RefinedLu::new(inv.clone()).solve(&eye)?;
    let tau = fm.generator.tau();
    let chi = nondegeneracy_chi(&fm.chain, &fm.lattice, &fm.disorder)?.chi;
    let n_bar = PieceNorms::of(decomp).total(g);
    let m_bar = m_bar.unwrap_or_else(|| sector_budget(decomp, g) + T::one());
    let wabs = w.norm_sqr().sqrt();
    let one = T::one();
    let dissipation_bound = (chi / tau) / (one + tau * (n_bar + wabs)).powi(2);
    let norm_bound = if g == T::zero() {
        T::lit(f64::INFINITY)
    } else {
        tau / (g * g * chi) * (one + tau * (n_bar + one + m_bar)).powi(2)
    };
    Ok(GammaReport {
        w,
        norm: spectral_norm(&gamma),
        accretivity: min_hermitian_part_eigenvalue(&inv),
        dissipation: hermitian_eigenvalues(&hermitian_part(&coupling))
            .first()
            .copied()
            .unwrap_or(T::zero()),
        gamma,
        dissipation_bound,
        norm_bound,
        n_bar,
        m_bar,
        chi,
        tau,
    })
}

/// Λ(t,k,z). Without `twisted`, q = k/√t must be a ring momentum.
pub fn lambda_tkz<T: Real>(
    decomp: &BlockDecomp<T>,
    g: T,
    t: T,
    k: &[T],
    z: C<T>,
    twisted: bool,
) -> Result<C<T>, AugmentedError> {
    if z.re <= T::zero() {
        return Err(AugmentedError::NotAccretive { re: z.re.as_f64() });
    }
    if t <= T::zero() {
        return Err(AugmentedError::Shape("t must be positive".into()));
    }
    if k.iter().all(|&c| c == T::zero()) {
        return Ok(C::new(T::zero(), T::zero()));
    }
    let st = t.sqrt();
    let q: Vec<T> = k.iter().map(|&c| c / st).collect();
    let blocks = FiberBlocks::new(decomp, &q, g, twisted)?;
    let y = blocks.gamma_apply(z / t, &blocks.f)?;
    Ok(inner(&blocks.f, &y) * t)
}

/// Times t = (|k|/q_m)² at which q = k/√t is the ring momentum 2πm/N along k̂, m = 1..⌊N/2⌋,
/// largest t first.
pub fn admissible_times<T: Real>(extent: usize, k_norm: T) -> Vec<T> {
    (1..=extent / 2)
        .map(|m| {
            let q = T::two_pi() * T::from_usize_lossy(m) / T::from_usize_lossy(extent);
            (k_norm / q).powi(2)
        })
        .collect()
}
