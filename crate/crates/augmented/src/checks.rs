//! Numerical-range probes and the large-λ resolvent limit.

use crate::error::AugmentedError;
use crate::schur::FiberBlocks;
use crate::superop::{random_unit, SuperOperator};
use fluxlat_numeric::{
    dense::{inner, null_basis, RefinedLu},
    CMatrix, CVector, Real, C,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SectorReport<T> {
    /// Fitted constants with |Im⟨F,𝓛F⟩| ≤ q Re⟨F,𝓛F⟩ + b‖F‖² on all probes.
    pub b: T,
    pub q: T,
    pub min_re: T,
    /// min over probes of q Re + b‖F‖² − |Im| (≥ 0 by construction).
    pub slack: T,
    /// 2‖skew B‖ + ‖K‖ + ‖U‖ + g‖V‖ with row-sum norms.
    pub budget: T,
    pub probes: usize,
}

/// Fits (b', q') with q' = 0 and b' = max |Im|/‖F‖² over unit probes.
pub fn sector_scan<T: Real>(
    l: &SuperOperator<T>,
    n_probes: usize,
    seed: u64,
) -> Result<SectorReport<T>, AugmentedError> {
    if n_probes < 100 {
        return Err(AugmentedError::Shape(
            "sector scan needs at least 100 probes".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::with_capacity(n_probes);
    for _ in 0..n_probes {
        let f = random_unit::<T>(&mut rng, l.dim());
        let v = inner(&f, &l.apply(&f));
        pts.push((v.re, v.im.abs()));
    }
    let b = pts.iter().fold(T::zero(), |a, p| a.max(p.1));
    let q = T::zero();
    let min_re = pts.iter().fold(T::lit(f64::INFINITY), |a, p| a.min(p.0));
    let slack = pts
        .iter()
        .fold(T::lit(f64::INFINITY), |a, p| a.min(q * p.0 + b - p.1));
    let g = l.generator.to_dense();
    let skew = (&g - g.adjoint()) * C::new(T::lit(0.5), T::zero());
    let skew_norm = (0..skew.nrows())
        .map(|i| {
            skew.row(i)
                .iter()
                .fold(T::zero(), |a, z| a + z.norm_sqr().sqrt())
        })
        .fold(T::zero(), |a, b| a.max(b));
    let budget = T::lit(2.0) * skew_norm
        + l.kinetic.inf_norm()
        + l.potential.inf_norm()
        + l.g.abs() * l.coupling.inf_norm();
    Ok(SectorReport {
        b,
        q,
        min_re,
        slack,
        budget,
        probes: n_probes,
    })
}

/// min over random unit F ∈ Ĥ₃ of Re⟨F, 𝓛̂_{k;3}F⟩.
pub fn h3_dissipation_probe<T: Real>(blocks: &FiberBlocks<'_, T>, n_probes: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::lit(f64::INFINITY);
    for _ in 0..n_probes {
        let f = random_unit::<T>(&mut rng, blocks.h3_dim());
        let lf = blocks.h3_apply(&f);
        worst = worst.min(inner(&f, &lf).re);
    }
    worst
}

#[derive(Debug, Clone)]
pub struct ResolventReport<T: Real> {
    pub lambdas: Vec<T>,
    pub values: Vec<C<T>>,
    /// ⟨Πφ, (ΠBΠ)⁻¹Πψ⟩ on ran Π, Π the kernel projector of A.
    pub limit: C<T>,
    pub deviations: Vec<T>,
    pub kernel_dim: usize,
    pub normal_defect: T,
}

/// |⟨φ,(λA + B)⁻¹ψ⟩ − ⟨Πφ,(ΠBΠ)⁻¹Πψ⟩| along an increasing λ grid.
pub fn resolvent_limit_check<T: Real>(
    a: &CMatrix<T>,
    b: &CMatrix<T>,
    phi: &[C<T>],
    psi: &[C<T>],
    lambda_grid: &[T],
) -> Result<ResolventReport<T>, AugmentedError> {
    let ok = !lambda_grid.is_empty()
        && lambda_grid.iter().all(|&x| x > T::zero())
        && lambda_grid.windows(2).all(|w| w[1] > w[0]);
    if !ok {
        return Err(AugmentedError::Grid {
            order: "increasing",
        });
    }
    let scale = a.iter().fold(T::one(), |m, z| m.max(z.norm_sqr().sqrt()));
    let comm = a * a.adjoint() - a.adjoint() * a;
    let normal_defect = comm
        .iter()
        .fold(T::zero(), |m, z| m.max(z.norm_sqr().sqrt()));
    if normal_defect > T::lit(1e-10) * scale * scale {
        return Err(AugmentedError::NotNormal {
            defect: normal_defect.as_f64(),
        });
    }
    let kernel = null_basis(a, T::lit(1e-10) * scale);
    let phi_v = CVector::from_column_slice(phi);
    let psi_v = CVector::from_column_slice(psi);
    let limit = if kernel.ncols() == 0 {
        C::new(T::zero(), T::zero())
    } else {
        let bk = kernel.adjoint() * b * &kernel;
        let x = RefinedLu::new(bk).solve_vec(&(kernel.adjoint() * &psi_v))?;
        (kernel.adjoint() * &phi_v).dotc(&x)
    };
    let mut values = Vec::with_capacity(lambda_grid.len());
    let mut deviations = Vec::with_capacity(lambda_grid.len());
    for &lam in lambda_grid {
        let m = a * C::new(lam, T::zero()) + b;
        let x = RefinedLu::new(m).solve_vec(&psi_v)?;
        let v = phi_v.dotc(&x);
        deviations.push((v - limit).norm_sqr().sqrt());
        values.push(v);
    }
    Ok(ResolventReport {
        lambdas: lambda_grid.to_vec(),
        values,
        limit,
        deviations,
        kernel_dim: kernel.ncols(),
        normal_defect,
    })
}
