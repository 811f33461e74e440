//! D(g)/g² as g ↓ 0 on a fixed exact model.

use crate::blocks::{block_decompose, BlockDecomp};
use crate::error::AugmentedError;
use crate::schur::{restricted_m, FiberBlocks};
use crate::tauberian::check_decreasing;
use fluxlat_model::Model;
use fluxlat_noise::SiteChain;
use fluxlat_numeric::{
    dense::{complement_basis, null_basis, RefinedLu},
    CMatrix, Real, C,
};
use nalgebra::DMatrix;

/// Acceptable relative change of D(g)/g² between the last two grid points.
pub const STABILIZATION_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone)]
pub struct SmallGReport<T: Real> {
    pub g_grid: Vec<T>,
    pub d: Vec<DMatrix<T>>,
    pub ratios: Vec<DMatrix<T>>,
    /// Extrapolation of r(g) = F + c g² through the last two points.
    pub f: DMatrix<T>,
    /// max |r_last − r_prev| / |r_prev| over entries with r_prev ≠ 0.
    pub stabilization: T,
    /// D strictly decreasing as g decreases along the grid (trace).
    pub decreasing: bool,
    /// dim ker(Π₀^⊥ L̂_{0;2} Π₀^⊥), the candidate range of Π.
    pub kernel_dim: usize,
    /// D(g)/g² with M restricted to the complement of that kernel (diagnostic only).
    pub projected_ratios: Vec<DMatrix<T>>,
    pub flags: Vec<String>,
}

fn kernel_basis<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    if a.ncols() == 0 {
        return CMatrix::zeros(0, 0);
    }
    let scale = a.iter().fold(T::one(), |m, z| m.max(z.norm_sqr().sqrt()));
    null_basis(a, T::lit(1e-10) * scale)
}

/// Kernel dimension of W†L̂_{0;2}W (g-independent).
pub fn kernel_dimension<T: Real>(decomp: &BlockDecomp<T>) -> Result<usize, AugmentedError> {
    let zero = vec![T::zero(); decomp.fiber.lattice.dimension];
    let blocks = FiberBlocks::new(decomp, &zero, T::zero(), false)?;
    Ok(kernel_basis(&restricted_m(&blocks)?).ncols())
}

/// [⟨r_i, m⁻¹r_j⟩ + (i ↔ j)] for right-hand sides given as columns.
fn symmetric_form<T: Real>(m: &CMatrix<T>, rhs: &CMatrix<T>) -> Result<DMatrix<T>, AugmentedError> {
    let d = rhs.ncols();
    if m.ncols() == 0 {
        return Ok(DMatrix::zeros(d, d));
    }
    let x = RefinedLu::new(m.clone())
        .solve(rhs)
        .map_err(|_| AugmentedError::Singular)?;
    let gram = rhs.adjoint() * x;
    Ok(DMatrix::from_fn(d, d, |i, j| {
        (gram[(i, j)] + gram[(j, i)]).re
    }))
}

pub fn small_g_from<T: Real>(
    decomp: &BlockDecomp<T>,
    g_grid: &[T],
) -> Result<SmallGReport<T>, AugmentedError> {
    check_decreasing(g_grid)?;
    let dim = decomp.fiber.lattice.dimension;
    let zero = vec![T::zero(); dim];
    let w = &decomp.complement;
    let fs = decomp.current_vectors();
    let rhs = CMatrix::from_fn(w.ncols(), dim, |r, j| {
        (0..w.nrows()).fold(C::new(T::zero(), T::zero()), |a, i| {
            a + w[(i, r)].conj() * fs[j][i]
        })
    });
    let a = {
        let b0 = FiberBlocks::new(decomp, &zero, T::zero(), false)?;
        restricted_m(&b0)?
    };
    let kernel = kernel_basis(&a);
    let keep = complement_basis(&kernel);
    let rhs_p = keep.adjoint() * &rhs;
    let mut d = Vec::with_capacity(g_grid.len());
    let mut ratios = Vec::with_capacity(g_grid.len());
    let mut projected_ratios = Vec::with_capacity(g_grid.len());
    let mut flags = decomp.warnings.clone();
    for &g in g_grid {
        let blocks = FiberBlocks::new(decomp, &zero, g, false)?;
        let m = restricted_m(&blocks)?;
        let dg = symmetric_form(&m, &rhs)?;
        let mp = keep.adjoint() * &m * &keep;
        projected_ratios.push(symmetric_form(&mp, &rhs_p)? / (g * g));
        ratios.push(&dg / (g * g));
        d.push(dg);
    }
    let n = g_grid.len();
    let (f, stabilization) = if n >= 2 {
        let (gp, gl) = (g_grid[n - 2] * g_grid[n - 2], g_grid[n - 1] * g_grid[n - 1]);
        let (rp, rl) = (&ratios[n - 2], &ratios[n - 1]);
        let f = (rl * gp - rp * gl) / (gp - gl);
        let mut s = T::zero();
        for (a, b) in rl.iter().zip(rp.iter()) {
            if *b != T::zero() {
                s = s.max((*a - *b).abs() / b.abs());
            }
        }
        (f, s)
    } else {
        (ratios[0].clone(), T::lit(f64::INFINITY))
    };
    let trace: Vec<T> = d.iter().map(|m| m.trace()).collect();
    let decreasing = trace.windows(2).all(|w| w[1] < w[0]);
    let changes: Vec<T> = ratios
        .windows(2)
        .map(|w| ((&w[1] - &w[0]).abs().max()) / w[0].abs().max().max(T::lit(1e-300)))
        .collect();
    if changes.windows(2).any(|c| c[1] > c[0]) || stabilization > T::lit(STABILIZATION_TOLERANCE) {
        flags.push("non-quadratic: D(g)/g^2 is not settling".to_string());
    }
    let f = (&f + f.transpose()) * T::lit(0.5);
    Ok(SmallGReport {
        g_grid: g_grid.to_vec(),
        d,
        ratios,
        f,
        stabilization,
        decreasing,
        kernel_dim: kernel.ncols(),
        projected_ratios,
        flags,
    })
}

pub fn small_g_coefficient<T: Real>(
    model: &Model<T>,
    chain: &SiteChain<T>,
    g_grid: &[T],
) -> Result<SmallGReport<T>, AugmentedError> {
    let decomp = block_decompose(model, chain)?;
    small_g_from(&decomp, g_grid)
}
