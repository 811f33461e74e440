//! Resolvent route to D: ⟨f^{(i)}, (η + 𝓛̂₀)⁻¹f^{(j)}⟩ + (i ↔ j) as η → 0.

use crate::blocks::current_profiles;
use crate::error::AugmentedError;
use crate::fiber::{FiberModel, NoiseBasis};
use crate::superop::lhat_from_fiber;
use fluxlat_model::{DiffusionEstimate, DiffusionMethod, Model};
use fluxlat_noise::SiteChain;
use fluxlat_numeric::{dense::RefinedLu, CMatrix, Real, C};
use nalgebra::DMatrix;

pub fn default_eta_grid<T: Real>() -> Vec<T> {
    [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]
        .iter()
        .map(|&e| T::lit(e))
        .collect()
}

#[derive(Debug, Clone)]
pub struct TauberianReport<T: Real> {
    pub eta: Vec<T>,
    pub values: Vec<DMatrix<T>>,
    /// Linear extrapolation to η = 0 from the last two grid points.
    pub estimate: DiffusionEstimate<T>,
    pub at_smallest: DMatrix<T>,
    /// Largest entry of the difference between the last two values.
    pub convergence: T,
    pub monotone: bool,
}

pub(crate) fn check_decreasing<T: Real>(grid: &[T]) -> Result<(), AugmentedError> {
    let ok = !grid.is_empty()
        && grid.iter().all(|&x| x > T::zero())
        && grid.windows(2).all(|w| w[1] < w[0]);
    if ok {
        Ok(())
    } else {
        Err(AugmentedError::Grid {
            order: "decreasing",
        })
    }
}

/// [⟨f_i, (η + L)⁻¹f_j⟩ + (i ↔ j)] for each η; returns (real parts, worst imaginary part).
pub fn resolvent_pairs<T: Real>(
    l: &CMatrix<T>,
    fs: &[Vec<C<T>>],
    eta: T,
) -> Result<(DMatrix<T>, T), AugmentedError> {
    let n = l.nrows();
    let d = fs.len();
    let mut a = l.clone();
    for i in 0..n {
        a[(i, i)] += C::new(eta, T::zero());
    }
    let rhs = CMatrix::from_fn(n, d, |r, j| fs[j][r]);
    let x = RefinedLu::new(a).solve(&rhs)?;
    let gram = rhs.adjoint() * x;
    let mut out = DMatrix::zeros(d, d);
    let mut im = T::zero();
    for i in 0..d {
        for j in 0..d {
            let v = gram[(i, j)] + gram[(j, i)];
            out[(i, j)] = v.re;
            im = im.max(v.im.abs());
        }
    }
    Ok((out, im))
}

pub fn tauberian_sequence<T: Real>(
    l: &CMatrix<T>,
    fs: &[Vec<C<T>>],
    eta_grid: &[T],
) -> Result<TauberianReport<T>, AugmentedError> {
    check_decreasing(eta_grid)?;
    let d = fs.len();
    let mut values = Vec::with_capacity(eta_grid.len());
    let mut imag_max = T::zero();
    for &eta in eta_grid {
        let (v, im) = resolvent_pairs(l, fs, eta)?;
        imag_max = imag_max.max(im);
        values.push(v);
    }
    let last = values.last().cloned().unwrap();
    let (extrap, convergence) = if values.len() >= 2 {
        let n = values.len();
        let (e1, e2) = (eta_grid[n - 2], eta_grid[n - 1]);
        let (v1, v2) = (&values[n - 2], &values[n - 1]);
        let ex = (v2 * e1 - v1 * e2) / (e1 - e2);
        let diff = (v2 - v1).abs().max();
        (ex, diff)
    } else {
        (last.clone(), T::lit(f64::INFINITY))
    };
    let monotone = (0..d).all(|i| {
        let s: Vec<T> = values.iter().map(|v| v[(i, i)]).collect();
        s.windows(2).all(|w| w[1] >= w[0]) || s.windows(2).all(|w| w[1] <= w[0])
    });
    let mut flags = Vec::new();
    if !monotone {
        flags.push("non-monotone in eta".to_string());
    }
    let sym = (&extrap + extrap.transpose()) * T::lit(0.5);
    Ok(TauberianReport {
        eta: eta_grid.to_vec(),
        values,
        estimate: DiffusionEstimate {
            d: sym,
            stderr: DMatrix::zeros(d, d),
            method: DiffusionMethod::Tauberian,
            window: (
                *eta_grid.last().unwrap(),
                eta_grid[eta_grid.len().saturating_sub(2)],
            ),
            imag_max,
            flags,
        },
        at_smallest: last,
        convergence,
        monotone,
    })
}

/// Dense-only: the whole fibre at k = 0 must fit the dense budget.
pub fn diffusion_tauberian<T: Real>(
    model: &Model<T>,
    chain: &SiteChain<T>,
    g: T,
    eta_grid: &[T],
) -> Result<TauberianReport<T>, AugmentedError> {
    check_decreasing(eta_grid)?;
    let fm = FiberModel::new(model, chain, NoiseBasis::Natural)?;
    let zero = vec![T::zero(); model.lattice.dimension];
    let l = lhat_from_fiber(&fm, &zero, g, false)?;
    let fs: Vec<Vec<C<T>>> = current_profiles(&model.lattice, &model.hopping)
        .iter()
        .map(|f| fm.lift(f))
        .collect();
    tauberian_sequence(&l.matrix, &fs, eta_grid)
}
