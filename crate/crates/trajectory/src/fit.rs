use crate::ensemble::EnsembleResult;
use crate::error::TrajectoryError;
use fluxlat_model::{DiffusionEstimate, DiffusionMethod};
use fluxlat_numeric::{stats::polyfit_weighted, Real, C};
use nalgebra::DMatrix;

pub const MIN_FIT_POINTS: usize = 8;

/// Linear and quadratic fits of M_ij(t) on a window.
#[derive(Debug, Clone)]
pub struct SlopeFit<T: Real> {
    pub estimate: DiffusionEstimate<T>,
    /// Quadratic coefficient of M(t) = a + bt + ct² and its standard error.
    pub curvature: DMatrix<T>,
    pub curvature_stderr: DMatrix<T>,
    pub diffusive: bool,
}

fn apply_functional<T: Real>(row: &[T], traces: &[Vec<T>], idx: impl Fn(usize) -> usize) -> (T, T) {
    let vals: Vec<T> = traces
        .iter()
        .map(|tr| row.iter().enumerate().fold(T::zero(), |a, (c, &w)| a + w * tr[idx(c)]))
        .collect();
    fluxlat_numeric::stats::mean_stderr(&vals)
}

/// Weighted least-squares slope of M_ij(t) with per-sample traces
/// `traces[s][c·d² + i·d + j]`. The slope is a linear functional of the trace,
/// so its standard error comes from the spread of per-sample slopes, which
/// keeps the correlation between checkpoints of one sample.
pub fn fit_moments<T: Real>(
    times: &[T],
    d: usize,
    traces: &[Vec<T>],
    window: (T, T),
    extent: Option<usize>,
) -> Result<SlopeFit<T>, TrajectoryError> {
    let (lo, hi) = window;
    let cs: Vec<usize> = (0..times.len()).filter(|&c| times[c] >= lo && times[c] <= hi).collect();
    if cs.len() < MIN_FIT_POINTS {
        return Err(TrajectoryError::Window {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
            got: cs.len(),
            need: MIN_FIT_POINTS,
        });
    }
    let dd = d * d;
    let n_s = traces.len();
    let nf = T::from_usize_lossy(n_s.max(1));
    let mean_at = |c: usize, k: usize| traces.iter().fold(T::zero(), |a, tr| a + tr[c * dd + k]) / nf;
    let mut flags = Vec::new();
    if let Some(n) = extent {
        let worst = cs
            .iter()
            .flat_map(|&c| (0..d).map(move |i| (c, i)))
            .fold(T::zero(), |a, (c, i)| a.max(mean_at(c, i * d + i)));
        if worst.sqrt() > T::lit(n as f64 / 4.0) {
            flags.push(format!(
                "finite-size: sqrt(max M_ii) = {:.3} exceeds N/4 = {:.3}",
                worst.sqrt().as_f64(),
                n as f64 / 4.0
            ));
        }
    }
    // weights from the spread of the diagonal moments
    let weights: Vec<T> = cs
        .iter()
        .map(|&c| {
            if n_s < 2 {
                return T::one();
            }
            let mut v = T::zero();
            for i in 0..d {
                let k = c * dd + i * d + i;
                let m = mean_at(c, i * d + i);
                v += traces.iter().fold(T::zero(), |a, tr| a + (tr[k] - m) * (tr[k] - m)) / (nf - T::one());
            }
            let v = v / T::from_usize_lossy(d);
            if v > T::zero() {
                T::one() / v
            } else {
                T::one()
            }
        })
        .collect();
    let centre = (lo + hi) * T::lit(0.5);
    let ts: Vec<T> = cs.iter().map(|&c| times[c] - centre).collect();
    let mut dm = DMatrix::zeros(d, d);
    let mut se = DMatrix::zeros(d, d);
    let mut curv = DMatrix::zeros(d, d);
    let mut curv_se = DMatrix::zeros(d, d);
    let mut scale = T::zero();
    for i in 0..d {
        for j in i..d {
            let k = i * d + j;
            let ys: Vec<T> = cs.iter().map(|&c| mean_at(c, k)).collect();
            scale = ys.iter().fold(scale, |a, y| a.max(y.abs()));
            let lin = polyfit_weighted(&ts, &ys, &weights, 1).ok_or(TrajectoryError::Checkpoints)?;
            let quad = polyfit_weighted(&ts, &ys, &weights, 2).ok_or(TrajectoryError::Checkpoints)?;
            let row1: Vec<T> = lin.functional.row(1).iter().copied().collect();
            let row2: Vec<T> = quad.functional.row(2).iter().copied().collect();
            let (b, bse) = apply_functional(&row1, traces, |q| cs[q] * dd + k);
            let (c2, cse) = apply_functional(&row2, traces, |q| cs[q] * dd + k);
            for (a, bb) in [(i, j), (j, i)] {
                dm[(a, bb)] = b;
                se[(a, bb)] = bse;
                curv[(a, bb)] = c2;
                curv_se[(a, bb)] = cse;
            }
        }
    }
    let span = hi - lo;
    let mut curved = false;
    for i in 0..d {
        for j in 0..d {
            let floor = T::lit(1e-12) * (scale / (span * span) + T::one());
            if curv[(i, j)].abs() > T::lit(3.0) * curv_se[(i, j)] + floor {
                curved = true;
            }
        }
    }
    if curved {
        flags.push("curvature: quadratic term significant at 3 sigma".into());
    }
    let estimate = DiffusionEstimate {
        d: dm,
        stderr: se,
        method: DiffusionMethod::Slope,
        window,
        imag_max: T::zero(),
        flags,
    };
    let pd = estimate.is_positive_definite();
    let mut estimate = estimate;
    if !pd {
        estimate.flags.push("non-diffusive: fitted D is not positive definite".into());
    }
    let diffusive = estimate.flags.is_empty();
    Ok(SlopeFit {
        estimate,
        curvature: curv,
        curvature_stderr: curv_se,
        diffusive,
    })
}

/// Slope fit of an ensemble on `window`, with the finite-size guard.
#[allow(non_snake_case)]
pub fn estimate_D_slope<T: Real>(result: &EnsembleResult<T>, window: (T, T)) -> Result<SlopeFit<T>, TrajectoryError> {
    fit_moments(
        &result.times,
        result.dimension(),
        &result.moment_traces,
        window,
        Some(result.lattice.extent),
    )
}

/// Last half of the time horizon.
pub fn default_window<T: Real>(times: &[T]) -> (T, T) {
    let t = times.last().copied().unwrap_or(T::zero());
    (t * T::lit(0.5), t)
}

#[derive(Debug, Clone)]
pub struct CltRow<T: Real> {
    pub k: Vec<T>,
    pub phi: C<T>,
    pub stderr: C<T>,
    pub gaussian: T,
    pub deviation: T,
}

#[derive(Debug, Clone)]
pub struct CltReport<T: Real> {
    pub t: T,
    pub statistic: T,
    pub rows: Vec<CltRow<T>>,
}

/// sup over k of |φ_t(k/√t) − e^{−½⟨k,Dk⟩}|.
pub fn clt_statistic<T: Real>(
    result: &EnsembleResult<T>,
    d: &DiffusionEstimate<T>,
    k_list: &[Vec<T>],
    t: T,
) -> Result<CltReport<T>, TrajectoryError> {
    let c = result.checkpoint_index(t)?;
    let mut rows = Vec::new();
    let mut sup = T::zero();
    for k in k_list {
        let idx = result
            .k_list
            .iter()
            .position(|q| q.len() == k.len() && q.iter().zip(k).all(|(a, b)| (*a - *b).abs() <= T::lit(1e-12)))
            .ok_or(TrajectoryError::KDimension {
                got: k.len(),
                want: result.dimension(),
            })?;
        let phi = result.charfn[c][idx];
        let gaussian = (-d.quadratic_form(k)).exp();
        let deviation = fluxlat_numeric::cabs(phi - C::new(gaussian, T::zero()));
        sup = sup.max(deviation);
        rows.push(CltRow {
            k: k.clone(),
            phi,
            stderr: result.charfn_stderr[c][idx],
            gaussian,
            deviation,
        });
    }
    Ok(CltReport { t, statistic: sup, rows })
}
