use crate::bound::check_apriori_bound;
use crate::error::TrajectoryError;
use crate::plan::{Float, PropagatorPlan, Route};
use crate::propagate::Trajectory;
use fluxlat_model::{charfn, position_moments, sample_disorder, DisorderSample, LatticeSpec, Model};
use fluxlat_noise::{sample_path, NoisePath, SiteChain, SitePath};
use fluxlat_numeric::{
    dense,
    rng::{derive_seed, Purpose},
    stats::tree_reduce,
    CMatrix, Real, C,
};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::time::Instant;

/// Samples per work unit; fixed so that reductions do not depend on the pool size.
pub const CHUNK: usize = 64;
pub const MIN_SAMPLES: usize = 100;

#[derive(Clone)]
pub struct EnsembleConfig<T: Float> {
    pub model: Model<T>,
    pub chain: SiteChain<T>,
    pub g: T,
    pub dt: T,
    /// Increasing checkpoint times; the last one is the horizon.
    pub checkpoints: Vec<T>,
    pub samples: usize,
    pub master_seed: u64,
    /// φ_t(k/√t) is recorded for each k.
    pub k_list: Vec<Vec<T>>,
    pub route: Route,
    /// Keep ω fixed instead of drawing it per sample.
    pub fixed_omega: Option<DisorderSample<T>>,
    /// Check the a-priori bound with this m.
    pub apriori_m: Option<T>,
    /// Chunks not started by then are dropped and the result is flagged partial.
    pub deadline: Option<Instant>,
}

/// Default base step 0.05/(m₀ + λ + g).
pub fn default_dt<T: Real>(m0: T, lambda: T, g: T) -> T {
    T::lit(0.05) / (m0 + lambda + g)
}

#[derive(Debug, Clone)]
pub struct EnsembleResult<T: Real> {
    pub lattice: LatticeSpec,
    pub times: Vec<T>,
    pub density_mean: Vec<Vec<T>>,
    pub density_stderr: Vec<Vec<T>>,
    pub moments: Vec<DMatrix<T>>,
    pub moments_stderr: Vec<DMatrix<T>>,
    /// Per-sample M(t): `moment_traces[s][c·d² + i·d + j]`.
    pub moment_traces: Vec<Vec<T>>,
    pub k_list: Vec<Vec<T>>,
    /// Mean of φ_t(k/√t): `charfn[c][k]`.
    pub charfn: Vec<Vec<C<T>>>,
    /// Standard errors of the real and imaginary parts.
    pub charfn_stderr: Vec<Vec<C<T>>>,
    pub samples: usize,
    pub max_norm_error: T,
    pub min_apriori_margin: Option<T>,
    pub master_seed: u64,
    pub partial: bool,
}

impl<T: Real> EnsembleResult<T> {
    pub fn dimension(&self) -> usize {
        self.lattice.dimension
    }

    pub fn checkpoint_index(&self, t: T) -> Result<usize, TrajectoryError> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= T::lit(1e-9) * (T::one() + t.abs()))
            .ok_or(TrajectoryError::NotCheckpoint { t: t.as_f64() })
    }

    /// M_ij(t_c) of one sample.
    pub fn moment_trace(&self, sample: usize, c: usize, i: usize, j: usize) -> T {
        let d = self.dimension();
        self.moment_traces[sample][c * d * d + i * d + j]
    }
}

struct Accum<T: Real> {
    count: usize,
    sum_p: Vec<Vec<T>>,
    sum_p2: Vec<Vec<T>>,
    m_traces: Vec<Vec<T>>,
    phi_traces: Vec<Vec<C<T>>>,
    max_norm_error: T,
    min_margin: Option<T>,
}

impl<T: Real> Accum<T> {
    fn empty(checkpoints: usize, sites: usize) -> Self {
        Self {
            count: 0,
            sum_p: vec![vec![T::zero(); sites]; checkpoints],
            sum_p2: vec![vec![T::zero(); sites]; checkpoints],
            m_traces: Vec::new(),
            phi_traces: Vec::new(),
            max_norm_error: T::zero(),
            min_margin: None,
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.count += other.count;
        for (a, b) in self.sum_p.iter_mut().zip(&other.sum_p) {
            a.iter_mut().zip(b).for_each(|(x, &y)| *x += y);
        }
        for (a, b) in self.sum_p2.iter_mut().zip(&other.sum_p2) {
            a.iter_mut().zip(b).for_each(|(x, &y)| *x += y);
        }
        self.m_traces.extend(other.m_traces);
        self.phi_traces.extend(other.phi_traces);
        self.max_norm_error = self.max_norm_error.max(other.max_norm_error);
        self.min_margin = match (self.min_margin, other.min_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }
}

/// A path without jumps; used when g = 0 makes the noise irrelevant.
pub(crate) fn frozen_path<T: Real>(sites: usize, horizon: T) -> NoisePath<T> {
    NoisePath {
        horizon,
        sites: vec![
            SitePath {
                initial: 0,
                times: Vec::new(),
                states: Vec::new(),
            };
            sites
        ],
    }
}

pub(crate) fn sample_inputs<T: Float>(
    cfg_model: &Model<T>,
    chain: &SiteChain<T>,
    g: T,
    horizon: T,
    fixed: Option<&DisorderSample<T>>,
    master: u64,
    s: usize,
) -> Result<(DisorderSample<T>, NoisePath<T>), TrajectoryError> {
    let lattice = &cfg_model.lattice;
    let omega = match fixed {
        Some(w) => w.clone(),
        None => sample_disorder(&cfg_model.disorder, lattice, derive_seed(master, s as u64, Purpose::Disorder)),
    };
    let path = if g == T::zero() {
        frozen_path(lattice.sites(), horizon)
    } else {
        sample_path(chain, lattice.sites(), horizon, derive_seed(master, s as u64, Purpose::Noise))?
    };
    Ok((omega, path))
}

fn validate<T: Float>(cfg: &EnsembleConfig<T>) -> Result<(), TrajectoryError> {
    if cfg.samples < MIN_SAMPLES {
        return Err(TrajectoryError::Budget {
            got: cfg.samples,
            min: MIN_SAMPLES,
        });
    }
    if cfg.checkpoints.is_empty() {
        return Err(TrajectoryError::Checkpoints);
    }
    let d = cfg.model.lattice.dimension;
    if let Some(k) = cfg.k_list.iter().find(|k| k.len() != d) {
        return Err(TrajectoryError::KDimension { got: k.len(), want: d });
    }
    cfg.chain.validate()?;
    Ok(())
}

fn run_chunk<T: Float>(cfg: &EnsembleConfig<T>, chunk: usize) -> Result<Accum<T>, TrajectoryError> {
    let lattice = cfg.model.lattice;
    let n = lattice.sites();
    let d = lattice.dimension;
    let nc = cfg.checkpoints.len();
    let horizon = *cfg.checkpoints.last().unwrap();
    let mut acc: Accum<T> = Accum::empty(nc, n);
    let lo = chunk * CHUNK;
    let hi = ((chunk + 1) * CHUNK).min(cfg.samples);
    let origin = lattice.origin();
    let mut psi0 = vec![C::new(T::zero(), T::zero()); n];
    psi0[origin] = C::new(T::one(), T::zero());
    let mut shared_plan = match &cfg.fixed_omega {
        Some(w) => Some(PropagatorPlan::new(
            &lattice,
            &cfg.model.hopping,
            w,
            cfg.route.resolve_coupled(n, cfg.g != T::zero()),
            cfg.dt,
            cfg.checkpoints.clone(),
        )?),
        None => None,
    };
    for s in lo..hi {
        let (omega, path) = sample_inputs(
            &cfg.model,
            &cfg.chain,
            cfg.g,
            horizon,
            cfg.fixed_omega.as_ref(),
            cfg.master_seed,
            s,
        )?;
        let mut own_plan;
        let plan = match shared_plan.as_mut() {
            Some(p) => p,
            None => {
                own_plan =
                    PropagatorPlan::new(&lattice, &cfg.model.hopping, &omega, cfg.route.resolve_coupled(n, cfg.g != T::zero()), cfg.dt, cfg.checkpoints.clone())?;
                &mut own_plan
            }
        };
        let mut traj = Trajectory::new(plan, &path, &cfg.chain.observable, cfg.g, &psi0);
        let mut m_trace = Vec::with_capacity(nc * d * d);
        let mut phi_trace = Vec::with_capacity(nc * cfg.k_list.len());
        for (c, &t) in cfg.checkpoints.iter().enumerate() {
            let psi = traj.advance_to(t)?;
            let p: Vec<T> = psi.iter().map(|z| z.norm_sqr()).collect();
            let nerr = (dense::norm(psi) - T::one()).abs();
            acc.max_norm_error = acc.max_norm_error.max(nerr);
            if let Some(m) = cfg.apriori_m {
                let margin = check_apriori_bound(&psi0, psi, &lattice, m, t);
                acc.min_margin = Some(acc.min_margin.map_or(margin, |a: T| a.min(margin)));
            }
            for (x, &px) in p.iter().enumerate() {
                acc.sum_p[c][x] += px;
                acc.sum_p2[c][x] += px * px;
            }
            let mom = position_moments(&p, &lattice)?;
            m_trace.extend(mom.m.transpose().iter().copied());
            let scale = if t > T::zero() { T::one() / t.sqrt() } else { T::zero() };
            // divided by the mass so that φ(0) = 1 exactly
            for k in &cfg.k_list {
                let ks: Vec<T> = k.iter().map(|&v| v * scale).collect();
                phi_trace.push(charfn(&p, &lattice, &ks) / mom.total);
            }
        }
        acc.m_traces.push(m_trace);
        acc.phi_traces.push(phi_trace);
        acc.count += 1;
    }
    Ok(acc)
}

/// Independent (ω, path, initial noise state) per sample, seeded from
/// (master seed, sample index). Samples are grouped in fixed chunks whose
/// accumulators are combined by an order-preserving tree reduction.
pub fn run_ensemble<T: Float>(cfg: &EnsembleConfig<T>) -> Result<EnsembleResult<T>, TrajectoryError> {
    validate(cfg)?;
    let lattice = cfg.model.lattice;
    let n = lattice.sites();
    let d = lattice.dimension;
    let nc = cfg.checkpoints.len();
    let chunks = cfg.samples.div_ceil(CHUNK);
    let parts: Vec<Option<Result<Accum<T>, TrajectoryError>>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            if cfg.deadline.is_some_and(|dl| Instant::now() >= dl) {
                None
            } else {
                Some(run_chunk(cfg, c))
            }
        })
        .collect();
    let partial = parts.iter().any(|p| p.is_none());
    let mut done = Vec::new();
    for p in parts.into_iter().flatten() {
        done.push(p?);
    }
    let acc = tree_reduce(done, Accum::merge).unwrap_or_else(|| Accum::empty(nc, n));
    let cnt = acc.count;
    let nf = T::from_usize_lossy(cnt.max(1));
    let se = |sum: T, sum2: T| -> T {
        if cnt < 2 {
            return T::zero();
        }
        let var = ((sum2 - sum * sum / nf) / (nf - T::one())).max(T::zero());
        (var / nf).sqrt()
    };
    let density_mean = acc.sum_p.iter().map(|row| row.iter().map(|&v| v / nf).collect()).collect();
    let density_stderr = acc
        .sum_p
        .iter()
        .zip(&acc.sum_p2)
        .map(|(a, b)| a.iter().zip(b).map(|(&s, &s2)| se(s, s2)).collect())
        .collect();
    let mut moments = Vec::with_capacity(nc);
    let mut moments_stderr = Vec::with_capacity(nc);
    for c in 0..nc {
        let mut m = DMatrix::zeros(d, d);
        let mut e = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                let idx = c * d * d + i * d + j;
                let (s, s2) = acc
                    .m_traces
                    .iter()
                    .fold((T::zero(), T::zero()), |(a, b), tr| (a + tr[idx], b + tr[idx] * tr[idx]));
                m[(i, j)] = s / nf;
                e[(i, j)] = se(s, s2);
            }
        }
        moments.push(m);
        moments_stderr.push(e);
    }
    let nk = cfg.k_list.len();
    let mut charfn_mean = vec![vec![C::new(T::zero(), T::zero()); nk]; nc];
    let mut charfn_stderr = vec![vec![C::new(T::zero(), T::zero()); nk]; nc];
    for c in 0..nc {
        for k in 0..nk {
            let idx = c * nk + k;
            let (mut sr, mut sr2, mut si, mut si2) = (T::zero(), T::zero(), T::zero(), T::zero());
            for tr in &acc.phi_traces {
                let z = tr[idx];
                sr += z.re;
                sr2 += z.re * z.re;
                si += z.im;
                si2 += z.im * z.im;
            }
            charfn_mean[c][k] = C::new(sr / nf, si / nf);
            charfn_stderr[c][k] = C::new(se(sr, sr2), se(si, si2));
        }
    }
    Ok(EnsembleResult {
        lattice,
        times: cfg.checkpoints.clone(),
        density_mean,
        density_stderr,
        moments,
        moments_stderr,
        moment_traces: acc.m_traces,
        k_list: cfg.k_list.clone(),
        charfn: charfn_mean,
        charfn_stderr,
        samples: cnt,
        max_norm_error: acc.max_norm_error,
        min_apriori_margin: acc.min_margin,
        master_seed: cfg.master_seed,
        partial,
    })
}

/// E[ψ_tψ_t†] at fixed ω with entrywise standard errors.
#[derive(Debug, Clone)]
pub struct DensityEnsemble<T: Real> {
    pub times: Vec<T>,
    pub mean: Vec<CMatrix<T>>,
    /// Standard errors of real and imaginary parts per entry.
    pub stderr: Vec<CMatrix<T>>,
    pub samples: usize,
    pub max_norm_error: T,
}

struct RhoAccum<T: Real> {
    count: usize,
    sum: Vec<CMatrix<T>>,
    sum2: Vec<CMatrix<T>>,
    max_norm_error: T,
}

pub fn density_matrix_ensemble<T: Float>(
    cfg: &EnsembleConfig<T>,
    psi0: &[C<T>],
) -> Result<DensityEnsemble<T>, TrajectoryError> {
    validate(cfg)?;
    let lattice = cfg.model.lattice;
    let n = lattice.sites();
    let nc = cfg.checkpoints.len();
    let horizon = *cfg.checkpoints.last().unwrap();
    let omega = cfg
        .fixed_omega
        .clone()
        .unwrap_or_else(|| sample_disorder(&cfg.model.disorder, &lattice, derive_seed(cfg.master_seed, 0, Purpose::Disorder)));
    let chunks = cfg.samples.div_ceil(CHUNK);
    let parts: Vec<Result<RhoAccum<T>, TrajectoryError>> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut plan =
                PropagatorPlan::new(&lattice, &cfg.model.hopping, &omega, cfg.route.resolve_coupled(n, cfg.g != T::zero()), cfg.dt, cfg.checkpoints.clone())?;
            let mut acc = RhoAccum {
                count: 0,
                sum: vec![CMatrix::zeros(n, n); nc],
                sum2: vec![CMatrix::zeros(n, n); nc],
                max_norm_error: T::zero(),
            };
            for s in chunk * CHUNK..((chunk + 1) * CHUNK).min(cfg.samples) {
                let (_, path) = sample_inputs(&cfg.model, &cfg.chain, cfg.g, horizon, Some(&omega), cfg.master_seed, s)?;
                let mut traj = Trajectory::new(&mut plan, &path, &cfg.chain.observable, cfg.g, psi0);
                for (c, &t) in cfg.checkpoints.iter().enumerate() {
                    let psi = traj.advance_to(t)?;
                    acc.max_norm_error = acc.max_norm_error.max((dense::norm(psi) - T::one()).abs());
                    for i in 0..n {
                        for j in 0..n {
                            let z = psi[i] * psi[j].conj();
                            acc.sum[c][(i, j)] += z;
                            acc.sum2[c][(i, j)] += C::new(z.re * z.re, z.im * z.im);
                        }
                    }
                }
                acc.count += 1;
            }
            Ok(acc)
        })
        .collect();
    let parts = parts.into_iter().collect::<Result<Vec<_>, _>>()?;
    let acc = tree_reduce(parts, |mut a, b| {
        a.count += b.count;
        for c in 0..nc {
            a.sum[c] += &b.sum[c];
            a.sum2[c] += &b.sum2[c];
        }
        a.max_norm_error = a.max_norm_error.max(b.max_norm_error);
        a
    })
    .expect("at least one chunk");
    let nf = T::from_usize_lossy(acc.count);
    let se = |s: T, s2: T| (((s2 - s * s / nf) / (nf - T::one())).max(T::zero()) / nf).sqrt();
    let mean = acc.sum.iter().map(|m| m.map(|z| z / nf)).collect();
    let stderr = acc
        .sum
        .iter()
        .zip(&acc.sum2)
        .map(|(m, m2)| CMatrix::from_fn(n, n, |i, j| C::new(se(m[(i, j)].re, m2[(i, j)].re), se(m[(i, j)].im, m2[(i, j)].im))))
        .collect();
    Ok(DensityEnsemble {
        times: cfg.checkpoints.clone(),
        mean,
        stderr,
        samples: acc.count,
        max_norm_error: acc.max_norm_error,
    })
}
