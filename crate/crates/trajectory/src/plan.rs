use crate::error::TrajectoryError;
use fluxlat_model::{build_hamiltonian, build_kinetic, DisorderSample, HoppingKernel, LatticeSpec};
use fluxlat_numeric::{cis, CMatrix, Real, C};
use nalgebra::DMatrix;
use rustfft::{Fft, FftNum, FftPlanner};
use std::sync::Arc;

/// Largest box handled by the dense spectral route.
pub const SPECTRAL_BUDGET: usize = 1024;

pub trait Float: Real + FftNum {}
impl<T: Real + FftNum> Float for T {}

/// How e^{−iδ·} of the static part is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Eigendecomposition of H_ω; steps cut at jump times.
    Spectral,
    /// FFT diagonalisation of H₀; U_ω joins the exact diagonal phase.
    Fourier,
    /// Dense exponential of the full Hamiltonian between jumps (no splitting).
    Exact,
    /// Spectral up to 64 sites, Fourier above; Fourier whenever g ≠ 0
    /// (see `resolve_coupled`).
    Auto,
}

impl Route {
    pub fn resolve(self, sites: usize) -> Route {
        match self {
            Route::Auto if sites <= 64 => Route::Spectral,
            Route::Auto => Route::Fourier,
            r => r,
        }
    }

    /// With g ≠ 0 every route splits at dt anyway, and the spectral route
    /// also cuts at each jump with dense N² steps, so Auto takes Fourier.
    pub fn resolve_coupled(self, sites: usize, coupled: bool) -> Route {
        match self {
            Route::Auto if coupled => Route::Fourier,
            r => r.resolve(sites),
        }
    }
}

pub(crate) enum Kinetic<T: Float> {
    Spectral {
        evals: Vec<T>,
        evecs: CMatrix<T>,
        evecs_adj: CMatrix<T>,
        step: Option<(T, CMatrix<T>)>,
    },
    Fourier {
        eps: Vec<T>,
        fwd: Arc<dyn Fft<T>>,
        inv: Arc<dyn Fft<T>>,
        step: Option<(T, Vec<C<T>>)>,
        line: Vec<C<T>>,
        scratch: Vec<C<T>>,
    },
    Exact {
        h: CMatrix<T>,
    },
}

/// Everything needed to evolve one disorder sample.
pub struct PropagatorPlan<T: Float> {
    pub lattice: LatticeSpec,
    pub route: Route,
    pub dt: T,
    pub checkpoints: Vec<T>,
    /// Static site potential carried by the diagonal phase (U_ω on the Fourier route).
    pub phase_offset: Vec<T>,
    /// U_ω, kept for the exact route.
    pub omega: Vec<T>,
    pub(crate) kinetic: Kinetic<T>,
}

fn is_real<T: Real>(m: &CMatrix<T>) -> bool {
    m.iter().all(|z| z.im == T::zero())
}

/// Hermitian eigendecomposition, through the real solver when H is real.
pub fn hermitian_eigen<T: Real>(h: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    if is_real(h) {
        let e = h.map(|z| z.re).symmetric_eigen();
        (
            e.eigenvalues.iter().copied().collect(),
            e.eigenvectors.map(|x| C::new(x, T::zero())),
        )
    } else {
        let e = h.clone().symmetric_eigen();
        (e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    }
}

/// max |V diag(λ) V† − H|, in real arithmetic when H is real.
fn reconstruction_error<T: Real>(h: &CMatrix<T>, evals: &[T], evecs: &CMatrix<T>) -> T {
    let amax = |a: T, b: T| a.max(b.abs());
    if is_real(h) && is_real(evecs) {
        let v = evecs.map(|z| z.re);
        let mut vl = v.clone();
        for (mut col, &e) in vl.column_iter_mut().zip(evals) {
            col *= e;
        }
        (vl * v.transpose() - h.map(|z| z.re)).iter().fold(T::zero(), |a, &x| amax(a, x))
    } else {
        let mut vl = evecs.clone();
        for (mut col, &e) in vl.column_iter_mut().zip(evals) {
            col *= C::new(e, T::zero());
        }
        (vl * evecs.adjoint() - h).iter().fold(T::zero(), |a, z| a.max(fluxlat_numeric::cabs(*z)))
    }
}

fn check_schedule<T: Real>(dt: T, checkpoints: &[T]) -> Result<(), TrajectoryError> {
    let mut prev = T::zero();
    let mut spacing = T::lit(f64::INFINITY);
    for (i, &c) in checkpoints.iter().enumerate() {
        if c < T::zero() || (i > 0 && c <= prev) {
            return Err(TrajectoryError::Checkpoints);
        }
        if c > T::zero() {
            spacing = spacing.min(c - prev);
        }
        prev = c;
    }
    if !(dt > T::zero()) || dt > spacing * T::lit(1.0 + 1e-12) {
        return Err(TrajectoryError::Step {
            dt: dt.as_f64(),
            spacing: spacing.as_f64(),
        });
    }
    Ok(())
}

impl<T: Float> PropagatorPlan<T> {
    pub fn new(
        lattice: &LatticeSpec,
        hopping: &HoppingKernel<T>,
        omega: &DisorderSample<T>,
        route: Route,
        dt: T,
        checkpoints: Vec<T>,
    ) -> Result<Self, TrajectoryError> {
        check_schedule(dt, &checkpoints)?;
        let n = lattice.sites();
        let route = route.resolve(n);
        let (kinetic, phase_offset) = match route {
            Route::Spectral => {
                if n > SPECTRAL_BUDGET {
                    return Err(TrajectoryError::DenseBudget {
                        site_count: n,
                        budget: SPECTRAL_BUDGET,
                    });
                }
                let h = build_hamiltonian(lattice, hopping, omega)?;
                let (evals, evecs) = hermitian_eigen(&h);
                let evecs_adj = evecs.adjoint();
                let err = reconstruction_error(&h, &evals, &evecs);
                if err > T::lit(1e-10) * (T::one() + h.iter().fold(T::zero(), |a, z| a.max(fluxlat_numeric::cabs(*z)))) {
                    return Err(TrajectoryError::Reconstruction { error: err.as_f64() });
                }
                (
                    Kinetic::Spectral {
                        evals,
                        evecs,
                        evecs_adj,
                        step: None,
                    },
                    vec![T::zero(); n],
                )
            }
            Route::Fourier => {
                hopping.check_fits(lattice)?;
                let extent = lattice.extent;
                let two_pi = T::lit(std::f64::consts::TAU);
                let eps = (0..n)
                    .map(|idx| {
                        let k: Vec<T> = lattice
                            .coords(idx)
                            .iter()
                            .map(|&m| two_pi * T::lit(m as f64) / T::from_usize_lossy(extent))
                            .collect();
                        hopping.dispersion(&k)
                    })
                    .collect();
                let mut planner = FftPlanner::new();
                let fwd = planner.plan_fft_forward(extent);
                let inv = planner.plan_fft_inverse(extent);
                let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
                (
                    Kinetic::Fourier {
                        eps,
                        fwd,
                        inv,
                        step: None,
                        line: vec![C::new(T::zero(), T::zero()); extent],
                        scratch: vec![C::new(T::zero(), T::zero()); scratch_len],
                    },
                    omega.values.clone(),
                )
            }
            Route::Exact => {
                if n > SPECTRAL_BUDGET {
                    return Err(TrajectoryError::DenseBudget {
                        site_count: n,
                        budget: SPECTRAL_BUDGET,
                    });
                }
                (
                    Kinetic::Exact {
                        h: build_kinetic(lattice, hopping)?,
                    },
                    vec![T::zero(); n],
                )
            }
            Route::Auto => unreachable!(),
        };
        Ok(Self {
            lattice: *lattice,
            route,
            dt,
            checkpoints,
            phase_offset,
            omega: omega.values.clone(),
            kinetic,
        })
    }

    pub fn sites(&self) -> usize {
        self.lattice.sites()
    }

    /// Eigenpairs of H_ω (spectral route only).
    pub fn spectrum(&self) -> Option<(&[T], &CMatrix<T>)> {
        match &self.kinetic {
            Kinetic::Spectral { evals, evecs, .. } => Some((evals, evecs)),
            _ => None,
        }
    }

    /// ψ ← e^{−iδ K} ψ where K is H_ω (spectral) or H₀ (Fourier).
    pub(crate) fn kinetic_step(&mut self, psi: &mut [C<T>], delta: T, full: bool) {
        let n = psi.len();
        let lattice = self.lattice;
        match &mut self.kinetic {
            Kinetic::Spectral {
                evals,
                evecs,
                evecs_adj,
                step,
            } => {
                let v = nalgebra::DVector::from_column_slice(psi);
                let out = if full {
                    let (_, u) = step.get_or_insert_with(|| {
                        let ph = nalgebra::DVector::from_iterator(n, evals.iter().map(|&e| cis(-(e * delta))));
                        let scaled = DMatrix::from_fn(n, n, |i, j| evecs[(i, j)] * ph[j]);
                        (delta, scaled * &*evecs_adj)
                    });
                    &*u * v
                } else {
                    let mut w = &*evecs_adj * v;
                    for (z, &e) in w.iter_mut().zip(evals.iter()) {
                        *z *= cis(-(e * delta));
                    }
                    &*evecs * w
                };
                psi.copy_from_slice(out.as_slice());
            }
            Kinetic::Fourier {
                eps,
                fwd,
                inv,
                step,
                line,
                scratch,
            } => {
                fft_nd(&lattice, psi, fwd.as_ref(), line, scratch);
                let norm = T::one() / T::from_usize_lossy(n);
                if full {
                    let (_, f) = step.get_or_insert_with(|| {
                        (delta, eps.iter().map(|&e| cis(-(e * delta)) * norm).collect())
                    });
                    for (z, &m) in psi.iter_mut().zip(f.iter()) {
                        *z *= m;
                    }
                } else {
                    for (z, &e) in psi.iter_mut().zip(eps.iter()) {
                        *z *= cis(-(e * delta)) * norm;
                    }
                }
                fft_nd(&lattice, psi, inv.as_ref(), line, scratch);
            }
            Kinetic::Exact { .. } => unreachable!("exact route does not split"),
        }
    }

    pub(crate) fn kinetic_matrix(&self) -> Option<&CMatrix<T>> {
        match &self.kinetic {
            Kinetic::Exact { h } => Some(h),
            _ => None,
        }
    }
}

/// Unnormalised d-dimensional transform, axis by axis (axis 0 contiguous).
fn fft_nd<T: Float>(lattice: &LatticeSpec, data: &mut [C<T>], fft: &dyn Fft<T>, line: &mut [C<T>], scratch: &mut [C<T>]) {
    let n = lattice.extent;
    fft.process_with_scratch(data, scratch);
    let mut stride = n;
    for _ in 1..lattice.dimension {
        let block = stride * n;
        for base in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                for (k, l) in line.iter_mut().enumerate() {
                    *l = data[base + inner + k * stride];
                }
                fft.process_with_scratch(line, scratch);
                for (k, l) in line.iter().enumerate() {
                    data[base + inner + k * stride] = *l;
                }
            }
        }
        stride = block;
    }
}
