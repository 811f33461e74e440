//! Fibre operators 𝓛̂_k = iK̂_k + iÛ + igV̂ + B on functions of (a, ω, x),
//! stored with index ((x·|Ω|) + ω)·|A| + a in an L²(π⊗μ)-orthonormal basis.
//!
//! Two bases are available for the noise factor: the natural one (rescaled
//! point masses) and a mode basis built per site from an orthonormal frame
//! whose first vector is √π. In the mode basis a-constant functions are the
//! single mode index `zero_mode`, so the block decomposition is a coordinate
//! split, and for reversible chains B is diagonal.

use crate::error::AugmentedError;
use crate::omega::OmegaSpace;
use fluxlat_model::{DisorderSpec, HoppingKernel, LatticeSpec, Model};
use fluxlat_noise::{build_generator_b, GeneratorB, JointSpace, SiteChain};
use fluxlat_numeric::{
    cis,
    dense::orthonormal_complement,
    sparse::{CsrBuilder, CsrMatrix},
    Real, C,
};
use nalgebra::DMatrix;

/// Dense budget for fibre and fixed-ω generators.
pub const DENSE_BUDGET: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseBasis {
    Natural,
    Modes,
}

/// Single-site frame with the site generator and observable expressed in it.
#[derive(Debug, Clone)]
pub struct SiteFrame<T: Real> {
    pub frame: DMatrix<T>,
    pub b: DMatrix<T>,
    pub v: DMatrix<T>,
    pub diagonal_b: bool,
}

impl<T: Real> SiteFrame<T> {
    fn new(gen: &GeneratorB<T>, basis: NoiseBasis) -> Self {
        let site = &gen.sites[0];
        let s = site.pi.len();
        let frame = match (basis, &site.spectrum) {
            (NoiseBasis::Natural, _) => DMatrix::identity(s, s),
            (NoiseBasis::Modes, Some((_, vecs, zero))) => {
                let mut order = vec![*zero];
                order.extend((0..s).filter(|i| i != zero));
                let mut f = DMatrix::from_fn(s, s, |i, j| vecs[(i, order[j])]);
                let sum: T = f.column(0).iter().fold(T::zero(), |a, &x| a + x);
                if sum < T::zero() {
                    f.column_mut(0).neg_mut();
                }
                f
            }
            (NoiseBasis::Modes, None) => {
                let comp = orthonormal_complement(&site.sqrt_pi);
                DMatrix::from_fn(s, s, |i, j| {
                    if j == 0 {
                        site.sqrt_pi[i]
                    } else {
                        comp[(i, j - 1)]
                    }
                })
            }
        };
        let b = frame.transpose() * &site.b_ortho * &frame;
        let v = frame.transpose()
            * DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&site.observable))
            * &frame;
        let diagonal_b = basis == NoiseBasis::Modes && site.spectrum.is_some();
        Self {
            frame,
            b,
            v,
            diagonal_b,
        }
    }
}

/// Operator pieces of one fibre, all in the same basis.
#[derive(Debug, Clone)]
pub struct FiberParts<T: Real> {
    pub k: Vec<T>,
    pub kinetic: CsrMatrix<T>,
    /// Diagonal of Û.
    pub potential: Vec<T>,
    pub noise_coupling: CsrMatrix<T>,
    pub generator: CsrMatrix<T>,
}

impl<T: Real> FiberParts<T> {
    /// 𝓛̂_k = iK̂ + iÛ + igV̂ + B.
    pub fn generator_at(&self, g: T) -> CsrMatrix<T> {
        let i = C::new(T::zero(), T::one());
        let n = self.kinetic.dim();
        let mut b = CsrBuilder::new(n);
        for (x, &u) in self.potential.iter().enumerate() {
            b.push(x, x, i * u);
        }
        let u = b.build();
        CsrMatrix::combine(&[
            (i, &self.kinetic),
            (C::new(T::one(), T::zero()), &u),
            (i * g, &self.noise_coupling),
            (C::new(T::one(), T::zero()), &self.generator),
        ])
    }

    pub fn potential_matrix(&self) -> CsrMatrix<T> {
        let n = self.potential.len();
        let mut b = CsrBuilder::new(n);
        for (x, &u) in self.potential.iter().enumerate() {
            b.push(x, x, C::new(u, T::zero()));
        }
        b.build()
    }
}

/// Everything about the augmented space that does not depend on k or g.
#[derive(Debug, Clone)]
pub struct FiberModel<T: Real> {
    pub lattice: LatticeSpec,
    pub hopping: HoppingKernel<T>,
    pub omega: OmegaSpace<T>,
    pub generator: GeneratorB<T>,
    pub basis: NoiseBasis,
    pub frame: SiteFrame<T>,
    pub noise: JointSpace,
    /// a-index of the constant function in the mode basis.
    pub zero_mode: Option<usize>,
    pub chain: SiteChain<T>,
    pub disorder: DisorderSpec<T>,
    shifts: Vec<(Vec<usize>, Vec<usize>)>,
}

impl<T: Real> FiberModel<T> {
    pub fn new(
        model: &Model<T>,
        chain: &SiteChain<T>,
        basis: NoiseBasis,
    ) -> Result<Self, AugmentedError> {
        let lattice = model.lattice;
        let n = lattice.sites();
        let omega = OmegaSpace::new(&model.disorder, &lattice)?;
        let states = chain.states();
        let noise = JointSpace::uniform(states, n).ok_or(AugmentedError::Budget {
            dim: usize::MAX,
            budget: DENSE_BUDGET,
        })?;
        let generator = build_generator_b(chain, n)?;
        let frame = SiteFrame::new(&generator, basis);
        let zero_mode = (basis == NoiseBasis::Modes).then_some(0);
        let shifts = model
            .hopping
            .entries
            .iter()
            .map(|e| {
                (
                    noise.shift_table(&lattice, &e.zeta),
                    omega.shift_table(&lattice, &e.zeta),
                )
            })
            .collect();
        Ok(Self {
            lattice,
            hopping: model.hopping.clone(),
            omega,
            generator,
            basis,
            frame,
            noise,
            zero_mode,
            chain: chain.clone(),
            disorder: model.disorder,
            shifts,
        })
    }

    pub fn a_dim(&self) -> usize {
        self.noise.dim
    }

    pub fn w_dim(&self) -> usize {
        self.omega.count()
    }

    pub fn dim(&self) -> usize {
        self.a_dim() * self.w_dim() * self.lattice.sites()
    }

    #[inline]
    pub fn index(&self, x: usize, w: usize, a: usize) -> usize {
        ((x * self.w_dim()) + w) * self.a_dim() + a
    }

    pub fn decode(&self, idx: usize) -> (usize, usize, usize) {
        let a = idx % self.a_dim();
        let rest = idx / self.a_dim();
        (rest / self.w_dim(), rest % self.w_dim(), a)
    }

    /// Fibre momenta must be multiples of 2π/N unless `twisted` is set.
    pub fn check_momentum(&self, k: &[T], twisted: bool) -> Result<(), AugmentedError> {
        if k.len() != self.lattice.dimension {
            return Err(AugmentedError::Shape(format!(
                "k has {} components, lattice dimension is {}",
                k.len(),
                self.lattice.dimension
            )));
        }
        if twisted {
            return Ok(());
        }
        let n = self.lattice.extent as f64;
        for &c in k {
            let m = c.as_f64() * n / std::f64::consts::TAU;
            if (m - m.round()).abs() > 1e-9 {
                return Err(AugmentedError::Inadmissible {
                    k: c.as_f64(),
                    extent: self.lattice.extent,
                });
            }
        }
        Ok(())
    }

    fn push_site_op(
        &self,
        b: &mut CsrBuilder<T>,
        row: usize,
        base: usize,
        a: usize,
        site: usize,
        m: &DMatrix<T>,
        scale: T,
    ) {
        let st = self.noise.strides[site];
        let s = self.noise.sizes[site];
        let cur = self.noise.state_of(a, site);
        let a0 = a - cur * st;
        for t in 0..s {
            let v = m[(cur, t)];
            if v != T::zero() {
                b.push(row, base + a0 + t * st, C::new(v * scale, T::zero()));
            }
        }
    }

    pub fn parts(&self, k: &[T], twisted: bool) -> Result<FiberParts<T>, AugmentedError> {
        self.check_momentum(k, twisted)?;
        let n = self.lattice.sites();
        let dim = self.dim();
        let (na, nw) = (self.a_dim(), self.w_dim());
        let origin = self.lattice.origin();
        let mut kin = CsrBuilder::new(dim);
        let mut vb = CsrBuilder::new(dim);
        let mut bb = CsrBuilder::new(dim);
        let mut pot = vec![T::zero(); dim];
        for x in 0..n {
            for w in 0..nw {
                let base = self.index(x, w, 0);
                let du = self.omega.value(w, x) - self.omega.value(w, origin);
                for a in 0..na {
                    let row = base + a;
                    for (e, (ash, wsh)) in self.hopping.entries.iter().zip(&self.shifts) {
                        let mz: Vec<i64> = e.zeta.iter().map(|&z| -z).collect();
                        let xs = self.lattice.shift(x, &mz);
                        kin.push(row, self.index(xs, w, a), e.amp);
                        let phase = e
                            .zeta
                            .iter()
                            .zip(k)
                            .fold(T::zero(), |s, (&z, &kk)| s + kk * T::lit(z as f64));
                        kin.push(row, self.index(xs, wsh[w], ash[a]), -(e.amp * cis(phase)));
                    }
                    pot[row] = du;
                    if x != origin {
                        self.push_site_op(&mut vb, row, base, a, x, &self.frame.v, T::one());
                        self.push_site_op(&mut vb, row, base, a, origin, &self.frame.v, -T::one());
                    }
                    for s in 0..n {
                        self.push_site_op(&mut bb, row, base, a, s, &self.frame.b, T::one());
                    }
                }
            }
        }
        Ok(FiberParts {
            k: k.to_vec(),
            kinetic: kin.build(),
            potential: pot,
            noise_coupling: vb.build(),
            generator: bb.build(),
        })
    }

    /// Coordinates of the a-constant, ω-constant vector 𝟙⊗δ_x.
    pub fn constant_at(&self, x: usize) -> Vec<C<T>> {
        let mut v = vec![C::new(T::zero(), T::zero()); self.dim()];
        let sw = self.omega.weight().sqrt();
        for w in 0..self.w_dim() {
            match self.zero_mode {
                Some(z) => v[self.index(x, w, z)] = C::new(sw, T::zero()),
                None => {
                    for a in 0..self.a_dim() {
                        let p = self.noise_weight(a).sqrt();
                        v[self.index(x, w, a)] = C::new(sw * p, T::zero());
                    }
                }
            }
        }
        v
    }

    /// π(a) in the natural basis.
    pub fn noise_weight(&self, a: usize) -> T {
        let pi = &self.generator.sites[0].pi;
        (0..self.noise.sites()).fold(T::one(), |p, s| p * pi[self.noise.state_of(a, s)])
    }

    /// Coordinates of an (a, ω)-independent function f(x).
    pub fn lift(&self, f: &[C<T>]) -> Vec<C<T>> {
        let mut v = vec![C::new(T::zero(), T::zero()); self.dim()];
        for (x, &fx) in f.iter().enumerate() {
            if fx == C::new(T::zero(), T::zero()) {
                continue;
            }
            let e = self.constant_at(x);
            for (vi, ei) in v.iter_mut().zip(e) {
                *vi += ei * fx;
            }
        }
        v
    }
}
