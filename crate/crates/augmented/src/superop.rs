//! Dense super-generators: the fixed-ω operator 𝓛 on A ⊗ (sites × sites)
//! and the fibre operator 𝓛̂_k on A × Ω × sites.

use crate::error::AugmentedError;
use crate::fiber::{FiberModel, NoiseBasis, DENSE_BUDGET};
use fluxlat_model::{build_kinetic, DensityMatrix, Model};
use fluxlat_noise::{build_generator_b, SiteChain};
use fluxlat_numeric::{
    cabs, cis,
    dense::{inner, norm},
    expm::{expm, expm_krylov},
    sparse::{CsrBuilder, CsrMatrix},
    CMatrix, CVector, Real, C,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest dimension handled by scaling and squaring; Krylov above.
pub const PADE_LIMIT: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub enum SuperBasis<T: Real> {
    /// Index (x·n + y)·|A| + a.
    FixedOmega {
        omega: Vec<T>,
        sites: usize,
        a_dim: usize,
    },
    /// Index ((x·|Ω|) + ω)·|A| + a.
    Fiber {
        k: Vec<T>,
        sites: usize,
        omega_count: usize,
        a_dim: usize,
    },
}

/// Generator in an orthonormal basis together with its pieces
/// 𝓛 = iK + iU + igV + B.
#[derive(Debug, Clone)]
pub struct SuperOperator<T: Real> {
    pub matrix: CMatrix<T>,
    pub kinetic: CsrMatrix<T>,
    pub potential: CsrMatrix<T>,
    pub coupling: CsrMatrix<T>,
    pub generator: CsrMatrix<T>,
    pub basis: SuperBasis<T>,
    pub g: T,
    pub lambda: T,
    pub tau: T,
    /// Coordinates of the constant noise function, √π on A.
    pub sqrt_pi: Vec<T>,
}

impl<T: Real> SuperOperator<T> {
    fn assemble(
        kinetic: CsrMatrix<T>,
        potential: CsrMatrix<T>,
        coupling: CsrMatrix<T>,
        generator: CsrMatrix<T>,
        basis: SuperBasis<T>,
        g: T,
        lambda: T,
        tau: T,
        sqrt_pi: Vec<T>,
    ) -> Self {
        let i = C::new(T::zero(), T::one());
        let one = C::new(T::one(), T::zero());
        let matrix = CsrMatrix::combine(&[
            (i, &kinetic),
            (i, &potential),
            (i * g, &coupling),
            (one, &generator),
        ])
        .to_dense();
        Self {
            matrix,
            kinetic,
            potential,
            coupling,
            generator,
            basis,
            g,
            lambda,
            tau,
            sqrt_pi,
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Largest Hermiticity defect of K, U and V.
    pub fn part_hermiticity_error(&self) -> T {
        [&self.kinetic, &self.potential, &self.coupling]
            .iter()
            .map(|m| m.hermiticity_error())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn apply(&self, v: &[C<T>]) -> Vec<C<T>> {
        let x = CVector::from_column_slice(v);
        (&self.matrix * x).as_slice().to_vec()
    }

    /// e^{−t𝓛}v.
    pub fn semigroup(&self, v: &[C<T>], t: T) -> Vec<C<T>> {
        let x = CVector::from_column_slice(v);
        if t == T::zero() {
            return v.to_vec();
        }
        if self.dim() <= PADE_LIMIT {
            let e = expm(&(&self.matrix * C::new(-t, T::zero())));
            return (e * x).as_slice().to_vec();
        }
        let one_norm = (0..self.dim())
            .map(|j| {
                self.matrix
                    .column(j)
                    .iter()
                    .fold(T::zero(), |a, z| a + z.norm_sqr().sqrt())
            })
            .fold(T::zero(), |a, b| a.max(b));
        let m = &self.matrix;
        expm_krylov(|u: &CVector<T>| -(m * u), one_norm, &x, t, 30)
            .as_slice()
            .to_vec()
    }
}

fn check_budget(dim: usize) -> Result<(), AugmentedError> {
    if dim > DENSE_BUDGET {
        return Err(AugmentedError::Budget {
            dim,
            budget: DENSE_BUDGET,
        });
    }
    Ok(())
}

/// Kronecker sum Σ_s (site matrix at s) on the joint index, embedded in blocks of size |A|.
fn push_generator<T: Real>(
    b: &mut CsrBuilder<T>,
    blocks: usize,
    gen: &fluxlat_noise::GeneratorB<T>,
) {
    let na = gen.dim();
    for blk in 0..blocks {
        let base = blk * na;
        for a in 0..na {
            for (s, site) in gen.sites.iter().enumerate() {
                let st = gen.space.strides[s];
                let cur = gen.space.state_of(a, s);
                let a0 = a - cur * st;
                for t in 0..site.pi.len() {
                    let v = site.b_ortho[(cur, t)];
                    if v != T::zero() {
                        b.push(base + a, base + a0 + t * st, C::new(v, T::zero()));
                    }
                }
            }
        }
    }
}

/// 𝓛 = i[H₀,·] + i[U_ω,·] + ig[V_a,·] + B acting on F(a) ∈ sites × sites.
pub fn build_l_fixed_omega<T: Real>(
    model: &Model<T>,
    chain: &SiteChain<T>,
    omega: &[T],
    g: T,
) -> Result<SuperOperator<T>, AugmentedError> {
    let lattice = model.lattice;
    let n = lattice.sites();
    if omega.len() != n {
        return Err(AugmentedError::Shape(format!(
            "ω has {} entries, lattice has {n} sites",
            omega.len()
        )));
    }
    let states = chain.states();
    let na = states.checked_pow(n as u32).unwrap_or(usize::MAX);
    let dim = na.saturating_mul(n * n);
    check_budget(dim)?;
    let gen = build_generator_b(chain, n)?;
    let h = build_kinetic(&lattice, &model.hopping)?;
    let idx = |x: usize, y: usize, a: usize| (x * n + y) * na + a;
    let mut kb = CsrBuilder::new(dim);
    let mut ub = CsrBuilder::new(dim);
    let mut vb = CsrBuilder::new(dim);
    let v: Vec<Vec<T>> = (0..n).map(|x| gen.observable_at(x)).collect();
    for x in 0..n {
        for y in 0..n {
            for a in 0..na {
                let row = idx(x, y, a);
                for z in 0..n {
                    if h[(x, z)] != C::new(T::zero(), T::zero()) {
                        kb.push(row, idx(z, y, a), h[(x, z)]);
                    }
                    if h[(z, y)] != C::new(T::zero(), T::zero()) {
                        kb.push(row, idx(x, z, a), -h[(z, y)]);
                    }
                }
                ub.push(row, row, C::new(omega[x] - omega[y], T::zero()));
                vb.push(row, row, C::new(v[x][a] - v[y][a], T::zero()));
            }
        }
    }
    let mut bb = CsrBuilder::new(dim);
    push_generator(&mut bb, n * n, &gen);
    let lambda = omega.iter().fold(T::zero(), |a, w| a.max(w.abs()));
    Ok(SuperOperator::assemble(
        kb.build(),
        ub.build(),
        vb.build(),
        bb.build(),
        SuperBasis::FixedOmega {
            omega: omega.to_vec(),
            sites: n,
            a_dim: na,
        },
        g,
        lambda,
        gen.tau(),
        gen.sqrt_stationary(),
    ))
}

/// Dense 𝓛̂_k in the natural (rescaled point mass) basis.
pub fn build_lhat_k<T: Real>(
    model: &Model<T>,
    chain: &SiteChain<T>,
    k: &[T],
    g: T,
    twisted: bool,
) -> Result<SuperOperator<T>, AugmentedError> {
    let fm = FiberModel::new(model, chain, NoiseBasis::Natural)?;
    check_budget(fm.dim())?;
    lhat_from_fiber(&fm, k, g, twisted)
}

pub fn lhat_from_fiber<T: Real>(
    fm: &FiberModel<T>,
    k: &[T],
    g: T,
    twisted: bool,
) -> Result<SuperOperator<T>, AugmentedError> {
    check_budget(fm.dim())?;
    let p = fm.parts(k, twisted)?;
    let pot = p.potential_matrix();
    Ok(SuperOperator::assemble(
        p.kinetic,
        pot,
        p.noise_coupling,
        p.generator,
        SuperBasis::Fiber {
            k: k.to_vec(),
            sites: fm.lattice.sites(),
            omega_count: fm.w_dim(),
            a_dim: fm.a_dim(),
        },
        g,
        fm.omega.lambda,
        fm.generator.tau(),
        fm.generator.sqrt_stationary(),
    ))
}

/// E[ρ_t] = Σ_a π(a) (e^{−t𝓛}(𝟙⊗ρ₀))(a) for a fixed-ω operator.
pub fn pillet_expectation<T: Real>(
    l: &SuperOperator<T>,
    rho0: &DensityMatrix<T>,
    t: T,
) -> Result<CMatrix<T>, AugmentedError> {
    let (n, na) = match &l.basis {
        SuperBasis::FixedOmega { sites, a_dim, .. } => (*sites, *a_dim),
        SuperBasis::Fiber { .. } => {
            return Err(AugmentedError::Shape(
                "Pillet expectation needs a fixed-ω operator".into(),
            ))
        }
    };
    if t < T::zero() {
        return Err(AugmentedError::Shape("t must be non-negative".into()));
    }
    let tol = T::lit(1e-10);
    if rho0.sites() != n
        || rho0.hermiticity_error() > tol
        || (rho0.trace() - C::new(T::one(), T::zero()))
            .norm_sqr()
            .sqrt()
            > tol
    {
        return Err(AugmentedError::BadDensity);
    }
    if t == T::zero() {
        return Ok(rho0.entries.clone());
    }
    let sqrt_pi = &l.sqrt_pi;
    let mut v = vec![C::new(T::zero(), T::zero()); l.dim()];
    for x in 0..n {
        for y in 0..n {
            for a in 0..na {
                v[(x * n + y) * na + a] = rho0.entries[(x, y)] * sqrt_pi[a];
            }
        }
    }
    let w = l.semigroup(&v, t);
    Ok(CMatrix::from_fn(n, n, |x, y| {
        (0..na).fold(C::new(T::zero(), T::zero()), |acc, a| {
            acc + w[(x * n + y) * na + a] * sqrt_pi[a]
        })
    }))
}

/// min over random unit probes of Re⟨F, 𝓛F⟩.
pub fn accretivity_probe<T: Real>(l: &SuperOperator<T>, probes: usize, seed: u64) -> T {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::lit(f64::INFINITY);
    for _ in 0..probes {
        let f = random_unit(&mut rng, l.dim());
        let lf = l.apply(&f);
        worst = worst.min(inner(&f, &lf).re);
    }
    worst
}

pub(crate) fn random_unit<T: Real>(rng: &mut impl Rng, n: usize) -> Vec<C<T>> {
    let mut f: Vec<C<T>> = (0..n)
        .map(|_| {
            C::new(
                T::lit(rng.random::<f64>() - 0.5),
                T::lit(rng.random::<f64>() - 0.5),
            )
        })
        .collect();
    let s = norm(&f);
    for z in &mut f {
        *z /= C::new(s, T::zero());
    }
    f
}

/// Largest deviation between the two sides of the Fourier-transformed Pillet
/// formula, over every ring momentum k and site x:
/// ⟨𝟙_x, e^{−t𝓛̂_k} 𝟙_0⟩ against Σ_ζ e^{ik·ζ} E[ρ_t](x−ζ, −ζ), where the
/// right side averages fixed-ω solves over Ω. ρ₀ = δ₀.
pub fn fiber_consistency<T: Real>(
    model: &Model<T>,
    chain: &SiteChain<T>,
    g: T,
    t: T,
    basis: NoiseBasis,
) -> Result<T, AugmentedError> {
    let lat = model.lattice;
    let n = lat.sites();
    let omegas = crate::omega::OmegaSpace::new(&model.disorder, &lat)?;
    let mut e0 = CMatrix::zeros(n, n);
    e0[(lat.origin(), lat.origin())] = C::new(T::one(), T::zero());
    let rho0 = DensityMatrix::from_matrix(e0)?;
    let mut avg = CMatrix::<T>::zeros(n, n);
    for w in 0..omegas.count() {
        let l = build_l_fixed_omega(model, chain, &omegas.values(w), g)?;
        avg += pillet_expectation(&l, &rho0, t)? * C::new(omegas.weight(), T::zero());
    }
    let fm = FiberModel::new(model, chain, basis)?;
    let two_pi_n = T::lit(std::f64::consts::TAU / lat.extent as f64);
    let mut worst = T::zero();
    for q in 0..n {
        let k: Vec<T> = lat
            .coords(q)
            .iter()
            .map(|&c| two_pi_n * T::lit(c as f64))
            .collect();
        let l = lhat_from_fiber(&fm, &k, g, false)?;
        let phi = l.semigroup(&fm.constant_at(lat.origin()), t);
        for x in 0..n {
            let lhs = inner(&fm.constant_at(x), &phi);
            let mut rhs = C::new(T::zero(), T::zero());
            for zeta in 0..n {
                let z = lat.coords(zeta);
                let neg: Vec<i64> = z.iter().map(|&c| -c).collect();
                let phase = k
                    .iter()
                    .zip(&z)
                    .fold(T::zero(), |a, (&kk, &zz)| a + kk * T::lit(zz as f64));
                rhs += cis(phase) * avg[(lat.shift(x, &neg), lat.negate(zeta))];
            }
            worst = worst.max(cabs(lhs - rhs));
        }
    }
    Ok(worst)
}
