use crate::chain::SiteChain;
use crate::error::NoiseError;
use crate::kron::{apply_site_matrix, JointSpace};
use fluxlat_numeric::{dense::real_to_complex, expm::expm, Real};
use nalgebra::DMatrix;
use num_traits::Zero;
use std::ops::{AddAssign, Mul};

/// Largest joint noise space handled by dense solvers.
pub const DENSE_BUDGET: usize = 4096;

/// Single-site data in both the value basis and the L²(π)-orthonormal basis
/// (e_s/√π_s). In the orthonormal basis a reversible B is symmetric.
#[derive(Debug, Clone)]
pub struct SiteFactor<T: Real> {
    pub rates: DMatrix<T>,
    pub pi: Vec<T>,
    pub sqrt_pi: Vec<T>,
    /// −diag(π)⁻¹ Qᵀ diag(π)
    pub b_values: DMatrix<T>,
    /// −diag(π)^{-1/2} Qᵀ diag(π)^{1/2}
    pub b_ortho: DMatrix<T>,
    pub observable: Vec<T>,
    pub reversible: bool,
    /// Eigenpairs of `b_ortho` (reversible sites only) and the zero-mode index.
    pub spectrum: Option<(Vec<T>, DMatrix<T>, usize)>,
    pub gap: T,
}

impl<T: Real> SiteFactor<T> {
    fn new(chain: &SiteChain<T>) -> Result<Self, NoiseError> {
        let pi = chain.validate()?;
        let s = chain.states();
        let sqrt_pi: Vec<T> = pi.iter().map(|p| p.sqrt()).collect();
        let q = chain.rates.clone();
        let b_values = DMatrix::from_fn(s, s, |i, j| -q[(j, i)] * pi[j] / pi[i]);
        let b_ortho = DMatrix::from_fn(s, s, |i, j| -q[(j, i)] * sqrt_pi[j] / sqrt_pi[i]);
        let reversible = chain.is_reversible(&pi);

        // gap of the symmetric part on u^⊥, u = √π: lift u out of the way
        let sym = (&b_ortho + b_ortho.transpose()) * T::lit(0.5);
        let lift = sym.iter().fold(T::zero(), |a, &x| a + x.abs()) + T::one();
        let mut shifted = sym.clone();
        for i in 0..s {
            for j in 0..s {
                shifted[(i, j)] += lift * sqrt_pi[i] * sqrt_pi[j];
            }
        }
        let ev = shifted.symmetric_eigenvalues();
        let gap = ev.iter().fold(lift, |a, &x| a.min(x));

        let spectrum = if reversible {
            let e = sym.symmetric_eigen();
            let vals: Vec<T> = e.eigenvalues.iter().copied().collect();
            let zero = (0..s)
                .min_by(|&a, &b| vals[a].abs().partial_cmp(&vals[b].abs()).unwrap())
                .unwrap();
            Some((vals, e.eigenvectors, zero))
        } else {
            None
        };
        Ok(Self {
            rates: q,
            pi,
            sqrt_pi,
            b_values,
            b_ortho,
            observable: chain.observable.clone(),
            reversible,
            spectrum,
            gap,
        })
    }
}

/// B on the joint space A = Π_x S_x as a Kronecker sum of single-site factors.
#[derive(Debug, Clone)]
pub struct GeneratorB<T: Real> {
    pub space: JointSpace,
    pub sites: Vec<SiteFactor<T>>,
    /// 1/τ
    pub gap: T,
    /// (b, q) in |Im⟨f,Bf⟩| ≤ q Re⟨f,Bf⟩ + b‖f‖²
    pub sector: (T, T),
    pub reversible: bool,
}

/// Identical independent chains on `n_sites` sites.
pub fn build_generator_b<T: Real>(chain: &SiteChain<T>, n_sites: usize) -> Result<GeneratorB<T>, NoiseError> {
    GeneratorB::from_chains(&vec![chain.clone(); n_sites])
}

impl<T: Real> GeneratorB<T> {
    pub fn from_chains(chains: &[SiteChain<T>]) -> Result<Self, NoiseError> {
        let sizes: Vec<usize> = chains.iter().map(|c| c.states()).collect();
        let space = JointSpace::new(sizes).ok_or(NoiseError::Budget {
            states: usize::MAX,
            budget: DENSE_BUDGET,
        })?;
        if space.dim > DENSE_BUDGET {
            return Err(NoiseError::Budget {
                states: space.dim,
                budget: DENSE_BUDGET,
            });
        }
        let sites = chains.iter().map(SiteFactor::new).collect::<Result<Vec<_>, _>>()?;
        let gap = sites.iter().fold(T::lit(f64::INFINITY), |a, s| a.min(s.gap));
        // skew part of a Kronecker sum is the sum of the skew parts
        let mut b = T::zero();
        for s in &sites {
            let skew = (&s.b_ortho - s.b_ortho.transpose()) * T::lit(0.5);
            b += skew.map(|x| fluxlat_numeric::C::new(x, T::zero())).svd(false, false).singular_values.max();
        }
        let reversible = sites.iter().all(|s| s.reversible);
        Ok(Self {
            space,
            sites,
            gap,
            sector: (b, T::zero()),
            reversible,
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    pub fn tau(&self) -> T {
        T::one() / self.gap
    }

    /// Product stationary law on A.
    pub fn stationary(&self) -> Vec<T> {
        (0..self.dim())
            .map(|a| {
                self.sites
                    .iter()
                    .enumerate()
                    .fold(T::one(), |p, (x, s)| p * s.pi[self.space.state_of(a, x)])
            })
            .collect()
    }

    pub fn sqrt_stationary(&self) -> Vec<T> {
        self.stationary().into_iter().map(|p| p.sqrt()).collect()
    }

    /// v(a) = v_loc(a_site).
    pub fn observable_at(&self, site: usize) -> Vec<T> {
        (0..self.dim())
            .map(|a| self.sites[site].observable[self.space.state_of(a, site)])
            .collect()
    }

    pub fn mean(&self, f: &[T]) -> T {
        self.stationary().iter().zip(f).fold(T::zero(), |a, (&p, &x)| a + p * x)
    }

    pub fn norm(&self, f: &[T]) -> T {
        self.stationary()
            .iter()
            .zip(f)
            .fold(T::zero(), |a, (&p, &x)| a + p * x * x)
            .sqrt()
    }

    fn sum_over_sites<V, F>(&self, f: &[V], pick: F) -> Vec<V>
    where
        V: Copy + Zero + AddAssign + Mul<T, Output = V>,
        F: Fn(&SiteFactor<T>) -> &DMatrix<T>,
    {
        let mut out = vec![V::zero(); f.len()];
        for (x, s) in self.sites.iter().enumerate() {
            let mut w = f.to_vec();
            apply_site_matrix(&self.space, x, pick(s), &mut w);
            for (o, v) in out.iter_mut().zip(w) {
                *o += v;
            }
        }
        out
    }

    /// B f on function values.
    pub fn apply(&self, f: &[T]) -> Vec<T> {
        self.sum_over_sites(f, |s| &s.b_values)
    }

    /// B in the orthonormal basis, on real or complex coefficient vectors.
    pub fn apply_ortho<V>(&self, f: &[V]) -> Vec<V>
    where
        V: Copy + Zero + AddAssign + Mul<T, Output = V>,
    {
        self.sum_over_sites(f, |s| &s.b_ortho)
    }

    fn kron_sum(&self, pick: impl Fn(&SiteFactor<T>) -> &DMatrix<T>) -> DMatrix<T> {
        let n = self.dim();
        let mut m = DMatrix::<T>::zeros(n, n);
        for (x, s) in self.sites.iter().enumerate() {
            let f = pick(s);
            for a in 0..n {
                let sa = self.space.state_of(a, x);
                let base = a - sa * self.space.strides[x];
                for sb in 0..self.space.sizes[x] {
                    let v = f[(sa, sb)];
                    if v != T::zero() {
                        m[(a, base + sb * self.space.strides[x])] += v;
                    }
                }
            }
        }
        m
    }

    /// Dense B acting on function values.
    pub fn matrix(&self) -> DMatrix<T> {
        self.kron_sum(|s| &s.b_values)
    }

    /// Dense B in the orthonormal basis.
    pub fn matrix_orthonormal(&self) -> DMatrix<T> {
        self.kron_sum(|s| &s.b_ortho)
    }

    /// Rotate orthonormal-basis coefficients into the product eigenbasis of B
    /// (reversible chains only).
    pub fn to_eigenbasis<V>(&self, v: &mut [V]) -> bool
    where
        V: Copy + Zero + AddAssign + Mul<T, Output = V>,
    {
        if !self.reversible {
            return false;
        }
        for (x, s) in self.sites.iter().enumerate() {
            let (_, vecs, _) = s.spectrum.as_ref().unwrap();
            apply_site_matrix(&self.space, x, &vecs.transpose(), v);
        }
        true
    }

    pub fn from_eigenbasis<V>(&self, v: &mut [V]) -> bool
    where
        V: Copy + Zero + AddAssign + Mul<T, Output = V>,
    {
        if !self.reversible {
            return false;
        }
        for (x, s) in self.sites.iter().enumerate() {
            let (_, vecs, _) = s.spectrum.as_ref().unwrap();
            apply_site_matrix(&self.space, x, vecs, v);
        }
        true
    }

    /// Eigenvalues of B on the product eigenbasis, with the index of the zero mode.
    pub fn eigen_table(&self) -> Option<(Vec<T>, usize)> {
        if !self.reversible {
            return None;
        }
        let mut vals = vec![T::zero(); self.dim()];
        let mut zero_idx = 0usize;
        for (x, s) in self.sites.iter().enumerate() {
            let (ev, _, z) = s.spectrum.as_ref().unwrap();
            zero_idx += z * self.space.strides[x];
            for (a, v) in vals.iter_mut().enumerate() {
                *v += ev[self.space.state_of(a, x)];
            }
        }
        vals[zero_idx] = T::zero();
        Some((vals, zero_idx))
    }
}

fn site_exponentials<T: Real>(b: &GeneratorB<T>, t: T, pick: impl Fn(&SiteFactor<T>) -> DMatrix<T>) -> Vec<DMatrix<T>> {
    b.sites
        .iter()
        .map(|s| {
            let m = pick(s) * t;
            expm(&real_to_complex(&m)).map(|z| z.re)
        })
        .collect()
}

fn apply_product<T: Real>(b: &GeneratorB<T>, mats: &[DMatrix<T>], f: &[T]) -> Vec<T> {
    let mut w = f.to_vec();
    for (x, m) in mats.iter().enumerate() {
        apply_site_matrix(&b.space, x, m, &mut w);
    }
    w
}

/// T_t† f = E[f(α(t)) | α(0) = ·] = e^{tQ} f.
pub fn backward_expectation<T: Real>(b: &GeneratorB<T>, f: &[T], t: T) -> Vec<T> {
    let mats = site_exponentials(b, t, |s| s.rates.clone());
    apply_product(b, &mats, f)
}

/// T_t f = E[f(α(0)) | α(t) = ·] = e^{−tB} f.
pub fn conditional_expectation<T: Real>(b: &GeneratorB<T>, f: &[T], t: T) -> Vec<T> {
    let mats = site_exponentials(b, t, |s| -s.b_values.clone());
    apply_product(b, &mats, f)
}

/// 1/τ: smallest eigenvalue of the symmetric part of B on mean-zero functions.
pub fn spectral_gap<T: Real>(b: &GeneratorB<T>) -> Result<T, NoiseError> {
    if b.gap <= T::lit(1e-12) {
        return Err(NoiseError::NoGap { gap: b.gap.as_f64() });
    }
    Ok(b.gap)
}

/// max over t of |E[f(α(t))g(α(0))] − Ef·Eg| − ‖f‖‖g‖e^{−t/τ}.
pub fn check_mixing<T: Real>(b: &GeneratorB<T>, f: &[T], g: &[T], t_grid: &[T]) -> T {
    let pi = b.stationary();
    let ef = b.mean(f);
    let eg = b.mean(g);
    let nf = b.norm(f);
    let ng = b.norm(g);
    let mut worst = T::lit(f64::NEG_INFINITY);
    for &t in t_grid {
        let tf = backward_expectation(b, f, t);
        let corr = pi
            .iter()
            .zip(g)
            .zip(&tf)
            .fold(T::zero(), |a, ((&p, &gv), &fv)| a + p * gv * fv);
        let lhs = (corr - ef * eg).abs();
        let rhs = nf * ng * (-t * b.gap).exp();
        worst = worst.max(lhs - rhs);
    }
    worst
}

/// B⁻¹f for mean-zero f (values basis); the result is mean-zero.
pub fn apply_b_inverse<T: Real>(b: &GeneratorB<T>, f: &[T]) -> Result<Vec<T>, NoiseError> {
    let n = b.dim();
    if f.len() != n {
        return Err(NoiseError::Length { got: f.len(), want: n });
    }
    let mean = b.mean(f);
    if mean.abs() >= T::lit(1e-10) {
        return Err(NoiseError::NotMeanZero { mean: mean.as_f64() });
    }
    let sq = b.sqrt_stationary();
    let mut w: Vec<T> = f.iter().zip(&sq).map(|(&v, &s)| v * s).collect();
    if let Some((vals, zero)) = b.eigen_table() {
        b.to_eigenbasis(&mut w);
        for (a, x) in w.iter_mut().enumerate() {
            *x = if a == zero { T::zero() } else { *x / vals[a] };
        }
        b.from_eigenbasis(&mut w);
    } else {
        // (B̃ + uuᵀ) y = f̃ forces uᵀy = uᵀf̃ = 0
        let mut m = b.matrix_orthonormal();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += sq[i] * sq[j];
            }
        }
        let y = m
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&w))
            .ok_or(NoiseError::Singular)?;
        w = y.iter().copied().collect();
    }
    Ok(w.iter().zip(&sq).map(|(&v, &s)| v / s).collect())
}
