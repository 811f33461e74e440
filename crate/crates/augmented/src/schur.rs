//! Schur complements over Ĥ₂: Γ_k(w), the restricted M and the diffusion matrix.

use crate::blocks::{dense_block, position_map, BlockDecomp};
use crate::error::AugmentedError;
use fluxlat_model::{DiffusionEstimate, DiffusionMethod};
use fluxlat_numeric::{
    dense::{norm, RefinedLu},
    gmres::{gmres, GmresOptions},
    sparse::{CsrBuilder, CsrMatrix},
    CMatrix, Real, C,
};
use nalgebra::DMatrix;

/// Ĥ₃ dimensions up to this use dense LU; larger ones use preconditioned GMRES.
pub const DENSE_SCHUR_LIMIT: usize = 1500;
/// Largest accepted relative residual of an Ĥ₃ solve.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// Pieces of 𝓛̂_k seen from Ĥ₂ at coupling g.
pub struct FiberBlocks<'a, T: Real> {
    pub decomp: &'a BlockDecomp<T>,
    pub k: Vec<T>,
    pub g: T,
    /// i(K̂ + Û) on Ĥ₂.
    pub l2: CMatrix<T>,
    /// K̂_k from Ĥ₁ into Ĥ₂.
    pub q: CMatrix<T>,
    /// f_k = K̂_k(𝟙⊗δ₀) on Ĥ₂.
    pub f: Vec<C<T>>,
    /// Columns of V̂ from Ĥ₂ into Ĥ₃ (local Ĥ₃ indices).
    v32: Vec<Vec<(usize, C<T>)>>,
    /// 𝓛̂_k on Ĥ₃ (local indices).
    l3: CsrMatrix<T>,
    l3_diag: Vec<C<T>>,
    /// 𝓛̂_k on the whole fibre.
    full: CsrMatrix<T>,
    /// Coordinates outside the x = 0 a-constant block.
    outer: Vec<usize>,
}

impl<'a, T: Real> FiberBlocks<'a, T> {
    pub fn new(
        decomp: &'a BlockDecomp<T>,
        k: &[T],
        g: T,
        twisted: bool,
    ) -> Result<Self, AugmentedError> {
        let fm = &decomp.fiber;
        let parts = fm.parts(k, twisted)?;
        let i = C::new(T::zero(), T::one());
        let one = C::new(T::one(), T::zero());
        let pot = parts.potential_matrix();
        let hamiltonian = CsrMatrix::combine(&[(one, &parts.kinetic), (one, &pot)]);
        let l2 = dense_block(&hamiltonian, &decomp.h2, &decomp.h2) * i;
        let k_origin = dense_block(&parts.kinetic, &decomp.h2, &decomp.origin);
        let q = &k_origin * &decomp.h1;
        let h0 = nalgebra::DVector::from_iterator(
            decomp.h0.len(),
            decomp.h0.iter().map(|&v| C::new(v, T::zero())),
        );
        let f = (&k_origin * h0).as_slice().to_vec();

        let dim = fm.dim();
        let map3 = position_map(dim, &decomp.h3);
        let map2 = position_map(dim, &decomp.h2);
        let mut v32 = vec![Vec::new(); decomp.h2.len()];
        for (li, &gi) in decomp.h3.iter().enumerate() {
            for (c, v) in parts.noise_coupling.row(gi) {
                if map2[c] != usize::MAX {
                    v32[map2[c]].push((li, v));
                }
            }
        }
        let full = parts.generator_at(g);
        let n3 = decomp.h3.len();
        let mut b = CsrBuilder::new(n3);
        for (li, &gi) in decomp.h3.iter().enumerate() {
            for (c, v) in full.row(gi) {
                if map3[c] != usize::MAX {
                    b.push(li, map3[c], v);
                }
            }
        }
        let l3 = b.build();
        let origin_map = position_map(dim, &decomp.origin);
        let outer: Vec<usize> = (0..dim).filter(|&i| origin_map[i] == usize::MAX).collect();
        let l3_diag = (0..n3)
            .map(|r| {
                l3.row(r)
                    .find(|e| e.0 == r)
                    .map(|e| e.1)
                    .unwrap_or(C::new(T::zero(), T::zero()))
            })
            .collect();
        Ok(Self {
            decomp,
            k: k.to_vec(),
            g,
            l2,
            q,
            f,
            v32,
            l3,
            l3_diag,
            full,
            outer,
        })
    }

    pub fn h2_dim(&self) -> usize {
        self.l2.nrows()
    }

    pub fn h3_dim(&self) -> usize {
        self.l3.dim()
    }

    /// 𝓛̂_{k;3} applied to an Ĥ₃ vector.
    pub fn h3_apply(&self, x: &[C<T>]) -> Vec<C<T>> {
        self.l3.matvec(x)
    }

    /// V̂ from Ĥ₂ into Ĥ₃ applied to an Ĥ₂ vector.
    pub fn v32_apply(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut y = vec![C::new(T::zero(), T::zero()); self.h3_dim()];
        for (j, col) in self.v32.iter().enumerate() {
            if x[j] == C::new(T::zero(), T::zero()) {
                continue;
            }
            for &(r, v) in col {
                y[r] += v * x[j];
            }
        }
        y
    }

    /// Solves (w + 𝓛̂_{k;3}) X = R column by column. Returns the worst relative residual.
    pub fn solve_h3(
        &self,
        w: C<T>,
        rhs: &[Vec<C<T>>],
    ) -> Result<(Vec<Vec<C<T>>>, T), AugmentedError> {
        let n3 = self.h3_dim();
        if rhs.is_empty() {
            return Ok((vec![], T::zero()));
        }
        if n3 <= DENSE_SCHUR_LIMIT {
            let mut a = self.l3.to_dense();
            for i in 0..n3 {
                a[(i, i)] += w;
            }
            let lu = RefinedLu::new(a.clone());
            let r = CMatrix::from_fn(n3, rhs.len(), |i, j| rhs[j][i]);
            let x = lu.solve(&r)?;
            let res = &a * &x - &r;
            let worst = (0..rhs.len()).fold(T::zero(), |m, j| {
                let rn = norm(r.column(j).as_slice());
                if rn == T::zero() {
                    m
                } else {
                    m.max(norm(res.column(j).as_slice()) / rn)
                }
            });
            let cols = (0..rhs.len())
                .map(|j| x.column(j).as_slice().to_vec())
                .collect();
            return Ok((cols, worst));
        }
        let diag: Vec<C<T>> = self.l3_diag.iter().map(|&d| d + w).collect();
        let apply = |x: &[C<T>]| {
            let mut y = self.l3.matvec(x);
            for (yi, xi) in y.iter_mut().zip(x) {
                *yi += w * *xi;
            }
            y
        };
        let precond = |x: &[C<T>]| {
            x.iter()
                .zip(&diag)
                .map(|(&xi, &d)| {
                    if d == C::new(T::zero(), T::zero()) {
                        xi
                    } else {
                        xi / d
                    }
                })
                .collect()
        };
        let opts = GmresOptions {
            rel_tol: SOLVE_TOLERANCE * 0.1,
            ..GmresOptions::default()
        };
        let mut out = Vec::with_capacity(rhs.len());
        let mut worst = T::zero();
        for r in rhs {
            let (x, info) = gmres(apply, precond, r, opts);
            if !info.converged || info.rel_residual > SOLVE_TOLERANCE {
                return Err(AugmentedError::Solve {
                    residual: info.rel_residual,
                });
            }
            worst = worst.max(T::lit(info.rel_residual));
            out.push(x);
        }
        Ok((out, worst))
    }

    /// V̂† from Ĥ₃ back into Ĥ₂.
    pub fn v23_apply(&self, y: &[C<T>]) -> Vec<C<T>> {
        self.v32
            .iter()
            .map(|col| {
                col.iter().fold(C::new(T::zero(), T::zero()), |a, &(r, v)| {
                    a + v.conj() * y[r]
                })
            })
            .collect()
    }

    /// basis† V̂†(w + 𝓛̂_{k;3})⁻¹V̂ basis for an Ĥ₂ basis given as columns.
    pub fn coupling(&self, w: C<T>, basis: &CMatrix<T>) -> Result<CMatrix<T>, AugmentedError> {
        let m = basis.ncols();
        let mut out = CMatrix::zeros(m, m);
        // dense solves batch all columns; the iterative path streams them
        let batch = if self.h3_dim() <= DENSE_SCHUR_LIMIT {
            m.max(1)
        } else {
            1
        };
        let mut j0 = 0;
        while j0 < m {
            let j1 = (j0 + batch).min(m);
            let vb: Vec<Vec<C<T>>> = (j0..j1)
                .map(|j| self.v32_apply(basis.column(j).as_slice()))
                .collect();
            let (x, _) = self.solve_h3(w, &vb)?;
            for (off, xj) in x.iter().enumerate() {
                let y = nalgebra::DVector::from_vec(self.v23_apply(xj));
                out.set_column(j0 + off, &(basis.adjoint() * y));
            }
            j0 = j1;
        }
        Ok(out)
    }

    /// Γ_k(w)⁻¹ = w + L̂_{k;2} + Q_kQ_k†/w + g²V̂†(w + L̂_{k;3})⁻¹V̂.
    pub fn gamma_inverse(&self, w: C<T>) -> Result<CMatrix<T>, AugmentedError> {
        if w.re <= T::zero() {
            return Err(AugmentedError::NotAccretive { re: w.re.as_f64() });
        }
        let n2 = self.h2_dim();
        let mut m = self.l2.clone() + &self.q * self.q.adjoint() / w;
        for i in 0..n2 {
            m[(i, i)] += w;
        }
        if self.g != T::zero() {
            let eye = CMatrix::identity(n2, n2);
            m += self.coupling(w, &eye)? * C::new(self.g * self.g, T::zero());
        }
        Ok(m)
    }

    /// Dimension of Ĥ₀^⊥ = Ĥ₁ ⊕ Ĥ₂ ⊕ Ĥ₃.
    pub fn reduced_dim(&self) -> usize {
        self.decomp.h1.ncols() + self.outer.len()
    }

    fn embed(&self, y: &[C<T>]) -> Vec<C<T>> {
        let n1 = self.decomp.h1.ncols();
        let mut v = vec![C::new(T::zero(), T::zero()); self.full.dim()];
        for (r, &g) in self.decomp.origin.iter().enumerate() {
            v[g] = (0..n1).fold(C::new(T::zero(), T::zero()), |a, c| {
                a + self.decomp.h1[(r, c)] * y[c]
            });
        }
        for (i, &g) in self.outer.iter().enumerate() {
            v[g] = y[n1 + i];
        }
        v
    }

    fn restrict(&self, v: &[C<T>]) -> Vec<C<T>> {
        let n1 = self.decomp.h1.ncols();
        let mut y = Vec::with_capacity(self.reduced_dim());
        for c in 0..n1 {
            y.push(
                self.decomp
                    .origin
                    .iter()
                    .enumerate()
                    .fold(C::new(T::zero(), T::zero()), |a, (r, &g)| {
                        a + self.decomp.h1[(r, c)].conj() * v[g]
                    }),
            );
        }
        y.extend(self.outer.iter().map(|&g| v[g]));
        y
    }

    /// (w + 𝓛̂_k) on Ĥ₀^⊥ in reduced coordinates.
    pub fn reduced_apply(&self, w: C<T>, y: &[C<T>]) -> Vec<C<T>> {
        let mut out = self.restrict(&self.full.matvec(&self.embed(y)));
        for (o, &yi) in out.iter_mut().zip(y) {
            *o += w * yi;
        }
        out
    }

    /// Position of each Ĥ₂ coordinate inside the reduced coordinates.
    fn h2_in_reduced(&self) -> Vec<usize> {
        let n1 = self.decomp.h1.ncols();
        let map = position_map(self.full.dim(), &self.outer);
        self.decomp.h2.iter().map(|&g| n1 + map[g]).collect()
    }

    /// Γ_k(w)x through one solve with w + 𝓛̂_k on Ĥ₀^⊥ (Γ is the Ĥ₂ block of its inverse).
    pub fn gamma_apply(&self, w: C<T>, x: &[C<T>]) -> Result<Vec<C<T>>, AugmentedError> {
        if w.re <= T::zero() {
            return Err(AugmentedError::NotAccretive { re: w.re.as_f64() });
        }
        let n = self.reduced_dim();
        let pos = self.h2_in_reduced();
        let mut rhs = vec![C::new(T::zero(), T::zero()); n];
        for (&p, &xi) in pos.iter().zip(x) {
            rhs[p] = xi;
        }
        let y = if n <= DENSE_SCHUR_LIMIT {
            let a = self.reduced_matrix(w);
            let lu = RefinedLu::new(a);
            lu.solve_vec(&nalgebra::DVector::from_column_slice(&rhs))?
                .as_slice()
                .to_vec()
        } else {
            let n1 = self.decomp.h1.ncols();
            let mut diag = vec![w; n];
            for (i, &g) in self.outer.iter().enumerate() {
                diag[n1 + i] += self
                    .full
                    .row(g)
                    .find(|e| e.0 == g)
                    .map(|e| e.1)
                    .unwrap_or(C::new(T::zero(), T::zero()));
            }
            let precond = |v: &[C<T>]| v.iter().zip(&diag).map(|(&a, &d)| a / d).collect();
            let opts = GmresOptions {
                rel_tol: SOLVE_TOLERANCE * 0.1,
                restart: 100,
                ..GmresOptions::default()
            };
            let (y, info) = gmres(|v: &[C<T>]| self.reduced_apply(w, v), precond, &rhs, opts);
            if !info.converged || info.rel_residual > SOLVE_TOLERANCE {
                return Err(AugmentedError::Solve {
                    residual: info.rel_residual,
                });
            }
            y
        };
        Ok(pos.iter().map(|&p| y[p]).collect())
    }

    /// Dense w + 𝓛̂_k on Ĥ₀^⊥.
    pub fn reduced_matrix(&self, w: C<T>) -> CMatrix<T> {
        let n1 = self.decomp.h1.ncols();
        let n = self.reduced_dim();
        let full = self.full.to_dense();
        let h1 = &self.decomp.h1;
        let origin = &self.decomp.origin;
        // columns: L E
        let dim = full.nrows();
        let mut le = CMatrix::zeros(dim, n);
        for c in 0..n1 {
            for (r, &g) in origin.iter().enumerate() {
                let coef = h1[(r, c)];
                if coef != C::new(T::zero(), T::zero()) {
                    let col = full.column(g) * coef;
                    le.column_mut(c).axpy(
                        C::new(T::one(), T::zero()),
                        &col,
                        C::new(T::one(), T::zero()),
                    );
                }
            }
        }
        for (i, &g) in self.outer.iter().enumerate() {
            le.set_column(n1 + i, &full.column(g));
        }
        // rows: E† (L E)
        let mut m = CMatrix::zeros(n, n);
        for c in 0..n1 {
            for (r, &g) in origin.iter().enumerate() {
                let coef = h1[(r, c)].conj();
                if coef != C::new(T::zero(), T::zero()) {
                    let row = le.row(g) * coef;
                    let mut dst = m.row_mut(c);
                    dst += row;
                }
            }
        }
        for (i, &g) in self.outer.iter().enumerate() {
            m.set_row(n1 + i, &le.row(g));
        }
        for i in 0..n {
            m[(i, i)] += w;
        }
        m
    }

    /// Positions of the Ĥ₂ coordinates in the reduced ordering.
    pub fn h2_positions(&self) -> Vec<usize> {
        self.h2_in_reduced()
    }

    pub fn gamma(&self, w: C<T>) -> Result<CMatrix<T>, AugmentedError> {
        let inv = self.gamma_inverse(w)?;
        let n = inv.nrows();
        Ok(RefinedLu::new(inv).solve(&CMatrix::identity(n, n))?)
    }
}

/// Restricted M on Π₀^⊥ Ĥ₂ in the basis `decomp.complement`.
pub fn restricted_m<T: Real>(blocks: &FiberBlocks<'_, T>) -> Result<CMatrix<T>, AugmentedError> {
    let w = &blocks.decomp.complement;
    let mut m = w.adjoint() * &blocks.l2 * w;
    if blocks.g != T::zero() {
        m += blocks.coupling(C::new(T::zero(), T::zero()), w)?
            * C::new(blocks.g * blocks.g, T::zero());
    }
    Ok(m)
}

/// D_ij = ⟨f^{(i)}, (Π₀^⊥MΠ₀^⊥)⁻¹f^{(j)}⟩ + (i ↔ j).
pub fn diffusion_schur_from<T: Real>(
    decomp: &BlockDecomp<T>,
    g: T,
) -> Result<DiffusionEstimate<T>, AugmentedError> {
    let d = decomp.fiber.lattice.dimension;
    let zero = vec![T::zero(); d];
    let blocks = FiberBlocks::new(decomp, &zero, g, false)?;
    let m = restricted_m(&blocks)?;
    let w = &decomp.complement;
    let fs = decomp.current_vectors();
    let mut flags: Vec<String> = decomp.warnings.clone();
    let proj: Vec<CMatrix<T>> = fs
        .iter()
        .map(|f| w.adjoint() * CMatrix::from_column_slice(f.len(), 1, f))
        .collect();
    for (i, f) in fs.iter().enumerate() {
        let fnorm = norm(f);
        let leak = norm(
            (decomp.range_q0.adjoint() * CMatrix::from_column_slice(f.len(), 1, f)).as_slice(),
        );
        if leak > T::lit(1e-10) * fnorm.max(T::one()) {
            flags.push(format!("f{i} leaks {:.3e} into ran Q0", leak.as_f64()));
        }
    }
    if m.ncols() == 0 {
        return Err(AugmentedError::Singular);
    }
    let rhs = CMatrix::from_fn(m.nrows(), d, |r, j| proj[j][(r, 0)]);
    let scale = m.iter().fold(T::zero(), |a, z| a.max(z.norm_sqr().sqrt()));
    let sv_min = m.clone().singular_values().min();
    if sv_min <= T::lit(1e-13) * scale.max(T::one()) {
        return Err(AugmentedError::Singular);
    }
    let sol = RefinedLu::new(m)
        .solve(&rhs)
        .map_err(|_| AugmentedError::Singular)?;
    let gram = rhs.adjoint() * sol;
    let mut dm = DMatrix::<T>::zeros(d, d);
    let mut imag_max = T::zero();
    for i in 0..d {
        for j in 0..d {
            let v = gram[(i, j)] + gram[(j, i)];
            dm[(i, j)] = v.re;
            imag_max = imag_max.max(v.im.abs());
        }
    }
    if imag_max > T::lit(1e-8) {
        flags.push(format!("imaginary part {:.3e}", imag_max.as_f64()));
    }
    Ok(DiffusionEstimate {
        d: dm,
        stderr: DMatrix::zeros(d, d),
        method: DiffusionMethod::Schur,
        window: (T::zero(), T::zero()),
        imag_max,
        flags,
    })
}

pub fn diffusion_schur<T: Real>(
    model: &fluxlat_model::Model<T>,
    chain: &fluxlat_noise::SiteChain<T>,
    g: T,
) -> Result<DiffusionEstimate<T>, AugmentedError> {
    let decomp = crate::blocks::block_decompose(model, chain)?;
    diffusion_schur_from(&decomp, g)
}
