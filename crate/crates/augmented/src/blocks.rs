//! Block structure of L²(A × Ω × sites) at fixed momentum:
//! Ĥ₀ = span{𝟙⊗δ₀}, Ĥ₁ = a-constant, ω-mean-zero at x = 0,
//! Ĥ₂ = a-constant at x ≠ 0, Ĥ₃ = a-mean-zero. In the mode basis these are
//! coordinate sets, except that Ĥ₀ and Ĥ₁ share the x = 0 coordinates.

use crate::error::AugmentedError;
use crate::fiber::{FiberModel, NoiseBasis};
use fluxlat_model::{minimal_image, HoppingKernel, LatticeSpec, Model};
use fluxlat_noise::SiteChain;
use fluxlat_numeric::{
    dense::{complement_basis, orthonormal_complement, range_basis},
    sparse::{CsrBuilder, CsrMatrix},
    CMatrix, Real, C,
};

/// Singular values of Q₀ at or below this are treated as zero.
pub const RANGE_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BlockDecomp<T: Real> {
    pub fiber: FiberModel<T>,
    /// Coordinates (x = 0, ω, zero mode), ordered by ω.
    pub origin: Vec<usize>,
    /// Ĥ₀ in `origin` coordinates (√μ).
    pub h0: Vec<T>,
    /// Orthonormal basis of Ĥ₁ in `origin` coordinates.
    pub h1: CMatrix<T>,
    pub h2: Vec<usize>,
    pub h3: Vec<usize>,
    /// Q₀ from `origin` coordinates into Ĥ₂.
    pub q0: CMatrix<T>,
    /// Orthonormal basis of ran Q₀ inside Ĥ₂ (Π₀).
    pub range_q0: CMatrix<T>,
    /// Orthonormal basis of its complement in Ĥ₂ (Π₀^⊥).
    pub complement: CMatrix<T>,
    pub singular_values: Vec<T>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    H0,
    H1,
    H2,
    H3,
}

/// Global → local position, `usize::MAX` when absent.
pub(crate) fn position_map(dim: usize, set: &[usize]) -> Vec<usize> {
    let mut m = vec![usize::MAX; dim];
    for (i, &g) in set.iter().enumerate() {
        m[g] = i;
    }
    m
}

/// Dense block of a sparse operator.
pub(crate) fn dense_block<T: Real>(a: &CsrMatrix<T>, rows: &[usize], cols: &[usize]) -> CMatrix<T> {
    let cmap = position_map(a.dim(), cols);
    let mut m = CMatrix::zeros(rows.len(), cols.len());
    for (i, &r) in rows.iter().enumerate() {
        for (c, v) in a.row(r) {
            if cmap[c] != usize::MAX {
                m[(i, cmap[c])] += v;
            }
        }
    }
    m
}

impl<T: Real> BlockDecomp<T> {
    pub fn new(fiber: FiberModel<T>) -> Result<Self, AugmentedError> {
        if fiber.basis != NoiseBasis::Modes {
            return Err(AugmentedError::Shape(
                "block decomposition needs the mode basis".into(),
            ));
        }
        let z = fiber.zero_mode.unwrap_or(0);
        let origin_site = fiber.lattice.origin();
        let nw = fiber.w_dim();
        let origin: Vec<usize> = (0..nw).map(|w| fiber.index(origin_site, w, z)).collect();
        let mut h2 = Vec::new();
        let mut h3 = Vec::new();
        for i in 0..fiber.dim() {
            let (x, _, a) = fiber.decode(i);
            if a != z {
                h3.push(i);
            } else if x != origin_site {
                h2.push(i);
            }
        }
        let h0 = vec![fiber.omega.weight().sqrt(); nw];
        let h1 = if nw > 1 {
            let c = orthonormal_complement(&h0);
            c.map(|v| C::new(v, T::zero()))
        } else {
            CMatrix::zeros(1, 0)
        };
        let zero = vec![T::zero(); fiber.lattice.dimension];
        let kinetic = fiber.parts(&zero, false)?.kinetic;
        let q0 = dense_block(&kinetic, &h2, &origin);
        let (range_q0, sv) = range_basis(&q0, T::lit(RANGE_THRESHOLD));
        let complement = complement_basis(&range_q0);
        let mut warnings = Vec::new();
        let lo = T::lit(RANGE_THRESHOLD / 10.0);
        let hi = T::lit(RANGE_THRESHOLD * 10.0);
        if let Some(s) = sv.iter().find(|&&s| s > lo && s < hi) {
            warnings.push(format!(
                "singular value {:.3e} of Q0 is within 10x of the range threshold",
                s.as_f64()
            ));
        }
        Ok(Self {
            fiber,
            origin,
            h0,
            h1,
            h2,
            h3,
            q0,
            range_q0,
            complement,
            singular_values: sv,
            warnings,
        })
    }

    pub fn dims(&self) -> [usize; 4] {
        [1, self.h1.ncols(), self.h2.len(), self.h3.len()]
    }

    pub fn rank_q0(&self) -> usize {
        self.range_q0.ncols()
    }

    /// Orthogonal projector onto one block as a sparse operator on the fibre.
    pub fn projector(&self, block: Block) -> CsrMatrix<T> {
        let n = self.fiber.dim();
        let mut b = CsrBuilder::new(n);
        let one = C::new(T::one(), T::zero());
        match block {
            Block::H0 | Block::H1 => {
                let nw = self.origin.len();
                for i in 0..nw {
                    for j in 0..nw {
                        let p0 = self.h0[i] * self.h0[j];
                        let delta = if i == j { T::one() } else { T::zero() };
                        let v = if block == Block::H0 { p0 } else { delta - p0 };
                        b.push(self.origin[i], self.origin[j], C::new(v, T::zero()));
                    }
                }
            }
            Block::H2 => self.h2.iter().for_each(|&i| b.push(i, i, one)),
            Block::H3 => self.h3.iter().for_each(|&i| b.push(i, i, one)),
        }
        b.build()
    }

    /// Π₀ as a sparse operator on the fibre.
    pub fn pi0_projector(&self) -> CsrMatrix<T> {
        let p = &self.range_q0 * self.range_q0.adjoint();
        let mut b = CsrBuilder::new(self.fiber.dim());
        for (i, &gi) in self.h2.iter().enumerate() {
            for (j, &gj) in self.h2.iter().enumerate() {
                b.push(gi, gj, p[(i, j)]);
            }
        }
        b.build()
    }

    /// Coordinates on Ĥ₂ of an (a, ω)-independent function f(x).
    pub fn lift_h2(&self, f: &[C<T>]) -> Vec<C<T>> {
        let sw = self.fiber.omega.weight().sqrt();
        self.h2
            .iter()
            .map(|&i| {
                let (x, _, _) = self.fiber.decode(i);
                f[x] * sw
            })
            .collect()
    }

    /// f^{(i)}(x) = x_i h(x) on Ĥ₂.
    pub fn current_vectors(&self) -> Vec<Vec<C<T>>> {
        current_profiles(&self.fiber.lattice, &self.fiber.hopping)
            .iter()
            .map(|f| self.lift_h2(f))
            .collect()
    }
}

/// Block decomposition of the fibre at k = 0 in the mode basis.
pub fn block_decompose<T: Real>(
    model: &Model<T>,
    chain: &SiteChain<T>,
) -> Result<BlockDecomp<T>, AugmentedError> {
    BlockDecomp::new(FiberModel::new(model, chain, NoiseBasis::Modes)?)
}

/// x ↦ x_i h(x) on the sites, x in minimal image, one profile per direction.
pub fn current_profiles<T: Real>(lat: &LatticeSpec, hopping: &HoppingKernel<T>) -> Vec<Vec<C<T>>> {
    let n = lat.sites();
    (0..lat.dimension)
        .map(|i| {
            let mut f = vec![C::new(T::zero(), T::zero()); n];
            for e in &hopping.entries {
                let x = lat.shift(lat.origin(), &e.zeta);
                let z = minimal_image(&e.zeta, lat.extent);
                f[x] += e.amp * T::lit(z[i] as f64);
            }
            f
        })
        .collect()
}
