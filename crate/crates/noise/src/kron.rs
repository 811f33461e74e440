//! Mixed-radix joint state space A = Π_x S_x with site 0 least significant,
//! and matrix application along one site axis.

use fluxlat_model::LatticeSpec;
use nalgebra::DMatrix;
use num_traits::Zero;
use std::ops::{AddAssign, Mul};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointSpace {
    pub sizes: Vec<usize>,
    pub strides: Vec<usize>,
    pub dim: usize,
}

impl JointSpace {
    /// None on overflow.
    pub fn new(sizes: Vec<usize>) -> Option<Self> {
        let mut strides = Vec::with_capacity(sizes.len());
        let mut dim = 1usize;
        for &s in &sizes {
            strides.push(dim);
            dim = dim.checked_mul(s)?;
        }
        Some(Self { sizes, strides, dim })
    }

    pub fn uniform(states: usize, sites: usize) -> Option<Self> {
        Self::new(vec![states; sites])
    }

    pub fn sites(&self) -> usize {
        self.sizes.len()
    }

    #[inline]
    pub fn state_of(&self, a: usize, site: usize) -> usize {
        (a / self.strides[site]) % self.sizes[site]
    }

    pub fn decode(&self, a: usize) -> Vec<usize> {
        (0..self.sites()).map(|x| self.state_of(a, x)).collect()
    }

    pub fn encode(&self, states: &[usize]) -> usize {
        states.iter().zip(&self.strides).map(|(s, st)| s * st).sum()
    }

    /// Permutation a ↦ σ_ζ a with (σ_ζ a)(y) = a(y + ζ); needs identical site sizes.
    pub fn shift_table(&self, lattice: &LatticeSpec, zeta: &[i64]) -> Vec<usize> {
        assert_eq!(lattice.sites(), self.sites());
        let src: Vec<usize> = (0..self.sites()).map(|y| lattice.shift(y, zeta)).collect();
        (0..self.dim)
            .map(|a| {
                let s = self.decode(a);
                let shifted: Vec<usize> = src.iter().map(|&y| s[y]).collect();
                self.encode(&shifted)
            })
            .collect()
    }
}

/// v ← (I ⊗ … ⊗ M ⊗ … ⊗ I) v with M acting on `site`.
pub fn apply_site_matrix<V, T>(space: &JointSpace, site: usize, m: &DMatrix<T>, v: &mut [V])
where
    V: Copy + Zero + AddAssign + Mul<T, Output = V>,
    T: Copy + nalgebra::Scalar,
{
    let st = space.strides[site];
    let s = space.sizes[site];
    debug_assert_eq!(v.len(), space.dim);
    let block = st * s;
    let mut buf = vec![V::zero(); s];
    for base in (0..space.dim).step_by(block) {
        for inner in 0..st {
            let off = base + inner;
            for (k, b) in buf.iter_mut().enumerate() {
                *b = v[off + k * st];
            }
            for i in 0..s {
                let mut acc = V::zero();
                for (j, b) in buf.iter().enumerate() {
                    acc += *b * m[(i, j)];
                }
                v[off + i * st] = acc;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_moves_configuration() {
        let l = LatticeSpec::new(1, 3).unwrap();
        let sp = JointSpace::uniform(2, 3).unwrap();
        // a = (1,0,0): site 0 in state 1
        let a = sp.encode(&[1, 0, 0]);
        let t = sp.shift_table(&l, &[1]);
        // (σ_1 a)(y) = a(y+1): site 2 reads a(0)=1
        assert_eq!(sp.decode(t[a]), vec![0, 0, 1]);
    }

    #[test]
    fn axis_application_matches_kronecker() {
        let sp = JointSpace::new(vec![2, 3]).unwrap();
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 3.0, 4.0, 0.0, 1.0]);
        let mut v: Vec<f64> = (0..6).map(|i| i as f64 + 1.0).collect();
        let orig = v.clone();
        apply_site_matrix(&sp, 1, &m, &mut v);
        // kron(M, I2) in site-0-fastest ordering
        let mut full = DMatrix::<f64>::zeros(6, 6);
        for i in 0..3 {
            for j in 0..3 {
                for r in 0..2 {
                    full[(i * 2 + r, j * 2 + r)] = m[(i, j)];
                }
            }
        }
        let want = full * nalgebra::DVector::from_vec(orig);
        for i in 0..6 {
            assert!((v[i] - want[i]).abs() < 1e-14);
        }
    }
}
