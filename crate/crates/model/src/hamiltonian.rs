use crate::disorder::DisorderSample;
use crate::error::ModelError;
use crate::hopping::HoppingKernel;
use crate::lattice::LatticeSpec;
use fluxlat_numeric::{CMatrix, Real, C};

/// H₀ on the box: H₀[x][y] = h(ζ) where x ≡ y + ζ.
pub fn build_kinetic<T: Real>(lattice: &LatticeSpec, h: &HoppingKernel<T>) -> Result<CMatrix<T>, ModelError> {
    h.check_fits(lattice)?;
    let n = lattice.sites();
    let mut m = CMatrix::<T>::zeros(n, n);
    for y in 0..n {
        for e in &h.entries {
            let x = lattice.shift(y, &e.zeta);
            m[(x, y)] += e.amp;
        }
    }
    Ok(m)
}

/// H_ω = H₀ + U_ω.
pub fn build_hamiltonian<T: Real>(
    lattice: &LatticeSpec,
    h: &HoppingKernel<T>,
    omega: &DisorderSample<T>,
) -> Result<CMatrix<T>, ModelError> {
    let n = lattice.sites();
    if omega.values.len() != n {
        return Err(ModelError::SizeMismatch {
            expected: n,
            got: omega.values.len(),
        });
    }
    let mut m = build_kinetic(lattice, h)?;
    for x in 0..n {
        m[(x, x)] += C::new(omega.values[x], T::zero());
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::disorder::{sample_disorder, DisorderSpec};
    use fluxlat_numeric::dense::{hermiticity_error, spectral_norm};
    use proptest::prelude::*;

    #[test]
    fn ring_of_four_spectrum() {
        let l = LatticeSpec::new(1, 4).unwrap();
        let h = HoppingKernel::<f64>::nearest_neighbour(1, 1.0);
        let m = build_hamiltonian(&l, &h, &DisorderSample::zero(4)).unwrap();
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // 2cos(2πm/4)
        let mut want: Vec<f64> = (0..4).map(|k| 2.0 * (std::f64::consts::PI * k as f64 / 2.0).cos()).collect();
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ev.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn size_mismatch() {
        let l = LatticeSpec::new(1, 4).unwrap();
        let h = HoppingKernel::<f64>::nearest_neighbour(1, 1.0);
        assert!(matches!(
            build_hamiltonian(&l, &h, &DisorderSample::zero(5)),
            Err(ModelError::SizeMismatch { .. })
        ));
    }

    #[test]
    fn f32_instantiation() {
        let l = LatticeSpec::new(1, 6).unwrap();
        let h = HoppingKernel::<f32>::nearest_neighbour(1, 1.0);
        let m = build_hamiltonian(&l, &h, &DisorderSample::zero(6)).unwrap();
        assert!(hermiticity_error(&m) == 0.0);
    }

    fn shift_matrix(l: &LatticeSpec) -> CMatrix<f64> {
        let n = l.sites();
        let mut s = CMatrix::<f64>::zeros(n, n);
        let mut e = vec![0i64; l.dimension];
        e[0] = 1;
        for x in 0..n {
            s[(l.shift(x, &e), x)] = C::new(1.0, 0.0);
        }
        s
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn hermitian_and_bounded(seed in any::<u64>(), n in 3usize..9, d in 1usize..3, lam in 0.0f64..4.0, im in -1.0f64..1.0) {
            let l = LatticeSpec::new(d, n).unwrap();
            let mut h = HoppingKernel::<f64>::nearest_neighbour(d, 1.0);
            // add a complex diagonal hop when it fits
            if d == 2 {
                h.entries.push(crate::HoppingEntry { zeta: vec![1, 1], amp: C::new(0.3, im) });
                h.entries.push(crate::HoppingEntry { zeta: vec![-1, -1], amp: C::new(0.3, -im) });
            }
            let w = sample_disorder(&DisorderSpec::uniform(lam), &l, seed);
            let m = build_hamiltonian(&l, &h, &w).unwrap();
            prop_assert!(hermiticity_error(&m) <= 1e-14);
            let r = crate::validate_hopping(&h, d).unwrap();
            prop_assert!(spectral_norm(&m) <= r.m0 + lam + 1e-10);
        }

        #[test]
        fn clean_hamiltonian_commutes_with_shift(n in 3usize..12) {
            let l = LatticeSpec::new(1, n).unwrap();
            let h = HoppingKernel::<f64>::new(vec![(vec![1], C::new(0.7, 0.2)), (vec![-1], C::new(0.7, -0.2))]);
            let m = build_hamiltonian(&l, &h, &DisorderSample::zero(n)).unwrap();
            let s = shift_matrix(&l);
            prop_assert!((&m * &s - &s * &m).norm() <= 1e-12);
        }
    }
}
