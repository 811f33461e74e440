use fluxlat_augmented::{
    accretivity_probe, build_l_fixed_omega, build_lhat_k, fiber_consistency, lhat_from_fiber,
    pillet_expectation, FiberModel, NoiseBasis, OmegaSpace,
};
use fluxlat_model::{
    build_hamiltonian, DensityMatrix, DisorderSample, DisorderSpec, Model, WaveFunction,
};
use fluxlat_noise::SiteChain;
use fluxlat_numeric::{
    dense::{hermiticity_error, inner},
    expm::expm,
    CMatrix, C,
};
use std::f64::consts::TAU;

fn ring(n: usize, lambda: f64) -> Model<f64> {
    let d = if lambda == 0.0 {
        DisorderSpec::none()
    } else {
        DisorderSpec::bernoulli(lambda)
    };
    Model::nearest_neighbour(1, n, d).unwrap()
}

fn delta_rho(n: usize) -> DensityMatrix<f64> {
    DensityMatrix::pure(&WaveFunction::delta(n, 0))
}

fn max_diff(a: &CMatrix<f64>, b: &CMatrix<f64>) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

#[test]
fn fixed_omega_parts_are_hermitian() {
    let m = ring(3, 1.0);
    let l = build_l_fixed_omega(&m, &SiteChain::telegraph(1.0), &[1.0, -1.0, 1.0], 0.5).unwrap();
    assert_eq!(l.dim(), 8 * 9);
    assert!(l.part_hermiticity_error() < 1e-12);
    assert!(accretivity_probe(&l, 500, 7) >= -1e-10);
}

#[test]
fn fixed_omega_without_coupling_is_unitary_conjugation() {
    let m = ring(3, 1.0);
    let omega = [1.0, -1.0, -1.0];
    let l = build_l_fixed_omega(&m, &SiteChain::telegraph(1.0), &omega, 0.0).unwrap();
    let rho0 = DensityMatrix::pure(&WaveFunction {
        amplitudes: vec![C::new(0.6, 0.0), C::new(0.0, 0.8), C::new(0.0, 0.0)],
    });
    let h = build_hamiltonian(
        &m.lattice,
        &m.hopping,
        &DisorderSample::from_values(omega.to_vec(), 1.0),
    )
    .unwrap();
    for t in [0.0, 0.5, 2.0] {
        let got = pillet_expectation(&l, &rho0, t).unwrap();
        let u = expm(&(&h * C::new(0.0, -t)));
        let want = &u * &rho0.entries * u.adjoint();
        assert!(max_diff(&got, &want) < 1e-10, "t={t}");
    }
}

#[test]
fn pillet_output_is_a_density_matrix() {
    let m = ring(3, 1.0);
    let l = build_l_fixed_omega(&m, &SiteChain::telegraph(1.0), &[1.0, 1.0, -1.0], 1.0).unwrap();
    let rho0 = delta_rho(3);
    assert_eq!(pillet_expectation(&l, &rho0, 0.0).unwrap(), rho0.entries);
    let r = pillet_expectation(&l, &rho0, 1.5).unwrap();
    assert!(hermiticity_error(&r) < 1e-10);
    assert!((r.trace() - C::new(1.0, 0.0)).norm() < 1e-10);
    let bad = DensityMatrix::from_matrix(CMatrix::identity(3, 3)).unwrap();
    assert!(pillet_expectation(&l, &bad, 1.0).is_err());
}

#[test]
fn fiber_dimension_and_kernel() {
    let m = ring(3, 1.0);
    let l = build_lhat_k(&m, &SiteChain::telegraph(1.0), &[0.0], 0.7, false).unwrap();
    assert_eq!(l.dim(), 192);
    assert!(l.part_hermiticity_error() < 1e-12);
    let fm = FiberModel::new(&m, &SiteChain::telegraph(1.0), NoiseBasis::Natural).unwrap();
    let one = fm.constant_at(0);
    let lv = l.apply(&one);
    let ladj = l.matrix.adjoint() * fluxlat_numeric::CVector::from_column_slice(&one);
    assert!(lv.iter().all(|z| z.norm() < 1e-12));
    assert!(ladj.iter().all(|z| z.norm() < 1e-12));
    assert!(accretivity_probe(&l, 500, 3) >= -1e-10);
}

#[test]
fn inadmissible_momentum_is_rejected() {
    let m = ring(3, 1.0);
    assert!(build_lhat_k(&m, &SiteChain::telegraph(1.0), &[0.3], 1.0, false).is_err());
    assert!(build_lhat_k(&m, &SiteChain::telegraph(1.0), &[0.3], 1.0, true).is_ok());
}

#[test]
fn uniform_disorder_is_not_enumerable() {
    let m = Model::nearest_neighbour(1, 3, DisorderSpec::uniform(1.0)).unwrap();
    assert!(build_lhat_k(&m, &SiteChain::telegraph(1.0), &[0.0], 1.0, false).is_err());
}

/// ⟨𝟙⊗δ_x, e^{−t𝓛̂_k}(𝟙⊗δ₀)⟩ against Σ_ζ e^{ikζ} E[ρ_t(x−ζ, −ζ)] from
/// fixed-ω solves averaged over every ω.
#[test]
fn fiber_matches_shifted_fixed_omega_average() {
    let n = 3;
    let m = ring(n, 1.0);
    let chain = SiteChain::telegraph(1.0);
    let g = 0.5;
    let t = 1.0;
    let omegas = OmegaSpace::new(&m.disorder, &m.lattice).unwrap();
    let rho0 = delta_rho(n);
    let mut avg = CMatrix::<f64>::zeros(n, n);
    for w in 0..omegas.count() {
        let l = build_l_fixed_omega(&m, &chain, &omegas.values(w), g).unwrap();
        avg += pillet_expectation(&l, &rho0, t).unwrap() * C::new(omegas.weight(), 0.0);
    }
    for basis in [NoiseBasis::Natural, NoiseBasis::Modes] {
        let fm = FiberModel::new(&m, &chain, basis).unwrap();
        for q in 0..n {
            let k = TAU * q as f64 / n as f64;
            let l = lhat_from_fiber(&fm, &[k], g, false).unwrap();
            let phi = l.semigroup(&fm.constant_at(0), t);
            for x in 0..n {
                let lhs = inner(&fm.constant_at(x), &phi);
                let mut rhs = C::new(0.0, 0.0);
                for zeta in 0..n {
                    let z = m.lattice.coords(zeta)[0];
                    let r = m.lattice.shift(x, &[-z]);
                    let c = m.lattice.negate(zeta);
                    rhs += C::from_polar(1.0, k * z as f64) * avg[(r, c)];
                }
                assert!(
                    (lhs - rhs).norm() < 1e-8,
                    "{basis:?} k={k} x={x}: {lhs} vs {rhs}"
                );
            }
        }
    }
}

#[test]
fn fiber_consistency_helper_agrees() {
    let m = ring(3, 1.0);
    let chain = SiteChain::telegraph(1.0);
    for g in [0.0, 1.0] {
        let dev = fiber_consistency(&m, &chain, g, 0.7, NoiseBasis::Modes).unwrap();
        assert!(dev < 1e-8, "g={g}: {dev:e}");
    }
}
