use fluxlat_augmented::{
    block_decompose, build_l_fixed_omega, build_lhat_k, h3_dissipation_probe,
    resolvent_limit_check, sector_scan, AugmentedError, FiberBlocks,
};
use fluxlat_model::{DisorderSpec, Model};
use fluxlat_noise::SiteChain;
use fluxlat_numeric::{CMatrix, C};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lambdas() -> Vec<f64> {
    (0..=6).map(|e| 10f64.powi(e)).collect()
}

fn e(i: usize) -> Vec<C<f64>> {
    let mut v = vec![C::new(0.0, 0.0); 2];
    v[i] = C::new(1.0, 0.0);
    v
}

#[test]
fn resolvent_limit_on_diagonal_examples() {
    let a = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        C::new(0.0, 0.0),
        C::new(0.0, 1.0),
    ]));
    let b = CMatrix::<f64>::identity(2, 2);
    let r = resolvent_limit_check(&a, &b, &e(0), &e(0), &lambdas()).unwrap();
    assert!((r.limit - C::new(1.0, 0.0)).norm() < 1e-14);
    assert!(*r.deviations.last().unwrap() <= 1e-6);
    let r = resolvent_limit_check(&a, &b, &e(1), &e(1), &lambdas()).unwrap();
    assert_eq!(r.limit, C::new(0.0, 0.0));
    assert!(*r.deviations.last().unwrap() <= 1e-6);
    assert!(r.deviations.windows(2).all(|w| w[1] <= w[0]));
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMatrix<f64> {
    let m = CMatrix::from_fn(n, n, |_, _| {
        C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    m.qr().q()
}

/// A = U diag(0,0,0,0, μ_i) U† normal with Re μ ≥ 0; B = accretive.
fn random_instance(seed: u64) -> (CMatrix<f64>, CMatrix<f64>, Vec<C<f64>>, Vec<C<f64>>) {
    let n = 20;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_unitary(&mut rng, n);
    let d = nalgebra::DVector::from_fn(n, |i, _| {
        if i < 4 {
            C::new(0.0, 0.0)
        } else {
            C::new(rng.random::<f64>() + 0.1, 4.0 * (rng.random::<f64>() - 0.5))
        }
    });
    let a = &u * CMatrix::from_diagonal(&d) * u.adjoint();
    let g = CMatrix::from_fn(n, n, |_, _| {
        C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    let b = CMatrix::identity(n, n) * C::new(1.0, 0.0)
        + (&g - g.adjoint()) * C::new(2.0, 0.0)
        + &g * g.adjoint() * C::new(0.2, 0.0);
    let v = |rng: &mut ChaCha8Rng| {
        (0..n)
            .map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    };
    (a, b, v(&mut rng), v(&mut rng))
}

#[test]
fn resolvent_limit_on_random_normal_instances() {
    for seed in 0..10 {
        let (a, b, phi, psi) = random_instance(seed);
        let r = resolvent_limit_check(&a, &b, &phi, &psi, &lambdas()).unwrap();
        assert_eq!(r.kernel_dim, 4);
        assert!(
            *r.deviations.last().unwrap() <= 1e-4,
            "seed {seed}: {:?}",
            r.deviations
        );
        assert!(r.deviations[6] < r.deviations[2]);
    }
}

#[test]
fn resolvent_limit_rejects_bad_input() {
    let a = CMatrix::from_row_slice(
        2,
        2,
        &[
            C::new(0.0, 0.0),
            C::new(1.0, 0.0),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
        ],
    );
    let b = CMatrix::<f64>::identity(2, 2);
    assert!(matches!(
        resolvent_limit_check(&a, &b, &e(0), &e(0), &lambdas()),
        Err(AugmentedError::NotNormal { .. })
    ));
    let a = CMatrix::<f64>::identity(2, 2);
    assert!(matches!(
        resolvent_limit_check(&a, &b, &e(0), &e(0), &[10.0, 1.0]),
        Err(AugmentedError::Grid { .. })
    ));
}

#[test]
fn sector_of_pure_hopping_is_bounded_by_kinetic_norm() {
    let m = Model::<f64>::nearest_neighbour(1, 3, DisorderSpec::none()).unwrap();
    let l = build_lhat_k(&m, &SiteChain::telegraph(1.0), &[0.0], 0.0, false).unwrap();
    let s = sector_scan(&l, 200, 1).unwrap();
    assert_eq!(s.q, 0.0);
    assert!(s.min_re >= -1e-10);
    assert!(s.slack >= -1e-10);
    assert!(s.b <= l.kinetic.inf_norm() + 1e-12);
    assert!(sector_scan(&l, 50, 1).is_err());
}

#[test]
fn sector_scan_on_default_models() {
    let m = Model::nearest_neighbour(1, 3, DisorderSpec::bernoulli(1.0)).unwrap();
    let chain = SiteChain::telegraph(1.0);
    let fiber = build_lhat_k(&m, &chain, &[2.0 * std::f64::consts::PI / 3.0], 1.0, false).unwrap();
    let fixed = build_l_fixed_omega(&m, &chain, &[1.0, -1.0, 1.0], 1.0).unwrap();
    for l in [&fiber, &fixed] {
        let s = sector_scan(l, 300, 9).unwrap();
        assert!(s.min_re >= -1e-10);
        assert!(s.slack >= -1e-10);
        assert!(s.b <= s.budget);
    }
}

#[test]
fn h3_probes_inherit_the_noise_gap() {
    let m = Model::nearest_neighbour(1, 4, DisorderSpec::bernoulli(1.0)).unwrap();
    let d = block_decompose(&m, &SiteChain::telegraph(1.0)).unwrap();
    let gap = 1.0 / d.fiber.generator.tau();
    for k in [0.0, std::f64::consts::FRAC_PI_2] {
        let b = FiberBlocks::new(&d, &[k], 1.0, false).unwrap();
        assert!(h3_dissipation_probe(&b, 300, 5) >= gap - 1e-9);
    }
}
