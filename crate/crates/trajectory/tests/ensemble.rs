use fluxlat_model::{DiffusionEstimate, DiffusionMethod, DisorderSpec, Model};
use fluxlat_noise::{sample_path, SiteChain};
use fluxlat_trajectory::{
    clt_statistic, default_window, estimate_D_slope, fit_moments, integrate_phase, run_ensemble, EnsembleConfig,
    EnsembleResult, Route,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn config(samples: usize) -> EnsembleConfig<f64> {
    EnsembleConfig {
        model: Model::nearest_neighbour(1, 32, DisorderSpec::bernoulli(1.0)).unwrap(),
        chain: SiteChain::telegraph(1.0),
        g: 1.0,
        dt: 0.05,
        checkpoints: (1..=10).map(|i| i as f64 * 0.5).collect(),
        samples,
        master_seed: 2024,
        k_list: vec![vec![0.0], vec![1.0]],
        route: Route::Auto,
        fixed_omega: None,
        apriori_m: Some(4.0),
        deadline: None,
    }
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn bits(r: &EnsembleResult<f64>) -> Vec<u64> {
    let mut v: Vec<u64> = r.density_mean.iter().flatten().map(|x| x.to_bits()).collect();
    v.extend(r.density_stderr.iter().flatten().map(|x| x.to_bits()));
    v.extend(r.moments.iter().flat_map(|m| m.iter().map(|x| x.to_bits())));
    v.extend(r.moments_stderr.iter().flat_map(|m| m.iter().map(|x| x.to_bits())));
    v.extend(r.charfn.iter().flatten().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]));
    v
}

#[test]
fn worker_count_does_not_change_bits() {
    let cfg = config(200);
    let a = in_pool(1, || run_ensemble(&cfg).unwrap());
    let b = in_pool(4, || run_ensemble(&cfg).unwrap());
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.samples, 200);
    assert!(!a.partial);
}

#[test]
fn mass_norm_and_bound() {
    let r = run_ensemble(&config(130)).unwrap();
    for row in &r.density_mean {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
    assert!(r.density_stderr.iter().flatten().all(|&s| s >= 0.0));
    assert!(r.max_norm_error < 1e-10);
    assert!(r.min_apriori_margin.unwrap() >= 0.0);
    // φ(0) = 1
    for row in &r.charfn {
        assert!((row[0].re - 1.0).abs() < 1e-12 && row[0].im.abs() < 1e-12);
    }
}

#[test]
fn budget_and_k_dimension_rejected() {
    assert!(run_ensemble(&config(50)).is_err());
    let mut c = config(100);
    c.k_list = vec![vec![1.0, 2.0]];
    assert!(run_ensemble(&c).is_err());
}

fn synthetic(f: impl Fn(f64) -> f64) -> (Vec<f64>, Vec<Vec<f64>>) {
    let times: Vec<f64> = (1..=20).map(|i| i as f64).collect();
    let trace = times.iter().map(|&t| f(t)).collect();
    (times, vec![trace])
}

#[test]
fn linear_moments_give_exact_slope() {
    let (t, tr) = synthetic(|t| 3.0 * t);
    let fit = fit_moments(&t, 1, &tr, (10.0, 20.0), None).unwrap();
    assert!((fit.estimate.d[(0, 0)] - 3.0).abs() < 1e-12);
    assert!(fit.estimate.stderr[(0, 0)] < 1e-12);
    assert!(fit.diffusive);
    assert_eq!(fit.estimate.method, DiffusionMethod::Slope);
}

#[test]
fn ballistic_moments_are_flagged() {
    let (t, tr) = synthetic(|t| 2.0 * t * t);
    let fit = fit_moments(&t, 1, &tr, (10.0, 20.0), None).unwrap();
    assert!(!fit.diffusive);
    assert!(fit.estimate.flags.iter().any(|f| f.starts_with("curvature")));
}

#[test]
fn short_window_rejected() {
    let (t, tr) = synthetic(|t| t);
    assert!(fit_moments(&t, 1, &tr, (15.0, 20.0), None).is_err());
}

#[test]
fn finite_size_guard() {
    let (t, tr) = synthetic(|t| 10.0 * t);
    let fit = fit_moments(&t, 1, &tr, (10.0, 20.0), Some(32)).unwrap();
    assert!(fit.estimate.flags.iter().any(|f| f.starts_with("finite-size")));
}

#[test]
fn noisy_ensemble_fit_and_clt_at_zero() {
    let mut c = config(128);
    c.checkpoints = (1..=16).map(|i| i as f64 * 0.5).collect();
    let r = run_ensemble(&c).unwrap();
    let fit = estimate_D_slope(&r, default_window(&r.times)).unwrap();
    assert!(fit.estimate.d[(0, 0)] > 0.0);
    assert!(fit.estimate.stderr[(0, 0)] > 0.0);
    let d = DiffusionEstimate {
        d: DMatrix::from_element(1, 1, 1.0),
        stderr: DMatrix::zeros(1, 1),
        method: DiffusionMethod::Schur,
        window: (0.0, 0.0),
        imag_max: 0.0,
        flags: vec![],
    };
    let rep = clt_statistic(&r, &d, &[vec![0.0]], 8.0).unwrap();
    assert_eq!(rep.statistic, 0.0);
    assert!(clt_statistic(&r, &d, &[vec![0.0]], 7.77).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn phase_integral_is_additive(seed in any::<u64>(), s in 0.0f64..3.0, u in 0.0f64..3.0, w in 0.0f64..4.0) {
        let chain = SiteChain::<f64>::telegraph(2.0);
        let path = sample_path(&chain, 2, 10.0, seed).unwrap();
        let t = s + u + w;
        let mid = s + u;
        for site in 0..2 {
            let whole = integrate_phase(&path, &chain.observable, site, s, t).unwrap();
            let parts = integrate_phase(&path, &chain.observable, site, s, mid).unwrap()
                + integrate_phase(&path, &chain.observable, site, mid, t).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-14 * (1.0 + t));
            prop_assert!(whole.abs() <= t - s + 1e-14);
        }
    }
}
