use fluxlat_augmented::{
    admissible_times, block_decompose, diffusion_schur_from, gamma_kw, lambda_tkz, AugmentedError,
    BlockDecomp, FiberBlocks,
};
use fluxlat_model::{DisorderSpec, Model};
use fluxlat_noise::SiteChain;
use fluxlat_numeric::{dense::RefinedLu, CMatrix, C};
use std::f64::consts::{FRAC_PI_2, PI};

fn decomp(n: usize, lambda: f64) -> BlockDecomp<f64> {
    let d = if lambda == 0.0 {
        DisorderSpec::none()
    } else {
        DisorderSpec::bernoulli(lambda)
    };
    let m = Model::nearest_neighbour(1, n, d).unwrap();
    block_decompose(&m, &SiteChain::telegraph(1.0)).unwrap()
}

fn grid() -> Vec<(f64, C<f64>)> {
    vec![
        (0.0, C::new(0.5, 0.0)),
        (FRAC_PI_2, C::new(1.5, 2.0)),
        (PI, C::new(0.1, -3.0)),
        (FRAC_PI_2, C::new(0.05, 8.0)),
    ]
}

#[test]
fn gamma_is_accretive_and_obeys_the_bounds() {
    let d = decomp(4, 1.0);
    for (k, w) in grid() {
        let r = gamma_kw(&d, 1.0, &[k], w, false, None).unwrap();
        assert!(r.accretivity >= -1e-10, "k={k} w={w}");
        assert!(
            r.dissipation >= r.dissipation_bound - 1e-9,
            "k={k} w={w}: {} < {}",
            r.dissipation,
            r.dissipation_bound
        );
        assert!(r.norm <= r.norm_bound);
        if w.re > 1.0 {
            assert!(r.norm <= 1.0);
        }
    }
    for w in [C::new(1.2, 0.0), C::new(3.0, -4.0)] {
        let r = gamma_kw(&d, 1.0, &[FRAC_PI_2], w, false, None).unwrap();
        assert!(r.norm <= 1.0);
    }
}

#[test]
fn schur_form_equals_block_of_reduced_inverse() {
    let d = decomp(4, 1.0);
    for (k, w) in grid() {
        let b = FiberBlocks::new(&d, &[k], 0.7, false).unwrap();
        let schur = b.gamma(w).unwrap();
        // Γ = W₂†(w + 𝓛̂_k|Ĥ₀^⊥)⁻¹W₂ by a dense inverse of the whole reduced operator
        let full = b.reduced_matrix(w);
        let n = full.nrows();
        let pos = b.h2_positions();
        let n2 = b.h2_dim();
        assert_eq!(pos.len(), n2);
        assert!(pos.iter().all(|&p| p >= d.h1.ncols() && p < n));
        let rhs = CMatrix::from_fn(n, n2, |i, j| {
            if i == pos[j] {
                C::new(1.0, 0.0)
            } else {
                C::new(0.0, 0.0)
            }
        });
        let inv = RefinedLu::new(full).solve(&rhs).unwrap();
        let block = CMatrix::from_fn(n2, n2, |i, j| inv[(pos[i], j)]);
        let err = (&schur - &block)
            .iter()
            .fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(err < 1e-10, "k={k} w={w}: {err}");
        let y = b.gamma_apply(w, &b.f).unwrap();
        let y2 = &schur * nalgebra::DVector::from_column_slice(&b.f);
        assert!(y.iter().zip(y2.iter()).all(|(p, q)| (p - q).norm() < 1e-10));
    }
}

#[test]
fn norm_bound_scales_with_g_squared() {
    let d = decomp(3, 1.0);
    let w = C::new(0.5, 1.0);
    let a = gamma_kw(&d, 0.5, &[0.0], w, false, Some(3.0)).unwrap();
    let b = gamma_kw(&d, 1.0, &[0.0], w, false, Some(3.0)).unwrap();
    for r in [&a, &b] {
        let g: f64 = if std::ptr::eq(r, &a) { 0.5 } else { 1.0 };
        let want = r.tau / (g * g * r.chi) * (1.0 + r.tau * (r.n_bar + 1.0 + r.m_bar)).powi(2);
        assert!((r.norm_bound - want).abs() <= 1e-12 * want);
    }
    assert!((r_const(&a, 0.5) - r_const(&b, 1.0) * 1.0).abs() < 1e-12);
}

fn r_const(r: &fluxlat_augmented::GammaReport<f64>, g: f64) -> f64 {
    r.norm_bound * g * g / (1.0 + r.tau * (r.n_bar + 1.0 + r.m_bar)).powi(2)
}

#[test]
fn imaginary_axis_is_rejected() {
    let d = decomp(3, 1.0);
    assert!(matches!(
        gamma_kw(&d, 1.0, &[0.0], C::new(0.0, 1.0), false, None),
        Err(AugmentedError::NotAccretive { .. })
    ));
    assert!(lambda_tkz(&d, 1.0, 1.0, &[1.0], C::new(-1.0, 0.0), true).is_err());
}

#[test]
fn lambda_vanishes_at_zero_momentum() {
    let d = decomp(4, 1.0);
    assert_eq!(
        lambda_tkz(&d, 1.0, 5.0, &[0.0], C::new(1.0, 0.0), false).unwrap(),
        C::new(0.0, 0.0)
    );
}

#[test]
fn lambda_is_accretive_and_bounded_on_vertical_line() {
    let d = decomp(4, 1.0);
    let t = admissible_times::<f64>(4, 2.0)[0];
    let mut sup = 0.0f64;
    for i in 0..=10 {
        let y = -10.0 + 2.0 * i as f64;
        let l = lambda_tkz(&d, 1.0, t, &[2.0], C::new(1.0, y), false).unwrap();
        assert!(l.re >= -1e-10);
        sup = sup.max(l.norm());
    }
    // recorded bound for this model
    assert!(sup < 10.0, "sup |Λ| = {sup}");
}

#[test]
fn admissible_sequence_hits_ring_momenta() {
    let ts = admissible_times::<f64>(6, 1.5);
    assert_eq!(ts.len(), 3);
    let d = decomp(3, 1.0);
    assert!(lambda_tkz(&d, 1.0, 0.7, &[1.0], C::new(1.0, 0.0), false).is_err());
    let t = admissible_times::<f64>(3, 1.0)[0];
    assert!(lambda_tkz(&d, 1.0, t, &[1.0], C::new(1.0, 0.0), false).is_ok());
}

/// With trivial disorder the twisted fibre recovers ½⟨k,Dk⟩ for every z.
#[test]
fn twisted_lambda_converges_to_half_d() {
    let d = decomp(4, 0.0);
    let dd = diffusion_schur_from(&d, 1.0).unwrap().d[(0, 0)];
    for z in [C::new(1.0, 0.0), C::new(2.0, 0.0), C::new(1.0, 5.0)] {
        let l = lambda_tkz(&d, 1.0, 1e4, &[1.0], z, true).unwrap();
        assert!(
            (l - C::new(0.5 * dd, 0.0)).norm() <= 0.05 * 0.5 * dd,
            "z={z}: {l} vs {}",
            0.5 * dd
        );
    }
}

/// With bernoulli disorder the finite ring keeps translation-invariant functions
/// of ω, and the twisted large-t limit depends on z.
#[test]
fn finite_disorder_space_makes_the_limit_z_dependent() {
    let d = decomp(4, 1.0);
    let a = lambda_tkz(&d, 1.0, 1e5, &[1.0], C::new(1.0, 0.0), true).unwrap();
    let b = lambda_tkz(&d, 1.0, 1e5, &[1.0], C::new(2.0, 0.0), true).unwrap();
    assert!((a - b).norm() > 1e-2);
}
