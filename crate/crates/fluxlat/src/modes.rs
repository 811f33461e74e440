//! One function per run mode. Each returns its result files in memory plus
//! the list of hard invariants that failed; the caller decides what to write.

use crate::config::{DSource, Method, Mode, Prepared};
use crate::error::CliError;
use crate::output::{num, Outputs, Stamp};
use fluxlat_augmented::{
    admissible_times, block_decompose, build_l_fixed_omega, diffusion_schur_from, diffusion_tauberian, gamma_kw,
    lambda_tkz, pillet_expectation, small_g_from, BlockDecomp,
};
use fluxlat_model::{
    validate_hopping, DensityMatrix, DiffusionEstimate, DiffusionMethod, DisorderKind, DisorderSample, Model,
};
use fluxlat_noise::{
    apply_b_inverse, build_generator_b, check_mixing, nondegeneracy_chi, sample_path, spectral_gap, ChiMethod,
};
use fluxlat_numeric::{
    rng::{derive_seed, stream, Purpose},
    CMatrix, C,
};
use fluxlat_trajectory::{
    clt_statistic, density_matrix_ensemble, estimate_D_slope, run_ensemble, EnsembleConfig, EnsembleResult, SlopeFit,
};
use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::time::{Duration, Instant};

pub const UNITARITY_TOL: f64 = 1e-10;
pub const IMAG_TOL: f64 = 1e-8;
pub const SYMMETRY_TOL: f64 = 1e-8;
pub const ACCRETIVITY_TOL: f64 = 1e-10;
pub const MIXING_TOL: f64 = 1e-10;
pub const CONSERVATION_TOL: f64 = 1e-12;
pub const GAP_SLACK: f64 = 1e-9;
pub const PILLET_SIGMA: f64 = 4.0;

pub struct Outcome {
    pub outputs: Outputs,
    /// Printed to stdout as the run summary.
    pub summary: Value,
    pub violations: Vec<String>,
}

fn mat(m: &DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect()
}

fn estimate_json(e: &DiffusionEstimate<f64>) -> Value {
    json!({
        "method": e.method.name(),
        "D": mat(&e.d),
        "stderr": mat(&e.stderr),
        "window": [e.window.0, e.window.1],
        "imag_max": e.imag_max,
        "min_eigenvalue": e.min_eigenvalue(),
        "flags": e.flags,
    })
}

/// Reality, symmetry and positivity of an exact D.
fn check_d(e: &DiffusionEstimate<f64>, label: &str, out: &mut Vec<String>) {
    let scale = e.d.abs().max().max(1.0);
    if e.imag_max > IMAG_TOL {
        out.push(format!("{label}: |Im D| = {:e} exceeds {IMAG_TOL:e}", e.imag_max));
    }
    if e.asymmetry() > SYMMETRY_TOL * scale {
        out.push(format!("{label}: D is not symmetric ({:e})", e.asymmetry()));
    }
    if !e.is_positive_definite() {
        out.push(format!("{label}: D is not positive definite (min eigenvalue {:e})", e.min_eigenvalue()));
    }
}

fn result_doc(mode: Mode, stamp: &Stamp, body: Value) -> Value {
    let mut doc = json!({ "mode": mode.name(), "manifest": stamp });
    if let (Some(d), Value::Object(b)) = (doc.as_object_mut(), body) {
        d.extend(b);
    }
    doc
}

pub fn execute(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    match p.run().mode {
        Mode::Validate => validate(p, stamp),
        Mode::NoiseAudit => noise_audit(p, stamp),
        Mode::Simulate => simulate(p, stamp),
        Mode::Clt => clt(p, stamp),
        Mode::PilletCheck => pillet_check(p, stamp),
        Mode::Diffusion => match p.run().method {
            Method::Schur => diffusion_schur(p, stamp),
            Method::Tauberian => diffusion_tauberian_mode(p, stamp),
            Method::Slope => diffusion_slope(p, stamp),
        },
        Mode::Smallg => smallg(p, stamp),
    }
}

fn validate(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    let h = validate_hopping(&p.model.hopping, p.model.lattice.dimension)?;
    let pi = p.chain.validate()?;
    let single = build_generator_b(&p.chain, 1)?;
    let gap = spectral_gap(&single)?;
    let chi = nondegeneracy_chi(&p.chain, &p.model.lattice, &p.model.disorder)?;
    let sites = p.model.lattice.sites();
    let a = (p.chain.states() as f64).powi(sites as i32);
    let w = if p.model.disorder.kind == DisorderKind::Bernoulli { 2f64.powi(sites as i32) } else { 1.0 };
    let body = json!({
        "hopping": {
            "self_adjoint": h.self_adjoint,
            "m0": h.m0, "m1": h.m1, "m": h.m,
            "nondegenerate": h.nondegenerate,
            "gram_min_eig": h.gram_min_eig,
        },
        "noise": {
            "states": p.chain.states(),
            "stationary": pi,
            "reversible": single.reversible,
            "gap": gap,
            "tau": 1.0 / gap,
            "chi": chi.chi,
            "chi_method": match chi.method { ChiMethod::Enumerated => "enumerated", ChiMethod::Independence => "independence" },
        },
        "sizes": {
            "sites": sites,
            "noise_states": a,
            "disorder_states": w,
            "fiber_dim": a * w * sites as f64,
            "fixed_omega_dim": a * (sites * sites) as f64,
        },
        "dt": p.run().dt,
        "quantities": { "m0": h.m0, "m1": h.m1, "m": h.m, "gap": gap, "chi": chi.chi },
    });
    let mut violations = Vec::new();
    if !h.nondegenerate {
        violations.push("hopping is degenerate (Gram matrix not positive definite)".into());
    }
    let doc = result_doc(Mode::Validate, stamp, body);
    let mut outputs = Outputs::default();
    outputs.json("validate.json", &doc);
    Ok(Outcome {
        outputs,
        summary: doc["quantities"].clone(),
        violations,
    })
}

/// Joint noise space size used by the audit.
pub const AUDIT_BUDGET: usize = 256;

/// Largest number of sites (up to the lattice) whose joint space fits the audit budget.
fn audit_sites(states: usize, sites: usize) -> usize {
    let mut n = 1;
    while n < sites && states.pow(n as u32 + 1) <= AUDIT_BUDGET {
        n += 1;
    }
    n
}

fn noise_audit(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    let chain = &p.chain;
    let pi = chain.validate()?;
    let s = chain.states();
    let balance = (0..s)
        .map(|j| (0..s).map(|i| pi[i] * chain.rates[(i, j)]).sum::<f64>().abs())
        .fold(0.0, f64::max);
    let n = audit_sites(s, p.model.lattice.sites());
    let b = build_generator_b(chain, n)?;
    let gap = spectral_gap(&b)?;
    let dim = b.dim();
    let ones = vec![1.0; dim];
    let conservation = b.apply(&ones).iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let joint_pi = b.stationary();
    let mut rng = stream(derive_seed(p.config.seed.master, 0, Purpose::Probe), 0);
    let centred = |rng: &mut dyn rand::RngCore| -> Vec<f64> {
        let f: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        let m = b.mean(&f);
        f.into_iter().map(|v| v - m).collect()
    };
    let probes = p.run().probes;
    let mut gap_slack = f64::INFINITY;
    let mut inverse_residual = 0.0f64;
    let mut mixing = b_mixing(&b, &b.observable_at(0), &b.observable_at(0));
    for _ in 0..probes {
        let f = centred(&mut rng);
        let bf = b.apply(&f);
        let form: f64 = joint_pi.iter().zip(&f).zip(&bf).map(|((&w, &x), &y)| w * x * y).sum();
        let nf2 = b.norm(&f).powi(2);
        gap_slack = gap_slack.min(form / nf2 - gap);
        let inv = apply_b_inverse(&b, &f)?;
        let back = b.apply(&inv);
        let r = back.iter().zip(&f).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
        inverse_residual = inverse_residual.max(r / f.iter().fold(0.0f64, |a, v| a.max(v.abs())));
    }
    for _ in 0..probes.min(20) {
        let f: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        let g: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        mixing = mixing.max(b_mixing(&b, &f, &g));
    }
    // path statistics on many independent sites; reported, not asserted
    let path_sites = 10_000usize;
    let horizon = p.run().horizon;
    let path = sample_path(chain, path_sites, horizon, derive_seed(p.config.seed.master, 1, Purpose::Noise))?;
    let mut occupation = vec![0.0; s];
    let mut jumps = 0usize;
    for sp in &path.sites {
        for (o, v) in occupation.iter_mut().zip(sp.occupation(s, horizon)) {
            *o += v / path_sites as f64;
        }
        jumps += sp.jumps();
    }
    let expected_jumps: f64 = (0..s).map(|i| -pi[i] * chain.rates[(i, i)]).sum::<f64>() * horizon;
    let mean_jumps = jumps as f64 / path_sites as f64;
    let mut violations = Vec::new();
    if balance > CONSERVATION_TOL {
        violations.push(format!("stationary balance |πᵀQ| = {balance:e}"));
    }
    if conservation > CONSERVATION_TOL {
        violations.push(format!("B𝟙 = {conservation:e}"));
    }
    if gap_slack < -GAP_SLACK {
        violations.push(format!("gap inequality violated by {:e}", -gap_slack));
    }
    if mixing > MIXING_TOL {
        violations.push(format!("mixing bound violated by {mixing:e}"));
    }
    if inverse_residual > 1e-10 {
        violations.push(format!("B⁻¹ residual {inverse_residual:e}"));
    }
    let body = json!({
        "audit_sites": n,
        "joint_states": dim,
        "gap": gap,
        "tau": 1.0 / gap,
        "reversible": b.reversible,
        "balance": balance,
        "conservation": conservation,
        "gap_slack": gap_slack,
        "mixing_violation": mixing,
        "inverse_residual": inverse_residual,
        "probes": probes,
        "paths": {
            "sites": path_sites,
            "horizon": horizon,
            "occupation": occupation,
            "stationary": pi,
            "mean_jumps": mean_jumps,
            "expected_jumps": expected_jumps,
        },
        "quantities": { "gap": gap, "mixing_violation": mixing, "gap_slack": gap_slack },
        "pass": violations.is_empty(),
    });
    let doc = result_doc(Mode::NoiseAudit, stamp, body);
    let mut outputs = Outputs::default();
    outputs.json("noise_audit.json", &doc);
    Ok(Outcome {
        outputs,
        summary: json!({ "gap": gap, "mixing_violation": mixing, "pass": violations.is_empty() }),
        violations,
    })
}

fn b_mixing(b: &fluxlat_noise::GeneratorB<f64>, f: &[f64], g: &[f64]) -> f64 {
    let grid: Vec<f64> = (1..=50).map(|i| 0.1 * i as f64).collect();
    check_mixing(b, f, g, &grid)
}

fn ensemble_config(p: &Prepared, model: &Model<f64>, fixed: Option<DisorderSample<f64>>) -> Result<EnsembleConfig<f64>, CliError> {
    let run = p.run();
    let m = validate_hopping(&model.hopping, model.lattice.dimension)?.m;
    Ok(EnsembleConfig {
        model: model.clone(),
        chain: p.chain.clone(),
        g: run.g,
        dt: run.dt.unwrap(),
        checkpoints: p.checkpoints().to_vec(),
        samples: run.samples,
        master_seed: p.config.seed.master,
        k_list: p.k_list().to_vec(),
        route: run.route.route(),
        fixed_omega: fixed,
        apriori_m: run.apriori.then_some(m),
        deadline: run.budget_seconds.map(|s| Instant::now() + Duration::from_secs_f64(s)),
    })
}

fn ensemble(p: &Prepared) -> Result<(EnsembleResult<f64>, Vec<String>), CliError> {
    let cfg = ensemble_config(p, &p.model, None)?;
    let r = run_ensemble(&cfg)?;
    if r.partial {
        return Err(CliError::Budget(format!(
            "Monte Carlo budget of {} s exhausted after {} of {} samples",
            p.run().budget_seconds.unwrap_or(0.0),
            r.samples,
            p.run().samples
        )));
    }
    let mut v = Vec::new();
    if r.max_norm_error > UNITARITY_TOL {
        v.push(format!("unitarity: norm error {:e} exceeds {UNITARITY_TOL:e}", r.max_norm_error));
    }
    if let Some(m) = r.min_apriori_margin {
        if m < 0.0 {
            v.push(format!("a-priori bound breached (margin {m:e})"));
        }
    }
    Ok((r, v))
}

fn moments_csv(out: &mut Outputs, stamp: &Stamp, r: &EnsembleResult<f64>) {
    let d = r.dimension();
    let mut header = vec!["t".to_string()];
    for pre in ["M", "stderr"] {
        for i in 0..d {
            for j in 0..d {
                header.push(format!("{pre}_{}{}", i + 1, j + 1));
            }
        }
    }
    let rows: Vec<Vec<String>> = r
        .times
        .iter()
        .enumerate()
        .map(|(c, &t)| {
            let mut row = vec![num(t)];
            row.extend(flat(&r.moments[c]).into_iter().map(num));
            row.extend(flat(&r.moments_stderr[c]).into_iter().map(num));
            row
        })
        .collect();
    out.csv("moments.csv", stamp, &header, &rows);
}

fn charfn_csv(out: &mut Outputs, stamp: &Stamp, r: &EnsembleResult<f64>) {
    let d = r.dimension();
    let mut header = vec!["t".to_string()];
    header.extend((1..=d).map(|i| format!("k_{i}")));
    header.extend(["re_phi", "im_phi", "stderr_re", "stderr_im"].map(String::from));
    let mut rows = Vec::new();
    for (c, &t) in r.times.iter().enumerate() {
        for (i, k) in r.k_list.iter().enumerate() {
            let mut row = vec![num(t)];
            row.extend(k.iter().map(|&v| num(v)));
            let z = r.charfn[c][i];
            let e = r.charfn_stderr[c][i];
            row.extend([num(z.re), num(z.im), num(e.re), num(e.im)]);
            rows.push(row);
        }
    }
    out.csv("charfn.csv", stamp, &header, &rows);
}

fn density_csv(out: &mut Outputs, stamp: &Stamp, r: &EnsembleResult<f64>) {
    let c = r.times.len() - 1;
    let lat = r.lattice;
    let d = lat.dimension;
    let mut header: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
    header.extend(["p", "stderr"].map(String::from));
    let rows: Vec<Vec<String>> = (0..lat.sites())
        .map(|x| {
            let mut row: Vec<String> = lat.position(x).iter().map(|v| v.to_string()).collect();
            row.push(num(r.density_mean[c][x]));
            row.push(num(r.density_stderr[c][x]));
            row
        })
        .collect();
    out.csv(&format!("density_t{}.csv", r.times[c]), stamp, &header, &rows);
}

fn slope_json(fit: &Result<SlopeFit<f64>, CliError>) -> Value {
    match fit {
        Ok(f) => json!({
            "estimate": estimate_json(&f.estimate),
            "curvature": mat(&f.curvature),
            "curvature_stderr": mat(&f.curvature_stderr),
            "diffusive": f.diffusive,
        }),
        Err(e) => json!({ "error": e.to_string() }),
    }
}

fn window(p: &Prepared) -> (f64, f64) {
    let [lo, hi] = p.run().fit_window.unwrap();
    (lo, hi)
}

fn ensemble_summary(r: &EnsembleResult<f64>) -> Value {
    json!({
        "samples": r.samples,
        "max_norm_error": r.max_norm_error,
        "min_apriori_margin": r.min_apriori_margin,
    })
}

fn simulate(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    let (r, violations) = ensemble(p)?;
    let fit = estimate_D_slope(&r, window(p)).map_err(CliError::from);
    let mut quantities = json!({});
    let mut stderr = json!({});
    if let Ok(f) = &fit {
        quantities["D"] = json!(flat(&f.estimate.d));
        stderr["D"] = json!(flat(&f.estimate.stderr));
    }
    let last = r.moments.len() - 1;
    quantities["M_final"] = json!(flat(&r.moments[last]));
    stderr["M_final"] = json!(flat(&r.moments_stderr[last]));
    let body = json!({
        "ensemble": ensemble_summary(&r),
        "fit": slope_json(&fit),
        "quantities": quantities,
        "stderr": stderr,
    });
    let doc = result_doc(Mode::Simulate, stamp, body);
    let mut outputs = Outputs::default();
    outputs.json("simulate.json", &doc);
    moments_csv(&mut outputs, stamp, &r);
    charfn_csv(&mut outputs, stamp, &r);
    density_csv(&mut outputs, stamp, &r);
    Ok(Outcome {
        outputs,
        summary: json!({ "samples": r.samples, "fit": slope_json(&fit) }),
        violations,
    })
}

fn clt(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    let (r, violations) = ensemble(p)?;
    let run = p.run();
    let d = p.model.lattice.dimension;
    let (est, fit) = match run.d_source {
        DSource::Slope => {
            let f = estimate_D_slope(&r, window(p))?;
            (f.estimate.clone(), Some(f))
        }
        DSource::Given => {
            let m = run.d_matrix.as_ref().unwrap();
            let dm = DMatrix::from_fn(d, d, |i, j| m[i][j]);
            (
                DiffusionEstimate {
                    d: dm,
                    stderr: DMatrix::zeros(d, d),
                    method: DiffusionMethod::Schur,
                    window: (0.0, 0.0),
                    imag_max: 0.0,
                    flags: vec!["given in config".into()],
                },
                None,
            )
        }
    };
    let mut times = Vec::new();
    let mut stats = Vec::new();
    for &t in run.clt_times.as_ref().unwrap() {
        let rep = clt_statistic(&r, &est, p.k_list(), t)?;
        stats.push(rep.statistic);
        times.push(json!({
            "t": t,
            "statistic": rep.statistic,
            "rows": rep.rows.iter().map(|row| json!({
                "k": row.k,
                "phi": [row.phi.re, row.phi.im],
                "stderr": [row.stderr.re, row.stderr.im],
                "gaussian": row.gaussian,
                "deviation": row.deviation,
            })).collect::<Vec<_>>(),
        }));
    }
    let decreasing = stats.windows(2).all(|w| w[1] < w[0]);
    let body = json!({
        "ensemble": ensemble_summary(&r),
        "d_source": match run.d_source { DSource::Slope => "slope", DSource::Given => "given" },
        "D": mat(&est.d),
        "fit": fit.map(|f| slope_json(&Ok(f))),
        "times": times,
        "statistic_decreasing": decreasing,
        "quantities": { "statistic": stats },
    });
    let doc = result_doc(Mode::Clt, stamp, body);
    let mut outputs = Outputs::default();
    outputs.json("clt.json", &doc);
    moments_csv(&mut outputs, stamp, &r);
    charfn_csv(&mut outputs, stamp, &r);
    Ok(Outcome {
        outputs,
        summary: json!({ "statistic": stats, "decreasing": decreasing }),
        violations,
    })
}

/// Δ and σ per entry of E[ρ_t]; entries with σ = 0 must agree to 1e-10.
pub fn pillet_z(exact: &CMatrix<f64>, mean: &CMatrix<f64>, se: &CMatrix<f64>) -> (f64, f64, f64) {
    let mut dev = 0.0f64;
    let mut scale = 0.0f64;
    let mut z = 0.0f64;
    for ((e, m), s) in exact.iter().zip(mean.iter()).zip(se.iter()) {
        for (delta, sigma) in [((e.re - m.re).abs(), s.re), ((e.im - m.im).abs(), s.im)] {
            dev = dev.max(delta);
            scale = scale.max(sigma);
            let zi = if sigma > 0.0 {
                delta / sigma
            } else if delta <= 1e-10 {
                0.0
            } else {
                f64::INFINITY
            };
            z = z.max(zi);
        }
    }
    (dev, scale, z)
}

fn pillet_check(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    let run = p.run();
    let omega = run.omega.clone().unwrap();
    let lat = p.model.lattice;
    let l = build_l_fixed_omega(&p.model, &p.chain, &omega, run.g)?;
    let n = lat.sites();
    let mut rho = CMatrix::zeros(n, n);
    rho[(lat.origin(), lat.origin())] = C::new(1.0, 0.0);
    let rho0 = DensityMatrix::from_matrix(rho)?;
    let fixed = DisorderSample::from_values(omega.clone(), p.model.disorder.lambda);
    let cfg = ensemble_config(p, &p.model, Some(fixed))?;
    let mut psi0 = vec![C::new(0.0, 0.0); n];
    psi0[lat.origin()] = C::new(1.0, 0.0);
    let mc = density_matrix_ensemble(&cfg, &psi0)?;
    let mut violations = Vec::new();
    if mc.max_norm_error > UNITARITY_TOL {
        violations.push(format!("unitarity: norm error {:e}", mc.max_norm_error));
    }
    let mut dev = Vec::new();
    let mut scale = Vec::new();
    let mut zs = Vec::new();
    for (c, &t) in p.checkpoints().iter().enumerate() {
        let exact = pillet_expectation(&l, &rho0, t)?;
        let (d, s, z) = pillet_z(&exact, &mc.mean[c], &mc.stderr[c]);
        dev.push(d);
        scale.push(s);
        zs.push(z);
    }
    let worst = zs.iter().copied().fold(0.0, f64::max);
    let pass = worst <= PILLET_SIGMA;
    let body = json!({
        "omega": omega,
        "g": run.g,
        "samples": mc.samples,
        "max_norm_error": mc.max_norm_error,
        "t": p.checkpoints(),
        "max_abs_deviation": dev,
        "stderr_scale": scale,
        "max_z": zs,
        "sigma_threshold": PILLET_SIGMA,
        "pass": pass,
        "quantities": { "max_abs_deviation": dev },
    });
    let doc = result_doc(Mode::PilletCheck, stamp, body);
    let mut outputs = Outputs::default();
    outputs.json("pillet_check.json", &doc);
    Ok(Outcome {
        outputs,
        summary: json!({ "max_z": worst, "pass": pass }),
        violations,
    })
}

/// Least squares D(N) = D∞ + a/N² per entry.
pub fn extrapolate_inverse_square(ns: &[usize], ds: &[DMatrix<f64>]) -> Option<DMatrix<f64>> {
    if ns.len() < 2 {
        return None;
    }
    let x: Vec<f64> = ns.iter().map(|&n| 1.0 / (n * n) as f64).collect();
    let m = ns.len() as f64;
    let sx: f64 = x.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let det = m * sxx - sx * sx;
    let (r, c) = ds[0].shape();
    Some(DMatrix::from_fn(r, c, |i, j| {
        let sy: f64 = ds.iter().map(|d| d[(i, j)]).sum();
        let sxy: f64 = ds.iter().zip(&x).map(|(d, &xv)| d[(i, j)] * xv).sum();
        (sxx * sy - sx * sxy) / det
    }))
}

fn ring_momenta(p: &Prepared) -> Vec<Vec<f64>> {
    let lat = p.model.lattice;
    let step = std::f64::consts::TAU / lat.extent as f64;
    (0..lat.sites())
        .map(|q| lat.coords(q).iter().map(|&c| step * c as f64).collect())
        .collect()
}

fn gamma_scan(p: &Prepared, stamp: &Stamp, decomp: &BlockDecomp<f64>, out: &mut Outputs, violations: &mut Vec<String>) -> Result<Value, CliError> {
    let run = p.run();
    let d = p.model.lattice.dimension;
    let mut header: Vec<String> = (1..=d).map(|i| format!("k_{i}")).collect();
    header.extend(
        ["w_re", "w_im", "norm", "norm_bound", "accretivity", "dissipation", "dissipation_bound", "n_bar", "m_bar", "chi", "tau"]
            .map(String::from),
    );
    let mut rows = Vec::new();
    let mut worst_acc = f64::INFINITY;
    let mut worst_diss = f64::INFINITY;
    for k in ring_momenta(p) {
        for w in &run.gamma_w {
            let r = gamma_kw(decomp, run.g, &k, C::new(w[0], w[1]), false, run.m_bar)?;
            worst_acc = worst_acc.min(r.accretivity);
            worst_diss = worst_diss.min(r.dissipation - r.dissipation_bound);
            if r.accretivity < -ACCRETIVITY_TOL {
                violations.push(format!("Γ⁻¹ not accretive at k={k:?}, w={w:?}: {:e}", r.accretivity));
            }
            if r.dissipation < r.dissipation_bound * (1.0 - 1e-9) {
                violations.push(format!(
                    "dissipation bound breached at k={k:?}, w={w:?}: {:e} < {:e}",
                    r.dissipation, r.dissipation_bound
                ));
            }
            if r.norm > r.norm_bound {
                violations.push(format!("‖Γ‖ = {} above its bound {} at k={k:?}, w={w:?}", r.norm, r.norm_bound));
            }
            let mut row: Vec<String> = k.iter().map(|&v| num(v)).collect();
            row.extend(
                [w[0], w[1], r.norm, r.norm_bound, r.accretivity, r.dissipation, r.dissipation_bound, r.n_bar, r.m_bar, r.chi, r.tau]
                    .map(num),
            );
            rows.push(row);
        }
    }
    out.csv("gamma.csv", stamp, &header, &rows);
    Ok(json!({ "points": rows.len(), "min_accretivity": worst_acc, "min_dissipation_margin": worst_diss }))
}

fn lambda_scan(p: &Prepared, stamp: &Stamp, decomp: &BlockDecomp<f64>, est: &DiffusionEstimate<f64>, out: &mut Outputs) -> Result<(), CliError> {
    let run = p.run();
    let d = p.model.lattice.dimension;
    let mut header: Vec<String> = (1..=d).map(|i| format!("k_{i}")).collect();
    header.extend(["t", "z_re", "z_im", "re_lambda", "im_lambda", "half_kdk"].map(String::from));
    let mut rows = Vec::new();
    for k in p.k_list() {
        let norm = k.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for t in admissible_times(p.model.lattice.extent, norm) {
            for z in &run.lambda_z {
                let l = lambda_tkz(decomp, run.g, t, k, C::new(z[0], z[1]), false)?;
                let mut row: Vec<String> = k.iter().map(|&v| num(v)).collect();
                row.extend([t, z[0], z[1], l.re, l.im, est.quadratic_form(k)].map(num));
                rows.push(row);
            }
        }
    }
    out.csv("lambda.csv", stamp, &header, &rows);
    Ok(())
}

fn with_extent(model: &Model<f64>, n: usize) -> Result<Model<f64>, CliError> {
    let lat = fluxlat_model::LatticeSpec::new(model.lattice.dimension, n)?;
    Ok(Model::new(lat, model.hopping.clone(), model.disorder)?)
}

fn diffusion_schur(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    let run = p.run();
    let decomp = block_decompose(&p.model, &p.chain)?;
    let est = diffusion_schur_from(&decomp, run.g)?;
    let mut violations = Vec::new();
    check_d(&est, "schur", &mut violations);
    let mut outputs = Outputs::default();
    let sweep: Vec<Result<(usize, DiffusionEstimate<f64>), CliError>> = run
        .n_sweep
        .par_iter()
        .map(|&n| {
            let m = with_extent(&p.model, n)?;
            let dec = block_decompose(&m, &p.chain)?;
            Ok((n, diffusion_schur_from(&dec, run.g)?))
        })
        .collect();
    let sweep = sweep.into_iter().collect::<Result<Vec<_>, _>>()?;
    for (n, e) in &sweep {
        check_d(e, &format!("schur N={n}"), &mut violations);
    }
    let ns: Vec<usize> = sweep.iter().map(|(n, _)| *n).collect();
    let ds: Vec<DMatrix<f64>> = sweep.iter().map(|(_, e)| e.d.clone()).collect();
    let extrapolated = extrapolate_inverse_square(&ns, &ds);
    let gamma = if run.gamma_w.is_empty() {
        Value::Null
    } else {
        gamma_scan(p, stamp, &decomp, &mut outputs, &mut violations)?
    };
    if !run.lambda_z.is_empty() {
        lambda_scan(p, stamp, &decomp, &est, &mut outputs)?;
    }
    let mut quantities = json!({ "D": flat(&est.d) });
    if let Some(x) = &extrapolated {
        quantities["D_extrapolated"] = json!(flat(x));
    }
    let body = json!({
        "method": "schur",
        "D": mat(&est.d),
        "diagnostics": {
            "estimate": estimate_json(&est),
            "block_dims": decomp.dims(),
            "rank_q0": decomp.rank_q0(),
            "threshold_warnings": decomp.warnings,
            "n_sweep": sweep.iter().map(|(n, e)| json!({ "N": n, "D": mat(&e.d), "flags": e.flags })).collect::<Vec<_>>(),
            "extrapolation": extrapolated.as_ref().map(|x| json!({ "form": "D(N) = D_inf + a/N^2", "D_inf": mat(x) })),
            "gamma_scan": gamma,
        },
        "quantities": quantities,
    });
    let doc = result_doc(Mode::Diffusion, stamp, body);
    outputs.json("diffusion.json", &doc);
    Ok(Outcome {
        outputs,
        summary: json!({ "method": "schur", "D": mat(&est.d), "D_extrapolated": extrapolated.as_ref().map(mat) }),
        violations,
    })
}

fn diffusion_tauberian_mode(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    let run = p.run();
    let rep = diffusion_tauberian(&p.model, &p.chain, run.g, p.eta_grid())?;
    let mut violations = Vec::new();
    check_d(&rep.estimate, "tauberian", &mut violations);
    let body = json!({
        "method": "tauberian",
        "D": mat(&rep.estimate.d),
        "diagnostics": {
            "estimate": estimate_json(&rep.estimate),
            "eta": rep.eta,
            "values": rep.values.iter().map(mat).collect::<Vec<_>>(),
            "at_smallest": mat(&rep.at_smallest),
            "convergence": rep.convergence,
            "monotone": rep.monotone,
        },
        "quantities": { "D": flat(&rep.estimate.d) },
    });
    let doc = result_doc(Mode::Diffusion, stamp, body);
    let mut outputs = Outputs::default();
    outputs.json("diffusion.json", &doc);
    Ok(Outcome {
        outputs,
        summary: json!({ "method": "tauberian", "D": mat(&rep.estimate.d) }),
        violations,
    })
}

fn diffusion_slope(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    let (r, violations) = ensemble(p)?;
    let fit = estimate_D_slope(&r, window(p))?;
    let body = json!({
        "method": "slope",
        "D": mat(&fit.estimate.d),
        "diagnostics": {
            "ensemble": ensemble_summary(&r),
            "fit": slope_json(&Ok(fit.clone())),
        },
        "quantities": { "D": flat(&fit.estimate.d) },
        "stderr": { "D": flat(&fit.estimate.stderr) },
    });
    let doc = result_doc(Mode::Diffusion, stamp, body);
    let mut outputs = Outputs::default();
    outputs.json("diffusion.json", &doc);
    moments_csv(&mut outputs, stamp, &r);
    Ok(Outcome {
        outputs,
        summary: json!({ "method": "slope", "D": mat(&fit.estimate.d), "stderr": mat(&fit.estimate.stderr), "diffusive": fit.diffusive }),
        violations,
    })
}

fn smallg(p: &Prepared, stamp: &Stamp) -> Result<Outcome, CliError> {
    let decomp = block_decompose(&p.model, &p.chain)?;
    let rep = small_g_from(&decomp, p.g_grid())?;
    let pass = rep.stabilization <= fluxlat_augmented::STABILIZATION_TOLERANCE;
    let body = json!({
        "g_grid": rep.g_grid,
        "D": rep.d.iter().map(mat).collect::<Vec<_>>(),
        "ratios": rep.ratios.iter().map(mat).collect::<Vec<_>>(),
        "projected_ratios": rep.projected_ratios.iter().map(mat).collect::<Vec<_>>(),
        "F": mat(&rep.f),
        "kernel_dim": rep.kernel_dim,
        "stabilization": rep.stabilization,
        "tolerance": fluxlat_augmented::STABILIZATION_TOLERANCE,
        "decreasing": rep.decreasing,
        "flags": rep.flags,
        "pass": pass,
        "quantities": { "F": flat(&rep.f), "stabilization": rep.stabilization },
    });
    let doc = result_doc(Mode::Smallg, stamp, body);
    let mut outputs = Outputs::default();
    outputs.json("smallg.json", &doc);
    Ok(Outcome {
        outputs,
        summary: json!({ "F": mat(&rep.f), "stabilization": rep.stabilization, "kernel_dim": rep.kernel_dim, "pass": pass }),
        violations: Vec::new(),
    })
}
