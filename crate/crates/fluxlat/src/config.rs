//! Run configuration: a single JSON document. Every optional field is filled
//! in by [`RunConfig::materialize`], so the copy stored next to the results
//! carries no hidden defaults.

use crate::error::CliError;
use fluxlat_augmented::default_eta_grid;
use fluxlat_model::{
    sample_disorder, validate_hopping, DisorderKind, DisorderSpec, HoppingKernel, LatticeSpec, Model,
};
use fluxlat_noise::SiteChain;
use fluxlat_trajectory::{default_dt, Route};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Largest fibre |A|·|Ω|·N^d accepted for the Schur route.
pub const EXACT_FIBER_BUDGET: usize = 1 << 17;
/// Largest dense operator (Tauberian fibre, fixed-ω generator).
pub const DENSE_OPERATOR_BUDGET: usize = 4096;
/// Sites allowed on the dense spectral propagation route.
pub const SPECTRAL_SITES: usize = fluxlat_trajectory::SPECTRAL_BUDGET;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Simulate,
    PilletCheck,
    Diffusion,
    Clt,
    NoiseAudit,
    Validate,
    Smallg,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::PilletCheck => "pillet-check",
            Mode::Diffusion => "diffusion",
            Mode::Clt => "clt",
            Mode::NoiseAudit => "noise-audit",
            Mode::Validate => "validate",
            Mode::Smallg => "smallg",
        }
    }

    fn uses_ensemble(self, method: Method) -> bool {
        matches!(self, Mode::Simulate | Mode::Clt) || (self == Mode::Diffusion && method == Method::Slope)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Schur,
    Tauberian,
    Slope,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RouteName {
    Auto,
    Spectral,
    Fourier,
    Exact,
}

impl RouteName {
    pub fn route(self) -> Route {
        match self {
            RouteName::Auto => Route::Auto,
            RouteName::Spectral => Route::Spectral,
            RouteName::Fourier => Route::Fourier,
            RouteName::Exact => Route::Exact,
        }
    }
}

/// Where the CLT mode takes D from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DSource {
    /// Slope fit of the same ensemble on the fit window.
    Slope,
    /// `run.d_matrix`.
    Given,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HopEntry {
    pub zeta: Vec<i64>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderBlock {
    #[serde(default = "default_kind")]
    pub kind: String,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_kind() -> String {
    "bernoulli".into()
}
fn default_lambda() -> f64 {
    1.0
}

impl Default for DisorderBlock {
    fn default() -> Self {
        Self {
            kind: default_kind(),
            lambda: default_lambda(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    #[serde(default = "one")]
    pub dimension: usize,
    #[serde(default = "four")]
    pub extent: usize,
    /// Defaults to unit nearest-neighbour hopping.
    #[serde(default)]
    pub hopping: Option<Vec<HopEntry>>,
    #[serde(default)]
    pub disorder: DisorderBlock,
}

fn one() -> usize {
    1
}
fn four() -> usize {
    4
}

impl Default for ModelBlock {
    fn default() -> Self {
        Self {
            dimension: 1,
            extent: 4,
            hopping: None,
            disorder: DisorderBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainBlock {
    pub states: Vec<String>,
    /// Forward generator Q, rates per unit time, rows summing to 0.
    pub rates: Vec<Vec<f64>>,
    pub observable: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseBlock {
    /// Telegraph shortcut: flip rate γ, v = ±1.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub chain: Option<ChainBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_method")]
    pub method: Method,
    #[serde(default = "default_g")]
    pub g: f64,
    /// Horizon in units of inverse hopping.
    #[serde(rename = "T", default = "default_horizon")]
    pub horizon: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub checkpoints: Option<Vec<f64>>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub k_list: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub eta_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub g_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
    #[serde(default = "default_route")]
    pub route: RouteName,
    /// Checkpoints at which the CLT statistic is reported.
    #[serde(default)]
    pub clt_times: Option<Vec<f64>>,
    #[serde(default = "default_d_source")]
    pub d_source: DSource,
    #[serde(default)]
    pub d_matrix: Option<Vec<Vec<f64>>>,
    /// Ring sizes for the Schur N-sweep; empty for none.
    #[serde(default)]
    pub n_sweep: Vec<usize>,
    /// Spectral parameters w = [re, im] for the Γ scan (Schur only); empty for none.
    #[serde(default)]
    pub gamma_w: Vec<[f64; 2]>,
    /// Contour half-height in the Γ norm bound; null takes b' + 1.
    #[serde(default)]
    pub m_bar: Option<f64>,
    /// z values = [re, im] for the Λ scan along admissible times (Schur only).
    #[serde(default)]
    pub lambda_z: Vec<[f64; 2]>,
    #[serde(default = "yes")]
    pub apriori: bool,
    /// Fixed disorder for pillet-check; drawn from the seed when absent.
    #[serde(default)]
    pub omega: Option<Vec<f64>>,
    #[serde(default = "default_probes")]
    pub probes: usize,
    /// Wall-clock budget for Monte Carlo; unfinished chunks abort the run.
    #[serde(default)]
    pub budget_seconds: Option<f64>,
}

fn default_mode() -> Mode {
    Mode::Validate
}
fn default_method() -> Method {
    Method::Schur
}
fn default_g() -> f64 {
    1.0
}
fn default_horizon() -> f64 {
    10.0
}
fn default_samples() -> usize {
    1000
}
fn default_route() -> RouteName {
    RouteName::Auto
}
fn default_d_source() -> DSource {
    DSource::Slope
}
fn default_probes() -> usize {
    200
}
fn yes() -> bool {
    true
}

impl Default for RunBlock {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all run fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedBlock {
    #[serde(default = "default_seed")]
    pub master: u64,
}

fn default_seed() -> u64 {
    20240601
}

impl Default for SeedBlock {
    fn default() -> Self {
        Self { master: default_seed() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: String,
}

fn default_dir() -> String {
    "fluxlat-out".into()
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelBlock,
    #[serde(default)]
    pub noise: NoiseBlock,
    #[serde(default)]
    pub run: RunBlock,
    #[serde(default)]
    pub seed: SeedBlock,
    #[serde(default)]
    pub output: OutputBlock,
}

/// A materialized, validated configuration with the model objects built.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub model: Model<f64>,
    pub chain: SiteChain<f64>,
}

impl Prepared {
    pub fn run(&self) -> &RunBlock {
        &self.config.run
    }

    pub fn checkpoints(&self) -> &[f64] {
        self.config.run.checkpoints.as_deref().unwrap_or(&[])
    }

    pub fn k_list(&self) -> &[Vec<f64>] {
        self.config.run.k_list.as_deref().unwrap_or(&[])
    }

    pub fn g_grid(&self) -> &[f64] {
        self.config.run.g_grid.as_deref().unwrap_or(&[])
    }

    pub fn eta_grid(&self) -> &[f64] {
        self.config.run.eta_grid.as_deref().unwrap_or(&[])
    }
}

fn parse_kind(s: &str) -> Result<DisorderKind, CliError> {
    match s {
        "none" => Ok(DisorderKind::None),
        "uniform" => Ok(DisorderKind::Uniform),
        "bernoulli" => Ok(DisorderKind::Bernoulli),
        other => Err(CliError::validation(
            "model.disorder.kind",
            format!("unknown disorder kind {other:?} (none, uniform, bernoulli)"),
        )),
    }
}

fn finite(key: &str, v: f64) -> Result<f64, CliError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::validation(key, format!("{v} is not finite")))
    }
}

fn increasing_positive(key: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::validation(key, "list is empty"));
    }
    if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(CliError::validation(key, "entries must be finite and positive"));
    }
    if v.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::validation(key, "entries must be strictly increasing"));
    }
    Ok(())
}

fn decreasing_positive(key: &str, v: &[f64], min_len: usize) -> Result<(), CliError> {
    if v.len() < min_len {
        return Err(CliError::validation(key, format!("need at least {min_len} entries")));
    }
    if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(CliError::validation(key, "entries must be finite and positive"));
    }
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError::validation(key, "entries must be strictly decreasing"));
    }
    Ok(())
}

fn is_checkpoint(times: &[f64], t: f64) -> bool {
    times.iter().any(|&s| (s - t).abs() <= 1e-9 * (1.0 + t.abs()))
}

impl RunConfig {
    pub fn from_json(bytes: &[u8]) -> Result<Self, CliError> {
        serde_json::from_slice(bytes).map_err(|e| {
            let msg = e.to_string();
            // serde names the field in the message; surface it as the key when possible
            let key = msg
                .split('`')
                .nth(1)
                .map(|s| s.to_string())
                .unwrap_or_else(|| "config".into());
            CliError::validation(key, msg)
        })
    }

    fn build_model(&self) -> Result<Model<f64>, CliError> {
        let m = &self.model;
        let lattice = LatticeSpec::new(m.dimension, m.extent).map_err(|e| CliError::validation("model.extent", e))?;
        let hop = m.hopping.as_ref().expect("materialized");
        if hop.is_empty() {
            return Err(CliError::validation("model.hopping", "hopping support is empty"));
        }
        for (i, e) in hop.iter().enumerate() {
            let key = format!("model.hopping[{i}].zeta");
            if e.zeta.len() != m.dimension {
                return Err(CliError::validation(
                    key,
                    format!("zeta has {} components, dimension is {}", e.zeta.len(), m.dimension),
                ));
            }
            if e.zeta.iter().all(|&z| z == 0) {
                return Err(CliError::validation(key, "h(0) is not allowed: zeta must be non-zero"));
            }
            finite(&format!("model.hopping[{i}].re"), e.re)?;
            finite(&format!("model.hopping[{i}].im"), e.im)?;
            if hop[..i].iter().any(|o| o.zeta == e.zeta) {
                return Err(CliError::validation(key, format!("duplicate entry {:?}", e.zeta)));
            }
            let conj = hop.iter().find(|o| o.zeta.iter().zip(&e.zeta).all(|(a, b)| *a == -*b));
            match conj {
                Some(o) if o.re == e.re && o.im == -e.im => {}
                _ => {
                    return Err(CliError::validation(
                        key,
                        format!("h(-zeta) must equal conj h(zeta) at zeta = {:?}", e.zeta),
                    ))
                }
            }
        }
        let kernel = HoppingKernel::new(
            hop.iter()
                .map(|e| (e.zeta.clone(), fluxlat_numeric::C::new(e.re, e.im)))
                .collect(),
        );
        let kind = parse_kind(&m.disorder.kind)?;
        let lambda = finite("model.disorder.lambda", m.disorder.lambda)?;
        if lambda < 0.0 {
            return Err(CliError::validation("model.disorder.lambda", "must be non-negative"));
        }
        if kind == DisorderKind::None && lambda != 0.0 {
            return Err(CliError::validation("model.disorder.lambda", "must be 0 for kind none"));
        }
        let disorder = DisorderSpec { kind, lambda };
        Model::new(lattice, kernel, disorder).map_err(|e| CliError::validation("model.hopping", e))
    }

    fn build_chain(&self) -> Result<SiteChain<f64>, CliError> {
        let n = &self.noise;
        let chain = match (&n.chain, n.gamma) {
            (None, g) => {
                let g = finite("noise.gamma", g.unwrap_or(1.0))?;
                if g <= 0.0 {
                    return Err(CliError::validation("noise.gamma", "flip rate must be positive"));
                }
                SiteChain::telegraph(g)
            }
            (Some(c), g) => {
                let s = c.rates.len();
                if s < 2 || c.rates.iter().any(|r| r.len() != s) {
                    return Err(CliError::validation("noise.chain.rates", "rates must be a square S×S matrix, S ≥ 2"));
                }
                if c.states.len() != s {
                    return Err(CliError::validation("noise.chain.states", format!("{} labels for {s} states", c.states.len())));
                }
                for (i, r) in c.rates.iter().enumerate() {
                    for (j, &v) in r.iter().enumerate() {
                        finite(&format!("noise.chain.rates[{i}][{j}]"), v)?;
                    }
                }
                let chain = SiteChain {
                    labels: c.states.clone(),
                    rates: DMatrix::from_fn(s, s, |i, j| c.rates[i][j]),
                    observable: c.observable.clone(),
                };
                if let Some(g) = g {
                    if chain != SiteChain::telegraph(g) {
                        return Err(CliError::validation("noise.gamma", "gamma given together with a different chain"));
                    }
                }
                chain
            }
        };
        chain.validate().map_err(|e| CliError::validation("noise.chain", e))?;
        Ok(chain)
    }

    /// Fills every default, then checks cross-field constraints.
    pub fn materialize(mut self) -> Result<Prepared, CliError> {
        let d = self.model.dimension;
        if self.model.hopping.is_none() {
            let mut hop = Vec::new();
            for axis in 0..d {
                for s in [1, -1] {
                    let mut zeta = vec![0; d];
                    zeta[axis] = s;
                    hop.push(HopEntry { zeta, re: 1.0, im: 0.0 });
                }
            }
            self.model.hopping = Some(hop);
        }
        if parse_kind(&self.model.disorder.kind)? == DisorderKind::None {
            self.model.disorder.lambda = 0.0;
        }
        let model = self.build_model()?;
        let chain = self.build_chain()?;
        if self.noise.chain.is_none() {
            self.noise.chain = Some(ChainBlock {
                states: chain.labels.clone(),
                rates: (0..chain.states())
                    .map(|i| (0..chain.states()).map(|j| chain.rates[(i, j)]).collect())
                    .collect(),
                observable: chain.observable.clone(),
            });
        }
        let run = &mut self.run;
        finite("run.g", run.g)?;
        if run.g < 0.0 {
            return Err(CliError::validation("run.g", "coupling must be non-negative"));
        }
        finite("run.T", run.horizon)?;
        if run.horizon <= 0.0 {
            return Err(CliError::validation("run.T", "horizon must be positive"));
        }
        let report = validate_hopping(&model.hopping, d).map_err(|e| CliError::validation("model.hopping", e))?;
        if run.dt.is_none() {
            run.dt = Some(default_dt(report.m0, model.disorder.lambda, run.g));
        }
        if run.checkpoints.is_none() {
            run.checkpoints = Some((1..=20).map(|i| run.horizon * i as f64 / 20.0).collect());
        }
        if run.k_list.is_none() {
            run.k_list = Some(
                [0.5, 1.0, 2.0]
                    .iter()
                    .map(|&k| {
                        let mut v = vec![0.0; d];
                        v[0] = k;
                        v
                    })
                    .collect(),
            );
        }
        if run.eta_grid.is_none() {
            run.eta_grid = Some(default_eta_grid());
        }
        if run.g_grid.is_none() {
            run.g_grid = Some(vec![0.4, 0.2, 0.1, 0.05]);
        }
        if run.fit_window.is_none() {
            run.fit_window = Some([0.5 * run.horizon, run.horizon]);
        }
        if run.clt_times.is_none() {
            let cps = run.checkpoints.as_ref().unwrap();
            let quarter = cps[(cps.len() / 4).saturating_sub(1).min(cps.len() - 1)];
            let last = *cps.last().unwrap();
            run.clt_times = Some(if quarter < last { vec![quarter, last] } else { vec![last] });
        }
        if run.mode == Mode::PilletCheck && run.omega.is_none() {
            let w = sample_disorder(&model.disorder, &model.lattice, self.seed.master);
            run.omega = Some(w.values);
        }
        let prepared = Prepared {
            config: self,
            model,
            chain,
        };
        check_run(&prepared)?;
        Ok(prepared)
    }
}

fn exact_dims(p: &Prepared) -> (usize, usize, usize) {
    let sites = p.model.lattice.sites();
    let s = p.chain.states();
    let a = (s as u128).checked_pow(sites as u32).unwrap_or(u128::MAX);
    let w: u128 = match p.model.disorder.kind {
        DisorderKind::Bernoulli => 1u128.checked_shl(sites as u32).unwrap_or(u128::MAX),
        _ => 1,
    };
    let clamp = |v: u128| v.min(usize::MAX as u128) as usize;
    (clamp(a), clamp(w), sites)
}

fn require_enumerable(p: &Prepared) -> Result<(), CliError> {
    if p.model.disorder.kind == DisorderKind::Uniform {
        return Err(CliError::validation(
            "model.disorder.kind",
            "exact modes need bernoulli or no disorder; uniform is Monte Carlo only",
        ));
    }
    Ok(())
}

fn schur_budget(p: &Prepared, extent: usize, key: &str) -> Result<(), CliError> {
    let sites = extent.pow(p.model.lattice.dimension as u32);
    let s = p.chain.states() as u128;
    let a = s.checked_pow(sites as u32).unwrap_or(u128::MAX);
    let w: u128 = if p.model.disorder.kind == DisorderKind::Bernoulli {
        1u128.checked_shl(sites as u32).unwrap_or(u128::MAX)
    } else {
        1
    };
    let fiber = a.saturating_mul(w).saturating_mul(sites as u128);
    if a > fluxlat_noise::DENSE_BUDGET as u128 || fiber > EXACT_FIBER_BUDGET as u128 {
        return Err(CliError::validation(
            key,
            format!("fibre of N = {extent} has {fiber} states, budget {EXACT_FIBER_BUDGET} (noise space ≤ {})", fluxlat_noise::DENSE_BUDGET),
        ));
    }
    Ok(())
}

fn check_run(p: &Prepared) -> Result<(), CliError> {
    let run = p.run();
    let d = p.model.lattice.dimension;
    let sites = p.model.lattice.sites();
    let cps = p.checkpoints();
    increasing_positive("run.checkpoints", cps)?;
    let dt = run.dt.unwrap();
    if !dt.is_finite() || dt <= 0.0 {
        return Err(CliError::validation("run.dt", "time step must be positive"));
    }
    if let Some(k) = p.k_list().iter().position(|k| k.len() != d || k.iter().any(|v| !v.is_finite())) {
        return Err(CliError::validation(format!("run.k_list[{k}]"), format!("needs {d} finite components")));
    }
    if run.mode.uses_ensemble(run.method) {
        if run.samples < fluxlat_trajectory::MIN_SAMPLES {
            return Err(CliError::validation(
                "run.samples",
                format!("{} below the minimum {}", run.samples, fluxlat_trajectory::MIN_SAMPLES),
            ));
        }
        let spacing = cps.windows(2).map(|w| w[1] - w[0]).fold(cps[0], f64::min);
        if dt > spacing * (1.0 + 1e-12) {
            return Err(CliError::validation("run.dt", format!("dt = {dt} exceeds the checkpoint spacing {spacing}")));
        }
        let route = run.route.route().resolve_coupled(sites, run.g != 0.0);
        if route == Route::Spectral && sites > SPECTRAL_SITES {
            return Err(CliError::validation("run.route", format!("{sites} sites exceed the spectral budget {SPECTRAL_SITES}")));
        }
        if route == Route::Exact && sites > DENSE_OPERATOR_BUDGET / 4 {
            return Err(CliError::validation("run.route", "exact route is for small boxes only"));
        }
        let [lo, hi] = run.fit_window.unwrap();
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi > lo) {
            return Err(CliError::validation("run.fit_window", "need 0 ≤ lo < hi"));
        }
        let inside = cps.iter().filter(|&&t| t >= lo && t <= hi).count();
        let needs_fit = run.mode == Mode::Diffusion || (run.mode == Mode::Clt && run.d_source == DSource::Slope);
        if needs_fit && inside < fluxlat_trajectory::MIN_FIT_POINTS {
            return Err(CliError::validation(
                "run.fit_window",
                format!("window holds {inside} checkpoints, need {}", fluxlat_trajectory::MIN_FIT_POINTS),
            ));
        }
        if let Some(b) = run.budget_seconds {
            if !b.is_finite() || b <= 0.0 {
                return Err(CliError::validation("run.budget_seconds", "must be positive"));
            }
        }
    }
    match run.mode {
        Mode::Clt => {
            let ts = run.clt_times.as_ref().unwrap();
            if let Some(t) = ts.iter().find(|&&t| !is_checkpoint(cps, t)) {
                return Err(CliError::validation("run.clt_times", format!("{t} is not a checkpoint")));
            }
            if run.d_source == DSource::Given {
                let m = run
                    .d_matrix
                    .as_ref()
                    .ok_or_else(|| CliError::validation("run.d_matrix", "required when d_source is given"))?;
                if m.len() != d || m.iter().any(|r| r.len() != d || r.iter().any(|v| !v.is_finite())) {
                    return Err(CliError::validation("run.d_matrix", format!("needs a finite {d}×{d} matrix")));
                }
            }
        }
        Mode::PilletCheck => {
            require_enumerable(p)?;
            let (a, _, n) = exact_dims(p);
            if a.saturating_mul(n * n) > DENSE_OPERATOR_BUDGET {
                return Err(CliError::validation(
                    "model.extent",
                    format!("fixed-ω generator has {} states, budget {DENSE_OPERATOR_BUDGET}", a.saturating_mul(n * n)),
                ));
            }
            let w = run.omega.as_ref().unwrap();
            if w.len() != sites {
                return Err(CliError::validation("run.omega", format!("{} values for {sites} sites", w.len())));
            }
            let lam = p.model.disorder.lambda;
            if w.iter().any(|v| !v.is_finite() || v.abs() > lam * (1.0 + 1e-12)) {
                return Err(CliError::validation("run.omega", format!("values must lie in [-{lam}, {lam}]")));
            }
            if run.samples < fluxlat_trajectory::MIN_SAMPLES {
                return Err(CliError::validation("run.samples", "below the Monte Carlo minimum"));
            }
            let spacing = cps.windows(2).map(|w| w[1] - w[0]).fold(cps[0], f64::min);
            if dt > spacing * (1.0 + 1e-12) {
                return Err(CliError::validation("run.dt", format!("dt = {dt} exceeds the checkpoint spacing {spacing}")));
            }
        }
        Mode::Diffusion if run.method != Method::Slope => {
            require_enumerable(p)?;
            if run.g <= 0.0 {
                return Err(CliError::validation("run.g", "exact diffusion needs g > 0"));
            }
            match run.method {
                Method::Schur => {
                    schur_budget(p, p.model.lattice.extent, "model.extent")?;
                    for (i, &n) in run.n_sweep.iter().enumerate() {
                        let key = format!("run.n_sweep[{i}]");
                        let reach = p.model.hopping.reach();
                        if n < 2 || (reach as f64) >= n as f64 / 2.0 {
                            return Err(CliError::validation(key, format!("N = {n} too small for hopping reach {reach}")));
                        }
                        schur_budget(p, n, &key)?;
                    }
                    if run.n_sweep.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(CliError::validation("run.n_sweep", "sizes must be strictly increasing"));
                    }
                    if let Some(w) = run.gamma_w.iter().position(|w| !(w[0] > 0.0 && w[1].is_finite())) {
                        return Err(CliError::validation(format!("run.gamma_w[{w}]"), "needs Re w > 0"));
                    }
                    if let Some(z) = run.lambda_z.iter().position(|z| !(z[0] > 0.0 && z[1].is_finite())) {
                        return Err(CliError::validation(format!("run.lambda_z[{z}]"), "needs Re z > 0"));
                    }
                    if let Some(m) = run.m_bar {
                        if !(m.is_finite() && m >= 0.0) {
                            return Err(CliError::validation("run.m_bar", "must be finite and non-negative"));
                        }
                    }
                }
                Method::Tauberian => {
                    decreasing_positive("run.eta_grid", p.eta_grid(), 2)?;
                    let (a, w, n) = exact_dims(p);
                    let dim = a.saturating_mul(w).saturating_mul(n);
                    if dim > DENSE_OPERATOR_BUDGET {
                        return Err(CliError::validation(
                            "model.extent",
                            format!("fibre has {dim} states, dense budget {DENSE_OPERATOR_BUDGET}"),
                        ));
                    }
                }
                Method::Slope => unreachable!(),
            }
        }
        Mode::Smallg => {
            require_enumerable(p)?;
            decreasing_positive("run.g_grid", p.g_grid(), 2)?;
            schur_budget(p, p.model.lattice.extent, "model.extent")?;
        }
        Mode::NoiseAudit => {
            if run.probes < 1 {
                return Err(CliError::validation("run.probes", "need at least one probe"));
            }
        }
        _ => {}
    }
    Ok(())
}
