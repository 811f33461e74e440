use crate::error::ModelError;
use crate::lattice::LatticeSpec;
use fluxlat_numeric::{rng, Real};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisorderKind {
    None,
    /// density uniform on [−λ, λ]
    Uniform,
    /// ±λ equiprobable
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisorderSpec<T: Real> {
    pub kind: DisorderKind,
    pub lambda: T,
}

impl<T: Real> DisorderSpec<T> {
    pub fn none() -> Self {
        Self {
            kind: DisorderKind::None,
            lambda: T::zero(),
        }
    }

    pub fn bernoulli(lambda: T) -> Self {
        Self {
            kind: DisorderKind::Bernoulli,
            lambda,
        }
    }

    pub fn uniform(lambda: T) -> Self {
        Self {
            kind: DisorderKind::Uniform,
            lambda,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let l = self.lambda.as_f64();
        if !l.is_finite() || l < 0.0 {
            return Err(ModelError::BadStrength(l));
        }
        Ok(())
    }

    /// Effective strength: zero for `None` whatever λ says.
    pub fn strength(&self) -> T {
        match self.kind {
            DisorderKind::None => T::zero(),
            _ => self.lambda,
        }
    }

    /// Whether Ω is finite and can be enumerated exactly.
    pub fn enumerable(&self) -> bool {
        !matches!(self.kind, DisorderKind::Uniform)
    }
}

/// Site potential U_ω(x), already multiplied by λ.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderSample<T: Real> {
    pub values: Vec<T>,
    pub lambda: T,
}

impl<T: Real> DisorderSample<T> {
    pub fn zero(sites: usize) -> Self {
        Self {
            values: vec![T::zero(); sites],
            lambda: T::zero(),
        }
    }

    pub fn from_values(values: Vec<T>, lambda: T) -> Self {
        Self { values, lambda }
    }
}

/// i.i.d. draw from the configured law; site x reads stream x of `seed`.
pub fn sample_disorder<T: Real>(spec: &DisorderSpec<T>, lattice: &LatticeSpec, seed: u64) -> DisorderSample<T> {
    let n = lattice.sites();
    let lambda = spec.strength();
    let values = match spec.kind {
        DisorderKind::None => vec![T::zero(); n],
        DisorderKind::Bernoulli => {
            let mut r = rng::stream(seed, 0);
            (0..n)
                .map(|_| if r.random::<bool>() { lambda } else { -lambda })
                .collect()
        }
        DisorderKind::Uniform => {
            let mut r = rng::stream(seed, 0);
            (0..n)
                .map(|_| lambda * T::lit(r.random_range(-1.0f64..=1.0)))
                .collect()
        }
    };
    DisorderSample { values, lambda }
}
