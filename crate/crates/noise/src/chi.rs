use crate::chain::SiteChain;
use crate::error::NoiseError;
use crate::generator::{apply_b_inverse, build_generator_b, DENSE_BUDGET};
use fluxlat_model::{DisorderKind, DisorderSpec, LatticeSpec};
use fluxlat_numeric::Real;

/// Enumeration limit on |A|·|Ω|.
pub const ENUMERATION_BUDGET: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChiMethod {
    Enumerated,
    /// 2‖B⁻¹v‖² for independent sites; the joint space was too large to enumerate.
    Independence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiReport<T> {
    pub chi: T,
    pub method: ChiMethod,
}

fn omega_size<T: Real>(disorder: &DisorderSpec<T>, sites: usize) -> Option<usize> {
    match disorder.kind {
        DisorderKind::None => Some(1),
        DisorderKind::Bernoulli => 1usize.checked_shl(sites as u32).filter(|_| sites < 64),
        DisorderKind::Uniform => None,
    }
}

/// χ = min over x ≠ 0 of ∫|B⁻¹v(σ_x a) − B⁻¹v(a)|² dμ_A with v(a) = v_loc(a_0).
/// The observable does not depend on ω, so the minimum over ω is trivial; Ω only
/// enters the choice of method.
pub fn nondegeneracy_chi<T: Real>(
    chain: &SiteChain<T>,
    lattice: &LatticeSpec,
    disorder: &DisorderSpec<T>,
) -> Result<ChiReport<T>, NoiseError> {
    let n = lattice.sites();
    let states = chain.states();
    let joint = states.checked_pow(n as u32);
    let enumerate = match (joint, omega_size(disorder, n)) {
        (Some(a), Some(o)) => a <= DENSE_BUDGET && a.checked_mul(o).is_some_and(|p| p <= ENUMERATION_BUDGET),
        _ => false,
    };
    let report = if enumerate && n > 1 {
        let b = build_generator_b(chain, n)?;
        let w = apply_b_inverse(&b, &b.observable_at(lattice.origin()))?;
        let pi = b.stationary();
        let mut chi = T::lit(f64::INFINITY);
        for x in 1..n {
            let zeta = lattice.coords(x);
            let perm = b.space.shift_table(lattice, &zeta);
            let s = (0..b.dim()).fold(T::zero(), |acc, a| {
                let d = w[perm[a]] - w[a];
                acc + pi[a] * d * d
            });
            chi = chi.min(s);
        }
        ChiReport {
            chi,
            method: ChiMethod::Enumerated,
        }
    } else {
        let b = build_generator_b(chain, 1)?;
        let w = apply_b_inverse(&b, &chain.observable)?;
        let nrm = b.norm(&w);
        ChiReport {
            chi: T::lit(2.0) * nrm * nrm,
            method: if n > 1 { ChiMethod::Independence } else { ChiMethod::Enumerated },
        }
    };
    if report.chi <= T::lit(1e-12) {
        return Err(NoiseError::Degenerate { chi: report.chi.as_f64() });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn telegraph_values() {
        let lat = LatticeSpec::new(1, 4).unwrap();
        let r = nondegeneracy_chi(&SiteChain::<f64>::telegraph(1.0), &lat, &DisorderSpec::none()).unwrap();
        assert_eq!(r.method, ChiMethod::Enumerated);
        assert!((r.chi - 0.5).abs() < 1e-12);
        let r = nondegeneracy_chi(&SiteChain::<f64>::telegraph(0.5), &lat, &DisorderSpec::bernoulli(1.0)).unwrap();
        assert!((r.chi - 2.0).abs() < 1e-12);
    }

    #[test]
    fn shortcut_matches_enumeration() {
        let chain = SiteChain {
            labels: vec!["a".into(), "b".into(), "c".into()],
            rates: nalgebra::DMatrix::<f64>::from_row_slice(3, 3, &[-3.0, 2.0, 1.0, 1.0, -3.0, 2.0, 2.0, 1.0, -3.0]),
            observable: vec![1.0, -0.5, -0.5],
        };
        let small = LatticeSpec::new(2, 2).unwrap();
        let big = LatticeSpec::new(1, 64).unwrap();
        let a = nondegeneracy_chi(&chain, &small, &DisorderSpec::none()).unwrap();
        let b = nondegeneracy_chi(&chain, &big, &DisorderSpec::uniform(1.0)).unwrap();
        assert_eq!(a.method, ChiMethod::Enumerated);
        assert_eq!(b.method, ChiMethod::Independence);
        assert!((a.chi - b.chi).abs() < 1e-12);
    }

    #[test]
    fn zero_observable_is_degenerate() {
        let mut c = SiteChain::<f64>::telegraph(1.0);
        c.observable = vec![0.0, 0.0];
        let lat = LatticeSpec::new(1, 3).unwrap();
        assert!(matches!(
            nondegeneracy_chi(&c, &lat, &DisorderSpec::none()),
            Err(NoiseError::Degenerate { .. })
        ));
    }
}
