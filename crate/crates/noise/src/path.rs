use crate::chain::SiteChain;
use crate::error::NoiseError;
use fluxlat_numeric::{rng, Real};
use rand::Rng;
use rand_distr::{Distribution, Exp};

/// Right-continuous piecewise-constant path of one site: `states[i]` holds on
/// [times[i], times[i+1]).
#[derive(Debug, Clone, PartialEq)]
pub struct SitePath<T> {
    pub initial: usize,
    pub times: Vec<T>,
    pub states: Vec<usize>,
}

impl<T: Real> SitePath<T> {
    pub fn state_at(&self, t: T) -> usize {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            self.initial
        } else {
            self.states[k - 1]
        }
    }

    pub fn jumps(&self) -> usize {
        self.times.len()
    }

    /// ∫_s^t values[state(u)] du for s ≤ t.
    pub fn integrate(&self, values: &[T], s: T, t: T) -> T {
        let mut k = self.times.partition_point(|&u| u <= s);
        let mut cur = if k == 0 { self.initial } else { self.states[k - 1] };
        let mut left = s;
        let mut acc = T::zero();
        while k < self.times.len() && self.times[k] < t {
            acc += values[cur] * (self.times[k] - left);
            left = self.times[k];
            cur = self.states[k];
            k += 1;
        }
        acc + values[cur] * (t - left)
    }

    /// Time spent in each state over [0, horizon].
    pub fn occupation(&self, n_states: usize, horizon: T) -> Vec<T> {
        let mut occ = vec![T::zero(); n_states];
        let mut left = T::zero();
        let mut cur = self.initial;
        for (&t, &s) in self.times.iter().zip(&self.states) {
            occ[cur] += t - left;
            left = t;
            cur = s;
        }
        occ[cur] += horizon - left;
        occ
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath<T> {
    pub horizon: T,
    pub sites: Vec<SitePath<T>>,
}

/// One jump of the joint path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent<T> {
    pub time: T,
    pub site: usize,
    pub state: usize,
}

impl<T: Real> NoisePath<T> {
    pub fn initial_states(&self) -> Vec<usize> {
        self.sites.iter().map(|p| p.initial).collect()
    }

    pub fn states_at(&self, t: T) -> Vec<usize> {
        self.sites.iter().map(|p| p.state_at(t)).collect()
    }

    /// All jumps in time order (ties broken by site).
    pub fn events(&self) -> Vec<JumpEvent<T>> {
        let mut ev: Vec<JumpEvent<T>> = self
            .sites
            .iter()
            .enumerate()
            .flat_map(|(site, p)| {
                p.times
                    .iter()
                    .zip(&p.states)
                    .map(move |(&time, &state)| JumpEvent { time, site, state })
            })
            .collect();
        ev.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap().then(a.site.cmp(&b.site)));
        ev
    }

    pub fn check_interval(&self, s: T, t: T) -> Result<(), NoiseError> {
        if s < T::zero() || t > self.horizon || s > t {
            return Err(NoiseError::Horizon {
                s: s.as_f64(),
                t: t.as_f64(),
                horizon: self.horizon.as_f64(),
            });
        }
        Ok(())
    }
}

fn pick<T: Real, R: Rng>(weights: impl Iterator<Item = (usize, T)>, total: T, r: &mut R) -> usize {
    let u = T::lit(r.random::<f64>()) * total;
    let mut acc = T::zero();
    let mut last = 0;
    for (i, w) in weights {
        if w <= T::zero() {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Exact Gillespie sampling; site x uses stream x of `seed`, so a site's path
/// does not depend on how many other sites are sampled.
pub fn sample_path<T: Real>(
    chain: &SiteChain<T>,
    n_sites: usize,
    horizon: T,
    seed: u64,
) -> Result<NoisePath<T>, NoiseError> {
    let pi = chain.validate()?;
    let s = chain.states();
    let q = &chain.rates;
    let sites = (0..n_sites)
        .map(|x| {
            let mut r = rng::stream(seed, x as u64);
            let initial = pick(pi.iter().copied().enumerate(), T::one(), &mut r);
            let mut times = Vec::new();
            let mut states = Vec::new();
            let mut cur = initial;
            let mut t = 0.0f64;
            loop {
                let rate = -q[(cur, cur)];
                if rate <= T::zero() {
                    break;
                }
                t += Exp::new(rate.as_f64()).unwrap().sample(&mut r);
                if t > horizon.as_f64() {
                    break;
                }
                let next = pick((0..s).filter(|&j| j != cur).map(|j| (j, q[(cur, j)])), rate, &mut r);
                times.push(T::lit(t));
                states.push(next);
                cur = next;
            }
            SitePath { initial, times, states }
        })
        .collect();
    Ok(NoisePath { horizon, sites })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::{backward_expectation, build_generator_b};

    #[test]
    fn deterministic_and_site_local() {
        let c = SiteChain::<f64>::telegraph(1.0);
        let a = sample_path(&c, 5, 10.0, 42).unwrap();
        let b = sample_path(&c, 5, 10.0, 42).unwrap();
        let c3 = sample_path(&c, 3, 10.0, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sites[..3], c3.sites[..]);
        assert_ne!(a.sites[0], a.sites[1]);
    }

    #[test]
    fn path_structure() {
        let c = SiteChain::<f64>::telegraph(2.0);
        let p = sample_path(&c, 20, 5.0, 1).unwrap();
        for sp in &p.sites {
            let mut prev = sp.initial;
            for w in sp.times.windows(2) {
                assert!(w[0] < w[1]);
            }
            for &s in &sp.states {
                assert_ne!(s, prev);
                prev = s;
            }
            assert!(sp.times.iter().all(|&t| t > 0.0 && t <= 5.0));
        }
        let ev = p.events();
        assert!(ev.windows(2).all(|w| w[0].time <= w[1].time));
        assert_eq!(ev.len(), p.sites.iter().map(|s| s.jumps()).sum::<usize>());
    }

    #[test]
    fn integrate_matches_occupation() {
        let c = SiteChain::<f64>::telegraph(1.0);
        let p = sample_path(&c, 1, 7.0, 3).unwrap();
        let sp = &p.sites[0];
        let occ = sp.occupation(2, 7.0);
        let i = sp.integrate(&[1.0, -1.0], 0.0, 7.0);
        assert!((i - (occ[0] - occ[1])).abs() < 1e-12);
        let split = sp.integrate(&[1.0, -1.0], 0.0, 2.5) + sp.integrate(&[1.0, -1.0], 2.5, 7.0);
        assert!((split - i).abs() < 1e-12);
        assert!(p.check_interval(1.0, 8.0).is_err());
    }

    #[test]
    fn jump_count_and_occupation() {
        // telegraph γ=1 jumps at rate 1
        let c = SiteChain::<f64>::telegraph(1.0);
        let n = 10_000;
        let p = sample_path(&c, n, 10.0, 99).unwrap();
        let counts: Vec<f64> = p.sites.iter().map(|s| s.jumps() as f64).collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        // Poisson(10): sd of the mean √10/100
        assert!((mean - 10.0).abs() < 4.0 * 10f64.sqrt() / 100.0, "{mean}");
        let frac = p.sites.iter().map(|s| s.occupation(2, 10.0)[0] / 10.0).sum::<f64>() / n as f64;
        // Var of the time average ≈ 1/(2γT) · 1/4 per path at most
        assert!((frac - 0.5).abs() < 4.0 * (0.25f64 / 20.0 / n as f64).sqrt() * 2.0, "{frac}");
    }

    #[test]
    fn transition_frequencies() {
        let chain = SiteChain {
            labels: vec!["a".into(), "b".into(), "c".into()],
            rates: nalgebra::DMatrix::from_row_slice(3, 3, &[-3.0, 2.0, 1.0, 1.0, -1.5, 0.5, 0.5, 1.0, -1.5]),
            observable: vec![0.0, 0.0, 0.0],
        };
        let chain = SiteChain {
            observable: {
                let pi = crate::chain::stationary_distribution(&chain.rates).unwrap();
                // mean-zero under π
                vec![pi[1], -pi[0], 0.0]
            },
            ..chain
        };
        let b = build_generator_b(&chain, 1).unwrap();
        let n = 100_000;
        let p = sample_path(&chain, n, 2.0, 5).unwrap();
        for &t in &[0.5, 1.0, 2.0] {
            for i in 0..3 {
                let starts: Vec<&SitePath<f64>> = p.sites.iter().filter(|s| s.initial == i).collect();
                let m = starts.len() as f64;
                for j in 0..3 {
                    let mut e = vec![0.0; 3];
                    e[j] = 1.0;
                    let want = backward_expectation(&b, &e, t)[i];
                    let got = starts.iter().filter(|s| s.state_at(t) == j).count() as f64 / m;
                    let sd = (want * (1.0 - want) / m).sqrt();
                    assert!((got - want).abs() <= 4.0 * sd + 1e-12, "t={t} {i}->{j}: {got} vs {want}");
                }
            }
        }
    }
}
