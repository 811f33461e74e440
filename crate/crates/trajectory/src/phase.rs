use crate::error::TrajectoryError;
use fluxlat_noise::{JumpEvent, NoisePath};
use fluxlat_numeric::{cis, Real, C};

/// ∫_s^t v(α_site(r)) dr along a sampled path, exact for piecewise-constant paths.
pub fn integrate_phase<T: Real>(
    path: &NoisePath<T>,
    observable: &[T],
    site: usize,
    s: T,
    t: T,
) -> Result<T, TrajectoryError> {
    path.check_interval(s, t)?;
    Ok(path.sites[site].integrate(observable, s, t))
}

/// Accumulates the diagonal phase ∫ W_x(r) dr site by site, with
/// W_x = g·v(α_x) + u_x, walking the jump events once in time order.
#[derive(Debug, Clone)]
pub struct PhaseTracker<T: Real> {
    events: Vec<JumpEvent<T>>,
    cursor: usize,
    coupling: T,
    observable: Vec<T>,
    offset: Vec<T>,
    potential: Vec<T>,
    seg_start: Vec<T>,
    acc: Vec<T>,
    dirty: Vec<bool>,
    start: T,
    /// cis(−L·W_x) for the standard interval length L
    cache: Vec<Option<C<T>>>,
    standard: T,
}

impl<T: Real> PhaseTracker<T> {
    pub fn new(path: &NoisePath<T>, observable: &[T], coupling: T, offset: Vec<T>, standard: T) -> Self {
        let n = path.sites.len();
        let potential = path
            .sites
            .iter()
            .zip(&offset)
            .map(|(p, &u)| coupling * observable[p.initial] + u)
            .collect();
        Self {
            events: path.events(),
            cursor: 0,
            coupling,
            observable: observable.to_vec(),
            offset,
            potential,
            seg_start: vec![T::zero(); n],
            acc: vec![T::zero(); n],
            dirty: vec![false; n],
            start: T::zero(),
            cache: vec![None; n],
            standard,
        }
    }

    pub fn time(&self) -> T {
        self.start
    }

    /// First jump strictly after `after`.
    pub fn next_jump_after(&self, after: T) -> Option<T> {
        self.events[self.cursor..].iter().map(|e| e.time).find(|&t| t > after)
    }

    fn advance(&mut self, to: T) {
        while self.cursor < self.events.len() && self.events[self.cursor].time <= to {
            let e = self.events[self.cursor];
            let x = e.site;
            self.acc[x] += self.potential[x] * (e.time - self.seg_start[x]);
            self.seg_start[x] = e.time;
            self.potential[x] = self.coupling * self.observable[e.state] + self.offset[x];
            self.dirty[x] = true;
            self.cache[x] = None;
            self.cursor += 1;
        }
    }

    /// Multiply ψ by e^{−i∫_{start}^{to} W} and move the start to `to`.
    /// `standard` asserts that to − start equals the standard length.
    pub fn apply(&mut self, psi: &mut [C<T>], to: T, standard: bool) {
        self.advance(to);
        for x in 0..psi.len() {
            let clean = !self.dirty[x];
            let f = if clean && standard {
                let (w, l) = (self.potential[x], self.standard);
                *self.cache[x].get_or_insert_with(|| cis(-(w * l)))
            } else {
                cis(-(self.acc[x] + self.potential[x] * (to - self.seg_start[x])))
            };
            psi[x] *= f;
            self.acc[x] = T::zero();
            self.seg_start[x] = to;
            self.dirty[x] = false;
        }
        self.start = to;
    }

    /// Current per-site potential W_x.
    pub fn potential(&self) -> &[T] {
        &self.potential
    }

    /// Advance without applying anything (used by exact stepping).
    pub fn skip_to(&mut self, to: T) {
        self.advance(to);
        for x in 0..self.acc.len() {
            self.acc[x] = T::zero();
            self.seg_start[x] = to;
            self.dirty[x] = false;
        }
        self.start = to;
    }
}
