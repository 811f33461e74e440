use crate::error::TrajectoryError;
use crate::phase::PhaseTracker;
use crate::plan::{Float, PropagatorPlan, Route};
use fluxlat_noise::NoisePath;
use fluxlat_numeric::{dense, expm::expm, C};

/// One trajectory ψ_t along a fixed (ω, path).
///
/// Strang steps on the grid nδ: half phase, e^{−iδK}, half phase, with
/// consecutive half phases merged into one exact diagonal factor. On the
/// spectral route steps are also cut at jump times. Without noise and with no
/// diagonal phase left the kinetic factor is applied in one go.
pub struct Trajectory<'a, T: Float> {
    plan: &'a mut PropagatorPlan<T>,
    tracker: PhaseTracker<T>,
    psi: Vec<C<T>>,
    now: T,
    prev_full: bool,
    split: bool,
    cut: bool,
}

impl<'a, T: Float> Trajectory<'a, T> {
    pub fn new(plan: &'a mut PropagatorPlan<T>, path: &NoisePath<T>, observable: &[T], g: T, psi0: &[C<T>]) -> Self {
        let offset = match plan.route {
            Route::Exact => plan.omega.clone(),
            _ => plan.phase_offset.clone(),
        };
        let tracker = PhaseTracker::new(path, observable, g, offset, plan.dt);
        let static_phase = plan.phase_offset.iter().all(|&u| u == T::zero());
        let split = !(g == T::zero() && (plan.route == Route::Spectral || static_phase));
        let cut = plan.route == Route::Spectral;
        Self {
            plan,
            tracker,
            psi: psi0.to_vec(),
            now: T::zero(),
            prev_full: false,
            split,
            cut,
        }
    }

    pub fn time(&self) -> T {
        self.now
    }

    pub fn psi(&self) -> &[C<T>] {
        &self.psi
    }

    /// Evolve to `target` and return ψ_target (phases flushed).
    pub fn advance_to(&mut self, target: T) -> Result<&[C<T>], TrajectoryError> {
        if target < self.now {
            return Err(TrajectoryError::Checkpoints);
        }
        match self.plan.route {
            Route::Exact => self.advance_exact(target),
            _ if !self.split => {
                let d = target - self.now;
                if d > T::zero() {
                    self.plan.kinetic_step(&mut self.psi, d, false);
                }
                self.tracker.skip_to(target);
                self.now = target;
            }
            _ => self.advance_split(target),
        }
        let nrm = dense::norm(&self.psi);
        if !nrm.is_finite() {
            return Err(TrajectoryError::NonFinite {
                t: target.as_f64(),
                norm: nrm.as_f64(),
            });
        }
        Ok(&self.psi)
    }

    fn advance_split(&mut self, target: T) {
        let dt = self.plan.dt;
        let tol = dt * T::lit(1e-9);
        while self.now < target - tol {
            let k = (self.now / dt + T::lit(1e-9)).floor() + T::one();
            let mut next = (k * dt).min(target);
            if self.cut {
                if let Some(j) = self.tracker.next_jump_after(self.now) {
                    if j < next {
                        next = j;
                    }
                }
            }
            let delta = next - self.now;
            let full = (delta - dt).abs() <= tol;
            let mid = self.now + delta * T::lit(0.5);
            self.tracker.apply(&mut self.psi, mid, full && self.prev_full);
            self.plan.kinetic_step(&mut self.psi, delta, full);
            self.now = next;
            self.prev_full = full;
        }
        self.now = self.now.max(target);
        self.tracker.apply(&mut self.psi, self.now, false);
        self.prev_full = false;
    }

    fn advance_exact(&mut self, target: T) {
        let h0 = self.plan.kinetic_matrix().expect("exact route").clone();
        while self.now < target {
            let next = match self.tracker.next_jump_after(self.now) {
                Some(j) if j < target => j,
                _ => target,
            };
            let delta = next - self.now;
            let mut h = h0.clone();
            for (x, &w) in self.tracker.potential().iter().enumerate() {
                h[(x, x)] += C::new(w, T::zero());
            }
            let u = expm(&(h * C::new(T::zero(), -delta)));
            let v = u * nalgebra::DVector::from_column_slice(&self.psi);
            self.psi.copy_from_slice(v.as_slice());
            self.tracker.skip_to(next);
            self.now = next;
        }
    }
}

/// ψ_t from ψ_0 along (ω, path) with the plan's route and step.
pub fn propagate<T: Float>(
    psi0: &[C<T>],
    plan: &mut PropagatorPlan<T>,
    path: &NoisePath<T>,
    observable: &[T],
    g: T,
    t: T,
) -> Result<Vec<C<T>>, TrajectoryError> {
    path.check_interval(T::zero(), t)?;
    let mut tr = Trajectory::new(plan, path, observable, g, psi0);
    Ok(tr.advance_to(t)?.to_vec())
}
