use crate::error::NoiseError;
use fluxlat_numeric::Real;
use nalgebra::{DMatrix, DVector};

/// Single-site chain: labels, generator Q (rows sum to 0) and observable v.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteChain<T: Real> {
    pub labels: Vec<String>,
    pub rates: DMatrix<T>,
    pub observable: Vec<T>,
}

impl<T: Real> SiteChain<T> {
    /// Symmetric two-state chain flipping at rate γ, v = ±1.
    pub fn telegraph(gamma: T) -> Self {
        Self {
            labels: vec!["+".into(), "-".into()],
            rates: DMatrix::from_row_slice(2, 2, &[-gamma, gamma, gamma, -gamma]),
            observable: vec![T::one(), -T::one()],
        }
    }

    pub fn states(&self) -> usize {
        self.rates.nrows()
    }

    /// Structure checks plus the mean-zero and |v| ≤ 1 conditions on v.
    pub fn validate(&self) -> Result<Vec<T>, NoiseError> {
        let pi = stationary_distribution(&self.rates)?;
        let s = self.states();
        if self.observable.len() != s {
            return Err(NoiseError::ObservableLength {
                got: self.observable.len(),
                states: s,
            });
        }
        for (state, &v) in self.observable.iter().enumerate() {
            if v.abs() > T::one() + T::lit(1e-14) {
                return Err(NoiseError::ObservableRange {
                    state,
                    value: v.as_f64(),
                });
            }
        }
        let mean = pi.iter().zip(&self.observable).fold(T::zero(), |a, (&p, &v)| a + p * v);
        if mean.abs() > T::lit(1e-12) {
            return Err(NoiseError::ObservableMean { mean: mean.as_f64() });
        }
        Ok(pi)
    }

    /// Detailed balance π_i Q_ij = π_j Q_ji.
    pub fn is_reversible(&self, pi: &[T]) -> bool {
        let s = self.states();
        let scale = self.rates.iter().fold(T::zero(), |a, &x| a.max(x.abs()));
        for i in 0..s {
            for j in 0..s {
                let d = pi[i] * self.rates[(i, j)] - pi[j] * self.rates[(j, i)];
                if d.abs() > T::lit(1e-13) * scale.max(T::one()) {
                    return false;
                }
            }
        }
        true
    }
}

fn check_generator<T: Real>(q: &DMatrix<T>) -> Result<(), NoiseError> {
    let (r, c) = q.shape();
    if r != c || r < 2 {
        return Err(NoiseError::Shape { rows: r, cols: c });
    }
    let scale = q.iter().fold(T::zero(), |a, &x| a.max(x.abs())).max(T::one());
    for i in 0..r {
        let mut sum = T::zero();
        for j in 0..r {
            sum += q[(i, j)];
            if i != j && q[(i, j)] < T::zero() {
                return Err(NoiseError::NegativeRate {
                    row: i,
                    col: j,
                    value: q[(i, j)].as_f64(),
                });
            }
        }
        if sum.abs() > T::lit(1e-14) * scale * T::from_usize_lossy(r) {
            return Err(NoiseError::RowSum { row: i, sum: sum.as_f64() });
        }
    }
    Ok(())
}

fn reach<T: Real>(q: &DMatrix<T>, start: usize, transpose: bool) -> Vec<bool> {
    let n = q.nrows();
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(i) = stack.pop() {
        for j in 0..n {
            let rate = if transpose { q[(j, i)] } else { q[(i, j)] };
            if i != j && rate > T::zero() && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen
}

/// π with πᵀQ = 0, Σπ = 1, π > 0. Fails on reducible chains.
pub fn stationary_distribution<T: Real>(q: &DMatrix<T>) -> Result<Vec<T>, NoiseError> {
    check_generator(q)?;
    let n = q.nrows();
    let fwd = reach(q, 0, false);
    let bwd = reach(q, 0, true);
    let class: Vec<usize> = (0..n).filter(|&i| !(fwd[i] && bwd[i])).collect();
    if !class.is_empty() {
        return Err(NoiseError::Reducible { class });
    }
    let mut a = q.transpose();
    for j in 0..n {
        a[(n - 1, j)] = T::one();
    }
    let mut rhs = DVector::<T>::zeros(n);
    rhs[n - 1] = T::one();
    let pi = a.lu().solve(&rhs).ok_or(NoiseError::Singular)?;
    Ok(pi.iter().copied().collect())
}
