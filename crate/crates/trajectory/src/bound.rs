use fluxlat_model::LatticeSpec;
use fluxlat_numeric::{Real, C};

/// ‖(1+|X|)ψ‖ with |X| the Euclidean length of the minimal image.
pub fn weighted_norm<T: Real>(psi: &[C<T>], lattice: &LatticeSpec) -> T {
    psi.iter()
        .enumerate()
        .fold(T::zero(), |a, (x, z)| {
            let r = lattice.position(x).iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt();
            let w = T::one() + T::lit(r);
            a + w * w * z.norm_sqr()
        })
        .sqrt()
}

/// e^{mt}‖(1+|X|)ψ₀‖ − ‖(1+|X|)ψ_t‖; never negative for a correct propagator.
pub fn check_apriori_bound<T: Real>(psi0: &[C<T>], psi_t: &[C<T>], lattice: &LatticeSpec, m: T, t: T) -> T {
    (m * t).exp() * weighted_norm(psi0, lattice) - weighted_norm(psi_t, lattice)
}
