//! Numerical building blocks: the generic [`Real`] scalar, dense helpers on
//! complex matrices, a Padé/Krylov matrix exponential, CSR storage, GMRES,
//! fit/statistics helpers and keyed random streams.

pub mod dense;
pub mod expm;
pub mod gmres;
pub mod real;
pub mod rng;
pub mod sparse;
pub mod stats;

pub use real::{cabs, ci, cis, cone, cre, czero, Real, C};

pub type CMatrix<T> = nalgebra::DMatrix<C<T>>;
pub type CVector<T> = nalgebra::DVector<C<T>>;

/// f64 instantiations.
pub type CMat = CMatrix<f64>;
pub type CVec = CVector<f64>;
pub type Csr = sparse::CsrMatrix<f64>;
