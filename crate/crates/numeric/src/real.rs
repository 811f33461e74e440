use nalgebra as na;
use num_traits as nt;

/// Complex number over a generic real scalar.
pub type C<T> = num_complex::Complex<T>;

/// Real scalar used throughout the workspace (implemented for `f32` and `f64`).
pub trait Real:
    na::RealField + Copy + nt::FloatConst + nt::FromPrimitive + nt::ToPrimitive + Default
{
    /// Literal conversion from f64.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as nt::FromPrimitive>::from_f64(x).expect("representable literal")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::lit(n as f64)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        nt::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }

    fn machine_eps() -> Self;
}

macro_rules! impl_real {
    ($f:ty) => {
        impl Real for $f {
            #[inline]
            fn machine_eps() -> Self {
                <$f>::EPSILON
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

/// e^{iθ}
#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    C::new(theta.cos(), theta.sin())
}

#[inline]
pub fn czero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

#[inline]
pub fn cone<T: Real>() -> C<T> {
    C::new(T::one(), T::zero())
}

#[inline]
pub fn ci<T: Real>() -> C<T> {
    C::new(T::zero(), T::one())
}

#[inline]
pub fn cre<T: Real>(x: T) -> C<T> {
    C::new(x, T::zero())
}

#[inline]
pub fn cabs<T: Real>(z: C<T>) -> T {
    z.re.hypot(z.im)
}
