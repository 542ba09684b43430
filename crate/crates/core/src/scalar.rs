//! Scalar abstraction shared by every numerical routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + NumAssign + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into this scalar type.
    #[inline]
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex scalar over a [`Real`].
pub type C<T> = Complex<T>;

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> C<T> {
    Complex::new(re, im)
}

#[inline]
pub fn re<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

#[inline]
pub fn imag_unit<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// Square root on the branch with non-negative imaginary part.
///
/// The branch cut runs along the positive real axis, so the result jumps from
/// `+sqrt(x)` to `-sqrt(x)` when `z = x - i0` with `x > 0`. Physical inputs
/// (`k^2 + i*Gamma` with `Re Gamma >= 0`) always have `Im z >= 0` and never
/// see the jump.
pub fn sqrt_upper<T: Real>(z: C<T>) -> C<T> {
    let s = z.sqrt();
    if s.im < T::zero() || (s.im == T::zero() && s.re < T::zero()) {
        -s
    } else {
        s
    }
}

/// `e^{i x}` for complex `x`.
#[inline]
pub fn expi<T: Real>(x: C<T>) -> C<T> {
    (imag_unit::<T>() * x).exp()
}
