//! Scalar abstractions.
//!
//! Linear algebra in this crate is written once over [`Scalar`], which covers
//! real floats and complex numbers built on them. [`RealScalar`] is the
//! underlying real field (`f32` or `f64`).

use num_complex::Complex;
use num_traits::{Float, FromPrimitive, Num, NumAssign, Zero};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::ops::Neg;

/// Real floating point field: `f32` or `f64`.
pub trait RealScalar:
    Float
    + FromPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
    + Scalar<Real = Self>
{
    /// Converts an `f64` literal into this type.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in real scalar")
    }
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}

/// Field element of a dense matrix: a real float or a complex number.
pub trait Scalar:
    Copy + PartialEq + Debug + Send + Sync + 'static + Num + NumAssign + Neg<Output = Self> + Sum
{
    type Real: RealScalar;

    fn conj(self) -> Self;
    fn re(self) -> Self::Real;
    fn im(self) -> Self::Real;
    /// |z|
    fn modulus(self) -> Self::Real;
    /// |z|²
    fn norm_sqr(self) -> Self::Real;
    fn from_real(r: Self::Real) -> Self;
    /// Builds `re + i·im`; the imaginary part is dropped for real scalars.
    fn from_parts(re: Self::Real, im: Self::Real) -> Self;
    fn scale(self, r: Self::Real) -> Self;
    fn is_finite(self) -> bool;
    /// Unit-modulus phase `z/|z|`, or one when `z == 0`.
    fn phase(self) -> Self {
        let m = self.modulus();
        if m == Self::Real::zero() {
            Self::one()
        } else {
            self.scale(m.recip())
        }
    }
    /// True for complex fields.
    const IS_COMPLEX: bool;
}

macro_rules! impl_real_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            type Real = $t;
            const IS_COMPLEX: bool = false;
            #[inline]
            fn conj(self) -> Self {
                self
            }
            #[inline]
            fn re(self) -> Self {
                self
            }
            #[inline]
            fn im(self) -> Self {
                0.0
            }
            #[inline]
            fn modulus(self) -> Self {
                self.abs()
            }
            #[inline]
            fn norm_sqr(self) -> Self {
                self * self
            }
            #[inline]
            fn from_real(r: Self) -> Self {
                r
            }
            #[inline]
            fn from_parts(re: Self, _im: Self) -> Self {
                re
            }
            #[inline]
            fn scale(self, r: Self) -> Self {
                self * r
            }
            #[inline]
            fn is_finite(self) -> bool {
                <$t>::is_finite(self)
            }
        }
    };
}

impl_real_scalar!(f32);
impl_real_scalar!(f64);

macro_rules! impl_complex_scalar {
    ($t:ty) => {
        impl Scalar for Complex<$t> {
            type Real = $t;
            const IS_COMPLEX: bool = true;
            #[inline]
            fn conj(self) -> Self {
                Complex::conj(&self)
            }
            #[inline]
            fn re(self) -> $t {
                self.re
            }
            #[inline]
            fn im(self) -> $t {
                self.im
            }
            #[inline]
            fn modulus(self) -> $t {
                self.re.hypot(self.im)
            }
            #[inline]
            fn norm_sqr(self) -> $t {
                self.re * self.re + self.im * self.im
            }
            #[inline]
            fn from_real(r: $t) -> Self {
                Complex::new(r, 0.0)
            }
            #[inline]
            fn from_parts(re: $t, im: $t) -> Self {
                Complex::new(re, im)
            }
            #[inline]
            fn scale(self, r: $t) -> Self {
                Complex::new(self.re * r, self.im * r)
            }
            #[inline]
            fn is_finite(self) -> bool {
                self.re.is_finite() && self.im.is_finite()
            }
        }
    };
}

impl_complex_scalar!(f32);
impl_complex_scalar!(f64);
