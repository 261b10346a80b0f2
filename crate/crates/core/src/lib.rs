//! Self-testing of quantum states and measurements with trusted quantum inputs.
//!
//! The numerical layers ([`linalg`], [`tensor`], [`sdp`]) are generic over the
//! scalar field; the protocol layers work in double precision through the
//! aliases defined here.

pub mod effective;
pub mod error;
pub mod linalg;
pub mod network;
pub mod qobjects;
pub mod scalar;
pub mod sdp;
pub mod selftest;
pub mod telecert;
pub mod tensor;

pub use error::{Error, Result};
pub use scalar::{RealScalar, Scalar};

/// Double-precision complex number.
#[allow(non_camel_case_types)]
pub type c64 = num_complex::Complex<f64>;
/// Dense complex matrix in double precision.
pub type CMatrix = linalg::Matrix<c64>;
/// Dense real matrix in double precision.
pub type RMatrix = linalg::Matrix<f64>;
/// Complex operator with subsystem labels in double precision.
pub type Operator = tensor::LabeledOperator<c64>;
