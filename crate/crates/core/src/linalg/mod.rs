//! Dense linear algebra generic over [`Scalar`](crate::scalar::Scalar).

mod decomp;
mod eigen;
mod matrix;
mod svd;

pub use decomp::{pivoted_qr, Cholesky, PivotedQr};
pub use eigen::{eigen_residual, hermitian_eigen, hermitian_eigenvalues, hermitian_fn, psd_sqrt, HermitianEigen};
pub use matrix::{vec_inner, vec_norm, Matrix};
pub use svd::{numerical_rank, pinv, svd, PseudoInverse, Svd};
