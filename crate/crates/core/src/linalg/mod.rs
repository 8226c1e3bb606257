//! Dense linear algebra: QR, one-sided Jacobi SVD, randomized SVD, the
//! nonsymmetric eigenproblem and complex least squares.

mod dense;
mod eig;
mod pinv;
mod qr;
pub mod rng;
mod svd;

pub use dense::{ComplexMatrix, ComplexVector, DenseMatrix};
pub use eig::{eig, EigResult};
pub use pinv::pinv_apply;
pub use qr::{numerical_rank, pivoted_qr, qr};
pub use svd::{randomized_svd, svd, truncate, SvdResult};

/// Oversampling used by randomized SVD unless overridden.
pub const DEFAULT_OVERSAMPLE: usize = 10;
/// Power iterations used by randomized SVD unless overridden.
pub const DEFAULT_POWER_ITERS: usize = 2;
