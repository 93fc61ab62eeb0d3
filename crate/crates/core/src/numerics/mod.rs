//! Dense linear algebra and small machine-learning kernels shared by the
//! rest of the crate.

mod eig;
mod kmeans;
mod matrix;
mod simplex;
mod solve;
mod svd;

pub use eig::{eig_sym, EigSymResult};
pub use kmeans::{kmeans, KMeansResult};
pub use matrix::{dist, dot, norm, sub_vec, DenseMatrix};
pub use simplex::project_simplex;
pub use solve::{lstsq, nnls, solve};
pub use svd::{svd_thin, ThinSvd};
