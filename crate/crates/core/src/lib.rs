//! Blind recovery of the mixing matrix in simplex-structured matrix
//! factorization `X = A S` through the maximum-volume ellipsoid inscribed in
//! the convex hull of the data.

// `!(x > 0.0)` is deliberate: it also rejects NaN. Index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cli;
pub mod dimred;
pub mod error;
pub mod hull;
pub mod io;
pub mod metrics;
pub mod mvie;
pub mod numerics;
pub mod pipeline;
pub mod recovery;
pub mod synth;

pub use error::{Error, Result};
