//! Numerical kernels: dense matrices with SVD and rank, exact power series
//! for counting, and the seeded random stream used everywhere randomness is
//! needed.

mod matrix;
mod rng;
pub mod series;
mod svd;

pub use matrix::DenseMatrix;
pub use rng::Prng;
pub use series::IntegerSeries;
pub use svd::{rank, rank_with_tolerance, svd, Svd, DEFAULT_RANK_TOLERANCE};
