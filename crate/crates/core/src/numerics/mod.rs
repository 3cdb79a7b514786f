//! Dense matrices, the SVD contract, order statistics and the inverse
//! standard-normal CDF.

mod matrix;
mod normal;
mod stats;
mod svd;
mod tsv;

pub use matrix::{BoolMatrix, DenseMatrix};
pub use normal::inverse_normal_cdf;
pub use stats::{median_all, median_in_place};
pub use svd::{svd, SvdFactors};

pub(crate) use svd::svd_matrix;
pub(crate) use tsv::format_value;
