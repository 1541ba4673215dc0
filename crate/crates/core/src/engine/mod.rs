//! Exact evaluation of the stationary supremum law and the scale-function
//! identities built on it.

mod laplace;
mod local_sum;
mod scale;
mod stationary;

pub use laplace::{laplace_exponent, right_inverse, supremum_density_transform};
pub use scale::{ExitProblem, QScale};
pub use stationary::{build_stationary, Grid, StationaryTable};
