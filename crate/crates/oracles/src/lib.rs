//! Slow, independent reference computations for the fast paths of `toric-core`.
//! Nothing here is used by the library or the CLI.

mod geometry;
mod gram;
mod hessian;
mod legendre;
mod montecarlo;
mod quad;

pub use geometry::{brute_lattice_count, convex_hull_2d, shoelace_area};
pub use gram::{full_gram_oracle, FullGram, GramOracleOptions};
pub use hessian::finite_difference_hessian_oracle;
pub use legendre::legendre_grid_oracle;
pub use montecarlo::{mc_integral_oracle, FanLaplaceSampler, McEstimate, MomentSampler, Sampler, Sech2Sampler};
pub use quad::{exp_sinh_rule, integrate_over_fan};
