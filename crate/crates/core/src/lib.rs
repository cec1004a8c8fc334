//! Toric metrized divisors as convex functions: polytopes, support functions,
//! Legendre–Fenchel conjugates, Monge–Ampère energies and the L² ball-volume
//! functionals of section spaces.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod metric;
pub mod linalg;
pub mod par;
pub mod quadrature;
pub mod rational;
pub mod reduce;
pub mod sections;
pub mod toric;

pub use error::{Error, Result};
pub use lattice::{pairing, Halfspace, Polytope};
pub use rational::Rat;
pub use toric::{Fan, StandardFan, ToricDivisor};
pub use metric::MetricFunction;
