//! Isotropic position, isotropic constants, Ball bodies and central sections.

mod affine;
mod ball_body;
mod constants;
mod sections;

pub use affine::AffineMap;
pub use ball_body::{BallBody, RadialTable};
pub use constants::{empirical_isotropy, isotropic_constant_body, isotropic_constant_density, mean_and_covariance};
pub use sections::section_volume;
