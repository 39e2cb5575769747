//! Oracle convex bodies, hit-and-run, rounding, multiphase volume and
//! absolute-convex-hull volume ratios.

mod body;
mod hull;
mod multiphase;
mod rounding;
mod walk;

pub use body::{
    lp_ball_coordinate_variance, simplex_moments, BodyDescriptor, Certificate, ConvexBody, Halfspace, Separation,
};
pub use hull::{hull_membership, hull_volume_ratio, hull_volume_ratio_for, HullMembership, HullRatio};
pub use multiphase::{volume_multiphase, PhaseReport, VolumeConfig, VolumeEstimate};
pub use rounding::{round_body, Rounding};
pub use walk::{hit_and_run_step, HitAndRun, CHORD_TOL};
