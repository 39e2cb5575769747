//! Samplers, estimators and randomized volume algorithms for log-concave
//! and s-concave probability measures.
//!
//! Every randomized routine takes an [`RngStream`]; replica `k` of an
//! estimate always draws from substream `k`, so results do not depend on
//! the number of worker threads.

pub mod clt;
pub mod covariance;
pub mod distributions;
pub mod error;
pub mod isoperimetry;
pub mod isotropy;
pub mod moments;
pub mod numerics;
pub mod volume;

pub use distributions::{DistributionSpec, Family, Gauge, SampleBatch, Sampler};
pub use error::{Error, Result};
pub use isotropy::AffineMap;
pub use numerics::{Estimate, Flag, Matrix, RngStream};
pub use volume::{BodyDescriptor, Certificate, ConvexBody};
