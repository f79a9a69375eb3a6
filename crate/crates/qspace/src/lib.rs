//! Numerical laboratory for template estimation with Fréchet means in
//! quotient spaces under isometric group actions.
//!
//! The crate measures the consistency bias of the quotient-space Fréchet
//! mean by Monte Carlo, computes its lower and upper bounds in closed form,
//! evaluates the exact reference values that exist for the coordinate swap
//! and the rotation action, and cross-checks all three against each other.
//!
//! Modules:
//! - [`action`]: isometric group actions, registration, quotient distance.
//! - [`noise`]: seeded noise models with closed-form second moments.
//! - [`stream`]: deterministic chunked random streams (parallel-safe).
//! - [`estimators`]: Monte Carlo estimators and the max-max alternation.
//! - [`bounds`]: bias bound calculators.
//! - [`analytic`]: exact swap bias quadrature and rotation references.
//! - [`templates`]: named template generators.
//! - [`report`]: per-row experiment pipelines used by the CLI.

pub mod action;
pub mod analytic;
pub mod bounds;
pub mod error;
pub mod estimators;
pub mod noise;
pub mod point;
pub mod report;
pub mod stream;
pub mod templates;

mod quad;

pub use action::{ActionSpec, GroupElement};
pub use error::{Error, Result};
pub use estimators::EstimateWithCI;
pub use noise::NoiseSpec;
pub use point::Point;
pub use stream::SampleStream;
