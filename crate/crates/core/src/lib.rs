//! Unimodal bandit algorithms for online mono-partite matching.
//!
//! `2L` players are paired into `L` couples each round. Couple `{i, j}`
//! succeeds with probability `θ_i θ_j` and the learner observes one
//! Bernoulli outcome per played couple. The crate provides:
//!
//! * [`matchings`]: matchings, ordered matchings and the adjacent-couple
//!   swap neighborhood they are explored through;
//! * [`indices`]: Bernoulli KL divergence, the KL-UCB index and the
//!   simplified UCB index;
//! * [`policies`]: GRAB (criteria V1 and V2), exhaustive KL-CombUCB and a
//!   uniform random baseline;
//! * [`environment`]: the rank-1 Bernoulli environment and instance
//!   generators;
//! * [`oracle`]: brute-force checks of the structural properties the
//!   algorithms rely on, and gap constants;
//! * [`runner`]: seeded simulation, aggregation and CSV export.

pub mod environment;
pub mod error;
pub mod indices;
pub mod matchings;
pub mod oracle;
pub mod policies;
pub mod runner;

pub use error::{Error, Result};
