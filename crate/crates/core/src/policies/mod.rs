//! Online statistics, leader election and the matching policies.

mod baselines;
mod grab;
mod stats;

pub use baselines::{KlCombUcb, RandomPolicy, MAX_EXHAUSTIVE_COUPLES};
pub use grab::{v1_score, v2_score, Criterion, Grab, GrabDecision};
pub use stats::{g_argmax, greedy_pairs, LeaderStats, PairStats};

use crate::environment::Feedback;
use crate::error::Result;
use crate::matchings::{Matching, OrderedMatching};

/// What a policy plays in one round.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub matching: Matching,
    /// The elected leader, for policies that elect one.
    pub leader: Option<OrderedMatching>,
}

/// A sequential matching policy: recommend at round `t` (1-based), then
/// learn from the semi-bandit feedback of that round.
pub trait Policy {
    fn name(&self) -> &'static str;

    fn recommend(&mut self, t: u64) -> Decision;

    fn update(&mut self, decision: &Decision, feedback: &Feedback) -> Result<()>;
}
