//! Rank-1 Bernoulli matching environment and instance generators.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matchings::{optimum_leader, rank_players, Matching, OrderedMatching, Pair, PairTable};

/// Slack allowed on generator constraints so that decimal parameters such
/// as `(L - 1) * 0.1 <= 1` are not rejected by rounding.
const CONSTRAINT_SLACK: f64 = 1e-12;

/// `2L` players with success rates `theta`; couple `{i, j}` succeeds with
/// probability `theta[i] * theta[j]`.
#[derive(Clone, Debug)]
pub struct Instance {
    theta: Vec<f64>,
    rho: PairTable<f64>,
    optimal: Matching,
    optimal_value: f64,
    leader: Option<OrderedMatching>,
}

impl Instance {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.len() < 2 || !theta.len().is_multiple_of(2) {
            return Err(Error::OddPlayerCount(theta.len()));
        }
        if let Some(&bad) = theta.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::OutOfDomain {
                name: "theta",
                value: bad,
            });
        }
        let players = theta.len();
        let rho = PairTable::from_fn(players, |p| theta[p.lo()] * theta[p.hi()], 0.0);
        // Pairing adjacent ranks is optimal even with ties.
        let order = rank_players(&theta);
        let optimal = Matching::from_couples_unchecked(
            order.chunks(2).map(|c| Pair::of(c[0], c[1])).collect(),
        );
        let optimal_value = optimal.total(&rho);
        let leader = optimum_leader(&theta).ok();
        Ok(Instance {
            theta,
            rho,
            optimal,
            optimal_value,
            leader,
        })
    }

    /// Couple `i` (0-based) gets `(L - 1 - i) * delta` for both players.
    /// Requires `0 < (L - 1) * delta <= 1`.
    pub fn experiment_1(l: usize, delta: f64) -> Result<Self> {
        let span = (l as f64 - 1.0) * delta;
        if l < 2 || !(span > 0.0 && span <= 1.0 + CONSTRAINT_SLACK) {
            return Err(Error::InvalidInstance(format!(
                "experiment 1 needs 0 < (L-1)*delta <= 1, got L={l}, delta={delta}"
            )));
        }
        let theta = (0..l)
            .flat_map(|k| {
                let v = ((l - 1 - k) as f64 * delta).min(1.0);
                [v, v]
            })
            .collect();
        Self::new(theta)
    }

    /// Couple `i` (0-based) gets `mu + ((L - 1) / 2 - i) * delta` for both
    /// players, so the mean of `theta` is `mu` and consecutive couples are
    /// `delta` apart. Requires `mu - (L - 1) delta >= 0` and, unless
    /// `relax_upper` is set, `mu + (L + 1) delta <= 1`.
    pub fn experiment_2(l: usize, mu: f64, delta: f64, relax_upper: bool) -> Result<Self> {
        if l < 1 || delta.is_nan() || delta <= 0.0 {
            return Err(Error::InvalidInstance(format!(
                "experiment 2 needs L >= 1 and delta > 0, got L={l}, delta={delta}"
            )));
        }
        let lower = mu - (l as f64 - 1.0) * delta;
        if lower < -CONSTRAINT_SLACK {
            return Err(Error::InvalidInstance(format!(
                "experiment 2 needs mu - (L-1)*delta >= 0, got {lower}"
            )));
        }
        let upper = mu + (l as f64 + 1.0) * delta;
        if !relax_upper && upper > 1.0 + CONSTRAINT_SLACK {
            return Err(Error::InvalidInstance(format!(
                "experiment 2 needs mu + (L+1)*delta <= 1, got {upper}"
            )));
        }
        let centre = (l as f64 - 1.0) / 2.0;
        let theta = (0..l)
            .flat_map(|k| {
                let v = (mu + (centre - k as f64) * delta).clamp(0.0, 1.0);
                [v, v]
            })
            .collect();
        Self::new(theta)
    }

    /// Number of couples `L`.
    pub fn couples(&self) -> usize {
        self.theta.len() / 2
    }

    pub fn players(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn rho(&self) -> &PairTable<f64> {
        &self.rho
    }

    pub fn pair_probability(&self, pair: Pair) -> f64 {
        *self.rho.get(pair)
    }

    /// The optimal matching (adjacent ranks paired).
    pub fn optimal_matching(&self) -> &Matching {
        &self.optimal
    }

    /// Expected reward of the optimal matching.
    pub fn optimal_value(&self) -> f64 {
        self.optimal_value
    }

    /// The optimum leader, when the inter-pair strict order holds.
    pub fn optimum_leader(&self) -> Option<&OrderedMatching> {
        self.leader.as_ref()
    }

    /// Expected reward of `m`.
    pub fn expected_reward(&self, m: &Matching) -> f64 {
        m.total(&self.rho)
    }

    /// Expected per-round regret of playing `m`.
    pub fn pseudo_regret(&self, m: &Matching) -> f64 {
        (self.optimal_value - self.expected_reward(m)).max(0.0)
    }

    /// One independent Bernoulli draw per couple of `m`.
    pub fn sample_feedback<R: Rng + ?Sized>(&self, m: &Matching, rng: &mut R) -> Feedback {
        let outcomes = m
            .pairs()
            .iter()
            .map(|&p| (p, rng.gen_bool(*self.rho.get(p))))
            .collect();
        Feedback { outcomes }
    }
}

/// Semi-bandit feedback: one success flag per played couple.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Feedback {
    outcomes: Vec<(Pair, bool)>,
}

impl Feedback {
    pub fn new(outcomes: Vec<(Pair, bool)>) -> Self {
        Feedback { outcomes }
    }

    /// Builds feedback for `m` from outcomes listed in `m`'s pair order.
    pub fn for_matching(m: &Matching, outcomes: &[bool]) -> Result<Self> {
        if outcomes.len() != m.len() {
            return Err(Error::FeedbackMismatch);
        }
        Ok(Feedback {
            outcomes: m
                .pairs()
                .iter()
                .copied()
                .zip(outcomes.iter().copied())
                .collect(),
        })
    }

    pub fn outcomes(&self) -> &[(Pair, bool)] {
        &self.outcomes
    }

    pub fn successes(&self) -> usize {
        self.outcomes.iter().filter(|(_, won)| *won).count()
    }

    /// Whether the feedback covers exactly the couples of `m`.
    pub fn matches(&self, m: &Matching) -> bool {
        self.outcomes.len() == m.len() && self.outcomes.iter().all(|(p, _)| m.contains_pair(*p))
    }
}
