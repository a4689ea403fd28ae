use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::environment::Feedback;
use crate::error::{Error, Result};
use crate::indices::IndexKind;
use crate::matchings::{Matching, Pair, PairTable};
use crate::oracle::enumerate_matchings;

use super::stats::PairStats;
use super::{Decision, Policy};

/// Largest couple count for which the arm set is enumerated.
pub const MAX_EXHAUSTIVE_COUPLES: usize = 6;

/// CombUCB1 with KL indices over the full set of matchings, using the
/// global round as the index clock.
#[derive(Clone, Debug)]
pub struct KlCombUcb {
    arms: Vec<Matching>,
    pairs: PairStats,
    index: IndexKind,
}

impl KlCombUcb {
    pub fn new(couples: usize) -> Result<Self> {
        if couples > MAX_EXHAUSTIVE_COUPLES {
            return Err(Error::TooLarge {
                l: couples,
                max: MAX_EXHAUSTIVE_COUPLES,
            });
        }
        Ok(KlCombUcb {
            arms: enumerate_matchings(couples)?,
            pairs: PairStats::new(2 * couples),
            index: IndexKind::KlUcb,
        })
    }

    pub fn arms(&self) -> &[Matching] {
        &self.arms
    }

    pub fn pair_stats(&self) -> &PairStats {
        &self.pairs
    }

    /// Optimistic arm for round `t`; ties go to the earliest enumerated arm.
    pub fn recommend_round(&self, t: u64) -> Matching {
        let players = self.pairs.players();
        let index = self.index;
        let pairs = &self.pairs;
        let q = PairTable::from_fn(
            players,
            |p: Pair| index.evaluate(pairs.mean(p), pairs.count(p), t.max(1)),
            0.0,
        );
        let mut best = 0;
        let mut best_key = (i32::MIN, f64::NEG_INFINITY);
        for (idx, arm) in self.arms.iter().enumerate() {
            let mut unexplored = 0;
            let mut total = 0.0;
            for &p in arm.pairs() {
                let v = *q.get(p);
                if v.is_infinite() {
                    unexplored += 1;
                } else {
                    total += v;
                }
            }
            if unexplored > best_key.0 || (unexplored == best_key.0 && total > best_key.1) {
                best_key = (unexplored, total);
                best = idx;
            }
        }
        self.arms[best].clone()
    }
}

impl Policy for KlCombUcb {
    fn name(&self) -> &'static str {
        "klcombucb"
    }

    fn recommend(&mut self, t: u64) -> Decision {
        Decision {
            matching: self.recommend_round(t),
            leader: None,
        }
    }

    fn update(&mut self, decision: &Decision, feedback: &Feedback) -> Result<()> {
        self.pairs.record_round(&decision.matching, feedback)
    }
}

/// Uniformly random matching each round.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    players: Vec<usize>,
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(couples: usize, seed: u64) -> Self {
        Self::with_rng(couples, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(couples: usize, rng: ChaCha8Rng) -> Self {
        RandomPolicy {
            players: (0..2 * couples).collect(),
            rng,
        }
    }

    pub fn draw(&mut self) -> Matching {
        self.players.shuffle(&mut self.rng);
        let couples = self
            .players
            .chunks(2)
            .map(|c| Pair::of(c[0], c[1]))
            .collect();
        Matching::from_couples_unchecked(couples)
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn recommend(&mut self, _t: u64) -> Decision {
        Decision {
            matching: self.draw(),
            leader: None,
        }
    }

    fn update(&mut self, decision: &Decision, feedback: &Feedback) -> Result<()> {
        if feedback.matches(&decision.matching) {
            Ok(())
        } else {
            Err(Error::FeedbackMismatch)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::Instance;
    use std::collections::HashMap;

    #[test]
    fn klcombucb_rejects_large_instances() {
        assert!(matches!(
            KlCombUcb::new(7),
            Err(Error::TooLarge { l: 7, max: 6 })
        ));
    }

    #[test]
    fn klcombucb_has_three_arms_for_two_couples() {
        assert_eq!(KlCombUcb::new(2).unwrap().arms().len(), 3);
    }

    #[test]
    fn klcombucb_explores_every_pair_first() {
        let mut policy = KlCombUcb::new(2).unwrap();
        let mut seen = Vec::new();
        for t in 1..=3 {
            let d = policy.recommend(t);
            seen.push(d.matching.clone());
            let fb = Feedback::for_matching(&d.matching, &[true, true]).unwrap();
            policy.update(&d, &fb).unwrap();
        }
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn klcombucb_converges_on_exact_stats() {
        let inst = Instance::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let mut policy = KlCombUcb::new(2).unwrap();
        // Feed exact success counts for every pair.
        let pulls = 1_000_000u64;
        for p in crate::matchings::all_pairs(4) {
            let wins = (inst.pair_probability(p) * pulls as f64).round() as u64;
            for n in 0..pulls {
                policy.pairs.record(p, n < wins);
            }
        }
        assert_eq!(policy.recommend_round(100), *inst.optimal_matching());
    }

    #[test]
    fn random_policy_is_uniform_over_three_matchings() {
        let mut policy = RandomPolicy::new(2, 17);
        let n = 100_000;
        let mut counts: HashMap<Matching, usize> = HashMap::new();
        for _ in 0..n {
            *counts.entry(policy.draw()).or_default() += 1;
        }
        assert_eq!(counts.len(), 3);
        let expected = n as f64 / 3.0;
        let chi2: f64 = counts
            .values()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // 99.9% quantile of chi-square with 2 degrees of freedom.
        assert!(chi2 < 13.82, "chi2 {chi2}");
        let sigma = (n as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for &c in counts.values() {
            assert!((c as f64 - expected).abs() < 3.0 * sigma);
        }
    }

    #[test]
    fn random_policy_is_reproducible() {
        let mut a = RandomPolicy::new(4, 5);
        let mut b = RandomPolicy::new(4, 5);
        for _ in 0..100 {
            let x = a.draw();
            assert_eq!(x, b.draw());
            assert!(Matching::from_couples(x.pairs().to_vec()).is_ok());
        }
    }
}
