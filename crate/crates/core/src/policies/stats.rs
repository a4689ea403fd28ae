use std::collections::HashMap;

use crate::environment::Feedback;
use crate::error::{Error, Result};
use crate::matchings::{Matching, OrderedMatching, Pair, PairTable};

/// Per-pair pull counts and success sums, with cached empirical means.
/// The mean of a pair that was never pulled is 0.
#[derive(Clone, Debug)]
pub struct PairStats {
    counts: PairTable<u64>,
    successes: PairTable<u64>,
    means: PairTable<f64>,
    pulls: u64,
}

impl PairStats {
    pub fn new(players: usize) -> Self {
        PairStats {
            counts: PairTable::new(players, 0),
            successes: PairTable::new(players, 0),
            means: PairTable::new(players, 0.0),
            pulls: 0,
        }
    }

    pub fn players(&self) -> usize {
        self.counts.players()
    }

    #[inline]
    pub fn count(&self, pair: Pair) -> u64 {
        *self.counts.get(pair)
    }

    #[inline]
    pub fn successes(&self, pair: Pair) -> u64 {
        *self.successes.get(pair)
    }

    #[inline]
    pub fn mean(&self, pair: Pair) -> f64 {
        *self.means.get(pair)
    }

    pub fn means(&self) -> &PairTable<f64> {
        &self.means
    }

    /// Sum of pull counts over all pairs.
    pub fn total_pulls(&self) -> u64 {
        self.pulls
    }

    pub fn record(&mut self, pair: Pair, success: bool) {
        let count = self.counts.get_mut(pair);
        *count += 1;
        let count = *count;
        let wins = self.successes.get_mut(pair);
        *wins += success as u64;
        let wins = *wins;
        self.means.set(pair, wins as f64 / count as f64);
        self.pulls += 1;
    }

    /// Records one round of feedback for `played`.
    pub fn record_round(&mut self, played: &Matching, feedback: &Feedback) -> Result<()> {
        if !feedback.matches(played) {
            return Err(Error::FeedbackMismatch);
        }
        for &(pair, success) in feedback.outcomes() {
            self.record(pair, success);
        }
        Ok(())
    }
}

/// How many rounds each ordered matching has been elected leader.
#[derive(Clone, Debug, Default)]
pub struct LeaderStats {
    counts: HashMap<OrderedMatching, u64>,
    rounds: u64,
}

impl LeaderStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self, leader: &OrderedMatching) -> u64 {
        self.counts.get(leader).copied().unwrap_or(0)
    }

    pub fn record(&mut self, leader: &OrderedMatching) {
        match self.counts.get_mut(leader) {
            Some(count) => *count += 1,
            None => {
                self.counts.insert(leader.clone(), 1);
            }
        }
        self.rounds += 1;
    }

    /// Number of recorded elections; equals the sum of all counts.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn distinct_leaders(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&OrderedMatching, u64)> {
        self.counts.iter().map(|(k, &v)| (k, v))
    }
}

/// Greedy pairing of `players`: repeatedly takes the remaining pair with
/// the largest value, ties going to the lexicographically smallest pair.
pub fn greedy_pairs(values: &PairTable<f64>, players: &[usize]) -> Result<Vec<Pair>> {
    if !players.len().is_multiple_of(2) {
        return Err(Error::OddPlayerCount(players.len()));
    }
    let mut remaining = players.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    if remaining.len() != players.len() {
        let dup = players
            .iter()
            .enumerate()
            .find(|(i, p)| players[..*i].contains(p))
            .map(|(_, &p)| p)
            .unwrap_or_default();
        return Err(Error::DuplicatePlayer(dup));
    }
    if let Some(&player) = remaining.iter().find(|&&p| p >= values.players()) {
        return Err(Error::PlayerOutOfRange {
            player,
            players: values.players(),
        });
    }
    Ok(greedy_sorted(values, remaining))
}

fn greedy_sorted(values: &PairTable<f64>, mut remaining: Vec<usize>) -> Vec<Pair> {
    let mut out = Vec::with_capacity(remaining.len() / 2);
    while remaining.len() >= 2 {
        let mut best = (0, 1);
        let mut best_value = f64::NEG_INFINITY;
        for a in 0..remaining.len() {
            for b in a + 1..remaining.len() {
                let v = *values.get(Pair::of(remaining[a], remaining[b]));
                if v > best_value {
                    best_value = v;
                    best = (a, b);
                }
            }
        }
        out.push(Pair::of(remaining[best.0], remaining[best.1]));
        // b > a, so removing b first keeps a's position.
        remaining.remove(best.1);
        remaining.remove(best.0);
    }
    out
}

/// Leader election over all players of `values`: the greedy
/// approximation of the ordered matching maximizing the summed values.
pub fn g_argmax(values: &PairTable<f64>) -> OrderedMatching {
    let players = values.players();
    debug_assert!(players.is_multiple_of(2));
    OrderedMatching::from_couples_unchecked(greedy_sorted(values, (0..players).collect()))
}
