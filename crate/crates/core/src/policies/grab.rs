use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::environment::Feedback;
use crate::error::{Error, Result};
use crate::indices::IndexKind;
use crate::matchings::{Matching, OrderedMatching, Pair, SwapDescriptor};

use super::stats::{g_argmax, LeaderStats, PairStats};
use super::{Decision, Policy};

/// Candidate scoring rule used when the leader is not forced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Criterion {
    /// Optimistic total value of the candidate, relative to the leader.
    V1,
    /// Clamped optimistic gain of replacing one member of the upper
    /// swapped couple.
    V2,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Criterion::V1 => "v1",
            Criterion::V2 => "v2",
        })
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "v1" | "V1" => Ok(Criterion::V1),
            "v2" | "V2" => Ok(Criterion::V2),
            other => Err(Error::Config(format!("unknown criterion {other:?}"))),
        }
    }
}

/// `sum(gained) - sum(lost)` where infinite indices are compared by count
/// first: one more unexplored pair on the gained side wins outright.
fn optimistic_gain(gained: &[f64], lost: &[f64]) -> f64 {
    let mut infinite = 0i32;
    let mut finite = 0.0;
    for &v in gained {
        if v.is_infinite() {
            infinite += 1;
        } else {
            finite += v;
        }
    }
    for &v in lost {
        if v.is_infinite() {
            infinite -= 1;
        } else {
            finite -= v;
        }
    }
    match infinite.cmp(&0) {
        Ordering::Greater => f64::INFINITY,
        Ordering::Less => f64::NEG_INFINITY,
        Ordering::Equal => finite,
    }
}

/// V1 score of `candidate` against the leader: summed index over the
/// candidate's couples minus that of the leader's couples. Only the (at
/// most four) couples in the symmetric difference are evaluated, so the
/// leader itself scores 0.
pub fn v1_score<Q: Fn(Pair) -> f64>(candidate: &Matching, leader: &OrderedMatching, q: Q) -> f64 {
    let current = leader.set();
    let gained: Vec<f64> = candidate.pairs_not_in(&current).map(&q).collect();
    let lost: Vec<f64> = current.pairs_not_in(candidate).map(&q).collect();
    optimistic_gain(&gained, &lost)
}

fn v1_swap_score<Q: Fn(Pair) -> f64>(d: SwapDescriptor, leader: &OrderedMatching, q: &Q) -> f64 {
    let (upper, lower) = leader.swapped_couples(d);
    let old = leader.couples();
    optimistic_gain(&[q(upper), q(lower)], &[q(old[d.k]), q(old[d.k + 1])])
}

/// V2 score of the neighbor reached by `d`. With `{i, i'}` couple `k` and
/// `{j, j'}` couple `k + 1` (`i = d.e1`, `j = d.e2`), the score is
/// `max(0, q{i,j'} - q{i,i'}, q{j,i'} - q{i,i'})`.
pub fn v2_score<Q: Fn(Pair) -> f64>(
    d: SwapDescriptor,
    leader: &OrderedMatching,
    q: Q,
) -> Result<f64> {
    let couples = leader.couples();
    if d.k + 1 >= couples.len() || !couples[d.k].contains(d.e1) || !couples[d.k + 1].contains(d.e2)
    {
        return Err(Error::InvalidSwap(format!(
            "({}, {}, {}) is not a swap of {leader}",
            d.k, d.e1, d.e2
        )));
    }
    Ok(v2_swap_score(d, leader, &q))
}

fn v2_swap_score<Q: Fn(Pair) -> f64>(d: SwapDescriptor, leader: &OrderedMatching, q: &Q) -> f64 {
    let couples = leader.couples();
    let (i, j) = (d.e1, d.e2);
    let i_mate = couples[d.k].partner(i).expect("valid descriptor");
    let j_mate = couples[d.k + 1].partner(j).expect("valid descriptor");
    let baseline = q(Pair::of(i, i_mate));
    let first = optimistic_gain(&[q(Pair::of(i, j_mate))], &[baseline]);
    let second = optimistic_gain(&[q(Pair::of(j, i_mate))], &[baseline]);
    0.0f64.max(first).max(second)
}

/// One GRAB recommendation with its diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct GrabDecision {
    pub matching: Matching,
    pub leader: OrderedMatching,
    /// Elections of the leader before this round.
    pub leader_count: u64,
    /// Whether the leader's own matching was played by the periodic rule.
    pub forced: bool,
    /// Scores of the leader (first, always 0) and of its neighbors in
    /// enumeration order; empty when `forced`.
    pub scores: Vec<f64>,
    /// Index into `scores` of the played candidate (0 is the leader).
    pub chosen: usize,
}

/// GRAB for mono-partite matching, with criterion V1 (GRAB) or V2 (GRAB+).
#[derive(Clone, Debug)]
pub struct Grab {
    couples: usize,
    criterion: Criterion,
    index: IndexKind,
    pairs: PairStats,
    leaders: LeaderStats,
}

impl Grab {
    pub fn new(couples: usize, criterion: Criterion, index: IndexKind) -> Result<Self> {
        if couples < 1 {
            return Err(Error::Config("GRAB needs at least one couple".into()));
        }
        Ok(Grab {
            couples,
            criterion,
            index,
            pairs: PairStats::new(2 * couples),
            leaders: LeaderStats::new(),
        })
    }

    pub fn criterion(&self) -> Criterion {
        self.criterion
    }

    pub fn index_kind(&self) -> IndexKind {
        self.index
    }

    pub fn pair_stats(&self) -> &PairStats {
        &self.pairs
    }

    pub fn leader_stats(&self) -> &LeaderStats {
        &self.leaders
    }

    /// Completed rounds.
    pub fn rounds(&self) -> u64 {
        self.leaders.rounds()
    }

    /// The leader this state would elect now.
    pub fn elect(&self) -> OrderedMatching {
        g_argmax(self.pairs.means())
    }

    /// Recommendation for round `t >= 1`.
    pub fn recommend_round(&self, t: u64) -> GrabDecision {
        let leader = self.elect();
        let leader_count = self.leaders.count(&leader);
        let period = 2 * self.couples as u64 - 1;
        if leader_count.is_multiple_of(period) || self.couples < 2 {
            return GrabDecision {
                matching: leader.set(),
                leader,
                leader_count,
                forced: true,
                scores: Vec::new(),
                chosen: 0,
            };
        }

        let clock = match self.index {
            IndexKind::KlUcb => leader_count + 1,
            IndexKind::SimpleUcb => t.max(1),
        };
        let index = self.index;
        let pairs = &self.pairs;
        let q = |p: Pair| index.evaluate(pairs.mean(p), pairs.count(p), clock);

        let mut scores = Vec::with_capacity(2 * self.couples - 1);
        scores.push(0.0);
        let mut best = 0;
        let mut best_score = 0.0;
        let mut best_swap = None;
        for k in 0..self.couples - 1 {
            let upper = leader.couples()[k];
            let lower = leader.couples()[k + 1];
            for e2 in [lower.lo(), lower.hi()] {
                let d = SwapDescriptor::new(k, upper.lo(), e2);
                let score = match self.criterion {
                    Criterion::V1 => v1_swap_score(d, &leader, &q),
                    Criterion::V2 => v2_swap_score(d, &leader, &q),
                };
                scores.push(score);
                if score > best_score {
                    best_score = score;
                    best = scores.len() - 1;
                    best_swap = Some(d);
                }
            }
        }
        let matching = match best_swap {
            Some(d) => leader.swap(d).expect("enumerated swap is valid").set(),
            None => leader.set(),
        };
        GrabDecision {
            matching,
            leader,
            leader_count,
            forced: false,
            scores,
            chosen: best,
        }
    }

    /// Records the round: pair statistics for the played couples, and one
    /// more election of `leader` whichever candidate was played.
    pub fn observe(
        &mut self,
        played: &Matching,
        feedback: &Feedback,
        leader: &OrderedMatching,
    ) -> Result<()> {
        self.pairs.record_round(played, feedback)?;
        self.leaders.record(leader);
        Ok(())
    }
}

impl Policy for Grab {
    fn name(&self) -> &'static str {
        match self.criterion {
            Criterion::V1 => "grab",
            Criterion::V2 => "grab-plus",
        }
    }

    fn recommend(&mut self, t: u64) -> Decision {
        let d = self.recommend_round(t);
        Decision {
            matching: d.matching,
            leader: Some(d.leader),
        }
    }

    fn update(&mut self, decision: &Decision, feedback: &Feedback) -> Result<()> {
        let leader = decision
            .leader
            .as_ref()
            .ok_or_else(|| Error::Config("GRAB decision without a leader".into()))?;
        self.observe(&decision.matching, feedback, leader)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matchings::PairTable;
    use approx::assert_abs_diff_eq;

    fn om(pairs: &[(usize, usize)]) -> OrderedMatching {
        OrderedMatching::from_pairs(pairs).unwrap()
    }

    fn m(pairs: &[(usize, usize)]) -> Matching {
        Matching::new(pairs, pairs.len()).unwrap()
    }

    fn q_table(players: usize, entries: &[((usize, usize), f64)]) -> PairTable<f64> {
        let mut t = PairTable::new(players, 0.0);
        for &((a, b), v) in entries {
            t.set(Pair::of(a, b), v);
        }
        t
    }

    #[test]
    fn v1_score_of_leader_is_zero() {
        let leader = om(&[(0, 1), (2, 3)]);
        let q = q_table(4, &[((0, 1), 0.5), ((2, 3), 0.4)]);
        assert_eq!(v1_score(&leader.set(), &leader, |p| *q.get(p)), 0.0);
    }

    #[test]
    fn v1_score_four_term_difference() {
        let leader = om(&[(0, 1), (2, 3)]);
        let q = q_table(
            4,
            &[((1, 2), 0.9), ((0, 3), 0.2), ((0, 1), 0.5), ((2, 3), 0.4)],
        );
        let s = v1_score(&m(&[(1, 2), (0, 3)]), &leader, |p| *q.get(p));
        assert_abs_diff_eq!(s, 0.2, epsilon = 1e-12);
    }

    #[test]
    fn v1_infinite_index_dominates() {
        let leader = om(&[(0, 1), (2, 3)]);
        let q = q_table(
            4,
            &[
                ((1, 2), f64::INFINITY),
                ((0, 3), 0.2),
                ((0, 1), 0.5),
                ((2, 3), 0.4),
            ],
        );
        assert_eq!(
            v1_score(&m(&[(1, 2), (0, 3)]), &leader, |p| *q.get(p)),
            f64::INFINITY
        );
    }

    #[test]
    fn v2_score_examples() {
        // i = 0, i' = 1, j = 2, j' = 3.
        let leader = om(&[(0, 1), (2, 3)]);
        let d = SwapDescriptor::new(0, 0, 2);
        let q = q_table(4, &[((0, 3), 0.8), ((2, 1), 0.6), ((0, 1), 0.5)]);
        assert_abs_diff_eq!(
            v2_score(d, &leader, |p| *q.get(p)).unwrap(),
            0.3,
            epsilon = 1e-12
        );

        let q = q_table(4, &[((0, 3), 0.1), ((2, 1), 0.2), ((0, 1), 0.5)]);
        assert_eq!(v2_score(d, &leader, |p| *q.get(p)).unwrap(), 0.0);

        let q = q_table(4, &[((0, 3), f64::INFINITY), ((2, 1), 0.2), ((0, 1), 0.5)]);
        assert_eq!(v2_score(d, &leader, |p| *q.get(p)).unwrap(), f64::INFINITY);

        assert!(v2_score(SwapDescriptor::new(0, 2, 0), &leader, |p| *q.get(p)).is_err());
    }

    #[test]
    fn v2_score_does_not_depend_on_representative() {
        let leader = om(&[(0, 1), (2, 3)]);
        let q = q_table(
            4,
            &[
                ((0, 3), 0.8),
                ((1, 2), 0.6),
                ((0, 1), 0.5),
                ((0, 2), 0.7),
                ((1, 3), 0.2),
            ],
        );
        let f = |p: Pair| *q.get(p);
        let a = v2_score(SwapDescriptor::new(0, 0, 2), &leader, f).unwrap();
        let b = v2_score(SwapDescriptor::new(0, 1, 3), &leader, f).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn first_round_plays_tie_break_leader() {
        let grab = Grab::new(3, Criterion::V1, IndexKind::KlUcb).unwrap();
        let d = grab.recommend_round(1);
        assert!(d.forced);
        assert_eq!(d.leader, om(&[(0, 1), (2, 3), (4, 5)]));
        assert_eq!(d.matching, m(&[(0, 1), (2, 3), (4, 5)]));
    }

    #[test]
    fn second_round_explores_unplayed_neighbor() {
        for criterion in [Criterion::V1, Criterion::V2] {
            let mut grab = Grab::new(2, criterion, IndexKind::KlUcb).unwrap();
            let first = grab.recommend_round(1);
            let fb = Feedback::for_matching(&first.matching, &[false, false]).unwrap();
            grab.observe(&first.matching, &fb, &first.leader).unwrap();

            let second = grab.recommend_round(2);
            assert!(!second.forced);
            assert_eq!(second.leader_count, 1);
            assert_eq!(second.scores.len(), 3);
            assert_eq!(second.scores[0], 0.0);
            assert_eq!(second.chosen, 1);
            assert_eq!(second.matching, m(&[(1, 2), (0, 3)]));
        }
    }

    #[test]
    fn leader_is_played_once_per_period() {
        let mut grab = Grab::new(2, Criterion::V2, IndexKind::SimpleUcb).unwrap();
        let mut forced = Vec::new();
        for t in 1..=9 {
            let d = grab.recommend_round(t);
            forced.push(d.forced);
            // Every pair fails, so the tie-break leader is elected forever.
            let fb = Feedback::for_matching(&d.matching, &[false, false]).unwrap();
            grab.observe(&d.matching, &fb, &d.leader).unwrap();
        }
        assert_eq!(
            forced,
            vec![true, false, false, true, false, false, true, false, false]
        );
        assert_eq!(grab.rounds(), 9);
        assert_eq!(grab.pair_stats().total_pulls(), 18);
    }

    #[test]
    fn single_couple_always_plays_leader() {
        let grab = Grab::new(1, Criterion::V1, IndexKind::KlUcb).unwrap();
        let d = grab.recommend_round(5);
        assert_eq!(d.matching, m(&[(0, 1)]));
    }

    #[test]
    fn policy_names() {
        let a = Grab::new(2, Criterion::V1, IndexKind::KlUcb).unwrap();
        let b = Grab::new(2, Criterion::V2, IndexKind::KlUcb).unwrap();
        assert_eq!(a.name(), "grab");
        assert_eq!(b.name(), "grab-plus");
    }
}
