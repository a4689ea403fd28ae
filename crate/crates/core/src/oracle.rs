//! Brute-force tools for small instances: enumeration of matchings and
//! ordered matchings, the exact optimum, machine checks of the structural
//! properties GRAB relies on, and the gap constants of its regret bounds.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::environment::Instance;
use crate::error::{Error, Result};
use crate::matchings::{check_inter_pair_order, satisfies_pi, Matching, OrderedMatching, Pair};

/// Largest `L` accepted by [`enumerate_matchings`] (`11!! = 10395` arms).
pub const MAX_ENUMERATED_COUPLES: usize = 6;
/// Largest `L` accepted by the ordered-matching checks (`8! / 2^4 = 2520`).
pub const MAX_ORDERED_COUPLES: usize = 4;

/// `(2L - 1)!!`, the number of perfect matchings of `2L` players.
pub fn double_factorial_odd(l: usize) -> u64 {
    (1..=l as u64).map(|k| 2 * k - 1).product()
}

/// All perfect matchings of `2L` players. The lowest unmatched player is
/// paired with each remaining player in increasing order, recursively.
pub fn enumerate_matchings(l: usize) -> Result<Vec<Matching>> {
    if l > MAX_ENUMERATED_COUPLES {
        return Err(Error::TooLarge {
            l,
            max: MAX_ENUMERATED_COUPLES,
        });
    }
    if l == 0 {
        return Err(Error::WrongPairCount {
            expected: 1,
            got: 0,
        });
    }
    let mut out = Vec::with_capacity(double_factorial_odd(l) as usize);
    let mut partial = Vec::with_capacity(l);
    let remaining: Vec<usize> = (0..2 * l).collect();
    extend_matchings(&remaining, &mut partial, &mut out);
    Ok(out)
}

fn extend_matchings(remaining: &[usize], partial: &mut Vec<Pair>, out: &mut Vec<Matching>) {
    let Some((&first, rest)) = remaining.split_first() else {
        out.push(Matching::from_couples_unchecked(partial.clone()));
        return;
    };
    for idx in 0..rest.len() {
        partial.push(Pair::of(first, rest[idx]));
        let next: Vec<usize> = rest
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != idx)
            .map(|(_, &p)| p)
            .collect();
        extend_matchings(&next, partial, out);
        partial.pop();
    }
}

fn permutations(items: &[Pair]) -> Vec<Vec<Pair>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for idx in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(idx);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Every ordering of the couples of `m`.
pub fn orderings(m: &Matching) -> Vec<OrderedMatching> {
    permutations(m.pairs())
        .into_iter()
        .map(OrderedMatching::from_couples_unchecked)
        .collect()
}

/// All ordered matchings of `2L` players, `(2L)! / 2^L` of them.
pub fn enumerate_ordered_matchings(l: usize) -> Result<Vec<OrderedMatching>> {
    if l > MAX_ORDERED_COUPLES {
        return Err(Error::TooLarge {
            l,
            max: MAX_ORDERED_COUPLES,
        });
    }
    Ok(enumerate_matchings(l)?.iter().flat_map(orderings).collect())
}

/// Matching with the largest expected reward; ties go to the earliest
/// enumerated matching.
pub fn exhaustive_best(inst: &Instance) -> Result<(Matching, f64)> {
    let mut best: Option<(Matching, f64)> = None;
    for m in enumerate_matchings(inst.couples())? {
        let value = inst.expected_reward(&m);
        if best.as_ref().is_none_or(|(_, v)| value > *v) {
            best = Some((m, value));
        }
    }
    Ok(best.expect("at least one matching"))
}

fn require_inter_pair_order(inst: &Instance) -> Result<OrderedMatching> {
    check_inter_pair_order(inst.theta())?;
    Ok(inst
        .optimum_leader()
        .cloned()
        .expect("leader exists under the inter-pair strict order"))
}

/// Outcome of the relaxed-unimodality check on one instance.
#[derive(Clone, Debug, Default)]
pub struct UnimodalityReport {
    /// Ordered matchings that satisfy the ordering property and are not the
    /// optimum leader.
    pub checked: usize,
    /// Ordered matchings excluded because they violate the ordering
    /// property.
    pub excluded: usize,
    /// Checked ordered matchings without a strictly improving swap.
    pub counterexamples: Vec<OrderedMatching>,
}

impl UnimodalityReport {
    pub fn holds(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

/// Checks that every ordered matching with non-increasing couple values,
/// other than the optimum leader, has an adjacent-couple swap with a
/// strictly larger expected reward.
pub fn verify_unimodality(inst: &Instance) -> Result<UnimodalityReport> {
    let leader = require_inter_pair_order(inst)?;
    let rho = inst.rho();
    let mut report = UnimodalityReport::default();
    for ordered in enumerate_ordered_matchings(inst.couples())? {
        if !satisfies_pi(&ordered, rho) {
            report.excluded += 1;
            continue;
        }
        if ordered == leader {
            continue;
        }
        report.checked += 1;
        let value = ordered.set().total(rho);
        let improves = ordered.raw_swaps().any(|d| {
            let next = ordered.swap(d).expect("enumerated swap is valid");
            next.set().total(rho) > value
        });
        if !improves {
            report.counterexamples.push(ordered);
        }
    }
    Ok(report)
}

/// Whether exactly one ordering of the optimal matching has non-increasing
/// couple values (pairs are unordered, so within-couple writing never
/// creates a second one).
pub fn verify_leader_uniqueness(inst: &Instance) -> Result<bool> {
    let leader = require_inter_pair_order(inst)?;
    if inst.couples() > MAX_ORDERED_COUPLES {
        return Err(Error::TooLarge {
            l: inst.couples(),
            max: MAX_ORDERED_COUPLES,
        });
    }
    let qualifying: Vec<OrderedMatching> = orderings(&leader.set())
        .into_iter()
        .filter(|o| satisfies_pi(o, inst.rho()))
        .collect();
    Ok(qualifying.len() == 1 && qualifying[0] == leader)
}

/// Gap constants of the GRAB regret bounds, computed on the optimum leader.
#[derive(Clone, Debug)]
pub struct AnalysisConstants {
    /// `Δ_a = μ* - μ_a` for each neighbor of the optimum leader, in
    /// neighborhood order.
    pub neighbor_gaps: Vec<(Matching, f64)>,
    /// Couples of each neighbor that are not optimal couples.
    pub differing_pairs: Vec<usize>,
    /// Smallest `(θ_i - θ_j')(θ_i' - θ_j)` over consecutive optimal couples
    /// `{i, i'}`, `{j, j'}` with `θ_i >= θ_i'` and `θ_j >= θ_j'`.
    pub delta: f64,
    /// Smallest `θ_i (θ_i' - θ_j')` over the same consecutive couples.
    pub delta_tilde: f64,
    /// `Σ_a 8 / Δ_a`: coefficient of `log T` in the GRAB bound.
    pub grab_log_coefficient: f64,
    /// `Σ_k 8 Δ_k / Δ̃_k²`: coefficient of `log T` in the GRAB+ bound.
    pub grab_plus_log_coefficient: f64,
}

impl AnalysisConstants {
    pub fn grab_bound(&self, horizon: u64) -> f64 {
        self.grab_log_coefficient * (horizon as f64).ln()
    }

    pub fn grab_plus_bound(&self, horizon: u64) -> f64 {
        self.grab_plus_log_coefficient * (horizon as f64).ln()
    }
}

pub fn gap_constants(inst: &Instance) -> Result<AnalysisConstants> {
    let leader = require_inter_pair_order(inst)?;
    let theta = inst.theta();
    let optimal = leader.set();
    let neighborhood = leader.neighborhood_set();
    let neighbor_gaps: Vec<(Matching, f64)> = neighborhood
        .iter()
        .map(|(m, _)| (m.clone(), inst.optimal_value() - inst.expected_reward(m)))
        .collect();
    let differing_pairs = neighborhood
        .iter()
        .map(|(m, _)| m.pairs_not_in(&optimal).count())
        .collect();

    let sorted = |p: Pair| {
        let [a, b] = p.members();
        if theta[a] >= theta[b] {
            (theta[a], theta[b])
        } else {
            (theta[b], theta[a])
        }
    };
    let mut delta = f64::INFINITY;
    let mut delta_tilde = f64::INFINITY;
    let mut grab_plus_log_coefficient = 0.0;
    for w in leader.couples().windows(2) {
        let (ti, ti_mate) = sorted(w[0]);
        let (tj, tj_mate) = sorted(w[1]);
        let gap = (ti - tj_mate) * (ti_mate - tj);
        let tilde = ti * (ti_mate - tj_mate);
        delta = delta.min(gap);
        delta_tilde = delta_tilde.min(tilde);
        grab_plus_log_coefficient += 8.0 * gap / (tilde * tilde);
    }
    let grab_log_coefficient = neighbor_gaps.iter().map(|(_, g)| 8.0 / g).sum();
    Ok(AnalysisConstants {
        neighbor_gaps,
        differing_pairs,
        delta,
        delta_tilde,
        grab_log_coefficient,
        grab_plus_log_coefficient,
    })
}

/// Random instance satisfying the inter-pair strict order, with players
/// in random index order.
pub fn random_ordered_instance<R: Rng + ?Sized>(l: usize, rng: &mut R) -> Instance {
    loop {
        let mut theta: Vec<f64> = (0..2 * l).map(|_| rng.gen::<f64>()).collect();
        theta.shuffle(rng);
        if check_inter_pair_order(&theta).is_ok() {
            return Instance::new(theta).expect("values drawn in [0, 1)");
        }
    }
}

/// Per-`L` tallies of the lemma suite.
#[derive(Clone, Debug, Default)]
pub struct LemmaTally {
    pub couples: usize,
    pub instances: usize,
    /// Instances where the exhaustive optimum differs from the optimal
    /// matching.
    pub optimum_failures: usize,
    /// Instances where the optimum leader is not unique.
    pub uniqueness_failures: usize,
    /// Ordered matchings checked for an improving swap, over all instances.
    pub unimodality_checked: usize,
    pub unimodality_counterexamples: usize,
}

#[derive(Clone, Debug, Default)]
pub struct LemmaReport {
    pub tallies: Vec<LemmaTally>,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.tallies.iter().all(|t| {
            t.optimum_failures == 0
                && t.uniqueness_failures == 0
                && t.unimodality_counterexamples == 0
        })
    }
}

/// Runs the three structural checks on `instances` random instances for
/// each `L` in `2..=l_max`.
pub fn verify_lemmas<R: Rng + ?Sized>(
    l_max: usize,
    instances: usize,
    rng: &mut R,
) -> Result<LemmaReport> {
    if l_max > MAX_ORDERED_COUPLES {
        return Err(Error::TooLarge {
            l: l_max,
            max: MAX_ORDERED_COUPLES,
        });
    }
    let mut report = LemmaReport::default();
    for l in 2..=l_max {
        let mut tally = LemmaTally {
            couples: l,
            ..LemmaTally::default()
        };
        for _ in 0..instances {
            let inst = random_ordered_instance(l, rng);
            tally.instances += 1;
            let (best, _) = exhaustive_best(&inst)?;
            let leader = inst.optimum_leader().expect("ordered instance");
            if best != leader.set() {
                tally.optimum_failures += 1;
            }
            if !verify_leader_uniqueness(&inst)? {
                tally.uniqueness_failures += 1;
            }
            let uni = verify_unimodality(&inst)?;
            tally.unimodality_checked += uni.checked;
            tally.unimodality_counterexamples += uni.counterexamples.len();
        }
        report.tallies.push(tally);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn m(pairs: &[(usize, usize)]) -> Matching {
        Matching::new(pairs, pairs.len()).unwrap()
    }

    #[test]
    fn enumerates_two_couples_by_hand() {
        assert_eq!(
            enumerate_matchings(2).unwrap(),
            vec![
                m(&[(0, 1), (2, 3)]),
                m(&[(0, 2), (1, 3)]),
                m(&[(0, 3), (1, 2)])
            ]
        );
    }

    #[test]
    fn enumeration_counts_are_double_factorials() {
        let expected = [1usize, 3, 15, 105, 945, 10395];
        for (l, &n) in (1..=6).zip(expected.iter()) {
            let all = enumerate_matchings(l).unwrap();
            assert_eq!(all.len(), n);
            assert_eq!(double_factorial_odd(l) as usize, n);
            let mut sorted = all.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), n, "duplicates at L = {l}");
            for x in &all {
                assert!(Matching::from_couples(x.pairs().to_vec()).is_ok());
            }
        }
        assert!(matches!(
            enumerate_matchings(7),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn ordered_matching_counts() {
        assert_eq!(enumerate_ordered_matchings(2).unwrap().len(), 6);
        assert_eq!(enumerate_ordered_matchings(3).unwrap().len(), 90);
        assert_eq!(enumerate_ordered_matchings(4).unwrap().len(), 2520);
    }

    #[test]
    fn exhaustive_best_examples() {
        let inst = Instance::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let (best, value) = exhaustive_best(&inst).unwrap();
        assert_eq!(best, m(&[(0, 1), (2, 3)]));
        assert_abs_diff_eq!(value, 0.14, epsilon = 1e-15);

        let uniform = Instance::new(vec![0.5; 6]).unwrap();
        let (best, value) = exhaustive_best(&uniform).unwrap();
        assert_eq!(best, m(&[(0, 1), (2, 3), (4, 5)]));
        assert_abs_diff_eq!(value, 3.0 * 0.25, epsilon = 1e-15);
    }

    #[test]
    fn exhaustive_best_matches_optimal_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for l in 2..=4 {
            for _ in 0..100 {
                let inst = random_ordered_instance(l, &mut rng);
                let (best, _) = exhaustive_best(&inst).unwrap();
                assert_eq!(&best, inst.optimal_matching());
                assert_eq!(best, inst.optimum_leader().unwrap().set());
            }
        }
    }

    #[test]
    fn leader_uniqueness_example() {
        let inst = Instance::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        assert!(verify_leader_uniqueness(&inst).unwrap());
        let tied = Instance::new(vec![0.3, 0.3, 0.3, 0.1]).unwrap();
        assert!(matches!(
            verify_leader_uniqueness(&tied),
            Err(Error::AssumptionViolated { .. })
        ));
        assert!(verify_unimodality(&tied).is_err());
    }

    #[test]
    fn unimodality_report_excludes_and_exempts() {
        let inst = Instance::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let report = verify_unimodality(&inst).unwrap();
        // 6 ordered matchings: one per couple ordering of 3 matchings.
        // Reversed orderings violate the ordering property (ρ values are
        // distinct), and the optimum leader is exempt.
        assert_eq!(report.excluded, 3);
        assert_eq!(report.checked, 2);
        assert!(report.holds());
    }

    #[test]
    fn gap_constants_examples() {
        let inst = Instance::experiment_1(3, 0.1).unwrap();
        let c = gap_constants(&inst).unwrap();
        assert_abs_diff_eq!(c.delta, 0.01, epsilon = 1e-12);
        assert_eq!(c.differing_pairs, vec![2, 2, 2, 2]);

        let inst = Instance::new(vec![0.9, 0.8, 0.5, 0.4]).unwrap();
        let c = gap_constants(&inst).unwrap();
        assert_abs_diff_eq!(c.delta, (0.8 - 0.5) * (0.9 - 0.4), epsilon = 1e-12);
        assert_abs_diff_eq!(c.delta_tilde, 0.9 * (0.8 - 0.4), epsilon = 1e-12);
        let min_gap = c
            .neighbor_gaps
            .iter()
            .map(|(_, g)| *g)
            .fold(f64::INFINITY, f64::min);
        assert_abs_diff_eq!(min_gap, c.delta, epsilon = 1e-12);
        assert!(c.grab_bound(1000) > 0.0 && c.grab_plus_bound(1000) > 0.0);
    }

    #[test]
    fn gap_constants_are_positive_and_bound_neighbors() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for l in 2..=4 {
            for _ in 0..50 {
                let inst = random_ordered_instance(l, &mut rng);
                let c = gap_constants(&inst).unwrap();
                assert!(c.delta > 0.0 && c.delta_tilde > 0.0);
                assert_eq!(c.neighbor_gaps.len(), 2 * l - 2);
                for (_, gap) in &c.neighbor_gaps {
                    assert!(*gap >= c.delta - 1e-12);
                }
                assert!(c.differing_pairs.iter().all(|&k| k == 2));
            }
        }
    }

    #[test]
    fn smallest_suboptimal_gap_is_in_the_leader_neighborhood() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for l in 2..=4 {
            for _ in 0..30 {
                let inst = random_ordered_instance(l, &mut rng);
                let optimal = inst.optimal_matching().clone();
                let brute = enumerate_matchings(l)
                    .unwrap()
                    .into_iter()
                    .filter(|x| *x != optimal)
                    .map(|x| inst.pseudo_regret(&x))
                    .fold(f64::INFINITY, f64::min);
                let c = gap_constants(&inst).unwrap();
                let neighborhood_min = c
                    .neighbor_gaps
                    .iter()
                    .map(|(_, g)| *g)
                    .fold(f64::INFINITY, f64::min);
                assert_abs_diff_eq!(brute, neighborhood_min, epsilon = 1e-12);
                assert_abs_diff_eq!(brute, c.delta, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lemma_suite_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let report = verify_lemmas(4, 5, &mut rng).unwrap();
        assert!(report.passed());
        assert_eq!(report.tallies.len(), 3);
        assert!(verify_lemmas(5, 1, &mut rng).is_err());
    }
}
