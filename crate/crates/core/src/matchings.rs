//! Matchings, ordered matchings and the adjacent-couple swap graph.
//!
//! Players are indexed `0..2L`. A [`Matching`] is a partition of the
//! players into `L` unordered couples; an [`OrderedMatching`] additionally
//! carries a position order over its couples and is the vertex type the
//! GRAB policies move on. Two ordered matchings are adjacent when one is
//! obtained from the other by exchanging one member each between two
//! consecutive couples.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};

/// An unordered couple of players, stored canonically with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    lo: usize,
    hi: usize,
}

impl Pair {
    pub fn new(a: usize, b: usize) -> Result<Self> {
        match a.cmp(&b) {
            Ordering::Less => Ok(Pair { lo: a, hi: b }),
            Ordering::Greater => Ok(Pair { lo: b, hi: a }),
            Ordering::Equal => Err(Error::SelfPair(a)),
        }
    }

    /// Builds a pair from two players already known to be distinct.
    pub(crate) fn of(a: usize, b: usize) -> Self {
        debug_assert_ne!(a, b);
        if a < b {
            Pair { lo: a, hi: b }
        } else {
            Pair { lo: b, hi: a }
        }
    }

    pub fn lo(self) -> usize {
        self.lo
    }

    pub fn hi(self) -> usize {
        self.hi
    }

    pub fn members(self) -> [usize; 2] {
        [self.lo, self.hi]
    }

    pub fn contains(self, player: usize) -> bool {
        self.lo == player || self.hi == player
    }

    /// The member that is not `player`, if `player` belongs to the pair.
    pub fn partner(self, player: usize) -> Option<usize> {
        if player == self.lo {
            Some(self.hi)
        } else if player == self.hi {
            Some(self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{},{}}}", self.lo, self.hi)
    }
}

/// Dense symmetric table holding one value per unordered pair of players.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTable<T> {
    players: usize,
    values: Vec<T>,
}

impl<T: Clone> PairTable<T> {
    pub fn new(players: usize, fill: T) -> Self {
        PairTable {
            players,
            values: vec![fill; players * players],
        }
    }

    pub fn from_fn(players: usize, mut f: impl FnMut(Pair) -> T, fill: T) -> Self {
        let mut table = PairTable::new(players, fill);
        for pair in all_pairs(players) {
            table.set(pair, f(pair));
        }
        table
    }
}

impl<T> PairTable<T> {
    pub fn players(&self) -> usize {
        self.players
    }

    #[inline]
    fn slot(&self, pair: Pair) -> usize {
        pair.lo * self.players + pair.hi
    }

    #[inline]
    pub fn get(&self, pair: Pair) -> &T {
        &self.values[self.slot(pair)]
    }

    #[inline]
    pub fn get_mut(&mut self, pair: Pair) -> &mut T {
        let slot = self.slot(pair);
        &mut self.values[slot]
    }

    #[inline]
    pub fn set(&mut self, pair: Pair, value: T) {
        let slot = self.slot(pair);
        self.values[slot] = value;
    }

    /// Applies `f` to every stored pair value.
    pub fn map<U: Clone>(&self, f: impl Fn(&T) -> U, fill: U) -> PairTable<U> {
        PairTable::from_fn(self.players, |p| f(self.get(p)), fill)
    }
}

/// All unordered pairs over `players`, in lexicographic `(lo, hi)` order.
pub fn all_pairs(players: usize) -> impl Iterator<Item = Pair> {
    (0..players).flat_map(move |lo| (lo + 1..players).map(move |hi| Pair { lo, hi }))
}

fn check_partition(couples: &[Pair], players: usize) -> Result<()> {
    let mut seen = vec![false; players];
    for pair in couples {
        for player in pair.members() {
            if player >= players {
                return Err(Error::PlayerOutOfRange { player, players });
            }
            if seen[player] {
                return Err(Error::DuplicatePlayer(player));
            }
            seen[player] = true;
        }
    }
    Ok(())
}

/// A perfect pairing of `2L` players, with couples kept sorted so that
/// equal matchings compare and hash equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matching {
    couples: Vec<Pair>,
}

impl Matching {
    /// Validates and canonicalizes a list of player pairs into a matching
    /// of `l` couples.
    pub fn new(pairs: &[(usize, usize)], l: usize) -> Result<Self> {
        if pairs.len() != l {
            return Err(Error::WrongPairCount {
                expected: l,
                got: pairs.len(),
            });
        }
        let couples = pairs
            .iter()
            .map(|&(a, b)| Pair::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::from_couples(couples)
    }

    /// Validates a list of canonical pairs; the couple count is the list
    /// length.
    pub fn from_couples(mut couples: Vec<Pair>) -> Result<Self> {
        if couples.is_empty() {
            return Err(Error::WrongPairCount {
                expected: 1,
                got: 0,
            });
        }
        check_partition(&couples, 2 * couples.len())?;
        couples.sort_unstable();
        Ok(Matching { couples })
    }

    pub(crate) fn from_couples_unchecked(mut couples: Vec<Pair>) -> Self {
        couples.sort_unstable();
        Matching { couples }
    }

    /// Number of couples `L`.
    pub fn len(&self) -> usize {
        self.couples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couples.is_empty()
    }

    pub fn players(&self) -> usize {
        2 * self.couples.len()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.couples
    }

    pub fn contains_pair(&self, pair: Pair) -> bool {
        self.couples.binary_search(&pair).is_ok()
    }

    /// Sum of `values` over the couples.
    pub fn total(&self, values: &PairTable<f64>) -> f64 {
        self.couples.iter().map(|&p| *values.get(p)).sum()
    }

    /// Couples of `self` that are not couples of `other`.
    pub fn pairs_not_in<'a>(&'a self, other: &'a Matching) -> impl Iterator<Item = Pair> + 'a {
        self.couples
            .iter()
            .copied()
            .filter(move |&p| !other.contains_pair(p))
    }
}

impl fmt::Display for Matching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (idx, pair) in self.couples.iter().enumerate() {
            if idx > 0 {
                write!(f, ",")?;
            }
            write!(f, "{pair}")?;
        }
        write!(f, "}}")
    }
}

/// Exchange of `e1` (taken from couple `k`) with `e2` (taken from couple
/// `k + 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SwapDescriptor {
    pub k: usize,
    pub e1: usize,
    pub e2: usize,
}

impl SwapDescriptor {
    pub fn new(k: usize, e1: usize, e2: usize) -> Self {
        SwapDescriptor { k, e1, e2 }
    }
}

/// A matching whose couples carry a position order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OrderedMatching {
    couples: Vec<Pair>,
}

impl OrderedMatching {
    pub fn new(couples: Vec<Pair>) -> Result<Self> {
        if couples.is_empty() {
            return Err(Error::WrongPairCount {
                expected: 1,
                got: 0,
            });
        }
        check_partition(&couples, 2 * couples.len())?;
        Ok(OrderedMatching { couples })
    }

    /// Convenience constructor from raw player pairs.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<Self> {
        let couples = pairs
            .iter()
            .map(|&(a, b)| Pair::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(couples)
    }

    pub(crate) fn from_couples_unchecked(couples: Vec<Pair>) -> Self {
        OrderedMatching { couples }
    }

    pub fn len(&self) -> usize {
        self.couples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couples.is_empty()
    }

    pub fn couples(&self) -> &[Pair] {
        &self.couples
    }

    /// Forgets the couple order.
    pub fn set(&self) -> Matching {
        Matching::from_couples_unchecked(self.couples.clone())
    }

    fn check_descriptor(&self, d: SwapDescriptor) -> Result<()> {
        if d.k + 1 >= self.couples.len() {
            return Err(Error::InvalidSwap(format!(
                "couple index {} needs a successor among {} couples",
                d.k,
                self.couples.len()
            )));
        }
        if !self.couples[d.k].contains(d.e1) {
            return Err(Error::InvalidSwap(format!(
                "player {} is not in couple {}",
                d.e1, d.k
            )));
        }
        if !self.couples[d.k + 1].contains(d.e2) {
            return Err(Error::InvalidSwap(format!(
                "player {} is not in couple {}",
                d.e2,
                d.k + 1
            )));
        }
        Ok(())
    }

    /// The two couples that replace couples `k` and `k + 1` under `d`, in
    /// position order. `d` must be valid for `self`.
    pub(crate) fn swapped_couples(&self, d: SwapDescriptor) -> (Pair, Pair) {
        let upper = self.couples[d.k];
        let lower = self.couples[d.k + 1];
        let keep_upper = upper.partner(d.e1).expect("e1 belongs to couple k");
        let keep_lower = lower.partner(d.e2).expect("e2 belongs to couple k+1");
        (Pair::of(d.e2, keep_upper), Pair::of(d.e1, keep_lower))
    }

    /// Exchanges `d.e1` and `d.e2` between couples `d.k` and `d.k + 1`.
    pub fn swap(&self, d: SwapDescriptor) -> Result<Self> {
        self.check_descriptor(d)?;
        let (upper, lower) = self.swapped_couples(d);
        let mut couples = self.couples.clone();
        couples[d.k] = upper;
        couples[d.k + 1] = lower;
        Ok(OrderedMatching { couples })
    }

    /// Every descriptor between consecutive couples: four per `k`, in
    /// lexicographic `(k, e1, e2)` order.
    pub fn raw_swaps(&self) -> impl Iterator<Item = SwapDescriptor> + '_ {
        self.couples.windows(2).enumerate().flat_map(|(k, w)| {
            let (upper, lower) = (w[0], w[1]);
            upper.members().into_iter().flat_map(move |e1| {
                lower
                    .members()
                    .into_iter()
                    .map(move |e2| SwapDescriptor { k, e1, e2 })
            })
        })
    }

    /// Distinct matchings reachable by one swap, each with its
    /// lexicographically smallest descriptor.
    ///
    /// Swapping `(lo_k, lo_{k+1})` and `(hi_k, hi_{k+1})` yield the same
    /// couples, as do `(lo_k, hi_{k+1})` and `(hi_k, lo_{k+1})`, so each
    /// consecutive couple position contributes exactly two neighbors and
    /// the result has `2L - 2` entries.
    pub fn neighborhood_set(&self) -> Vec<(Matching, SwapDescriptor)> {
        let mut out = Vec::with_capacity(2 * self.couples.len().saturating_sub(1));
        for k in 0..self.couples.len().saturating_sub(1) {
            let upper = self.couples[k];
            let lower = self.couples[k + 1];
            for e2 in [lower.lo, lower.hi] {
                let d = SwapDescriptor {
                    k,
                    e1: upper.lo,
                    e2,
                };
                let (a, b) = self.swapped_couples(d);
                let mut couples = self.couples.clone();
                couples[k] = a;
                couples[k + 1] = b;
                out.push((Matching::from_couples_unchecked(couples), d));
            }
        }
        out
    }
}

impl fmt::Display for OrderedMatching {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (idx, pair) in self.couples.iter().enumerate() {
            if idx > 0 {
                write!(f, ",")?;
            }
            write!(f, "{pair}")?;
        }
        write!(f, ")")
    }
}

/// Whether the couple values `rho` are non-increasing along the couple
/// order of `ordered`.
pub fn satisfies_pi(ordered: &OrderedMatching, rho: &PairTable<f64>) -> bool {
    ordered
        .couples()
        .windows(2)
        .all(|w| rho.get(w[0]) >= rho.get(w[1]))
}

/// Players sorted by decreasing quality, ties broken by lower index.
pub fn rank_players(theta: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..theta.len()).collect();
    order.sort_by(|&a, &b| {
        theta[b]
            .partial_cmp(&theta[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order
}

/// Checks that every member of an earlier optimal couple is strictly
/// better than every member of a later one, and returns the ranking.
pub fn check_inter_pair_order(theta: &[f64]) -> Result<Vec<usize>> {
    if theta.is_empty() || !theta.len().is_multiple_of(2) {
        return Err(Error::OddPlayerCount(theta.len()));
    }
    if let Some(&bad) = theta.iter().find(|v| !v.is_finite()) {
        return Err(Error::OutOfDomain {
            name: "theta",
            value: bad,
        });
    }
    let order = rank_players(theta);
    for k in 0..theta.len() / 2 - 1 {
        let upper_min = theta[order[2 * k + 1]];
        let lower_max = theta[order[2 * k + 2]];
        if upper_min <= lower_max {
            return Err(Error::AssumptionViolated {
                upper: k,
                lower: k + 1,
            });
        }
    }
    Ok(order)
}

/// Pairs the `(2k)`-th and `(2k+1)`-th best players (0-based ranks) and
/// orders couples best first. Fails when two players on either side of a
/// couple boundary tie.
pub fn optimum_leader(theta: &[f64]) -> Result<OrderedMatching> {
    let order = check_inter_pair_order(theta)?;
    let couples = order.chunks(2).map(|c| Pair::of(c[0], c[1])).collect();
    Ok(OrderedMatching { couples })
}
