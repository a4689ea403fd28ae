//! Optimistic indices for Bernoulli pair means.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on the bracket width of the KL-UCB bisection.
pub const KLUCB_TOLERANCE: f64 = 1e-9;
/// Hard cap on KL-UCB bisection steps.
pub const KLUCB_MAX_ITERATIONS: usize = 100;

/// Which optimistic index a policy uses for pair values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndexKind {
    /// KL-UCB upper confidence bound with budget `log t + 3 log log t`.
    #[serde(rename = "klucb")]
    KlUcb,
    /// `mean + sqrt(2 log t / count)`.
    #[serde(rename = "simple-ucb")]
    SimpleUcb,
}

impl IndexKind {
    /// Index of a pair with empirical `mean` over `count` pulls at `clock`.
    /// Inputs are assumed valid; an unpulled pair is `+inf`.
    #[inline]
    pub fn evaluate(self, mean: f64, count: u64, clock: u64) -> f64 {
        match self {
            IndexKind::KlUcb => klucb_unchecked(mean, count, clock),
            IndexKind::SimpleUcb => simple_ucb_unchecked(mean, count, clock),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            IndexKind::KlUcb => "klucb",
            IndexKind::SimpleUcb => "simple-ucb",
        }
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "klucb" | "kl-ucb" => Ok(IndexKind::KlUcb),
            "simple-ucb" | "ucb" => Ok(IndexKind::SimpleUcb),
            other => Err(Error::Config(format!("unknown index kind {other:?}"))),
        }
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfDomain { name, value })
    }
}

/// Bernoulli Kullback-Leibler divergence `kl(p, q)`, with `0 log 0 = 0`.
pub fn kl(p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(kl_unchecked(p, q))
}

#[inline]
fn kl_unchecked(p: f64, q: f64) -> f64 {
    let head = if p == 0.0 {
        0.0
    } else if q == 0.0 {
        return f64::INFINITY;
    } else {
        p * (p / q).ln()
    };
    let tail = if p == 1.0 {
        0.0
    } else if q == 1.0 {
        return f64::INFINITY;
    } else {
        (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln()
    };
    // Rounding can push the sum a hair below zero when p ~ q.
    (head + tail).max(0.0)
}

/// `max(0, log t + 3 log log t)`.
pub fn exploration_budget(t: u64) -> Result<f64> {
    if t < 1 {
        return Err(Error::OutOfDomain {
            name: "t",
            value: t as f64,
        });
    }
    Ok(budget_unchecked(t))
}

#[inline]
fn budget_unchecked(t: u64) -> f64 {
    if t < 3 {
        // log log t is undefined at 1 and negative at 2.
        return 0.0;
    }
    let log_t = (t as f64).ln();
    (log_t + 3.0 * log_t.ln()).max(0.0)
}

/// Largest `p` in `[mean, 1]` with `count * kl(mean, p) <= budget(clock)`.
/// Returns `+inf` for a pair that was never pulled.
pub fn klucb_index(mean: f64, count: u64, clock: u64) -> Result<f64> {
    check_probability("mean", mean)?;
    if clock < 1 {
        return Err(Error::OutOfDomain {
            name: "t",
            value: clock as f64,
        });
    }
    Ok(klucb_unchecked(mean, count, clock))
}

#[inline]
fn klucb_unchecked(mean: f64, count: u64, clock: u64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    let budget = budget_unchecked(clock);
    let pulls = count as f64;
    let level = budget / pulls;
    // A root within the tolerance of 1 is reported as 1.
    if mean >= 1.0 || kl_unchecked(mean, 1.0 - KLUCB_TOLERANCE) <= level {
        return 1.0;
    }
    let mut low = mean;
    let mut high = 1.0 - KLUCB_TOLERANCE;
    for _ in 0..KLUCB_MAX_ITERATIONS {
        let slack = budget - pulls * kl_unchecked(mean, low);
        if high - low <= KLUCB_TOLERANCE && slack <= KLUCB_TOLERANCE {
            break;
        }
        let mid = 0.5 * (low + high);
        if mid <= low || mid >= high {
            break;
        }
        if kl_unchecked(mean, mid) > level {
            high = mid;
        } else {
            low = mid;
        }
    }
    // Near 1 a single ulp of `p` can move the constraint by more than the
    // tolerance, so report whichever end is closer to the root.
    let miss = |p: f64| (pulls * kl_unchecked(mean, p) - budget).abs();
    if miss(high) < miss(low) {
        high
    } else {
        low
    }
}

/// `mean + sqrt(2 log t / count)`; `+inf` for a pair that was never pulled.
pub fn simple_ucb(mean: f64, count: u64, t: u64) -> Result<f64> {
    check_probability("mean", mean)?;
    if t < 1 {
        return Err(Error::OutOfDomain {
            name: "t",
            value: t as f64,
        });
    }
    Ok(simple_ucb_unchecked(mean, count, t))
}

#[inline]
fn simple_ucb_unchecked(mean: f64, count: u64, t: u64) -> f64 {
    if count == 0 {
        return f64::INFINITY;
    }
    mean + (2.0 * (t as f64).ln() / count as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    // Reference values computed with 40-digit arithmetic.
    const KL_HALF_THREE_QUARTERS: f64 = 0.143_841_036_225_890_46;
    const BUDGET_100: f64 = 9.186_709_063_411_795;
    const KLUCB_HALF_10_100: f64 = 0.958_464_787_587_036_8;
    const UCB_03_50_1000: f64 = 0.825_652_176_975_693_2;

    #[test]
    fn kl_examples() {
        assert_eq!(kl(0.5, 0.5).unwrap(), 0.0);
        assert_abs_diff_eq!(
            kl(0.0, 0.5).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            kl(0.5, 0.75).unwrap(),
            KL_HALF_THREE_QUARTERS,
            epsilon = 1e-15
        );
    }

    #[test]
    fn kl_edges() {
        assert_eq!(kl(0.0, 0.0).unwrap(), 0.0);
        assert_eq!(kl(1.0, 1.0).unwrap(), 0.0);
        assert_eq!(kl(0.3, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(kl(0.3, 1.0).unwrap(), f64::INFINITY);
        assert_abs_diff_eq!(
            kl(1.0, 0.5).unwrap(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert!(kl(-0.1, 0.5).is_err());
        assert!(kl(0.5, 1.5).is_err());
        assert!(kl(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn budget_examples() {
        assert_eq!(exploration_budget(1).unwrap(), 0.0);
        assert_eq!(exploration_budget(2).unwrap(), 0.0);
        assert_abs_diff_eq!(
            exploration_budget(100).unwrap(),
            BUDGET_100,
            epsilon = 1e-12
        );
        assert!(exploration_budget(0).is_err());
    }

    #[test]
    fn budget_is_monotone_on_grid() {
        let mut prev = exploration_budget(2).unwrap();
        for t in 3..=1_000_000u64 {
            let cur = exploration_budget(t).unwrap();
            assert!(cur >= prev, "t = {t}");
            prev = cur;
        }
    }

    #[test]
    fn klucb_examples() {
        assert_eq!(klucb_index(0.3, 0, 7).unwrap(), f64::INFINITY);
        let p = klucb_index(0.5, 10, 100).unwrap();
        assert_abs_diff_eq!(p, KLUCB_HALF_10_100, epsilon = 1e-8);
        let residual = 10.0 * kl(0.5, p).unwrap() - exploration_budget(100).unwrap();
        assert!(residual.abs() <= 1e-8, "residual {residual}");
        assert_eq!(klucb_index(1.0, 5, 100).unwrap(), 1.0);
    }

    #[test]
    fn klucb_zero_budget_returns_mean() {
        let p = klucb_index(0.4, 3, 1).unwrap();
        assert_abs_diff_eq!(p, 0.4, epsilon = 1e-8);
    }

    #[test]
    fn klucb_root_next_to_one_is_rounded_to_nearest() {
        // Root sits about 7e-9 below 1, where one ulp moves s*kl by ~2e-8.
        let (mean, s, t) = (0.8747244388568598, 11, 979_063);
        let p = klucb_index(mean, s, t).unwrap();
        let residual = (s as f64 * kl(mean, p).unwrap() - exploration_budget(t).unwrap()).abs();
        assert!(residual <= 1e-8, "residual {residual}");
    }

    #[test]
    fn klucb_rejects_bad_inputs() {
        assert!(klucb_index(1.2, 3, 10).is_err());
        assert!(klucb_index(0.2, 3, 0).is_err());
    }

    #[test]
    fn simple_ucb_examples() {
        assert_abs_diff_eq!(
            simple_ucb(0.3, 50, 1000).unwrap(),
            UCB_03_50_1000,
            epsilon = 1e-15
        );
        assert_eq!(simple_ucb(0.42, 7, 1).unwrap(), 0.42);
        assert_eq!(simple_ucb(0.3, 0, 1000).unwrap(), f64::INFINITY);
        assert!(simple_ucb(0.3, 1, 0).is_err());
    }

    #[test]
    fn index_kind_parses() {
        assert_eq!("klucb".parse::<IndexKind>().unwrap(), IndexKind::KlUcb);
        assert_eq!(
            "simple-ucb".parse::<IndexKind>().unwrap(),
            IndexKind::SimpleUcb
        );
        assert!("ucb2".parse::<IndexKind>().is_err());
    }
}
