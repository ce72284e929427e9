//! Wick pairings of random-matrix factors, their graph classes, the
//! number `kappa` of independent energy variables, multiplicities, and the
//! pairing expansion of `E[Tr V^2k]`.

mod moments;
mod pairing;

pub use moments::{
    leading_order_check, moment_from_pairings, moment_monte_carlo, moment_sums, pairing_weight, site_assignments,
    trace_moment_monte_carlo, LeadingOrderReport, LeadingOrderRow, MomentSums, MonteCarloMoment, MAX_LEADING_ORDER,
    MAX_MOMENT_ORDER,
};
pub use pairing::{
    classify, cyclic_kappa, ends_meet_check, enumerate_pairings, kappa, multiplicities, pairings_for_split,
    GraphClass, GraphSummary, Multiplicity, Pairing, PairingIter, MAX_PAIRING_ORDER,
};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub simple: u64,
    pub nested: u64,
    pub crossing: u64,
}

impl ClassCounts {
    pub fn noncrossing(&self) -> u64 {
        self.simple + self.nested
    }

    pub fn total(&self) -> u64 {
        self.noncrossing() + self.crossing
    }
}

/// Exhaustive class counts over all pairings with split `(n, m)`.
pub fn count_by_class(n: usize, m: usize) -> Result<ClassCounts> {
    if (n + m) % 2 != 0 {
        return Err(Error::invalid("split", format!("n + m must be even, got {n} + {m}")));
    }
    let mut counts = ClassCounts::default();
    for p in pairings_for_split(n, m)? {
        match classify(&p) {
            GraphClass::Simple => counts.simple += 1,
            GraphClass::Nested => counts.nested += 1,
            GraphClass::Crossing => counts.crossing += 1,
        }
    }
    Ok(counts)
}

/// `C_k = (2k)! / (k! (k+1)!)`.
pub fn catalan(k: u64) -> u64 {
    (0..k).fold(1u64, |c, i| c * 2 * (2 * i + 1) / (i + 2))
}

/// `(2k - 1)!!`, the number of perfect matchings of `2k` points.
pub fn matching_count(k: u64) -> u64 {
    (1..=k).map(|i| 2 * i - 1).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalan_and_double_factorial() {
        assert_eq!((0..8).map(catalan).collect::<Vec<_>>(), vec![1, 1, 2, 5, 14, 42, 132, 429]);
        assert_eq!((0..6).map(matching_count).collect::<Vec<_>>(), vec![1, 1, 3, 15, 105, 945]);
    }

    #[test]
    fn class_count_examples() {
        let c = count_by_class(2, 2).unwrap();
        assert_eq!((c.noncrossing(), c.crossing), (2, 1));
        let c = count_by_class(3, 3).unwrap();
        assert_eq!((c.noncrossing(), c.crossing), (5, 10));
        assert_eq!(count_by_class(0, 0).unwrap(), ClassCounts { simple: 1, nested: 0, crossing: 0 });
        assert!(count_by_class(2, 1).is_err());
        assert!(matches!(count_by_class(10, 8), Err(Error::SizeLimit { .. })));
    }
}
