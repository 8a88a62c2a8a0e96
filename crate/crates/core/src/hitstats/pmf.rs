//! Empirical distribution of a nonnegative-integer statistic.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Occurrence counts per value k, plus the total sample count. Frequencies
/// are exact ratios of integers, so they sum to 1 by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalPMF {
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl EmpiricalPMF {
    /// Tally an iterator of observed values.
    pub fn from_samples<I: IntoIterator<Item = u64>>(samples: I) -> Self {
        let mut counts = BTreeMap::new();
        let mut total = 0u64;
        for k in samples {
            *counts.entry(k).or_insert(0) += 1;
            total += 1;
        }
        Self { counts, total }
    }

    pub fn counts(&self) -> &BTreeMap<u64, u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, k: u64) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn frequency(&self, k: u64) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(k) as f64 / self.total as f64
        }
    }

    /// Largest observed value, or None for an empty tally.
    pub fn max_value(&self) -> Option<u64> {
        self.counts.keys().next_back().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tallies_and_normalizes() {
        let pmf = EmpiricalPMF::from_samples([0, 1, 1, 2, 0, 0]);
        assert_eq!(pmf.total(), 6);
        assert_eq!(pmf.count(0), 3);
        assert_eq!(pmf.count(1), 2);
        assert_eq!(pmf.count(2), 1);
        assert_eq!(pmf.count(7), 0);
        // normalization is exact at the level of integer counts
        let sum: u64 = pmf.counts().values().sum();
        assert_eq!(sum, pmf.total());
        let freq_sum: f64 = (0..=2).map(|k| pmf.frequency(k)).sum();
        assert!((freq_sum - 1.0).abs() < 1e-15);
        // frequencies with a power-of-two total are exact ratios
        let dyadic = EmpiricalPMF::from_samples([0, 0, 1, 3]);
        let exact: f64 = [0, 1, 3].iter().map(|&k| dyadic.frequency(k)).sum();
        assert_eq!(exact, 1.0);
    }

    #[test]
    fn unit_mass() {
        let pmf = EmpiricalPMF::from_samples([0]);
        assert_eq!(pmf.frequency(0), 1.0);
        assert_eq!(pmf.max_value(), Some(0));
    }
}
