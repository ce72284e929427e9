use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Par};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pairing::{classify, cyclic_kappa, enumerate_pairings, Pairing};
use crate::model::{sample_interaction, SpectrumConfig};
use crate::seeds::member_seed;
use crate::{Error, Result, C64};

/// Largest `k` accepted by the pairing expansion of `E[Tr V^2k]`.
pub const MAX_MOMENT_ORDER: usize = 6;

/// Largest `k` accepted by [`leading_order_check`].
pub const MAX_LEADING_ORDER: usize = 5;

/// Number of site labellings `x: classes -> {1, 2}` with different sites on
/// the two ends of every factor. Boundaries `p` and `p + 1` are the ends of
/// factor `p + 1`.
pub fn site_assignments(classes: usize, labels: &[usize]) -> u64 {
    let mut count = 0;
    for mask in 0u64..(1u64 << classes) {
        let site = |b: usize| (mask >> labels[b]) & 1;
        if (0..labels.len() - 1).all(|p| site(p) != site(p + 1)) {
            count += 1;
        }
    }
    count
}

/// Contribution of one matching to `E[Tr V^2k]`: `N^(kappa_cyc - k) X`.
pub fn pairing_weight(pairs: &[(usize, usize)], n_levels: usize) -> (f64, bool, usize) {
    let k = pairs.len();
    let p = Pairing::new_unchecked(2 * k, 0, pairs.to_vec());
    let (classes, labels) = cyclic_kappa(&p);
    let x = site_assignments(classes, &labels);
    let weight = (n_levels as f64).powi(classes as i32 - k as i32) * x as f64;
    (weight, classify(&p).is_crossing(), classes)
}

/// `E[Tr V^2k]` split into non-crossing and crossing partial sums.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSums {
    pub noncrossing: f64,
    pub crossing: f64,
    /// Largest trace-closed `kappa` over crossing matchings (0 if none).
    pub max_crossing_kappa: usize,
}

impl MomentSums {
    pub fn total(&self) -> f64 {
        self.noncrossing + self.crossing
    }
}

fn check_moment_order(k: usize, limit: usize) -> Result<()> {
    if k > limit {
        return Err(Error::SizeLimit {
            what: "moment order k",
            value: k,
            limit,
        });
    }
    Ok(())
}

pub fn moment_sums(k: usize, n_levels: usize) -> Result<MomentSums> {
    check_moment_order(k, MAX_MOMENT_ORDER)?;
    let mut sums = MomentSums {
        noncrossing: 0.0,
        crossing: 0.0,
        max_crossing_kappa: 0,
    };
    for pairs in enumerate_pairings(k)? {
        let (w, crossing, classes) = pairing_weight(&pairs, n_levels);
        if crossing {
            sums.crossing += w;
            sums.max_crossing_kappa = sums.max_crossing_kappa.max(classes);
        } else {
            sums.noncrossing += w;
        }
    }
    Ok(sums)
}

/// `E[Tr V^2k]` from the Wick expansion over all matchings of `2k` factors.
pub fn moment_from_pairings(k: usize, n_levels: usize) -> Result<f64> {
    Ok(moment_sums(k, n_levels)?.total())
}

/// Sample mean and standard error of `Tr V^power` over `samples` draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloMoment {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

fn trace_power(upper: &Mat<C64>, power: usize) -> f64 {
    if power % 2 == 1 {
        // V^odd has vanishing diagonal blocks.
        return 0.0;
    }
    if power == 0 {
        return 2.0 * upper.nrows() as f64;
    }
    // V^2 = diag(A A^dagger, A^dagger A); both blocks have the same trace powers.
    let n = upper.nrows();
    let mut b = Mat::<C64>::zeros(n, n);
    matmul(b.as_mut(), Accum::Replace, upper.as_ref(), upper.adjoint(), C64::new(1.0, 0.0), Par::Seq);
    let mut acc = b.clone();
    for _ in 1..power / 2 {
        let mut next = Mat::<C64>::zeros(n, n);
        matmul(next.as_mut(), Accum::Replace, acc.as_ref(), b.as_ref(), C64::new(1.0, 0.0), Par::Seq);
        acc = next;
    }
    2.0 * (0..n).map(|i| acc[(i, i)].re).sum::<f64>()
}

/// Monte Carlo estimate of `E[Tr V^power]` for `N`-level sites.
pub fn trace_moment_monte_carlo(power: usize, n_levels: usize, samples: usize, seed: u64) -> Result<MonteCarloMoment> {
    if samples < 2 {
        return Err(Error::invalid("samples", "need at least 2 draws for a standard error"));
    }
    let config = SpectrumConfig::new(n_levels, 1.0, 0.0, seed)?;
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|i| trace_power(sample_interaction(&config, member_seed(seed, i)).upper_block(), power))
        .collect();
    let s = samples as f64;
    let mean = values.iter().sum::<f64>() / s;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (s - 1.0);
    Ok(MonteCarloMoment {
        mean,
        stderr: (var / s).sqrt(),
        samples,
    })
}

/// Monte Carlo estimate of `E[Tr V^2k]`.
pub fn moment_monte_carlo(k: usize, n_levels: usize, samples: usize, seed: u64) -> Result<MonteCarloMoment> {
    trace_moment_monte_carlo(2 * k, n_levels, samples, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrderRow {
    pub n_levels: usize,
    pub noncrossing_over_n: f64,
    pub crossing_over_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadingOrderReport {
    pub k: usize,
    pub rows: Vec<LeadingOrderRow>,
    /// `crossing/N` at one size over that at the next, for consecutive sizes.
    pub crossing_ratios: Vec<f64>,
    pub max_crossing_kappa: usize,
    /// Spread of `noncrossing/N` across sizes.
    pub noncrossing_spread: f64,
}

/// Splits `E[Tr V^2k] / N` into its `N`-independent non-crossing part and
/// the crossing remainder, over each size in `sizes`.
pub fn leading_order_check(k: usize, sizes: &[usize]) -> Result<LeadingOrderReport> {
    check_moment_order(k, MAX_LEADING_ORDER)?;
    let mut rows = Vec::with_capacity(sizes.len());
    let mut max_crossing_kappa = 0;
    for &n in sizes {
        let sums = moment_sums(k, n)?;
        max_crossing_kappa = max_crossing_kappa.max(sums.max_crossing_kappa);
        rows.push(LeadingOrderRow {
            n_levels: n,
            noncrossing_over_n: sums.noncrossing / n as f64,
            crossing_over_n: sums.crossing / n as f64,
        });
    }
    let crossing_ratios = rows
        .windows(2)
        .map(|w| w[0].crossing_over_n / w[1].crossing_over_n)
        .collect();
    let nc: Vec<f64> = rows.iter().map(|r| r.noncrossing_over_n).collect();
    let spread = nc.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - nc.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(LeadingOrderReport {
        k,
        rows,
        crossing_ratios,
        max_crossing_kappa,
        noncrossing_spread: if nc.is_empty() { 0.0 } else { spread },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_moment_is_two_n() {
        assert_eq!(moment_from_pairings(1, 8).unwrap(), 16.0);
        for n in [2, 4, 8, 16] {
            assert_eq!(moment_from_pairings(1, n).unwrap(), 2.0 * n as f64);
        }
    }

    #[test]
    fn fourth_moment_by_hand() {
        // Tr V^4 = 2 Tr (A A^dagger)^2; E = 2 (N^2 * 2 / N) = 4N at all N.
        // The crossing matching contributes nothing: its class set admits no
        // alternating site labelling.
        for n in [3, 16, 64] {
            let s = moment_sums(2, n).unwrap();
            assert!((s.noncrossing - 4.0 * n as f64).abs() < 1e-9);
            assert_eq!(s.crossing, 0.0);
        }
    }

    #[test]
    fn site_assignment_counts() {
        // One class per boundary on a closed 2-cycle: two alternating labellings.
        assert_eq!(site_assignments(2, &[0, 1, 0]), 2);
        // All boundaries in one class: no labelling can alternate.
        assert_eq!(site_assignments(1, &[0, 0, 0]), 0);
    }

    #[test]
    fn trace_power_matches_dense_powers() {
        let cfg = SpectrumConfig::new(5, 1.0, 0.0, 0).unwrap();
        let v = sample_interaction(&cfg, 3);
        let dense = v.dense();
        let mut p = dense.clone();
        for power in 2..=6 {
            let mut next = Mat::<C64>::zeros(10, 10);
            matmul(next.as_mut(), Accum::Replace, p.as_ref(), dense.as_ref(), C64::new(1.0, 0.0), Par::Seq);
            p = next;
            let tr: f64 = (0..10).map(|i| p[(i, i)].re).sum();
            let fast = trace_power(v.upper_block(), power);
            if power % 2 == 1 {
                assert!(tr.abs() < 1e-12);
            }
            assert!((tr - fast).abs() < 1e-10 * tr.abs().max(1.0), "power {power}: {tr} vs {fast}");
        }
    }

    #[test]
    fn monte_carlo_second_moment() {
        let mc = moment_monte_carlo(1, 32, 500, 4).unwrap();
        assert!((mc.mean - 64.0).abs() < 3.0 * mc.stderr, "{mc:?}");
        let odd = trace_moment_monte_carlo(3, 32, 50, 4).unwrap();
        assert_eq!(odd.mean, 0.0);
    }

    #[test]
    fn leading_order_small_k() {
        let r = leading_order_check(1, &[16, 32, 64]).unwrap();
        assert!(r.rows.iter().all(|row| row.crossing_over_n == 0.0));
        assert!(leading_order_check(6, &[16]).is_err());
    }
}
