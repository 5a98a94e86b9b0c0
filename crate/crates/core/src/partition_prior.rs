//! Exact partition calculus for the MFM.
//!
//! Integrating the weights out of a symmetric `Dirichlet_K(gamma_K)` gives the
//! probability of a partition with cluster sizes `N_1, ..., N_{K+}`:
//!
//! ```text
//! p(C | K) = K! / (K - K+)! * Gamma(K g) / Gamma(n + K g)
//!            * prod_k Gamma(N_k + g) / Gamma(g),          g = gamma_K
//! ```
//!
//! Summing over all partitions with `j` blocks reduces to a `j`-fold
//! convolution of `w(m) = Gamma(m + g) / (Gamma(g) m!)`, evaluated here by a
//! dynamic programme over rows `j` stored in log space.

use rayon::prelude::*;

use crate::error::{MfmError, Result};
use crate::math::{ln_gamma, log_sum_exp};
use crate::prior_k::{DirichletSchedule, PriorOnK, DEFAULT_TAIL_EPS};

/// Probabilities below this are dropped from the end of a reported vector.
const TRIM_BELOW: f64 = 1e-15;

/// Rows whose log-range stays under this are convolved in shifted linear
/// space; products of two shifted factors then stay above `e^-600`.
const FAST_ROW_RANGE: f64 = 300.0;

/// Sizes of the filled clusters of a partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterSizes {
    counts: Vec<usize>,
    n: usize,
}

impl ClusterSizes {
    pub fn new(counts: Vec<usize>) -> Result<Self> {
        if counts.is_empty() {
            return Err(MfmError::Domain("a partition has at least one cluster".into()));
        }
        if counts.contains(&0) {
            return Err(MfmError::Domain("cluster sizes must be positive".into()));
        }
        let n = counts.iter().sum();
        Ok(ClusterSizes { counts, n })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_plus(&self) -> usize {
        self.counts.len()
    }
}

/// A probability vector over `K+ = 1, ..., J_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct KPlusDistribution {
    probs: Vec<f64>,
    n: usize,
}

impl KPlusDistribution {
    /// Wraps `probs[j - 1] = P(K+ = j)`.
    pub fn from_probs(probs: Vec<f64>, n: usize) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(MfmError::Domain("probabilities must be finite and non-negative".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(MfmError::Domain(format!("probabilities sum to {total}, not 1")));
        }
        Ok(KPlusDistribution { probs, n })
    }

    /// Empirical distribution of observed `K+` values.
    pub fn from_samples(values: impl IntoIterator<Item = usize>, n: usize) -> Result<Self> {
        let mut counts: Vec<usize> = Vec::new();
        let mut total = 0usize;
        for v in values {
            if v == 0 {
                return Err(MfmError::Domain("K+ starts at 1".into()));
            }
            if counts.len() < v {
                counts.resize(v, 0);
            }
            counts[v - 1] += 1;
            total += 1;
        }
        if total == 0 {
            return Err(MfmError::EmptyTrace);
        }
        let probs = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(KPlusDistribution { probs, n })
    }

    /// `probs()[j - 1] = P(K+ = j)`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, j: usize) -> f64 {
        if j == 0 {
            0.0
        } else {
            self.probs.get(j - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j_max(&self) -> usize {
        self.probs.len()
    }

    /// `P(K+ <= j)`.
    pub fn cdf(&self, j: usize) -> f64 {
        self.probs.iter().take(j).sum()
    }

    /// Most probable value, ties to the smallest.
    pub fn mode(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best + 1
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i + 1) as f64 * p)
            .sum()
    }

    /// Entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .probs
            .iter()
            .filter(|&&p| p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    /// Total-variation distance, `0.5 * sum |p - q|`.
    pub fn tv_distance(&self, other: &KPlusDistribution) -> f64 {
        let len = self.j_max().max(other.j_max());
        0.5 * (1..=len)
            .map(|j| (self.prob(j) - other.prob(j)).abs())
            .sum::<f64>()
    }

    fn trimmed(mut self) -> Self {
        while self.probs.len() > 1 && self.probs[self.probs.len() - 1] < TRIM_BELOW {
            self.probs.pop();
        }
        self
    }
}

/// `ln p(C | K)` for a partition with the given cluster sizes.
pub fn log_eppf_given_k(sizes: &ClusterSizes, k: usize, schedule: &DirichletSchedule) -> Result<f64> {
    let k_plus = sizes.k_plus();
    if k < k_plus {
        return Err(MfmError::Domain(format!(
            "K = {k} is smaller than the number of filled components {k_plus}"
        )));
    }
    let g = schedule.gamma_k(k);
    let kg = k as f64 * g;
    let n = sizes.n() as f64;
    let ln_falling = ln_gamma(k as f64 + 1.0) - ln_gamma((k - k_plus) as f64 + 1.0);
    let ln_g = ln_gamma(g);
    let clusters: f64 = sizes
        .counts()
        .iter()
        .map(|&nk| ln_gamma(nk as f64 + g) - ln_g)
        .sum();
    Ok(ln_falling + ln_gamma(kg) - ln_gamma(n + kg) + clusters)
}

/// Log of `w(m) = Gamma(m + g) / (Gamma(g) m!)` for `m = 0..=n` (entry 0 unused).
fn ln_block_weights(gamma: f64, n: usize) -> Vec<f64> {
    let ln_g = ln_gamma(gamma);
    let mut lw = vec![f64::NEG_INFINITY; n + 1];
    for (m, slot) in lw.iter_mut().enumerate().skip(1) {
        let mf = m as f64;
        *slot = ln_gamma(mf + gamma) - ln_g - ln_gamma(mf + 1.0);
    }
    lw
}

/// `ln S_j(n)` for `j = 1..=j_max`, where `S_j(n)` is the `j`-fold
/// convolution of the block weights at `n`.
///
/// Entry `j - 1` of the result holds `ln S_j(n)`.
pub fn ln_block_convolutions(gamma: f64, n: usize, j_max: usize) -> Vec<f64> {
    convolutions(gamma, n, j_max, false)
}

pub(crate) fn convolutions(gamma: f64, n: usize, j_max: usize, force_exact: bool) -> Vec<f64> {
    assert!(n >= 1 && j_max >= 1 && j_max <= n);
    let lw = ln_block_weights(gamma, n);
    let (w_shift, w_lin) = shifted(&lw[1..]);
    let w_fast = !force_exact && w_lin.is_some();

    let mut out = Vec::with_capacity(j_max);
    let mut row = lw.clone();
    out.push(row[n]);
    let mut next = vec![f64::NEG_INFINITY; n + 1];
    let mut terms = Vec::with_capacity(n);
    for j in 2..=j_max {
        // row holds ln S_{j-1}(r), finite for r >= j - 1.
        let (r_shift, r_lin) = shifted(&row[j - 1..]);
        next.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
        match (w_fast, r_lin, &w_lin) {
            (true, Some(r_lin), Some(w_lin)) => {
                // r_lin[i] = exp(row[j - 1 + i] - r_shift); w_lin[i] = exp(lw[1 + i] - w_shift)
                for (m, slot) in next.iter_mut().enumerate().skip(j) {
                    let mut acc = 0.0;
                    for r in (j - 1)..m {
                        acc += r_lin[r - (j - 1)] * w_lin[m - r - 1];
                    }
                    *slot = acc.ln() + r_shift + w_shift;
                }
            }
            _ => {
                for (m, slot) in next.iter_mut().enumerate().skip(j) {
                    terms.clear();
                    terms.extend(((j - 1)..m).map(|r| row[r] + lw[m - r]));
                    *slot = log_sum_exp(&terms);
                }
            }
        }
        std::mem::swap(&mut row, &mut next);
        out.push(row[n]);
    }
    out
}

/// Shifts finite log-values by their maximum and exponentiates, unless the
/// log-range is too wide for linear-space products.
fn shifted(logs: &[f64]) -> (f64, Option<Vec<f64>>) {
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = logs.iter().copied().fold(f64::INFINITY, f64::min);
    if !max.is_finite() || !min.is_finite() || max - min > FAST_ROW_RANGE {
        return (max, None);
    }
    (max, Some(logs.iter().map(|l| (l - max).exp()).collect()))
}

fn ln_choose(k: usize, j: usize) -> f64 {
    ln_gamma(k as f64 + 1.0) - ln_gamma(j as f64 + 1.0) - ln_gamma((k - j) as f64 + 1.0)
}

/// `P(K+ = j | K, n)` evaluated from precomputed `ln S_j(n)`.
fn kplus_probs_from(ln_s: &[f64], k: usize, n: usize, gamma: f64) -> Vec<f64> {
    let kg = k as f64 * gamma;
    let base = ln_gamma(n as f64 + 1.0) + ln_gamma(kg) - ln_gamma(n as f64 + kg);
    let j_max = k.min(n);
    (1..=j_max)
        .map(|j| (ln_choose(k, j) + base + ln_s[j - 1]).exp())
        .collect()
}

/// Conditional law of the number of filled components given `K` and `n`.
pub fn kplus_given_k(k: usize, n: usize, schedule: &DirichletSchedule) -> KPlusDistribution {
    assert!(k >= 1 && n >= 1, "K and n must be positive");
    let gamma = schedule.gamma_k(k);
    let j_max = k.min(n);
    let ln_s = ln_block_convolutions(gamma, n, j_max);
    KPlusDistribution {
        probs: kplus_probs_from(&ln_s, k, n, gamma),
        n,
    }
}

/// Marginal prior on `K+` induced by a prior on `K` and the Dirichlet schedule.
///
/// The sum over `K` runs to the `1e-12` tail-truncation point of the prior,
/// and the result is renormalized.
pub fn induced_kplus_prior(prior: &PriorOnK, schedule: &DirichletSchedule, n: usize) -> KPlusDistribution {
    assert!(n >= 1, "n must be positive");
    let k_lo = prior.support_min();
    let k_hi = prior.tail_truncation(DEFAULT_TAIL_EPS).max(k_lo);
    let j_cap = k_hi.min(n);

    let contributions: Vec<(f64, Vec<f64>)> = match schedule {
        DirichletSchedule::Static { gamma } => {
            let ln_s = ln_block_convolutions(*gamma, n, j_cap);
            (k_lo..=k_hi)
                .map(|k| (prior.ln_pmf(k).exp(), kplus_probs_from(&ln_s, k, n, *gamma)))
                .collect()
        }
        DirichletSchedule::Dynamic { .. } => (k_lo..=k_hi)
            .into_par_iter()
            .map(|k| (prior.ln_pmf(k).exp(), kplus_given_k(k, n, schedule).probs))
            .collect(),
    };

    let mut probs = vec![0.0; j_cap];
    for (weight, cond) in contributions {
        for (slot, p) in probs.iter_mut().zip(cond) {
            *slot += weight * p;
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    KPlusDistribution { probs, n }.trimmed()
}

/// `P(K = k)` for `k = 1..=k_max` as a plain vector, for side-by-side output.
pub fn prior_k_vector(prior: &PriorOnK, k_max: usize) -> Vec<f64> {
    (1..=k_max).map(|k| prior.ln_pmf(k).exp()).collect()
}
