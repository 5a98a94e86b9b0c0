//! Telescoping sampler for the univariate Gaussian MFM.
//!
//! One sweep cycles through
//!
//! 1. assignments `S_i` given weights and component parameters,
//! 2. conjugate updates of the filled components (precision, then mean),
//! 3. `K` given the partition, from `p(K | C) ∝ p(C | K) p(K)`,
//! 4. relabelling of the filled components and `K - K+` fresh empty ones,
//! 5. weights from `Dirichlet(gamma_K + N_k)`.
//!
//! Component labels are 0-based internally.

mod chain;
mod kmeans;
mod steps;

pub use chain::{init_state, run_chain, ChainTrace, Likelihood, Protocol, TraceDraw};
pub use kmeans::lloyd_1d;
pub use steps::TelescopingSampler;

use crate::error::{MfmError, Result};
use crate::math::log_sum_exp;
use crate::partition_prior::ClusterSizes;
use crate::prior_k::{DirichletSchedule, PriorOnK};

/// Priors on the component parameters: `mu_k ~ N(b0, B0)` and
/// `sigma_k^-2 ~ Gamma(c0, C0)` (shape, rate).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentPriors {
    pub mean_location: f64,
    pub mean_variance: f64,
    pub precision_shape: f64,
    pub precision_rate: f64,
}

impl ComponentPriors {
    pub fn new(b0: f64, big_b0: f64, c0: f64, big_c0: f64) -> Result<Self> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !b0.is_finite() || !positive(big_b0) || !positive(c0) || !positive(big_c0) {
            return Err(MfmError::Domain(format!(
                "component priors need finite b0 and positive B0, c0, C0; got ({b0}, {big_b0}, {c0}, {big_c0})"
            )));
        }
        Ok(ComponentPriors {
            mean_location: b0,
            mean_variance: big_b0,
            precision_shape: c0,
            precision_rate: big_c0,
        })
    }

    /// Prior expectation of the precision, `c0 / C0`.
    pub fn expected_precision(&self) -> f64 {
        self.precision_shape / self.precision_rate
    }

    /// Shape and rate of `sigma_k^-2 | mu_k, C_k, y`:
    /// `c_k = c0 + N_k / 2`, `C_k = C0 + sum (y_i - mu_k)^2 / 2`.
    pub fn precision_conditional(&self, ys: &[f64], mu: f64) -> (f64, f64) {
        let ss: f64 = ys.iter().map(|y| (y - mu).powi(2)).sum();
        (
            self.precision_shape + 0.5 * ys.len() as f64,
            self.precision_rate + 0.5 * ss,
        )
    }

    /// Mean and variance `(b_k, B_k)` of `mu_k | sigma_k^-2, C_k, y`.
    pub fn mean_conditional(&self, precision: f64, count: usize, ybar: f64) -> (f64, f64) {
        let nk = count as f64;
        let var = 1.0 / (1.0 / self.mean_variance + nk * precision);
        let mean = var * (self.mean_location / self.mean_variance + precision * nk * ybar);
        (mean, var)
    }
}

/// Everything needed to define the target posterior apart from the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfmModel {
    pub prior_k: PriorOnK,
    pub schedule: DirichletSchedule,
    pub components: ComponentPriors,
}

/// Current values of `(K, eta, mu, sigma^2, S)`.
///
/// Weights are held as logarithms so that components with weight below the
/// smallest positive double remain representable.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerState {
    pub log_weights: Vec<f64>,
    pub means: Vec<f64>,
    pub variances: Vec<f64>,
    pub assignments: Vec<usize>,
}

impl SamplerState {
    pub fn k(&self) -> usize {
        self.means.len()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn k_plus(&self) -> usize {
        partition_of(&self.assignments).k_plus()
    }

    /// Checks the structural invariants of a state.
    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        let bad = |m: &str| Err(MfmError::Domain(format!("invalid sampler state: {m}")));
        if k == 0 {
            return bad("no components");
        }
        if self.log_weights.len() != k || self.variances.len() != k {
            return bad("component vectors differ in length");
        }
        if self.log_weights.iter().any(|l| !l.is_finite()) {
            return bad("non-positive weight");
        }
        let total = log_sum_exp(&self.log_weights).exp();
        if (total - 1.0).abs() > 1e-10 {
            return bad("weights do not sum to one");
        }
        if self.variances.iter().any(|v| !(*v > 0.0)) {
            return bad("non-positive variance");
        }
        if self.means.iter().any(|m| !m.is_finite()) {
            return bad("non-finite mean");
        }
        if self.assignments.iter().any(|&s| s >= k) {
            return bad("assignment label out of range");
        }
        Ok(())
    }
}

/// Partition of the observation indices induced by an assignment vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    groups: Vec<Vec<usize>>,
    labels: Vec<usize>,
}

impl Partition {
    /// Index sets, ordered by their smallest member.
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Component label occupied by each group.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn k_plus(&self) -> usize {
        self.groups.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn sizes(&self) -> ClusterSizes {
        ClusterSizes::new(self.counts()).expect("groups are non-empty")
    }
}

/// Groups observations by label; empty labels disappear.
pub fn partition_of(assignments: &[usize]) -> Partition {
    let max_label = assignments.iter().copied().max().map_or(0, |m| m + 1);
    let mut slot: Vec<Option<usize>> = vec![None; max_label];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut labels = Vec::new();
    for (i, &s) in assignments.iter().enumerate() {
        let g = *slot[s].get_or_insert_with(|| {
            groups.push(Vec::new());
            labels.push(s);
            groups.len() - 1
        });
        groups[g].push(i);
    }
    Partition { groups, labels }
}
