use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use super::{ComponentPriors, MfmModel, Partition, SamplerState};
use crate::error::{MfmError, Result};
use crate::math::{ln_dirichlet_variate, ln_factorial_table, ln_gamma, sample_log_categorical};
use crate::partition_prior::ClusterSizes;
use crate::prior_k::{DirichletSchedule, DEFAULT_TAIL_EPS};

use super::chain::Likelihood;

/// Per-chain sampler bound to a data vector and a model.
///
/// Construction precomputes every part of `ln p(K) + ln p(C | K)` that does
/// not depend on the partition, for all `K` up to the `1e-12` tail point of
/// the prior.
#[derive(Debug, Clone)]
pub struct TelescopingSampler<'a> {
    data: &'a [f64],
    model: MfmModel,
    likelihood: Likelihood,
    k_lo: usize,
    k_hi: usize,
    ln_pmf: Vec<f64>,
    ln_fact: Vec<f64>,
    /// `ln Gamma(K g_K) - ln Gamma(n + K g_K)`, indexed by `K`.
    ln_dir_norm: Vec<f64>,
    /// `ln Gamma(g_K)`, indexed by `K`.
    ln_gamma_g: Vec<f64>,
}

impl<'a> TelescopingSampler<'a> {
    pub fn new(data: &'a [f64], model: MfmModel, likelihood: Likelihood) -> Result<Self> {
        if data.is_empty() {
            return Err(MfmError::EmptyData);
        }
        let prior = model.prior_k;
        let k_lo = prior.support_min();
        let k_hi = prior.tail_truncation(DEFAULT_TAIL_EPS).max(k_lo);
        let n = data.len() as f64;
        let mut ln_pmf = vec![f64::NEG_INFINITY; k_hi + 1];
        let mut ln_dir_norm = vec![f64::NAN; k_hi + 1];
        let mut ln_gamma_g = vec![f64::NAN; k_hi + 1];
        for k in 1..=k_hi {
            let g = model.schedule.gamma_k(k);
            let kg = k as f64 * g;
            ln_pmf[k] = prior.ln_pmf(k);
            ln_dir_norm[k] = ln_gamma(kg) - ln_gamma(n + kg);
            ln_gamma_g[k] = ln_gamma(g);
        }
        Ok(TelescopingSampler {
            data,
            model,
            likelihood,
            k_lo,
            k_hi,
            ln_pmf,
            ln_fact: ln_factorial_table(k_hi),
            ln_dir_norm,
            ln_gamma_g,
        })
    }

    pub fn model(&self) -> &MfmModel {
        &self.model
    }

    pub fn data(&self) -> &[f64] {
        self.data
    }

    /// Largest `K` considered by Step 3 while `K+` stays below it.
    pub fn k_max(&self) -> usize {
        self.k_hi
    }

    /// Step 1: redraw every `S_i` from `P(S_i = k) ∝ eta_k f_N(y_i | mu_k, sigma_k^2)`.
    ///
    /// In flattened mode the density factor is the constant 1. Numerical
    /// errors report the 1-based observation index.
    pub fn update_assignments<R: Rng + ?Sized>(&self, state: &mut SamplerState, rng: &mut R) -> Result<()> {
        let k = state.k();
        state.assignments.resize(self.data.len(), 0);
        match self.likelihood {
            Likelihood::Flattened => {
                for (i, s) in state.assignments.iter_mut().enumerate() {
                    *s = sample_log_categorical(&state.log_weights, rng).ok_or(MfmError::Numerical {
                        observation: i + 1,
                        iteration: None,
                    })?;
                }
            }
            Likelihood::Normal => {
                let offsets: Vec<f64> = (0..k)
                    .map(|j| state.log_weights[j] - 0.5 * (2.0 * PI * state.variances[j]).ln())
                    .collect();
                let half_prec: Vec<f64> = state.variances.iter().map(|v| 0.5 / v).collect();
                let mut lp = vec![0.0; k];
                for (i, &y) in self.data.iter().enumerate() {
                    for j in 0..k {
                        lp[j] = offsets[j] - half_prec[j] * (y - state.means[j]).powi(2);
                    }
                    state.assignments[i] = sample_log_categorical(&lp, rng).ok_or(MfmError::Numerical {
                        observation: i + 1,
                        iteration: None,
                    })?;
                }
            }
        }
        Ok(())
    }

    /// Step 2: conjugate draws for each filled component, precision first.
    ///
    /// In flattened mode the parameters are redrawn from their priors.
    pub fn update_filled_components<R: Rng + ?Sized>(
        &self,
        state: &mut SamplerState,
        partition: &Partition,
        rng: &mut R,
    ) {
        let pri = &self.model.components;
        let mut ys = Vec::new();
        for (group, &label) in partition.groups().iter().zip(partition.labels()) {
            let (mean, precision) = match self.likelihood {
                Likelihood::Flattened => draw_from_prior(pri, rng),
                Likelihood::Normal => {
                    ys.clear();
                    ys.extend(group.iter().map(|&i| self.data[i]));
                    draw_conditional(pri, &ys, state.means[label], rng)
                }
            };
            state.means[label] = mean;
            state.variances[label] = 1.0 / precision;
        }
    }

    /// Unnormalized `ln p(K) + ln p(C | K)` for `K = K+, ..., k_max`.
    ///
    /// Returns the first `K` of the range together with the log-masses.
    pub fn k_conditional(&self, sizes: &ClusterSizes) -> Result<(usize, Vec<f64>)> {
        let k_plus = sizes.k_plus();
        let lo = k_plus.max(self.k_lo);
        let hi = match self.model.prior_k.support_max() {
            Some(max) if k_plus > max => {
                return Err(MfmError::Domain(format!(
                    "{k_plus} filled components exceed the support of {}",
                    self.model.prior_k
                )))
            }
            Some(max) => max.min(self.k_hi),
            None => self.k_hi.max(lo),
        };
        let n = sizes.n() as f64;
        let mut out = Vec::with_capacity(hi - lo + 1);
        let static_terms = match self.model.schedule {
            DirichletSchedule::Static { gamma } => Some(cluster_terms(sizes, gamma, ln_gamma(gamma))),
            DirichletSchedule::Dynamic { .. } => None,
        };
        for k in lo..=hi {
            let (ln_pmf, ln_fact_k, dir_norm, clusters) = if k <= self.k_hi {
                let clusters = static_terms.unwrap_or_else(|| {
                    cluster_terms(sizes, self.model.schedule.gamma_k(k), self.ln_gamma_g[k])
                });
                (self.ln_pmf[k], self.ln_fact[k], self.ln_dir_norm[k], clusters)
            } else {
                // Only reached when K+ itself lies past the precomputed range.
                let g = self.model.schedule.gamma_k(k);
                let kg = k as f64 * g;
                (
                    self.model.prior_k.ln_pmf(k),
                    ln_gamma(k as f64 + 1.0),
                    ln_gamma(kg) - ln_gamma(n + kg),
                    cluster_terms(sizes, g, ln_gamma(g)),
                )
            };
            let ln_fact_rest = match self.ln_fact.get(k - k_plus) {
                Some(v) => *v,
                None => ln_gamma((k - k_plus) as f64 + 1.0),
            };
            let ln_falling = ln_fact_k - ln_fact_rest;
            out.push(ln_pmf + ln_falling + dir_norm + clusters);
        }
        Ok((lo, out))
    }

    /// Step 3: draw `K >= K+` given the partition.
    pub fn update_k<R: Rng + ?Sized>(&self, sizes: &ClusterSizes, rng: &mut R) -> Result<usize> {
        let (lo, log_mass) = self.k_conditional(sizes)?;
        let idx = sample_log_categorical(&log_mass, rng).ok_or_else(|| {
            MfmError::Domain(format!(
                "no admissible K for {} filled components",
                sizes.k_plus()
            ))
        })?;
        Ok(lo + idx)
    }

    /// Step 4: relabel filled components `0..K+` in partition order and append
    /// `K - K+` empty components drawn from the priors.
    pub fn add_empty_components<R: Rng + ?Sized>(
        &self,
        state: &mut SamplerState,
        partition: &Partition,
        k: usize,
        rng: &mut R,
    ) {
        let k_plus = partition.k_plus();
        assert!(k >= k_plus, "K must cover the filled components");
        let mut means = Vec::with_capacity(k);
        let mut variances = Vec::with_capacity(k);
        for (new_label, (group, &old)) in partition.groups().iter().zip(partition.labels()).enumerate() {
            means.push(state.means[old]);
            variances.push(state.variances[old]);
            for &i in group {
                state.assignments[i] = new_label;
            }
        }
        for _ in k_plus..k {
            let (mu, precision) = draw_from_prior(&self.model.components, rng);
            means.push(mu);
            variances.push(1.0 / precision);
        }
        state.means = means;
        state.variances = variances;
        state.log_weights = vec![-(k as f64).ln(); k];
    }

    /// Step 5: `eta ~ Dirichlet(gamma_K + N_1, ..., gamma_K + N_K)`, as log-weights.
    pub fn update_weights<R: Rng + ?Sized>(&self, counts: &[usize], rng: &mut R) -> Vec<f64> {
        let k = counts.len();
        let g = self.model.schedule.gamma_k(k);
        let conc: Vec<f64> = counts.iter().map(|&c| g + c as f64).collect();
        ln_dirichlet_variate(&conc, rng)
    }

    /// One full sweep; returns `K+` of the partition drawn in Step 1.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut SamplerState, rng: &mut R) -> Result<usize> {
        self.update_assignments(state, rng)?;
        let partition = super::partition_of(&state.assignments);
        self.update_filled_components(state, &partition, rng);
        let k = self.update_k(&partition.sizes(), rng)?;
        self.add_empty_components(state, &partition, k, rng);
        let mut counts = partition.counts();
        counts.resize(k, 0);
        state.log_weights = self.update_weights(&counts, rng);
        Ok(partition.k_plus())
    }
}

fn cluster_terms(sizes: &ClusterSizes, g: f64, ln_gamma_g: f64) -> f64 {
    sizes
        .counts()
        .iter()
        .map(|&nk| ln_gamma(nk as f64 + g) - ln_gamma_g)
        .sum()
}

/// `(mu, precision)` from `N(b0, B0)` and `Gamma(c0, C0)`.
fn draw_from_prior<R: Rng + ?Sized>(pri: &ComponentPriors, rng: &mut R) -> (f64, f64) {
    let precision = gamma_rate(pri.precision_shape, pri.precision_rate, rng);
    let mu = Normal::new(pri.mean_location, pri.mean_variance.sqrt())
        .expect("finite prior")
        .sample(rng);
    (mu, precision)
}

/// Precision given the current mean, then the mean given that precision.
pub(crate) fn draw_conditional<R: Rng + ?Sized>(
    pri: &ComponentPriors,
    ys: &[f64],
    current_mean: f64,
    rng: &mut R,
) -> (f64, f64) {
    let (shape, rate) = pri.precision_conditional(ys, current_mean);
    let precision = gamma_rate(shape, rate, rng);
    let ybar = ys.iter().sum::<f64>() / ys.len() as f64;
    let (b, big_b) = pri.mean_conditional(precision, ys.len(), ybar);
    let mu = Normal::new(b, big_b.sqrt()).expect("finite posterior").sample(rng);
    (mu, precision)
}

/// Gamma draw in the shape-rate parameterization, kept strictly positive.
fn gamma_rate<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("positive gamma parameters")
        .sample(rng)
        .max(f64::MIN_POSITIVE)
}
