//! Small numerical helpers shared across modules.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

pub use statrs::function::gamma::ln_gamma;

/// `ln(sum(exp(xs)))`, returning `-inf` for an empty slice or all `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Draws an index from unnormalized log-probabilities.
///
/// Returns `None` when no entry has a finite log-probability.
pub fn sample_log_categorical<R: Rng + ?Sized>(log_probs: &[f64], rng: &mut R) -> Option<usize> {
    let max = log_probs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let total: f64 = log_probs.iter().map(|lp| (lp - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = 0;
    for (i, lp) in log_probs.iter().enumerate() {
        let w = (lp - max).exp();
        if w > 0.0 {
            last = i;
            if u < w {
                return Some(i);
            }
            u -= w;
        }
    }
    // Rounding left a sliver of mass past the end.
    Some(last)
}

/// Logarithm of a Gamma(shape, 1) variate.
///
/// For shape < 1 the draw is formed as `ln G(shape + 1) + ln(U) / shape`,
/// which stays finite where the variate itself would underflow to zero.
pub fn ln_gamma_variate<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    debug_assert!(shape > 0.0);
    if shape >= 1.0 {
        Gamma::new(shape, 1.0).expect("positive shape").sample(rng).ln()
    } else {
        let g = Gamma::new(shape + 1.0, 1.0)
            .expect("positive shape")
            .sample(rng);
        // 1 - U lies in (0, 1].
        let u = 1.0 - rng.random::<f64>();
        g.ln() + u.ln() / shape
    }
}

/// Log-weights of a Dirichlet(concentrations) draw; `log_sum_exp` of the
/// result is zero.
pub fn ln_dirichlet_variate<R: Rng + ?Sized>(concentrations: &[f64], rng: &mut R) -> Vec<f64> {
    let mut logs: Vec<f64> = concentrations
        .iter()
        .map(|&a| ln_gamma_variate(a, rng))
        .collect();
    let norm = log_sum_exp(&logs);
    for l in &mut logs {
        *l -= norm;
    }
    logs
}

/// `ln(k!)` for `k = 0..=max`.
pub fn ln_factorial_table(max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(max + 1);
    let mut acc = 0.0;
    table.push(0.0);
    for k in 1..=max {
        acc += (k as f64).ln();
        table.push(acc);
    }
    table
}
