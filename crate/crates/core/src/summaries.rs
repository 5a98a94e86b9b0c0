//! Posterior summaries of `K+`, marginal averages over a factorial grid, and
//! prior density curves for the component parameters.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;

use crate::error::{MfmError, Result};
use crate::harness::MfmSetting;
use crate::math::ln_gamma;
use crate::sampler::ChainTrace;

/// Empirical posterior of `K+`.
#[derive(Debug, Clone, PartialEq)]
pub struct KPlusPosteriorSummary {
    /// Relative frequency of each observed `K+`.
    pub histogram: BTreeMap<usize, f64>,
    /// Most frequent `K+`, ties to the smallest.
    pub mode: usize,
    /// Entropy in nats.
    pub entropy: f64,
}

impl KPlusPosteriorSummary {
    pub fn from_values(values: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut total = 0usize;
        for v in values {
            *counts.entry(v).or_default() += 1;
            total += 1;
        }
        if total == 0 {
            return Err(MfmError::EmptyTrace);
        }
        // BTreeMap iterates in increasing K+, so strict '>' keeps the smallest on ties.
        let mut mode = 0;
        let mut best = 0;
        for (&k, &c) in &counts {
            if c > best {
                best = c;
                mode = k;
            }
        }
        let histogram: BTreeMap<usize, f64> = counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / total as f64))
            .collect();
        let entropy = entropy(histogram.values().copied());
        Ok(KPlusPosteriorSummary {
            histogram,
            mode,
            entropy,
        })
    }

    /// `[[k, p], ...]` in increasing `k`.
    pub fn hist_json(&self) -> String {
        let pairs: Vec<serde_json::Value> = self
            .histogram
            .iter()
            .map(|(k, p)| serde_json::json!([k, p]))
            .collect();
        serde_json::Value::Array(pairs).to_string()
    }
}

pub fn summarize_kplus(trace: &ChainTrace) -> Result<KPlusPosteriorSummary> {
    KPlusPosteriorSummary::from_values(trace.k_plus_values())
}

/// `-sum p ln p` with `0 ln 0 = 0`.
pub fn entropy(probs: impl IntoIterator<Item = f64>) -> f64 {
    let h: f64 = probs
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum();
    h.max(0.0)
}

/// Design factors of the prior-sensitivity grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    Kind,
    DirichletValue,
    PriorK,
    MeanVariance,
    PrecisionRate,
}

impl Factor {
    pub const ALL: [Factor; 5] = [
        Factor::Kind,
        Factor::DirichletValue,
        Factor::PriorK,
        Factor::MeanVariance,
        Factor::PrecisionRate,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Factor::Kind => "mfm",
            Factor::DirichletValue => "gamma_or_alpha",
            Factor::PriorK => "prior_k",
            Factor::MeanVariance => "B0",
            Factor::PrecisionRate => "C0",
        }
    }

    pub fn level(&self, s: &MfmSetting) -> String {
        match self {
            Factor::Kind => s.schedule.kind().to_string(),
            Factor::DirichletValue => s.schedule.value().to_string(),
            Factor::PriorK => s.prior_k.to_string(),
            Factor::MeanVariance => s.mean_variance.to_string(),
            Factor::PrecisionRate => s.precision_rate.to_string(),
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalRow {
    pub factor: Factor,
    pub level: String,
    pub average_mode: f64,
}

/// Average posterior mode for each level of each factor.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalTable {
    pub rows: Vec<MarginalRow>,
}

impl MarginalTable {
    pub fn average(&self, factor: Factor, level: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.factor == factor && r.level == level)
            .map(|r| r.average_mode)
    }

    /// Rows of one factor in grid order.
    pub fn factor_rows(&self, factor: Factor) -> impl Iterator<Item = &MarginalRow> {
        self.rows.iter().filter(move |r| r.factor == factor)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("factor,level,average_mode\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.factor, csv_field(&r.level), r.average_mode));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Marginal averages of the posterior mode over a complete factorial grid.
pub fn marginal_table(results: &[(MfmSetting, usize)]) -> Result<MarginalTable> {
    if results.is_empty() {
        return Err(MfmError::IncompleteGrid(vec!["no results".into()]));
    }
    // Levels in order of first appearance.
    let mut levels: Vec<Vec<String>> = vec![Vec::new(); Factor::ALL.len()];
    for (s, _) in results {
        for (f, lv) in Factor::ALL.iter().zip(levels.iter_mut()) {
            let l = f.level(s);
            if !lv.contains(&l) {
                lv.push(l);
            }
        }
    }
    let mut seen: BTreeSet<Vec<String>> = BTreeSet::new();
    for (s, _) in results {
        let cell: Vec<String> = Factor::ALL.iter().map(|f| f.level(s)).collect();
        if !seen.insert(cell.clone()) {
            return Err(MfmError::Config(format!("duplicate grid cell {}", cell.join(" / "))));
        }
    }
    let mut missing = Vec::new();
    let mut cell = Vec::with_capacity(levels.len());
    collect_missing(&levels, &mut cell, &seen, &mut missing);
    if !missing.is_empty() {
        return Err(MfmError::IncompleteGrid(missing));
    }

    let mut rows = Vec::new();
    for (f, lv) in Factor::ALL.iter().zip(&levels) {
        for level in lv {
            let modes: Vec<usize> = results
                .iter()
                .filter(|(s, _)| &f.level(s) == level)
                .map(|(_, m)| *m)
                .collect();
            rows.push(MarginalRow {
                factor: *f,
                level: level.clone(),
                average_mode: modes.iter().sum::<usize>() as f64 / modes.len() as f64,
            });
        }
    }
    Ok(MarginalTable { rows })
}

fn collect_missing(
    levels: &[Vec<String>],
    cell: &mut Vec<String>,
    seen: &BTreeSet<Vec<String>>,
    missing: &mut Vec<String>,
) {
    if cell.len() == levels.len() {
        if !seen.contains(cell) {
            missing.push(cell.join(" / "));
        }
        return;
    }
    for l in &levels[cell.len()] {
        cell.push(l.clone());
        collect_missing(levels, cell, seen, missing);
        cell.pop();
    }
}

/// Normal(b0, B0) density on a grid.
pub fn prior_mean_density_curve(b0: f64, big_b0: f64, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(big_b0 > 0.0) {
        return Err(MfmError::Domain(format!("B0 must be positive, got {big_b0}")));
    }
    let norm = (2.0 * PI * big_b0).sqrt();
    Ok(grid
        .iter()
        .map(|&x| (x, (-(x - b0).powi(2) / (2.0 * big_b0)).exp() / norm))
        .collect())
}

/// Density of `T = 4 sigma` when `sigma^-2 ~ Gamma(c0, C0)` (shape, rate):
/// `f_T(t) = f_G(16 / t^2) * 32 / t^3`.
pub fn prior_4sigma_density_curve(c0: f64, big_c0: f64, grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(c0 > 0.0 && big_c0 > 0.0) {
        return Err(MfmError::Domain(format!("c0 and C0 must be positive, got {c0}, {big_c0}")));
    }
    if let Some(bad) = grid.iter().find(|&&t| !(t > 0.0)) {
        return Err(MfmError::Domain(format!("4 sigma grid must be positive, got {bad}")));
    }
    let ln_norm = c0 * big_c0.ln() - ln_gamma(c0);
    Ok(grid
        .iter()
        .map(|&t| {
            let g = 16.0 / (t * t);
            let ln_fg = ln_norm + (c0 - 1.0) * g.ln() - big_c0 * g;
            (t, (ln_fg + 32f64.ln() - 3.0 * t.ln()).exp())
        })
        .collect())
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}
