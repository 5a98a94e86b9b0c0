//! Priors on the number of mixture components `K` and the Dirichlet
//! parameter schedule `gamma_K`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use statrs::function::beta::ln_beta;

use crate::error::{MfmError, Result};
use crate::math::ln_gamma;

/// Tail mass below which unbounded priors are truncated.
pub const DEFAULT_TAIL_EPS: f64 = 1e-12;

/// Relative tolerance on the neglected tail of the moment series.
const MOMENT_REL_TOL: f64 = 1e-13;
const MAX_SERIES_TERMS: usize = 1_000_000_000;

/// A discrete distribution on `K >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorOnK {
    /// Uniform on `{low, ..., high}`.
    Uniform { low: usize, high: usize },
    /// Poisson(lambda) conditioned on `K >= 1`.
    ZeroTruncPoisson { lambda: f64 },
    /// `K - 1 ~ Geom(p)` counting failures, so `P(K = k) = p (1 - p)^(k-1)`.
    ShiftedGeometric { p: f64 },
    /// `K - 1 ~ BNB(alpha, a, b)`.
    ShiftedBnb { alpha: f64, a: f64, b: f64 },
}

impl PriorOnK {
    pub fn uniform(low: usize, high: usize) -> Result<Self> {
        if low == 0 || high < low {
            return Err(MfmError::Domain(format!(
                "uniform prior on K needs 1 <= low <= high, got ({low}, {high})"
            )));
        }
        Ok(PriorOnK::Uniform { low, high })
    }

    pub fn zero_trunc_poisson(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(MfmError::Domain(format!("Poisson rate must be positive, got {lambda}")));
        }
        Ok(PriorOnK::ZeroTruncPoisson { lambda })
    }

    pub fn shifted_geometric(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(MfmError::Domain(format!("geometric p must lie in (0, 1], got {p}")));
        }
        Ok(PriorOnK::ShiftedGeometric { p })
    }

    pub fn shifted_bnb(alpha: f64, a: f64, b: f64) -> Result<Self> {
        let ok = |x: f64| x > 0.0 && x.is_finite();
        if !(ok(alpha) && ok(a) && ok(b)) {
            return Err(MfmError::Domain(format!(
                "BNB parameters must be positive, got ({alpha}, {a}, {b})"
            )));
        }
        Ok(PriorOnK::ShiftedBnb { alpha, a, b })
    }

    /// The four priors compared in the Galaxy study, in grid order.
    pub fn study_priors() -> [PriorOnK; 4] {
        [
            PriorOnK::ZeroTruncPoisson { lambda: 3.0 },
            PriorOnK::ShiftedBnb {
                alpha: 1.0,
                a: 4.0,
                b: 3.0,
            },
            PriorOnK::ShiftedGeometric { p: 0.1 },
            PriorOnK::Uniform { low: 1, high: 30 },
        ]
    }

    pub fn support_min(&self) -> usize {
        match *self {
            PriorOnK::Uniform { low, .. } => low,
            _ => 1,
        }
    }

    /// Largest value with positive mass, if the support is bounded.
    pub fn support_max(&self) -> Option<usize> {
        match *self {
            PriorOnK::Uniform { high, .. } => Some(high),
            PriorOnK::ShiftedGeometric { p: 1.0 } => Some(1),
            _ => None,
        }
    }

    /// `ln P(K = k)`; `-inf` outside the support (including `k = 0`).
    pub fn ln_pmf(&self, k: usize) -> f64 {
        if k == 0 {
            return f64::NEG_INFINITY;
        }
        let kf = k as f64;
        match *self {
            PriorOnK::Uniform { low, high } => {
                if (low..=high).contains(&k) {
                    -((high - low + 1) as f64).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            PriorOnK::ZeroTruncPoisson { lambda } => {
                kf * lambda.ln() - lambda - ln_gamma(kf + 1.0) - (-(-lambda).exp_m1()).ln()
            }
            PriorOnK::ShiftedGeometric { p } => {
                if p == 1.0 {
                    return if k == 1 { 0.0 } else { f64::NEG_INFINITY };
                }
                p.ln() + (kf - 1.0) * (-p).ln_1p()
            }
            PriorOnK::ShiftedBnb { alpha, a, b } => {
                let j = kf - 1.0;
                ln_gamma(alpha + j) - ln_gamma(alpha) - ln_gamma(j + 1.0)
                    + ln_beta(alpha + a, j + b)
                    - ln_beta(a, b)
            }
        }
    }

    /// `P(K = k)`.
    pub fn pmf(&self, k: usize) -> Result<f64> {
        if k < 1 {
            return Err(MfmError::Domain("the number of components starts at 1".into()));
        }
        Ok(self.ln_pmf(k).exp())
    }

    /// `P(K = k + 1) / P(K = k)` for `k` in the support of an unbounded prior.
    fn pmf_ratio(&self, k: usize) -> f64 {
        let kf = k as f64;
        match *self {
            PriorOnK::Uniform { high, .. } => {
                if k < high {
                    1.0
                } else {
                    0.0
                }
            }
            PriorOnK::ZeroTruncPoisson { lambda } => lambda / (kf + 1.0),
            PriorOnK::ShiftedGeometric { p } => 1.0 - p,
            PriorOnK::ShiftedBnb { alpha, a, b } => {
                let j = kf - 1.0;
                (alpha + j) * (j + b) / ((j + 1.0) * (alpha + a + j + b))
            }
        }
    }

    /// `P(K > k)`.
    pub fn tail(&self, k: usize) -> f64 {
        match *self {
            PriorOnK::Uniform { low, high } => {
                if k < low {
                    1.0
                } else if k >= high {
                    0.0
                } else {
                    (high - k) as f64 / (high - low + 1) as f64
                }
            }
            PriorOnK::ShiftedGeometric { p } => (k as f64 * (-p).ln_1p()).exp(),
            _ => {
                let mut cdf = NeumaierSum::default();
                for j in 1..=k {
                    cdf.add(self.ln_pmf(j).exp());
                }
                (1.0 - cdf.value()).max(0.0)
            }
        }
    }

    /// Smallest `k_max` with `P(K > k_max) < eps`.
    pub fn tail_truncation(&self, eps: f64) -> usize {
        assert!(eps > 0.0 && eps < 1.0, "tail mass must lie in (0, 1)");
        match *self {
            PriorOnK::Uniform { low, high } => (low.max(1)..=high)
                .find(|&k| self.tail(k) < eps)
                .unwrap_or(high),
            PriorOnK::ShiftedGeometric { p } => {
                if p == 1.0 {
                    return 1;
                }
                // (1 - p)^k < eps  <=>  k > ln(eps) / ln(1 - p)
                let bound = eps.ln() / (-p).ln_1p();
                let mut k = bound.floor().max(1.0) as usize;
                while k > 1 && self.tail(k - 1) < eps {
                    k -= 1;
                }
                while self.tail(k) >= eps {
                    k += 1;
                }
                k
            }
            _ => {
                let mut cdf = NeumaierSum::default();
                let mut k = 0;
                loop {
                    k += 1;
                    let term = self.ln_pmf(k).exp();
                    cdf.add(term);
                    let tail = 1.0 - cdf.value();
                    // The second clause stops at the rounding floor of the cdf.
                    if tail < eps || (k > 1 && term < f64::EPSILON * eps) {
                        return k;
                    }
                }
            }
        }
    }

    /// Mean and variance of `K`.
    ///
    /// Finite supports are summed exactly; unbounded ones by series summation
    /// until the estimated neglected tail of the second-moment series is below
    /// a relative `1e-13`. Infinite moments (BNB with `a <= 2`) are reported
    /// as `f64::INFINITY`.
    pub fn moments(&self) -> (f64, f64) {
        if let PriorOnK::ShiftedBnb { alpha, a, b } = *self {
            if a <= 1.0 {
                return (f64::INFINITY, f64::INFINITY);
            }
            if a <= 2.0 {
                return (1.0 + alpha * b / (a - 1.0), f64::INFINITY);
            }
        }
        if let PriorOnK::Uniform { low, high } = *self {
            let n = (high - low + 1) as f64;
            let mean = (low..=high).map(|k| k as f64).sum::<f64>() / n;
            let var = (low..=high).map(|k| (k as f64 - mean).powi(2)).sum::<f64>() / n;
            return (mean, var);
        }

        let mut k = 1usize;
        let mut p = self.ln_pmf(1).exp();
        let (mut s1, mut s2) = (NeumaierSum::default(), NeumaierSum::default());
        while k < MAX_SERIES_TERMS {
            let kf = k as f64;
            s1.add(kf * p);
            s2.add(kf * kf * p);
            let r = self.pmf_ratio(k);
            // Ratio of consecutive second-moment terms.
            let r2 = r * ((kf + 1.0) / kf).powi(2);
            let next = p * r;
            if r2 < 1.0 {
                let tail_est = (kf + 1.0).powi(2) * next / (1.0 - r2);
                if tail_est < MOMENT_REL_TOL * s2.value() {
                    break;
                }
            }
            p = next;
            k += 1;
        }
        let mean = s1.value();
        (mean, s2.value() - mean * mean)
    }

    /// Inverse-cdf draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut cdf = 0.0;
        let mut k = self.support_min();
        loop {
            cdf += self.ln_pmf(k).exp();
            if u < cdf || self.support_max() == Some(k) {
                return k;
            }
            if cdf >= 1.0 - f64::EPSILON && self.ln_pmf(k + 1).exp() < f64::EPSILON {
                return k;
            }
            k += 1;
        }
    }

    /// Short lowercase tag used in identifiers and CSV columns.
    pub fn family(&self) -> &'static str {
        match self {
            PriorOnK::Uniform { .. } => "uniform",
            PriorOnK::ZeroTruncPoisson { .. } => "trpois",
            PriorOnK::ShiftedGeometric { .. } => "geom",
            PriorOnK::ShiftedBnb { .. } => "bnb",
        }
    }
}

impl fmt::Display for PriorOnK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            PriorOnK::Uniform { low, high } => write!(f, "uniform({low},{high})"),
            PriorOnK::ZeroTruncPoisson { lambda } => write!(f, "trpois({lambda})"),
            PriorOnK::ShiftedGeometric { p } => write!(f, "geom({p})"),
            PriorOnK::ShiftedBnb { alpha, a, b } => write!(f, "bnb({alpha},{a},{b})"),
        }
    }
}

impl FromStr for PriorOnK {
    type Err = MfmError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        let nums = |expected: usize| -> Result<Vec<f64>> {
            if args.len() != expected {
                return Err(MfmError::Config(format!(
                    "{name} takes {expected} argument(s), got {:?}",
                    s.trim()
                )));
            }
            args.iter()
                .map(|a| {
                    a.parse::<f64>()
                        .map_err(|_| MfmError::Config(format!("bad number {a:?} in {s:?}")))
                })
                .collect()
        };
        match name.as_str() {
            "uniform" | "unif" | "u" => {
                let v = nums(2)?;
                let as_count = |x: f64| -> Result<usize> {
                    if x.fract() == 0.0 && x >= 1.0 {
                        Ok(x as usize)
                    } else {
                        Err(MfmError::Config(format!("uniform bounds must be integers >= 1 in {s:?}")))
                    }
                };
                PriorOnK::uniform(as_count(v[0])?, as_count(v[1])?)
            }
            "trpois" | "poisson" => PriorOnK::zero_trunc_poisson(nums(1)?[0]),
            "geom" | "geometric" => PriorOnK::shifted_geometric(nums(1)?[0]),
            "bnb" => {
                let v = nums(3)?;
                PriorOnK::shifted_bnb(v[0], v[1], v[2])
            }
            _ => Err(MfmError::Config(format!("unknown prior on K: {s:?}"))),
        }
    }
}

/// Static or dynamic choice of the Dirichlet parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScheduleKind {
    Static,
    Dynamic,
}

impl ScheduleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleKind::Static => "static",
            ScheduleKind::Dynamic => "dynamic",
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleKind {
    type Err = MfmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "static" => Ok(ScheduleKind::Static),
            "dynamic" => Ok(ScheduleKind::Dynamic),
            other => Err(MfmError::Config(format!("unknown MFM kind {other:?}"))),
        }
    }
}

/// `gamma_K = gamma` (static) or `gamma_K = alpha / K` (dynamic).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DirichletSchedule {
    Static { gamma: f64 },
    Dynamic { alpha: f64 },
}

impl DirichletSchedule {
    pub fn new(kind: ScheduleKind, value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(MfmError::Domain(format!(
                "Dirichlet parameter must be positive, got {value}"
            )));
        }
        Ok(match kind {
            ScheduleKind::Static => DirichletSchedule::Static { gamma: value },
            ScheduleKind::Dynamic => DirichletSchedule::Dynamic { alpha: value },
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        match self {
            DirichletSchedule::Static { .. } => ScheduleKind::Static,
            DirichletSchedule::Dynamic { .. } => ScheduleKind::Dynamic,
        }
    }

    /// `gamma` or `alpha`.
    pub fn value(&self) -> f64 {
        match *self {
            DirichletSchedule::Static { gamma } => gamma,
            DirichletSchedule::Dynamic { alpha } => alpha,
        }
    }

    pub fn gamma_k(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        match *self {
            DirichletSchedule::Static { gamma } => gamma,
            DirichletSchedule::Dynamic { alpha } => alpha / k as f64,
        }
    }
}

impl fmt::Display for DirichletSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind(), self.value())
    }
}

impl FromStr for DirichletSchedule {
    type Err = MfmError;

    fn from_str(s: &str) -> Result<Self> {
        let (name, args) = parse_call(s)?;
        if args.len() != 1 {
            return Err(MfmError::Config(format!("expected kind(value), got {s:?}")));
        }
        let v = args[0]
            .parse::<f64>()
            .map_err(|_| MfmError::Config(format!("bad number in {s:?}")))?;
        DirichletSchedule::new(name.parse()?, v)
    }
}

/// Splits `"name(a, b)"` into `("name", ["a", "b"])`.
fn parse_call(s: &str) -> Result<(String, Vec<String>)> {
    let t = s.trim();
    let open = t
        .find('(')
        .ok_or_else(|| MfmError::Config(format!("expected name(args), got {s:?}")))?;
    if !t.ends_with(')') {
        return Err(MfmError::Config(format!("missing ')' in {s:?}")));
    }
    let name = t[..open].trim().to_ascii_lowercase();
    let inner = &t[open + 1..t.len() - 1];
    let args = inner.split(',').map(|a| a.trim().to_string()).collect();
    Ok((name, args))
}

#[derive(Default, Clone, Copy)]
struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
