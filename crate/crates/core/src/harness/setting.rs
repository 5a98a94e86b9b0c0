use std::fmt;
use std::str::FromStr;

use crate::dataset::Dataset;
use crate::error::{MfmError, Result};
use crate::prior_k::{DirichletSchedule, PriorOnK, ScheduleKind};
use crate::sampler::{ComponentPriors, MfmModel};

/// Default shape of the Gamma prior on the component precisions.
pub const DEFAULT_PRECISION_SHAPE: f64 = 2.0;

/// How the prior location `b0` of the component means is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum B0Rule {
    /// Midpoint of the observed range.
    #[default]
    DataMidpoint,
    Explicit(f64),
}

impl fmt::Display for B0Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            B0Rule::DataMidpoint => f.write_str("midpoint"),
            B0Rule::Explicit(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for B0Rule {
    type Err = MfmError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "midpoint" || s == "data-midpoint" {
            return Ok(B0Rule::DataMidpoint);
        }
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(B0Rule::Explicit(v)),
            _ => Err(MfmError::Config(format!("b0 must be \"midpoint\" or a number, got {s:?}"))),
        }
    }
}

/// One complete prior configuration of the study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfmSetting {
    pub prior_k: PriorOnK,
    pub schedule: DirichletSchedule,
    /// `B0`, variance of the prior on the component means.
    pub mean_variance: f64,
    /// `C0`, rate of the Gamma prior on the component precisions.
    pub precision_rate: f64,
    /// `c0`, shape of the Gamma prior on the component precisions.
    pub precision_shape: f64,
    pub b0_rule: B0Rule,
}

impl MfmSetting {
    pub fn new(prior_k: PriorOnK, schedule: DirichletSchedule, mean_variance: f64, precision_rate: f64) -> Result<Self> {
        let s = MfmSetting {
            prior_k,
            schedule,
            mean_variance,
            precision_rate,
            precision_shape: DEFAULT_PRECISION_SHAPE,
            b0_rule: B0Rule::DataMidpoint,
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.mean_variance) || !positive(self.precision_rate) || !positive(self.precision_shape) {
            return Err(MfmError::Config(format!(
                "B0, C0 and c0 must be positive, got {}, {}, {}",
                self.mean_variance, self.precision_rate, self.precision_shape
            )));
        }
        Ok(())
    }

    /// Stable identifier such as `dynamic_a0.01_bnb(1,4,3)_B0-20_C0-5`.
    ///
    /// Non-default `c0` and explicit `b0` append `_c0-<v>` and `_b0-<v>`.
    /// [`MfmSetting::from_id`] inverts it.
    pub fn setting_id(&self) -> String {
        let tag = match self.schedule.kind() {
            ScheduleKind::Static => "g",
            ScheduleKind::Dynamic => "a",
        };
        let mut id = format!(
            "{}_{}{}_{}_B0-{}_C0-{}",
            self.schedule.kind(),
            tag,
            self.schedule.value(),
            self.prior_k,
            self.mean_variance,
            self.precision_rate
        );
        if self.precision_shape != DEFAULT_PRECISION_SHAPE {
            id.push_str(&format!("_c0-{}", self.precision_shape));
        }
        if let B0Rule::Explicit(b0) = self.b0_rule {
            id.push_str(&format!("_b0-{b0}"));
        }
        id
    }

    pub fn from_id(id: &str) -> Result<Self> {
        let bad = || MfmError::Config(format!("malformed setting id {id:?}"));
        let parts: Vec<&str> = id.split('_').collect();
        if parts.len() < 5 {
            return Err(bad());
        }
        let kind: ScheduleKind = parts[0].parse()?;
        let want_tag = match kind {
            ScheduleKind::Static => 'g',
            ScheduleKind::Dynamic => 'a',
        };
        let value = parts[1]
            .strip_prefix(want_tag)
            .and_then(|v| v.parse::<f64>().ok())
            .ok_or_else(bad)?;
        let prior_k: PriorOnK = parts[2].parse()?;
        let field = |part: &str, prefix: &str| -> Result<f64> {
            part.strip_prefix(prefix)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(bad)
        };
        let mut s = MfmSetting {
            prior_k,
            schedule: DirichletSchedule::new(kind, value)?,
            mean_variance: field(parts[3], "B0-")?,
            precision_rate: field(parts[4], "C0-")?,
            precision_shape: DEFAULT_PRECISION_SHAPE,
            b0_rule: B0Rule::DataMidpoint,
        };
        for extra in &parts[5..] {
            if extra.starts_with("c0-") {
                s.precision_shape = field(extra, "c0-")?;
            } else if extra.starts_with("b0-") {
                s.b0_rule = B0Rule::Explicit(field(extra, "b0-")?);
            } else {
                return Err(bad());
            }
        }
        s.check()?;
        Ok(s)
    }

    pub fn b0(&self, data: &Dataset) -> Result<f64> {
        match self.b0_rule {
            B0Rule::DataMidpoint => Ok(data.summary_constants()?.midpoint),
            B0Rule::Explicit(v) => Ok(v),
        }
    }

    /// The model this setting defines on `data`.
    pub fn model(&self, data: &Dataset) -> Result<MfmModel> {
        Ok(MfmModel {
            prior_k: self.prior_k,
            schedule: self.schedule,
            components: ComponentPriors::new(
                self.b0(data)?,
                self.mean_variance,
                self.precision_shape,
                self.precision_rate,
            )?,
        })
    }
}

impl fmt::Display for MfmSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.setting_id())
    }
}
