//! Sweep configuration and its flat `key = value` text format.
//!
//! ```text
//! # comment
//! data = builtin:galaxy
//! grid.prior_k = trpois(3), bnb(1,4,3)
//! grid.B0 = 6.3,20,100,630
//! protocol.preset = desk
//! ```
//!
//! List values are split on commas outside parentheses.

use std::path::{Path, PathBuf};

use crate::dataset::BUILTIN_GALAXY;
use crate::error::{MfmError, Result};
use crate::prior_k::{PriorOnK, ScheduleKind};
use crate::sampler::Protocol;

use super::setting::{B0Rule, DEFAULT_PRECISION_SHAPE};

/// Parses `key = value` lines; blank lines and `#` lines are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            MfmError::Config(format!("line {}: expected key = value, got {line:?}", idx + 1))
        })?;
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(MfmError::Config(format!("line {}: empty key", idx + 1)));
        }
        if out.iter().any(|(seen, _)| *seen == key) {
            return Err(MfmError::Config(format!("line {}: duplicate key {key:?}", idx + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Splits on commas that are not inside parentheses.
pub fn split_list(value: &str) -> Result<Vec<String>> {
    let mut items = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in value.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            _ => {}
        }
        if depth < 0 {
            return Err(MfmError::Config(format!("unbalanced parentheses in {value:?}")));
        }
        if c == ',' && depth == 0 {
            items.push(cur.trim().to_string());
            cur.clear();
        } else {
            cur.push(c);
        }
    }
    if depth != 0 {
        return Err(MfmError::Config(format!("unbalanced parentheses in {value:?}")));
    }
    items.push(cur.trim().to_string());
    if items.iter().any(String::is_empty) {
        if items.len() == 1 {
            return Ok(Vec::new());
        }
        return Err(MfmError::Config(format!("empty list item in {value:?}")));
    }
    Ok(items)
}

/// Grids, protocol and execution parameters of a factorial sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// Data file path or `builtin:galaxy`.
    pub data: String,
    pub priors: Vec<PriorOnK>,
    pub kinds: Vec<ScheduleKind>,
    /// `gamma` for static and `alpha` for dynamic settings.
    pub dirichlet_values: Vec<f64>,
    pub mean_variances: Vec<f64>,
    pub precision_rates: Vec<f64>,
    pub precision_shape: f64,
    pub b0_rule: B0Rule,
    /// `protocol.seed` is the base seed of the sweep.
    pub protocol: Protocol,
    pub workers: usize,
    pub output_dir: PathBuf,
}

impl Default for SweepConfig {
    /// The full 384-setting grid on the Galaxy data with the desk protocol.
    fn default() -> Self {
        SweepConfig {
            data: BUILTIN_GALAXY.to_string(),
            priors: PriorOnK::study_priors().to_vec(),
            kinds: vec![ScheduleKind::Static, ScheduleKind::Dynamic],
            dirichlet_values: vec![0.01, 1.0, 10.0],
            mean_variances: vec![6.3, 20.0, 100.0, 630.0],
            precision_rates: vec![0.5, 1.0, 5.0, 12.5],
            precision_shape: DEFAULT_PRECISION_SHAPE,
            b0_rule: B0Rule::DataMidpoint,
            protocol: Protocol::desk(),
            workers: 1,
            output_dir: PathBuf::from("sweep-out"),
        }
    }
}

const KEYS: [&str; 16] = [
    "data",
    "output_dir",
    "workers",
    "c0",
    "b0",
    "grid.prior_k",
    "grid.kind",
    "grid.gamma_or_alpha",
    "grid.B0",
    "grid.C0",
    "protocol.preset",
    "protocol.iterations",
    "protocol.burn_in",
    "protocol.thinning",
    "protocol.seed",
    "protocol.init_components",
];

impl SweepConfig {
    /// Defaults overridden by the given pairs. A `protocol.preset` is applied
    /// before the individual protocol keys regardless of its position.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let mut cfg = SweepConfig::default();
        cfg.apply(pairs)?;
        Ok(cfg)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Self::from_pairs(&parse_kv(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| MfmError::io(path, e))?;
        Self::from_text(&text)
    }

    /// Applies overrides on top of the current values.
    pub fn apply(&mut self, pairs: &[(String, String)]) -> Result<()> {
        for (k, v) in pairs.iter().filter(|(k, _)| k == "protocol.preset") {
            self.set(k, v)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "protocol.preset") {
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| MfmError::Config(format!("{key}: bad number {v:?}")))
        };
        let count = |v: &str| -> Result<u64> {
            v.trim()
                .parse::<u64>()
                .map_err(|_| MfmError::Config(format!("{key}: bad integer {v:?}")))
        };
        let nums = |v: &str| -> Result<Vec<f64>> { split_list(v)?.iter().map(|x| num(x)).collect() };
        match key {
            "data" => self.data = value.to_string(),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "workers" => self.workers = count(value)? as usize,
            "c0" => self.precision_shape = num(value)?,
            "b0" => self.b0_rule = value.parse()?,
            "grid.prior_k" => {
                self.priors = split_list(value)?
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_>>()?
            }
            "grid.kind" => {
                self.kinds = split_list(value)?
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_>>()?
            }
            "grid.gamma_or_alpha" => self.dirichlet_values = nums(value)?,
            "grid.B0" => self.mean_variances = nums(value)?,
            "grid.C0" => self.precision_rates = nums(value)?,
            "protocol.preset" => {
                let seed = self.protocol.seed;
                self.protocol = Protocol::preset(value.trim())?;
                self.protocol.seed = seed;
            }
            "protocol.iterations" => self.protocol.iterations = count(value)? as usize,
            "protocol.burn_in" => self.protocol.burn_in = count(value)? as usize,
            "protocol.thinning" => self.protocol.thinning = count(value)? as usize,
            "protocol.seed" => self.protocol.seed = count(value)?,
            "protocol.init_components" => self.protocol.init_components = count(value)? as usize,
            _ => {
                return Err(MfmError::Config(format!(
                    "unknown key {key:?}; expected one of {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Number of settings in the factorial grid.
    pub fn grid_size(&self) -> usize {
        self.priors.len()
            * self.kinds.len()
            * self.dirichlet_values.len()
            * self.mean_variances.len()
            * self.precision_rates.len()
    }

    /// Key-value text that [`SweepConfig::from_text`] reads back to `self`.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let nums = |v: &[f64]| join(v.iter().map(f64::to_string).collect());
        let p = &self.protocol;
        let lines = [
            ("data", self.data.clone()),
            ("output_dir", self.output_dir.display().to_string()),
            ("workers", self.workers.to_string()),
            ("c0", self.precision_shape.to_string()),
            ("b0", self.b0_rule.to_string()),
            ("grid.prior_k", join(self.priors.iter().map(|x| x.to_string()).collect())),
            ("grid.kind", join(self.kinds.iter().map(|x| x.to_string()).collect())),
            ("grid.gamma_or_alpha", nums(&self.dirichlet_values)),
            ("grid.B0", nums(&self.mean_variances)),
            ("grid.C0", nums(&self.precision_rates)),
            ("protocol.iterations", p.iterations.to_string()),
            ("protocol.burn_in", p.burn_in.to_string()),
            ("protocol.thinning", p.thinning.to_string()),
            ("protocol.seed", p.seed.to_string()),
            ("protocol.init_components", p.init_components.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_splitting() {
        assert_eq!(
            split_list("trpois(3), bnb(1,4,3),geom(0.1)").unwrap(),
            vec!["trpois(3)", "bnb(1,4,3)", "geom(0.1)"]
        );
        assert_eq!(split_list("6.3").unwrap(), vec!["6.3"]);
        assert!(split_list("").unwrap().is_empty());
        assert!(split_list("a,,b").is_err());
        assert!(split_list("bnb(1,4,3").is_err());
        assert!(split_list("x)(").is_err());
    }

    #[test]
    fn kv_parsing() {
        let kv = parse_kv("# sweep\n\n grid.B0 = 6.3,20 \nworkers=2\n").unwrap();
        assert_eq!(kv[0], ("grid.B0".to_string(), "6.3,20".to_string()));
        assert_eq!(kv[1], ("workers".to_string(), "2".to_string()));
        assert!(parse_kv("no equals sign").is_err());
        assert!(parse_kv("a=1\na=2").is_err());
        assert!(parse_kv(" = 3").is_err());
    }

    #[test]
    fn defaults_are_the_full_grid() {
        let c = SweepConfig::default();
        assert_eq!(c.grid_size(), 384);
        assert_eq!(c.protocol, Protocol::desk());
    }

    #[test]
    fn overrides_and_round_trip() {
        let c = SweepConfig::from_text(
            "protocol.iterations = 1000\nprotocol.preset = full\ngrid.prior_k = bnb(1,4,3)\n\
             grid.kind = dynamic\ngrid.C0 = 5\nb0 = 21\nprotocol.seed = 7\n",
        )
        .unwrap();
        assert_eq!(c.protocol.iterations, 1000);
        assert_eq!(c.protocol.burn_in, 10_000);
        assert_eq!(c.protocol.seed, 7);
        assert_eq!(c.grid_size(), 3 * 4);
        assert_eq!(c.b0_rule, B0Rule::Explicit(21.0));
        assert_eq!(SweepConfig::from_text(&c.to_text()).unwrap(), c);
        assert_eq!(
            SweepConfig::from_text(&SweepConfig::default().to_text()).unwrap(),
            SweepConfig::default()
        );
    }

    #[test]
    fn bad_values() {
        for text in [
            "grid.B0 = 1,x",
            "grid.kind = both",
            "grid.prior_k = pois(3)",
            "workers = -1",
            "protocol.preset = huge",
            "colour = red",
        ] {
            assert!(SweepConfig::from_text(text).is_err(), "{text}");
        }
    }
}
