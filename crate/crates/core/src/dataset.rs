//! Univariate data sets, including the bundled Galaxy velocities.

use std::path::Path;

use crate::error::{MfmError, Result};

/// Tag accepted by [`load_dataset`] for the bundled Galaxy data.
pub const BUILTIN_GALAXY: &str = "builtin:galaxy";

/// Raw text of the bundled Galaxy file (velocities in 1000 km/s).
pub const GALAXY_TXT: &str = include_str!("../data/galaxy.txt");

/// An ordered sample of real-valued observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
}

/// Data-driven prior constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryConstants {
    /// `(min + max) / 2`, the default prior location of the component means.
    pub midpoint: f64,
    /// Squared length of the observed range, `R^2`.
    pub range_sq: f64,
    /// Empirical variance with divisor `n - 1`.
    pub variance: f64,
}

impl Dataset {
    /// Builds a data set from arbitrary finite values, sorted ascending.
    pub fn from_values(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(MfmError::EmptyData);
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(MfmError::Domain(format!("non-finite observation {bad}")));
        }
        values.sort_by(f64::total_cmp);
        Ok(Dataset { values })
    }

    /// Parses one number per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| MfmError::Parse {
                line: idx + 1,
                content: line.to_string(),
            })?;
            if !v.is_finite() {
                return Err(MfmError::Parse {
                    line: idx + 1,
                    content: line.to_string(),
                });
            }
            values.push(v);
        }
        Self::from_values(values)
    }

    pub fn galaxy() -> Self {
        Self::parse(GALAXY_TXT).expect("bundled galaxy data is well formed")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    pub fn summary_constants(&self) -> Result<SummaryConstants> {
        summary_constants(self)
    }
}

/// Loads a data file, or the bundled Galaxy data for [`BUILTIN_GALAXY`].
pub fn load_dataset(source: &str) -> Result<Dataset> {
    if source == BUILTIN_GALAXY {
        return Ok(Dataset::galaxy());
    }
    let path = Path::new(source);
    let text = std::fs::read_to_string(path).map_err(|e| MfmError::io(path, e))?;
    Dataset::parse(&text)
}

pub fn summary_constants(d: &Dataset) -> Result<SummaryConstants> {
    let n = d.len();
    if n < 2 {
        return Err(MfmError::InsufficientData { needed: 2, got: n });
    }
    let (min, max) = (d.min(), d.max());
    let mean = d.mean();
    let ss: f64 = d.values.iter().map(|v| (v - mean).powi(2)).sum();
    Ok(SummaryConstants {
        midpoint: 0.5 * (min + max),
        range_sq: (max - min).powi(2),
        variance: ss / (n - 1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use sha2::{Digest, Sha256};
    use std::io::Write;

    #[test]
    fn galaxy_file_is_pinned() {
        let digest = Sha256::digest(GALAXY_TXT.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(
            hex,
            "44586a61a773de899f112607736439cf5a5c9c4b8b8d7b6154f08d1e138ca55a"
        );
    }

    #[test]
    fn builtin_galaxy_shape() {
        let d = load_dataset(BUILTIN_GALAXY).unwrap();
        assert_eq!(d.len(), 82);
        assert!((d.min() - 9.172).abs() < 1e-12);
        assert!((d.max() - 34.279).abs() < 1e-12);
        assert!(d.values().iter().all(|v| (9.0..=35.0).contains(v)));
        assert!(d.values().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn galaxy_constants_bracket_published_anchors() {
        let c = Dataset::galaxy().summary_constants().unwrap();
        assert!((624.0..=637.0).contains(&c.range_sq), "{}", c.range_sq);
        assert!((c.range_sq - 630.0).abs() / 630.0 < 0.01);
        assert!((c.variance - 20.0).abs() / 20.0 < 0.05, "{}", c.variance);
    }

    #[test]
    fn reads_plain_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "# header\n2.0\n\n1.0\n").unwrap();
        let d = load_dataset(f.path().to_str().unwrap()).unwrap();
        assert_eq!(d.values(), &[1.0, 2.0]);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn parse_error_names_line() {
        match Dataset::parse("abc") {
            Err(MfmError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match Dataset::parse("# c\n1.5\nnan\n") {
            Err(MfmError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_input() {
        assert!(matches!(Dataset::parse("# only a comment\n"), Err(MfmError::EmptyData)));
        assert!(matches!(
            load_dataset("/nonexistent/galaxy.txt"),
            Err(MfmError::Io { .. })
        ));
    }

    #[test]
    fn two_point_constants() {
        let d = Dataset::from_values(vec![10.0, 0.0]).unwrap();
        let c = d.summary_constants().unwrap();
        assert_eq!(c.midpoint, 5.0);
        assert_eq!(c.range_sq, 100.0);
        assert_eq!(c.variance, 50.0);
    }

    #[test]
    fn single_point_is_insufficient() {
        let d = Dataset::from_values(vec![1.0]).unwrap();
        assert!(matches!(
            summary_constants(&d),
            Err(MfmError::InsufficientData { needed: 2, got: 1 })
        ));
    }

    proptest::proptest! {
        #[test]
        fn constants_ignore_input_order(mut v in proptest::collection::vec(-1e3f64..1e3, 2..40), seed in 0u64..1000) {
            let a = Dataset::from_values(v.clone()).unwrap().summary_constants().unwrap();
            // Deterministic shuffle.
            let len = v.len();
            for i in 0..len {
                let j = ((seed as usize).wrapping_mul(31).wrapping_add(i * 17)) % len;
                v.swap(i, j);
            }
            let b = Dataset::from_values(v).unwrap().summary_constants().unwrap();
            proptest::prop_assert_eq!(a, b);
        }
    }
}
