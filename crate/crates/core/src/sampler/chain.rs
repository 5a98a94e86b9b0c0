use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{lloyd_1d, ComponentPriors, MfmModel, SamplerState, TelescopingSampler};
use crate::error::{MfmError, Result};

/// Whether Step 1 sees the data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Likelihood {
    #[default]
    Normal,
    /// Component densities are replaced by 1 and Step 2 draws from the
    /// priors, so the chain targets the prior on `(K, eta, S)`.
    Flattened,
}

impl fmt::Display for Likelihood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Likelihood::Normal => "normal",
            Likelihood::Flattened => "flattened",
        })
    }
}

impl FromStr for Likelihood {
    type Err = MfmError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normal" => Ok(Likelihood::Normal),
            "flattened" => Ok(Likelihood::Flattened),
            _ => Err(MfmError::Config(format!("unknown likelihood mode {s:?}"))),
        }
    }
}

/// MCMC run lengths and seeding.
///
/// `iterations` counts sweeps after burn-in; draws are recorded at
/// `burn_in + thinning, burn_in + 2 * thinning, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Protocol {
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub init_components: usize,
    pub record_sizes: bool,
}

impl Protocol {
    /// 20k iterations after 5k burn-in, thinning 4.
    pub fn desk() -> Self {
        Protocol {
            iterations: 20_000,
            burn_in: 5_000,
            thinning: 4,
            seed: 1,
            init_components: 10,
            record_sizes: false,
        }
    }

    /// 200k iterations after 10k burn-in, thinning 4.
    pub fn full() -> Self {
        Protocol {
            iterations: 200_000,
            burn_in: 10_000,
            ..Self::desk()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "desk" => Ok(Self::desk()),
            "full" => Ok(Self::full()),
            _ => Err(MfmError::Config(format!("unknown protocol preset {name:?}"))),
        }
    }

    pub fn recorded_len(&self) -> usize {
        self.iterations / self.thinning
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.iterations == 0 || self.thinning == 0 || self.init_components == 0 {
            return Err(MfmError::Config(
                "iterations, thinning and init_components must be positive".into(),
            ));
        }
        if self.init_components > n {
            return Err(MfmError::Config(format!(
                "cannot start {} components on {n} observations",
                self.init_components
            )));
        }
        Ok(())
    }
}

impl Default for Protocol {
    fn default() -> Self {
        Self::desk()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceDraw {
    pub k: usize,
    pub k_plus: usize,
    pub sizes: Option<Vec<usize>>,
}

/// Recorded draws of one chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainTrace {
    pub draws: Vec<TraceDraw>,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn k_plus_values(&self) -> impl Iterator<Item = usize> + '_ {
        self.draws.iter().map(|d| d.k_plus)
    }

    pub fn k_values(&self) -> impl Iterator<Item = usize> + '_ {
        self.draws.iter().map(|d| d.k)
    }

    /// CSV with header `draw_index,K,K_plus`; `draw_index` starts at 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(16 * self.draws.len() + 32);
        out.push_str("draw_index,K,K_plus\n");
        for (i, d) in self.draws.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, d.k, d.k_plus));
        }
        out
    }

    /// Writes the CSV via a temporary file and rename, so a crash never leaves
    /// a truncated trace behind.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("csv.partial");
        let mut f = std::fs::File::create(&tmp).map_err(|e| MfmError::io(&tmp, e))?;
        f.write_all(self.to_csv().as_bytes())
            .and_then(|_| f.sync_all())
            .map_err(|e| MfmError::io(&tmp, e))?;
        std::fs::rename(&tmp, path).map_err(|e| MfmError::io(path, e))
    }

    /// Reads a trace CSV; run metadata is not stored in the file and is left zero.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| MfmError::format(path, e.to_string()))?;
        let headers = reader
            .headers()
            .map_err(|e| MfmError::format(path, e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["draw_index", "K", "K_plus"] {
            return Err(MfmError::format(path, "expected header draw_index,K,K_plus"));
        }
        let mut draws = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| MfmError::format(path, e.to_string()))?;
            let field = |i: usize| -> Result<usize> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| MfmError::format(path, format!("bad record on data line {}", line + 1)))
            };
            draws.push(TraceDraw {
                k: field(1)?,
                k_plus: field(2)?,
                sizes: None,
            });
        }
        Ok(ChainTrace {
            draws,
            burn_in: 0,
            thinning: 0,
            seed: 0,
        })
    }
}

/// Starting state: equal weights, `sigma_k^2 = C0 / 2`, and means at the
/// 1-D k-means centroids with `init_components` clusters.
pub fn init_state(data: &[f64], priors: &ComponentPriors, init_components: usize) -> Result<SamplerState> {
    if init_components == 0 || init_components > data.len() {
        return Err(MfmError::Config(format!(
            "cannot start {init_components} components on {} observations",
            data.len()
        )));
    }
    let k = init_components;
    let (centroids, labels) = lloyd_1d(data, k);
    Ok(SamplerState {
        log_weights: vec![-(k as f64).ln(); k],
        means: centroids,
        variances: vec![0.5 * priors.precision_rate; k],
        assignments: labels,
    })
}

/// Runs one chain: initialization, then `burn_in + iterations` sweeps.
pub fn run_chain(data: &[f64], model: &MfmModel, protocol: &Protocol, likelihood: Likelihood) -> Result<ChainTrace> {
    protocol.check(data.len())?;
    if let Some(max) = model.prior_k.support_max() {
        if protocol.init_components > max {
            return Err(MfmError::Config(format!(
                "{} initial components exceed the support of {}",
                protocol.init_components, model.prior_k
            )));
        }
    }
    let sampler = TelescopingSampler::new(data, *model, likelihood)?;
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    let mut state = init_state(data, &model.components, protocol.init_components)?;
    let total = protocol.burn_in + protocol.iterations;
    let mut draws = Vec::with_capacity(protocol.recorded_len());
    for it in 1..=total {
        let k_plus = sampler.sweep(&mut state, &mut rng).map_err(|e| match e {
            MfmError::Numerical { observation, .. } => MfmError::Numerical {
                observation,
                iteration: Some(it),
            },
            other => other,
        })?;
        if it > protocol.burn_in && (it - protocol.burn_in).is_multiple_of(protocol.thinning) {
            let sizes = protocol.record_sizes.then(|| {
                let mut counts = vec![0usize; state.k()];
                for &s in &state.assignments {
                    counts[s] += 1;
                }
                counts.retain(|&c| c > 0);
                counts
            });
            draws.push(TraceDraw {
                k: state.k(),
                k_plus,
                sizes,
            });
        }
    }
    Ok(ChainTrace {
        draws,
        burn_in: protocol.burn_in,
        thinning: protocol.thinning,
        seed: protocol.seed,
    })
}
