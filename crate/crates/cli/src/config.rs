//! Run configuration: one JSON document, fully validated before any
//! computation runs, with command-line flags layered on top. The effective
//! (post-override) config is hashed into every report so outputs are
//! traceable to their exact inputs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use r3lambda::ModelParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Model parameters as they appear in the config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ParamsConfig {
    pub lambda: f64,
    pub m: f64,
    pub mu: f64,
    pub omega: f64,
    pub g2: f64,
}

impl Default for ParamsConfig {
    fn default() -> Self {
        ParamsConfig {
            lambda: 1.0,
            m: 1.0,
            mu: 1.0,
            omega: 1.0 / 3.0,
            g2: 1.0,
        }
    }
}

impl ParamsConfig {
    pub fn to_model(&self) -> Result<ModelParams, CliError> {
        ModelParams::new(self.lambda, self.m, self.mu, self.omega, self.g2)
            .map_err(|e| CliError::Config(format!("params: {e}")))
    }
}

/// Output format selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

/// How degenerate spectra are evaluated, as spelled in configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyConfig {
    EpsilonSplit,
    DividedDifference,
}

impl PolicyConfig {
    pub fn to_policy(self, eps0: f64) -> r3lambda::DegeneracyPolicy {
        match self {
            PolicyConfig::EpsilonSplit => r3lambda::DegeneracyPolicy::EpsilonSplit { eps0 },
            PolicyConfig::DividedDifference => r3lambda::DegeneracyPolicy::DividedDifference,
        }
    }
}

/// The single configuration document. Unknown fields are rejected so typos
/// surface as errors naming the offending key; absent fields take defaults.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: ParamsConfig,
    /// Level selector (2j) for spectrum/zlevel/toda/condensate.
    pub twice_j: u32,
    /// Resummation cutoff (2·j_max).
    pub twice_j_max: u32,
    /// Optional per-level spectrum override, keyed by 2j.
    pub spectrum_table: Option<BTreeMap<u32, Vec<f64>>>,
    /// Source eigenvalues for `toda`; defaults to zeros.
    pub sigmas: Option<Vec<f64>>,
    /// Number of time variables t_n to report.
    pub n_times: usize,
    /// Finite-difference step override for `condensate`.
    pub step: Option<f64>,
    pub policy: PolicyConfig,
    /// Relative split width when `policy` is epsilon-split.
    pub eps0: f64,
    pub seed: u64,
    pub samples: u64,
    pub threads: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub no_timestamp: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ParamsConfig::default(),
            twice_j: 1,
            twice_j_max: 6,
            spectrum_table: None,
            sigmas: None,
            n_times: 4,
            step: None,
            policy: PolicyConfig::DividedDifference,
            eps0: 1e-2,
            seed: 20260814,
            samples: 200_000,
            threads: 1,
            format: OutputFormat::Json,
            out: None,
            no_timestamp: false,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &PathBuf) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    /// Field-level validation of everything that does not need a command
    /// context. Runs after flag overrides, before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.to_model()?;
        if self.threads == 0 || self.threads > 512 {
            return Err(CliError::Config(format!(
                "threads: must be in 1..=512, got {}",
                self.threads
            )));
        }
        if self.samples < 2 {
            return Err(CliError::Config(format!(
                "samples: need at least 2, got {}",
                self.samples
            )));
        }
        if self.n_times == 0 {
            return Err(CliError::Config("n_times: must be at least 1".into()));
        }
        if !(self.eps0 > 0.0 && self.eps0 < 1.0) {
            return Err(CliError::Config(format!(
                "eps0: must be in (0, 1), got {}",
                self.eps0
            )));
        }
        if let Some(h) = self.step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(CliError::Config(format!(
                    "step: must be > 0 and finite, got {h}"
                )));
            }
        }
        if let Some(table) = &self.spectrum_table {
            for (tj, omegas) in table {
                if omegas.len() != (*tj as usize) + 1 {
                    return Err(CliError::Config(format!(
                        "spectrum_table[{tj}]: expected {} eigenvalues, got {}",
                        tj + 1,
                        omegas.len()
                    )));
                }
                for (i, w) in omegas.iter().enumerate() {
                    if !(w.is_finite() && *w > 0.0) {
                        return Err(CliError::Config(format!(
                            "spectrum_table[{tj}][{i}]: eigenvalues must be > 0 and finite, got {w}"
                        )));
                    }
                }
            }
        }
        if let Some(sigmas) = &self.sigmas {
            for (i, s) in sigmas.iter().enumerate() {
                if !s.is_finite() {
                    return Err(CliError::Config(format!(
                        "sigmas[{i}]: must be finite, got {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the effective config serialization; field order is the
    /// declaration order, so the hash is stable for equal configs.
    pub fn sha256_hex(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        let mut hex = String::with_capacity(64);
        for byte in digest {
            use std::fmt::Write;
            write!(hex, "{byte:02x}").expect("hex write");
        }
        hex
    }
}
