use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gp::{HyperParams, ModelSpec};
use crate::smc::{ParticleSystem, WeightedSamples};

use super::config::{Method, RunConfig};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One weighted hyperparameter sample, in storage (log/natural) and natural
/// units. `log_weight` is absent when the weight is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleRecord {
    pub theta: Vec<f64>,
    pub natural: Vec<f64>,
    pub weight: f64,
    pub log_weight: Option<f64>,
}

/// Sampler diagnostics, present for sampler output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcTrace {
    pub stage: usize,
    pub ess_history: Vec<f64>,
    pub acceptance_history: Vec<f64>,
    pub resampled: Vec<bool>,
    pub proposal_scale: Vec<f64>,
    pub scale_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDoc {
    pub method: Method,
    pub coordinate_names: Vec<String>,
    pub particles: Vec<ParticleRecord>,
    pub ess: f64,
    pub posterior_mean: Vec<f64>,
    /// Marginal-likelihood evaluations spent (none recorded for the
    /// optimizer).
    pub likelihood_evaluations: Option<u64>,
    pub smc: Option<SmcTrace>,
    /// Best log marginal likelihood, for point estimates.
    pub log_likelihood: Option<f64>,
}

impl SampleDoc {
    pub fn new(method: Method, spec: &ModelSpec, samples: &WeightedSamples, evals: Option<u64>) -> Self {
        let particles = samples
            .particles
            .iter()
            .zip(&samples.weights)
            .map(|(p, w)| ParticleRecord {
                theta: p.0.clone(),
                natural: p.natural(spec),
                weight: *w,
                log_weight: (*w > 0.0).then(|| w.ln()),
            })
            .collect();
        Self {
            method,
            coordinate_names: spec.coordinate_names(),
            particles,
            ess: samples.ess(),
            posterior_mean: samples.mean(),
            likelihood_evaluations: evals,
            smc: None,
            log_likelihood: None,
        }
    }

    pub fn from_system(method: Method, spec: &ModelSpec, ps: &ParticleSystem) -> Self {
        let mut doc = Self::new(method, spec, &ps.samples(), Some(ps.eval_counter));
        doc.smc = Some(SmcTrace {
            stage: ps.stage,
            ess_history: ps.ess_history.clone(),
            acceptance_history: ps.acceptance_history.clone(),
            resampled: ps.resampled.clone(),
            proposal_scale: ps.proposal_scale.clone(),
            scale_multiplier: ps.scale_multiplier,
        });
        doc
    }

    pub fn samples(&self) -> WeightedSamples {
        WeightedSamples {
            particles: self.particles.iter().map(|p| HyperParams(p.theta.clone())).collect(),
            weights: self.particles.iter().map(|p| p.weight).collect(),
        }
    }
}

/// Evaluation-budget report for one sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub method: Method,
    pub likelihood_evaluations: Option<u64>,
    /// `N P` and `2 N P K + N P` for the sampler.
    pub lower_bound: Option<u64>,
    pub upper_bound: Option<u64>,
    pub within_bounds: Option<bool>,
}

/// Everything needed to replay a run: the effective config (overrides,
/// preset and resolved paths folded in), seed and library version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub manifest_version: u32,
    pub version: String,
    pub seed: u64,
    pub config_sha256: String,
    pub dataset_sha256: String,
    pub artifacts: Vec<String>,
    pub wall_time_seconds: f64,
    pub config: RunConfig,
}

impl Manifest {
    pub fn config_hash(config: &RunConfig) -> Result<String> {
        Ok(sha256_hex(&serde_json::to_vec(config)?))
    }
}

/// Named artifact contents, written together once a command has finished.
#[derive(Debug, Default)]
pub struct ArtifactSet {
    pub files: Vec<(String, Vec<u8>)>,
}

impl ArtifactSet {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.add(name, to_json(value)?);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    /// Writes every file, then the manifest last.
    pub fn write(&self, dir: &Path, manifest: &Manifest) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        for (name, bytes) in &self.files {
            let p = dir.join(name);
            write_atomic(&p, bytes)?;
            out.push(p);
        }
        let p = dir.join(MANIFEST_FILE);
        write_atomic(&p, &to_json(manifest)?)?;
        out.push(p);
        Ok(out)
    }
}
