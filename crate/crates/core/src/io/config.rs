use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{GridAxis, GridSpec, OptimizerOptions};
use crate::changepoint::{Hazard, Pruning};
use crate::error::{Error, Result};
use crate::gp::{KernelFamily, KernelSpec, MeanSpec, ModelSpec};
use crate::priors::PriorSpec;
use crate::smc::SmcConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Sample,
    Predict,
    Compare,
    Changepoint,
}

/// A CSV column, by header name or zero-based position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl std::fmt::Display for Column {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Column::Index(i) => write!(f, "#{i}"),
            Column::Name(n) => write!(f, "`{n}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub path: PathBuf,
    pub input_columns: Vec<Column>,
    pub output_column: Column,
    #[serde(default = "yes")]
    pub has_header: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kernel: KernelFamily,
    pub mean: MeanSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Smc,
    Grid,
    Importance,
    Point,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Smc => "smc",
            Method::Grid => "grid",
            Method::Importance => "importance",
            Method::Point => "point",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImportanceConfig {
    pub particles: usize,
}

impl Default for ImportanceConfig {
    fn default() -> Self {
        Self { particles: 1000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
}

impl Default for PointConfig {
    fn default() -> Self {
        let o = OptimizerOptions::default();
        Self {
            restarts: 10,
            max_iterations: o.max_iterations,
            gradient_tolerance: o.gradient_tolerance,
        }
    }
}

impl PointConfig {
    pub fn options(&self) -> OptimizerOptions {
        OptimizerOptions {
            max_iterations: self.max_iterations,
            gradient_tolerance: self.gradient_tolerance,
        }
    }
}

/// How predictions scale to large training sets. Both approximations
/// sample hyperparameters on `m` seeded random training rows; the
/// subset-of-regressors variant then predicts from all rows with those `m`
/// as inducing points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Approximation {
    #[default]
    Exact,
    SubsetOfDatapoints { m: usize },
    SubsetOfRegressors { m: usize },
}

/// Query inputs: explicit points, or a regular 1-D grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QueryConfig {
    pub points: Vec<Vec<f64>>,
    pub grid: Option<GridAxis>,
}

impl QueryConfig {
    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.grid.is_none()
    }

    pub fn inputs(&self) -> Vec<Vec<f64>> {
        match &self.grid {
            Some(g) => g.nodes().into_iter().map(|x| vec![x]).collect(),
            None => self.points.clone(),
        }
    }

    fn validate(&self, input_dim: usize) -> Result<()> {
        if !self.points.is_empty() && self.grid.is_some() {
            return Err(Error::Config("query takes either `points` or `grid`, not both".into()));
        }
        if let Some(g) = &self.grid {
            if input_dim != 1 {
                return Err(Error::Config("a query grid needs a one-dimensional input".into()));
            }
            if g.count < 2 || !(g.lo < g.hi) {
                return Err(Error::Config(format!("query grid needs count >= 2 and lo < hi, got {g:?}")));
            }
        }
        for p in &self.points {
            if p.len() != input_dim {
                return Err(Error::Config(format!("query point {p:?} has {} inputs, expected {input_dim}", p.len())));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("query point {p:?} is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictConfig {
    /// Held-out data; when given, predictions are made at its inputs and
    /// scored against its outputs.
    pub test_dataset: Option<DatasetConfig>,
    pub query: QueryConfig,
    pub approximation: Approximation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub methods: Vec<Method>,
    pub runs: usize,
    /// Give importance sampling exactly as many likelihood evaluations as
    /// the sampler used in the same run.
    pub match_budget: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            methods: vec![Method::Smc, Method::Importance],
            runs: 15,
            match_budget: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChangepointConfig {
    pub hazard: f64,
    pub threshold: f64,
    pub prune_threshold: f64,
    pub max_run_lengths: usize,
}

impl Default for ChangepointConfig {
    fn default() -> Self {
        let p = Pruning::default();
        Self {
            hazard: 0.01,
            threshold: 0.5,
            prune_threshold: p.threshold,
            max_run_lengths: p.max_run_lengths,
        }
    }
}

impl ChangepointConfig {
    pub fn pruning(&self) -> Pruning {
        Pruning {
            threshold: self.prune_threshold,
            max_run_lengths: self.max_run_lengths,
        }
    }
}

/// One JSON document describing a run. The master `seed` feeds every random
/// stream, including the sampler's (`smc.seed` is overwritten with it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub task: Task,
    #[serde(default)]
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub model: ModelConfig,
    pub prior: PriorSpec,
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub smc: SmcConfig,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub importance: ImportanceConfig,
    #[serde(default)]
    pub point: PointConfig,
    #[serde(default)]
    pub predict: PredictConfig,
    #[serde(default)]
    pub compare: CompareConfig,
    #[serde(default)]
    pub changepoint: ChangepointConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    /// Parses a config file, or the config embedded in a run manifest, and
    /// resolves relative dataset paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let value = match value {
            serde_json::Value::Object(mut m) if m.contains_key("manifest_version") => m.remove("config").unwrap_or_default(),
            v => v,
        };
        let mut cfg: RunConfig = serde_json::from_value(value).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.dataset.path);
        if let Some(t) = &mut self.predict.test_dataset {
            fix(&mut t.path);
        }
        if let Some(o) = &mut self.output_dir {
            fix(o);
        }
    }

    /// Applies command-line overrides and folds the preset and master seed
    /// into the sampler settings. Idempotent, so a config read back from a
    /// manifest is unchanged by it.
    pub fn finalize(&mut self, seed: Option<u64>, preset: Option<&str>) -> Result<()> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(p) = preset {
            self.preset = Some(p.to_string());
        }
        if let Some(p) = &self.preset {
            self.smc.apply_preset(p)?;
        }
        self.smc.seed = self.seed;
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.dataset.input_columns.len()
    }

    pub fn model_spec(&self) -> ModelSpec {
        let d = self.input_dim();
        let kernel = match self.model.kernel {
            KernelFamily::SquaredExponentialIso => KernelSpec::iso(d),
            KernelFamily::SquaredExponentialArd => KernelSpec::ard(d),
        };
        ModelSpec::new(kernel, self.model.mean)
    }

    pub fn hazard(&self) -> Result<Hazard> {
        Hazard::new(self.changepoint.hazard)
    }

    /// Everything that can be checked without touching the data values.
    pub fn validate(&self) -> Result<()> {
        let d = self.input_dim();
        if d == 0 {
            return Err(Error::Config("dataset needs at least one input column".into()));
        }
        check_file(&self.dataset)?;
        self.smc.validate()?;
        let spec = self.model_spec();
        self.prior.check_against(&spec)?;
        let methods: Vec<Method> = match self.task {
            Task::Compare => self.compare.methods.clone(),
            Task::Sample | Task::Predict => vec![self.method],
            Task::Changepoint => vec![],
        };
        for m in &methods {
            match m {
                Method::Grid => {
                    let g = self.grid.as_ref().ok_or_else(|| Error::Config("method `grid` needs a `grid` section".into()))?;
                    g.validate()?;
                    let free = self.prior.free_coordinates().len();
                    if g.axes.len() != free {
                        return Err(Error::Config(format!("grid has {} axes but the prior has {free} free coordinates", g.axes.len())));
                    }
                }
                Method::Importance if self.importance.particles < 1 => {
                    return Err(Error::Config("importance sampling needs at least one particle".into()));
                }
                Method::Point if self.point.restarts < 1 => {
                    return Err(Error::Config("point estimation needs at least one restart".into()));
                }
                _ => {}
            }
        }
        match self.task {
            Task::Sample => {}
            Task::Predict => {
                match &self.predict.test_dataset {
                    Some(t) => {
                        check_file(t)?;
                        if t.input_columns.len() != d {
                            return Err(Error::Config(format!(
                                "test dataset has {} input columns, training data has {d}",
                                t.input_columns.len()
                            )));
                        }
                        if !self.predict.query.is_empty() {
                            return Err(Error::Config("predict takes either a test dataset or a query, not both".into()));
                        }
                    }
                    None if self.predict.query.is_empty() => {
                        return Err(Error::Config("predict needs `predict.test_dataset` or `predict.query`".into()));
                    }
                    None => self.predict.query.validate(d)?,
                }
                match self.predict.approximation {
                    Approximation::SubsetOfDatapoints { m } | Approximation::SubsetOfRegressors { m } if m == 0 => {
                        return Err(Error::Config("approximation needs m >= 1".into()));
                    }
                    _ => {}
                }
            }
            Task::Compare => {
                if self.compare.methods.is_empty() {
                    return Err(Error::Config("compare needs at least one method".into()));
                }
                let mut seen = self.compare.methods.clone();
                seen.sort_by_key(|m| m.name());
                seen.dedup();
                if seen.len() != self.compare.methods.len() {
                    return Err(Error::Config("compare lists a method twice".into()));
                }
                if self.compare.runs < 1 {
                    return Err(Error::Config("compare needs at least one run".into()));
                }
                if self.predict.query.is_empty() {
                    return Err(Error::Config("compare needs `predict.query`".into()));
                }
                self.predict.query.validate(d)?;
            }
            Task::Changepoint => {
                if d != 1 {
                    return Err(Error::Config("change-point detection takes one input (time) column".into()));
                }
                self.hazard()?;
                let c = &self.changepoint;
                if !(c.threshold > 0.0 && c.threshold < 1.0) {
                    return Err(Error::Config(format!("change-point threshold {} outside (0, 1)", c.threshold)));
                }
                if !(0.0..1.0).contains(&c.prune_threshold) {
                    return Err(Error::Config(format!("prune_threshold {} outside [0, 1)", c.prune_threshold)));
                }
                if c.max_run_lengths < 1 {
                    return Err(Error::Config("max_run_lengths must be at least 1".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_file(d: &DatasetConfig) -> Result<()> {
    if !d.path.is_file() {
        return Err(Error::Config(format!("dataset {} does not exist", d.path.display())));
    }
    let by_name = d
        .input_columns
        .iter()
        .chain(std::iter::once(&d.output_column))
        .any(|c| matches!(c, Column::Name(_)));
    if by_name && !d.has_header {
        return Err(Error::Config("columns can only be named when the file has a header".into()));
    }
    Ok(())
}
