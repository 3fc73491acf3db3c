use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::baselines::{grid_posterior, optimize_point_estimate, prior_importance_sampler};
use crate::changepoint::{Bocpd, GpSegmentModel};
use crate::error::{Error, Result};
use crate::gp::{msll_from_log_density, smse, Dataset, GpModel};
use crate::par::{self, Execution};
use crate::prediction::{mixture_predict_with, Predictor};
use crate::rng::{Purpose, Streams};
use crate::smc::{run_gp, SmcConfig, WeightedSamples};

use super::artifacts::{sha256_hex, ArtifactSet, BudgetReport, Manifest, SampleDoc, MANIFEST_VERSION};
use super::config::{Approximation, Method, RunConfig, Task};
use super::table::{ingest_csv, Table};

/// A validated config with its data loaded; nothing has been written yet.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: RunConfig,
    pub data: Dataset,
    pub test: Option<Dataset>,
    pub dataset_sha256: String,
}

pub fn prepare(config: RunConfig) -> Result<Prepared> {
    config.validate()?;
    let data = ingest_csv(&config.dataset)?;
    let dataset_sha256 = sha256_hex(&std::fs::read(&config.dataset.path)?);
    let test = match &config.predict.test_dataset {
        Some(t) if config.task == Task::Predict => Some(ingest_csv(t)?),
        _ => None,
    };
    if let Approximation::SubsetOfDatapoints { m } | Approximation::SubsetOfRegressors { m } = config.predict.approximation {
        if config.task == Task::Predict && m > data.len() {
            return Err(Error::Config(format!("approximation m = {m} exceeds the {} training rows", data.len())));
        }
    }
    Ok(Prepared {
        config,
        data,
        test,
        dataset_sha256,
    })
}

/// Hyperparameter samples from one method.
#[derive(Debug, Clone)]
pub struct Fit {
    pub samples: WeightedSamples,
    pub doc: SampleDoc,
    pub budget: BudgetReport,
}

/// Runs `method` on `model` with master seed `seed`. `importance_particles`
/// overrides the configured importance-sampling size.
pub fn fit_method(cfg: &RunConfig, method: Method, model: &GpModel, seed: u64, importance_particles: Option<usize>) -> Result<Fit> {
    let exec = cfg.smc.execution;
    let spec = &model.spec;
    let prior = &cfg.prior;
    let (samples, mut doc, bounds) = match method {
        Method::Smc => {
            let smc = SmcConfig { seed, ..cfg.smc.clone() };
            let (_, ps) = run_gp(&smc, model.clone(), prior.clone())?;
            let n = (smc.particles * smc.batches) as u64;
            (ps.samples(), SampleDoc::from_system(method, spec, &ps), Some((n, smc.eval_upper_bound())))
        }
        Method::Importance => {
            let n = importance_particles.unwrap_or(cfg.importance.particles);
            let ps = prior_importance_sampler(model, prior, n, Streams::new(seed), exec)?;
            (ps.samples(), SampleDoc::from_system(method, spec, &ps), None)
        }
        Method::Grid => {
            let grid = cfg.grid.as_ref().ok_or_else(|| Error::Config("method `grid` needs a `grid` section".into()))?;
            let s = grid_posterior(model, prior, grid, exec)?;
            let doc = SampleDoc::new(method, spec, &s, Some(grid.size() as u64));
            (s, doc, None)
        }
        Method::Point => {
            let est = optimize_point_estimate(model, prior, cfg.point.restarts, Streams::new(seed), &cfg.point.options(), exec)?;
            let s = WeightedSamples::single(est.theta.clone());
            let mut doc = SampleDoc::new(method, spec, &s, None);
            doc.log_likelihood = Some(est.log_likelihood);
            (s, doc, None)
        }
    };
    let evals = doc.likelihood_evaluations;
    let budget = BudgetReport {
        method,
        likelihood_evaluations: evals,
        lower_bound: bounds.map(|b| b.0),
        upper_bound: bounds.map(|b| b.1),
        within_bounds: bounds.zip(evals).map(|((lo, hi), e)| lo <= e && e <= hi),
    };
    doc.likelihood_evaluations = evals;
    Ok(Fit { samples, doc, budget })
}

fn matrix(rows: &[Vec<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), d, |i, k| rows[i][k])
}

pub fn cmd_sample(p: &Prepared) -> Result<ArtifactSet> {
    let cfg = &p.config;
    let model = GpModel::new(cfg.model_spec(), p.data.clone())?;
    let fit = fit_method(cfg, cfg.method, &model, cfg.seed, None)?;
    let mut out = ArtifactSet::default();
    out.add_json("samples.json", &fit.doc)?;
    out.add_json("budget.json", &fit.budget)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictMetrics {
    pub n_test: usize,
    pub smse: f64,
    pub msll: f64,
    pub mean_log_density: f64,
}

/// Training rows used to sample hyperparameters, chosen with the `Data`
/// stream when an approximation asks for a subset.
pub fn training_subset(cfg: &RunConfig, n: usize) -> Option<Vec<usize>> {
    match cfg.predict.approximation {
        Approximation::Exact => None,
        Approximation::SubsetOfDatapoints { m } | Approximation::SubsetOfRegressors { m } => {
            let mut rng = Streams::new(cfg.seed).rng(Purpose::Data, 0, 0);
            let mut rows = index::sample(&mut rng, n, m).into_vec();
            rows.sort_unstable();
            Some(rows)
        }
    }
}

pub fn cmd_predict(p: &Prepared) -> Result<ArtifactSet> {
    let cfg = &p.config;
    let d = cfg.input_dim();
    let full = GpModel::new(cfg.model_spec(), p.data.clone())?;
    let subset = training_subset(cfg, p.data.len());
    let train = match &subset {
        Some(rows) => full.subset(rows),
        None => full.clone(),
    };
    let fit = fit_method(cfg, cfg.method, &train, cfg.seed, None)?;

    let (xq, ytest) = match &p.test {
        Some(t) => (t.x.clone(), Some(t.y.iter().copied().collect::<Vec<f64>>())),
        None => (matrix(&cfg.predict.query.inputs(), d), None),
    };
    let (model, predictor) = match (&cfg.predict.approximation, subset) {
        (Approximation::SubsetOfRegressors { .. }, Some(rows)) => (&full, Predictor::SubsetOfRegressors(rows)),
        _ => (&train, Predictor::Exact),
    };
    let mix = mixture_predict_with(&fit.samples, model, &xq, &predictor, false, cfg.smc.execution)?;
    let (mean, var) = mix.moments();

    let mut columns: Vec<String> = (0..d).map(|k| format!("x{k}")).collect();
    columns.extend(["mean".into(), "variance".into()]);
    if ytest.is_some() {
        columns.extend(["y".into(), "log_density".into()]);
    }
    let mut table = Table::new(columns);
    let log_density = match &ytest {
        Some(y) => Some(mix.log_pdf(y)?),
        None => None,
    };
    for i in 0..xq.nrows() {
        let mut row: Vec<f64> = (0..d).map(|k| xq[(i, k)]).collect();
        row.extend([mean[i], var[i]]);
        if let (Some(y), Some(ld)) = (&ytest, &log_density) {
            row.extend([y[i], ld[i]]);
        }
        table.push(row);
    }

    let mut out = ArtifactSet::default();
    out.add_json("samples.json", &fit.doc)?;
    out.add_json("budget.json", &fit.budget)?;
    out.add("predictive.csv", table.to_csv()?);
    if let (Some(y), Some(ld)) = (&ytest, &log_density) {
        let ytrain: Vec<f64> = p.data.y.iter().copied().collect();
        let metrics = PredictMetrics {
            n_test: y.len(),
            smse: smse(&mean, y, &ytrain)?,
            msll: msll_from_log_density(ld, y, &ytrain)?,
            mean_log_density: ld.iter().sum::<f64>() / y.len() as f64,
        };
        out.add_json("metrics.json", &metrics)?;
    }
    Ok(out)
}

/// Predictive means of each method across repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRuns {
    pub method: Method,
    /// `means[run][point]`.
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub likelihood_evaluations: Vec<Option<u64>>,
}

impl MethodRuns {
    /// Population standard deviation across runs at each query point.
    pub fn per_point_std(&self) -> Vec<f64> {
        let r = self.means.len() as f64;
        let m = self.means.first().map_or(0, Vec::len);
        (0..m)
            .map(|j| {
                let mu = self.means.iter().map(|run| run[j]).sum::<f64>() / r;
                (self.means.iter().map(|run| (run[j] - mu).powi(2)).sum::<f64>() / r).sqrt()
            })
            .collect()
    }

    /// Across-run standard deviation averaged over the query points.
    pub fn dispersion(&self) -> f64 {
        let s = self.per_point_std();
        s.iter().sum::<f64>() / s.len().max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionEntry {
    pub method: Method,
    pub dispersion: f64,
    pub per_point_std: Vec<f64>,
    pub likelihood_evaluations: Vec<Option<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionReport {
    pub runs: usize,
    pub query: Vec<Vec<f64>>,
    pub methods: Vec<DispersionEntry>,
}

/// Runs every configured method `compare.runs` times. Run `r` of every
/// method uses the same derived seed, so methods see common random numbers;
/// with `match_budget`, importance sampling in run `r` gets exactly the
/// likelihood evaluations the sampler spent in run `r`.
pub fn compare_methods(cfg: &RunConfig, model: &GpModel, query: &DMatrix<f64>, seed: u64) -> Result<Vec<MethodRuns>> {
    let exec = cfg.smc.execution;
    let methods = &cfg.compare.methods;
    let runs = cfg.compare.runs;
    let master = Streams::new(seed);
    // Runs are independent; keep the inner work sequential when they are
    // already spread over the pool.
    let inner = RunConfig {
        smc: SmcConfig {
            execution: if exec.is_parallel() { Execution::Sequential } else { exec },
            ..cfg.smc.clone()
        },
        ..cfg.clone()
    };
    let per_run = par::try_map_indexed(exec, runs, |r| {
        let run_seed = master.derive(Purpose::Run, r as u64).seed;
        let mut smc_evals = None;
        let mut order: Vec<usize> = (0..methods.len()).collect();
        order.sort_by_key(|&i| methods[i] != Method::Smc);
        let mut results = vec![None; methods.len()];
        for i in order {
            let n_is = if cfg.compare.match_budget { smc_evals.map(|e: u64| e as usize) } else { None };
            let fit = fit_method(&inner, methods[i], model, run_seed, n_is)?;
            if methods[i] == Method::Smc {
                smc_evals = fit.budget.likelihood_evaluations;
            }
            let mix = mixture_predict_with(&fit.samples, model, query, &Predictor::Exact, false, inner.smc.execution)?;
            let (mean, var) = mix.moments();
            results[i] = Some((mean, var, fit.budget.likelihood_evaluations));
        }
        Ok::<_, Error>(results.into_iter().map(|r| r.expect("every method ran")).collect::<Vec<_>>())
    })?;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(i, &method)| MethodRuns {
            method,
            means: per_run.iter().map(|r| r[i].0.clone()).collect(),
            variances: per_run.iter().map(|r| r[i].1.clone()).collect(),
            likelihood_evaluations: per_run.iter().map(|r| r[i].2).collect(),
        })
        .collect())
}

pub fn cmd_compare(p: &Prepared) -> Result<ArtifactSet> {
    let cfg = &p.config;
    let d = cfg.input_dim();
    let model = GpModel::new(cfg.model_spec(), p.data.clone())?;
    let points = cfg.predict.query.inputs();
    let xq = matrix(&points, d);
    let results = compare_methods(cfg, &model, &xq, cfg.seed)?;

    let mut columns = vec!["method".to_string(), "run".into()];
    columns.extend((0..d).map(|k| format!("x{k}")));
    columns.extend(["mean".into(), "variance".into()]);
    let mut curves = Table::new(columns);
    for (mi, res) in results.iter().enumerate() {
        for (r, (mean, var)) in res.means.iter().zip(&res.variances).enumerate() {
            for (j, x) in points.iter().enumerate() {
                let mut row = vec![mi as f64, r as f64];
                row.extend(x);
                row.extend([mean[j], var[j]]);
                curves.push(row);
            }
        }
    }
    let report = DispersionReport {
        runs: cfg.compare.runs,
        query: points,
        methods: results
            .iter()
            .map(|r| DispersionEntry {
                method: r.method,
                dispersion: r.dispersion(),
                per_point_std: r.per_point_std(),
                likelihood_evaluations: r.likelihood_evaluations.clone(),
            })
            .collect(),
    };
    let mut out = ArtifactSet::default();
    out.add("curves.csv", curves.to_csv()?);
    out.add_json("dispersion.json", &report)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSummary {
    /// 1-based, inclusive.
    pub start: usize,
    pub end: usize,
    pub x_start: f64,
    pub x_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentReport {
    pub threshold: f64,
    pub change_points: Vec<usize>,
    pub segments: Vec<SegmentSummary>,
}

pub fn cmd_changepoint(p: &Prepared) -> Result<ArtifactSet> {
    let cfg = &p.config;
    let xs: Vec<f64> = p.data.x.column(0).iter().copied().collect();
    let ys: Vec<f64> = p.data.y.iter().copied().collect();
    let seg_model = GpSegmentModel::new(cfg.model_spec(), cfg.prior.clone(), cfg.smc.clone())?;
    let mut det = Bocpd::new(seg_model, cfg.hazard()?, cfg.changepoint.pruning(), cfg.smc.execution);
    det.run(&xs, &ys)?;
    let posterior = det.posterior();
    let t_max = xs.len();

    let mut map = Table::new((1..=t_max).map(|r| format!("r{r}")).collect());
    for row in posterior.run_length_map() {
        map.push(row);
    }
    let mut trace = Table::new(vec!["t".into(), "x".into(), "y".into(), "p_change".into(), "map_run_length".into()]);
    for (i, row) in posterior.rows.iter().enumerate() {
        trace.push(vec![row.t as f64, xs[i], ys[i], row.change_probability(), row.map_run_length() as f64]);
    }

    let cps = posterior.threshold_segments(cfg.changepoint.threshold)?;
    let mut bounds = vec![1];
    bounds.extend(&cps);
    bounds.push(t_max + 1);
    let segments: Vec<SegmentSummary> = bounds
        .windows(2)
        .map(|w| SegmentSummary {
            start: w[0],
            end: w[1] - 1,
            x_start: xs[w[0] - 1],
            x_end: xs[w[1] - 2],
        })
        .collect();

    let model = det.model();
    let fits = par::try_map_indexed(cfg.smc.execution, segments.len(), |i| {
        let s = &segments[i];
        let (sx, sy) = (&xs[s.start - 1..s.end], &ys[s.start - 1..s.end]);
        let seg = model.fit(s.start, sx, sy)?;
        let mix = seg.predictive(sx, Execution::Sequential)?;
        Ok::<_, Error>(mix.moments())
    })?;
    let mut fit_table = Table::new(vec!["segment".into(), "t".into(), "x".into(), "y".into(), "mean".into(), "variance".into()]);
    for (k, (s, (mean, var))) in segments.iter().zip(&fits).enumerate() {
        for (j, t) in (s.start..=s.end).enumerate() {
            fit_table.push(vec![k as f64, t as f64, xs[t - 1], ys[t - 1], mean[j], var[j]]);
        }
    }

    let report = SegmentReport {
        threshold: cfg.changepoint.threshold,
        change_points: cps,
        segments,
    };
    let mut out = ArtifactSet::default();
    out.add("run_length.csv", map.to_csv()?);
    out.add("change_probability.csv", trace.to_csv()?);
    out.add_json("segments.json", &report)?;
    out.add("segment_predictive.csv", fit_table.to_csv()?);
    Ok(out)
}

/// Result of [`execute`].
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub files: Vec<PathBuf>,
}

/// Validates, runs the configured task and writes its artifacts plus the
/// manifest to `out` (or the config's `output_dir`). Nothing is written if
/// validation or computation fails.
pub fn execute(config: RunConfig, out: Option<&Path>) -> Result<RunOutcome> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .ok_or_else(|| Error::Config("no output directory: pass --out or set `output_dir`".into()))?;
    let started = Instant::now();
    let prepared = prepare(config)?;
    let artifacts = match prepared.config.task {
        Task::Sample => cmd_sample(&prepared)?,
        Task::Predict => cmd_predict(&prepared)?,
        Task::Compare => cmd_compare(&prepared)?,
        Task::Changepoint => cmd_changepoint(&prepared)?,
    };
    let manifest = Manifest {
        manifest_version: MANIFEST_VERSION,
        version: crate::VERSION.to_string(),
        seed: prepared.config.seed,
        config_sha256: Manifest::config_hash(&prepared.config)?,
        dataset_sha256: prepared.dataset_sha256.clone(),
        artifacts: artifacts.names(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
        config: prepared.config,
    };
    let files = artifacts.write(&dir, &manifest)?;
    Ok(RunOutcome { dir, manifest, files })
}

/// Reads back artifacts written by [`execute`], for replay checks.
pub fn artifact_bytes(dir: &Path, manifest: &Manifest) -> Result<Vec<(String, Vec<u8>)>> {
    manifest
        .artifacts
        .iter()
        .map(|n| Ok((n.clone(), std::fs::read(dir.join(n))?)))
        .collect()
}
