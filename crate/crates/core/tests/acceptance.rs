//! Acceptance suite. Prints one PASS/FAIL line per criterion. Set
//! `GPSMC_ACCEPTANCE_STRICT=1` to exit non-zero when a gating criterion
//! fails. The SARCOS check runs only when `GPSMC_SARCOS_TRAIN` and
//! `GPSMC_SARCOS_TEST` point at CSV files (21 inputs, target in column 21).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde_json::json;

use gpsmc::baselines::{grid_posterior, optimize_point_estimate, GridAxis, GridSpec, OptimizerOptions};
use gpsmc::changepoint::{Bocpd, ConjugateGaussian, GpSegmentModel, Hazard, Pruning};
use gpsmc::gp::{metrics, Dataset, GpModel, HyperParams, KernelSpec, MeanSpec, ModelSpec, PredictiveGaussian};
use gpsmc::io::{artifact_bytes, compare_methods, execute, read_json, PredictMetrics, RunConfig, MANIFEST_FILE};
use gpsmc::par::Execution;
use gpsmc::priors::{Prior, PriorSpec};
use gpsmc::rng::Streams;
use gpsmc::smc::{extend_online, run_gp, run_with_streams, SmcConfig, TemperingSequence};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

// 1: likelihood against a dense multivariate normal built from scratch.

fn se_cov(x: &DMatrix<f64>, ls: &[f64], sf2: f64, sn2: f64) -> DMatrix<f64> {
    let n = x.nrows();
    DMatrix::from_fn(n, n, |i, j| {
        let d2: f64 = (0..x.ncols()).map(|k| ((x[(i, k)] - x[(j, k)]) / ls[k]).powi(2)).sum();
        sf2 * (-0.5 * d2).exp() + if i == j { sn2 } else { 0.0 }
    })
}

fn dense_mvn_logpdf(y: &[f64], mean: &[f64], cov: &DMatrix<f64>) -> f64 {
    let n = y.len();
    let r = DVector::from_fn(n, |i, _| y[i] - mean[i]);
    let inv = cov.clone().try_inverse().expect("invertible covariance");
    -0.5 * (r.transpose() * inv * &r)[(0, 0)] - 0.5 * cov.determinant().ln() - 0.5 * n as f64 * (2.0 * PI).ln()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let d = rng.random_range(1..=3);
        let ard = rng.random_bool(0.5);
        let mean = [MeanSpec::Zero, MeanSpec::Constant, MeanSpec::Linear][rng.random_range(0..3)];
        let kernel = if ard { KernelSpec::ard(d) } else { KernelSpec::iso(d) };
        let spec = ModelSpec::new(kernel, mean);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let theta: Vec<f64> = (0..spec.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let model = GpModel::new(spec, Dataset::from_rows(&rows, &y).unwrap()).unwrap();
        let got = model.log_marginal_likelihood(&HyperParams(theta.clone())).unwrap();

        let nl = if ard { d } else { 1 };
        let ls: Vec<f64> = (0..d).map(|k| theta[if ard { k } else { 0 }].exp()).collect();
        let sf2 = theta[nl].exp();
        let mp = &theta[nl + 1..theta.len() - 1];
        let sn2 = theta[theta.len() - 1].exp();
        let m: Vec<f64> = rows
            .iter()
            .map(|r| match mean {
                MeanSpec::Zero => 0.0,
                MeanSpec::Constant => mp[0],
                MeanSpec::Linear => mp[0] + r.iter().zip(&mp[1..]).map(|(a, b)| a * b).sum::<f64>(),
            })
            .collect();
        let x = DMatrix::from_fn(n, d, |i, k| rows[i][k]);
        let want = dense_mvn_logpdf(&y, &m, &se_cov(&x, &ls, sf2, sn2));
        worst = worst.max((got - want).abs());
    }
    outcome(worst < 1e-10, format!("max |error| {worst:.2e} over 100 instances (tol 1e-10)"))
}

// 2: one free hyperparameter, weighted CDF against a fine grid.

fn weighted_ks(samples: &[(f64, f64)], grid: &[(f64, f64)]) -> f64 {
    let mut s = samples.to_vec();
    s.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut g = grid.to_vec();
    g.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut gi = 0;
    let mut gcdf = 0.0;
    let mut scdf = 0.0;
    let mut ks = 0.0f64;
    let mut i = 0;
    while i < s.len() {
        let v = s[i].0;
        while gi < g.len() && g[gi].0 <= v {
            gcdf += g[gi].1;
            gi += 1;
        }
        ks = ks.max((scdf - gcdf).abs());
        while i < s.len() && s[i].0 == v {
            scdf += s[i].1;
            i += 1;
        }
        ks = ks.max((scdf - gcdf).abs());
    }
    ks
}

fn criterion_2() -> Outcome {
    let x = [-1.6, -0.5, 0.2, 1.1, 2.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| (1.5 * v).sin()).collect();
    let model = GpModel::new(ModelSpec::new(KernelSpec::iso(1), MeanSpec::Zero), Dataset::from_1d(&x, &y).unwrap()).unwrap();
    let prior = PriorSpec::new(vec![
        Prior::GaussianOnLog { mean: 0.0, std: 1.0 },
        Prior::Fixed { value: 0.0 },
        Prior::Fixed { value: (0.01f64).ln() },
    ])
    .unwrap();
    let grid = grid_posterior(&model, &prior, &GridSpec::new(vec![GridAxis::new(-6.0, 6.0, 10_000)]), Execution::Parallel).unwrap();
    let gpts: Vec<(f64, f64)> = grid.particles.iter().zip(&grid.weights).map(|(p, w)| (p.0[0], *w)).collect();
    let mut kss = Vec::new();
    for seed in 0..5 {
        let cfg = SmcConfig { particles: 1024, batches: 3, moves: 5, seed, ..Default::default() };
        let (_, ps) = run_gp(&cfg, model.clone(), prior.clone()).unwrap();
        let spts: Vec<(f64, f64)> = ps.particles.iter().zip(ps.weights()).map(|(p, w)| (p.0[0], w)).collect();
        kss.push(weighted_ks(&spts, &gpts));
    }
    let ok = kss.iter().filter(|k| **k <= 0.05).count();
    outcome(ok >= 4, format!("KS distances {:?}; {ok}/5 within 0.05 (need 4)", round(&kss, 4)))
}

// 3: bimodal posterior.

/// Labels every grid node with the local maximum reached by steepest ascent
/// over its 8 neighbours.
fn basins(w: &[f64], n0: usize, n1: usize) -> Vec<usize> {
    let idx = |i: usize, j: usize| i * n1 + j;
    (0..w.len())
        .map(|s| {
            let (mut i, mut j) = (s / n1, s % n1);
            loop {
                let mut best = (i, j);
                for di in -1i64..=1 {
                    for dj in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= n0 as i64 || b >= n1 as i64 {
                            continue;
                        }
                        if w[idx(a as usize, b as usize)] > w[idx(best.0, best.1)] {
                            best = (a as usize, b as usize);
                        }
                    }
                }
                if best == (i, j) {
                    return idx(i, j);
                }
                (i, j) = best;
            }
        })
        .collect()
}

fn criterion_3() -> Outcome {
    let x: Vec<f64> = (0..9).map(|i| i as f64).collect();
    let y: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(i, v)| 0.3 * v - 1.2 + 0.5 * if i % 2 == 0 { 1.0 } else { -1.0 })
        .collect();
    let model = GpModel::new(ModelSpec::new(KernelSpec::iso(1), MeanSpec::Zero), Dataset::from_1d(&x, &y).unwrap()).unwrap();
    let prior = PriorSpec::new(vec![
        Prior::GaussianOnLog { mean: 0.0, std: 1.5 },
        Prior::GaussianOnLog { mean: 0.0, std: 1.5 },
        Prior::Fixed { value: (0.7f64 * 0.25).ln() },
    ])
    .unwrap();
    let (n0, n1, lo0, hi0, lo1, hi1) = (161, 161, -4.0, 4.0, -5.0, 5.0);
    let g = GridSpec::new(vec![GridAxis::new(lo0, hi0, n0), GridAxis::new(lo1, hi1, n1)]);
    let post = grid_posterior(&model, &prior, &g, Execution::Parallel).unwrap();
    let lab = basins(&post.weights, n0, n1);
    let mut mass: BTreeMap<usize, f64> = BTreeMap::new();
    for (l, w) in lab.iter().zip(&post.weights) {
        *mass.entry(*l).or_default() += w;
    }
    let mut modes: Vec<(usize, f64)> = mass.into_iter().collect();
    modes.sort_by(|a, b| b.1.total_cmp(&a.1));
    if modes.len() < 2 || modes[1].1 < 0.1 {
        return outcome(false, format!("grid posterior is not bimodal: {modes:?}"));
    }
    let (a, b) = (modes[0].0, modes[1].0);
    let locate = |t: &[f64]| {
        let i = ((t[0] - lo0) / (hi0 - lo0) * (n0 - 1) as f64).round().clamp(0.0, (n0 - 1) as f64) as usize;
        let j = ((t[1] - lo1) / (hi1 - lo1) * (n1 - 1) as f64).round().clamp(0.0, (n1 - 1) as f64) as usize;
        lab[i * n1 + j]
    };

    let mut smc_ok = 0;
    let mut shares = Vec::new();
    for seed in 0..5 {
        let cfg = SmcConfig { particles: 500, batches: 3, moves: 5, seed, ..Default::default() };
        let (_, ps) = run_gp(&cfg, model.clone(), prior.clone()).unwrap();
        let (mut wa, mut wb) = (0.0, 0.0);
        for (p, w) in ps.particles.iter().zip(ps.weights()) {
            let l = locate(&p.0);
            if l == a {
                wa += w;
            } else if l == b {
                wb += w;
            }
        }
        shares.push((round1(wa, 2), round1(wb, 2)));
        if wa >= 0.1 && wb >= 0.1 {
            smc_ok += 1;
        }
    }

    let (mut ha, mut hb) = (0, 0);
    for r in 0..50u64 {
        let est = optimize_point_estimate(&model, &prior, 1, Streams::new(1000 + r), &OptimizerOptions::default(), Execution::Sequential).unwrap();
        let l = locate(&est.theta.0);
        ha += usize::from(l == a);
        hb += usize::from(l == b);
    }
    outcome(
        smc_ok >= 4 && ha >= 5 && hb >= 5,
        format!(
            "grid basin masses {:.2}/{:.2}; SMC basin shares {shares:?} ({smc_ok}/5 with >= 0.10 each); single-restart optima hit basins {ha}/{hb} times of 50",
            modes[0].1, modes[1].1
        ),
    )
}

// 4: run-to-run dispersion at matched budgets.

fn dispersion_blocks(n_points: usize, smc: serde_json::Value) -> (usize, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let rows: Vec<Vec<f64>> = (0..n_points).map(|_| (0..4).map(|_| rng.random::<f64>()).collect()).collect();
    let y: Vec<f64> = rows.iter().map(|r| (3.0 * r[0]).sin() + r[1] * r[1] - 0.5 * r[2] + 0.1 * r[3]).collect();
    let data = Dataset::from_rows(&rows, &y).unwrap();
    let query = DMatrix::from_fn(20, 4, |i, _| 0.05 + 0.9 * i as f64 / 19.0);
    let log = json!({"kind": "gaussian_on_log", "mean": 0.0, "std": 2.0});
    let v = json!({
        "task": "compare",
        "seed": 0,
        "dataset": {"path": "unused.csv", "input_columns": [0, 1, 2, 3], "output_column": 4},
        "model": {"kernel": "se_ard", "mean": "constant"},
        "prior": [log, log, log, log, log,
            {"kind": "gaussian_on_natural", "mean": 0.0, "std": 1.0},
            {"kind": "gaussian_on_log", "mean": -2.0, "std": 2.0}],
        "smc": smc,
        "compare": {"methods": ["smc", "importance"], "runs": 15, "match_budget": true}
    });
    let cfg = RunConfig::from_json(&v.to_string()).unwrap();
    let model = GpModel::new(cfg.model_spec(), data).unwrap();
    let mut wins = 0;
    let mut ratios = Vec::new();
    for block in 0..15u64 {
        let res = compare_methods(&cfg, &model, &query, 1000 + block).unwrap();
        assert_eq!(res[0].likelihood_evaluations, res[1].likelihood_evaluations);
        let (s, i) = (res[0].dispersion(), res[1].dispersion());
        wins += usize::from(s <= i);
        ratios.push(s / i);
    }
    (wins, ratios)
}

fn criterion_4() -> Outcome {
    let (wins, ratios) = dispersion_blocks(5, json!({"particles": 100, "batches": 5, "moves": 5}));
    outcome(
        wins >= 12,
        format!("5-point toy, N=100 P=5 K=5: SMC <= IS in {wins}/15 blocks (need 12); SMC/IS ratios {:?}", round(&ratios, 2)),
    )
}

fn criterion_4_informative() -> String {
    let (wins, ratios) = dispersion_blocks(20, json!({"particles": 100, "batches": 10, "moves": 5}));
    format!("20-point variant, N=100 P=10 K=5: SMC <= IS in {wins}/15 blocks; SMC/IS ratios {:?}", round(&ratios, 2))
}

// 5: evaluation budget.

fn criterion_5() -> Outcome {
    let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.4).collect();
    let y: Vec<f64> = x.iter().map(|v| v.sin() + 0.1 * v).collect();
    let model = GpModel::new(ModelSpec::new(KernelSpec::iso(1), MeanSpec::Constant), Dataset::from_1d(&x, &y).unwrap()).unwrap();
    let prior = PriorSpec::new(vec![
        Prior::GaussianOnLog { mean: 0.0, std: 1.0 },
        Prior::GaussianOnLog { mean: 0.0, std: 1.0 },
        Prior::GaussianOnNatural { mean: 0.0, std: 1.0 },
        Prior::GaussianOnLog { mean: -2.0, std: 1.0 },
    ])
    .unwrap();
    let mut tested = 0;
    let mut bad = Vec::new();
    for &(n, p, k) in &[(2, 1, 0), (2, 1, 1), (10, 3, 2), (25, 12, 1), (50, 4, 5), (100, 6, 3), (15, 12, 5)] {
        for &ess_threshold in &[0.0, 0.5, 1.0] {
            for seed in 0..2 {
                let cfg = SmcConfig { particles: n, batches: p, moves: k, ess_threshold, seed, ..Default::default() };
                let (_, ps) = run_gp(&cfg, model.clone(), prior.clone()).unwrap();
                let (lo, hi) = ((n * p) as u64, (2 * n * p * k + n * p) as u64);
                tested += 1;
                if ps.eval_counter < lo || ps.eval_counter > hi {
                    bad.push((n, p, k, ps.eval_counter));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{tested} runs, {} outside [NP, 2NPK+NP] {bad:?}", bad.len()))
}

// 6: online extension against a fresh run.

fn criterion_6() -> Outcome {
    let x: Vec<f64> = (0..16).map(|i| i as f64 * 0.35).collect();
    let y: Vec<f64> = x.iter().map(|v| (1.2 * v).sin() + 0.3 + 0.05 * (5.0 * v).cos()).collect();
    let model = GpModel::new(ModelSpec::new(KernelSpec::iso(1), MeanSpec::Constant), Dataset::from_1d(&x, &y).unwrap()).unwrap();
    let prior = PriorSpec::new(vec![
        Prior::GaussianOnLog { mean: 0.0, std: 1.0 },
        Prior::GaussianOnLog { mean: 0.0, std: 1.0 },
        Prior::GaussianOnNatural { mean: 0.0, std: 1.0 },
        Prior::GaussianOnLog { mean: -3.0, std: 1.0 },
    ])
    .unwrap();
    let batches: Vec<Vec<usize>> = (0..4).map(|b| (4 * b..4 * b + 4).collect()).collect();
    let pairs = 20;
    let mut online = Vec::new();
    let mut fresh = Vec::new();
    for s in 0..pairs as u64 {
        let cfg = SmcConfig { particles: 200, batches: 4, moves: 5, seed: s, ..Default::default() };
        let mut seq = TemperingSequence::new(model.clone(), prior.clone(), batches[..3].to_vec()).unwrap();
        let mut ps = run_with_streams(&cfg, &seq, Streams::new(s)).unwrap();
        extend_online(&mut ps, &mut seq, batches[3].clone(), &cfg).unwrap();
        online.push(ps.mean());

        let seq = TemperingSequence::new(model.clone(), prior.clone(), batches.clone()).unwrap();
        let ps = run_with_streams(&cfg, &seq, Streams::new(10_000 + s)).unwrap();
        fresh.push(ps.mean());
    }
    let mut worst = 0.0f64;
    for k in 0..4 {
        let a: Vec<f64> = online.iter().map(|m| m[k]).collect();
        let b: Vec<f64> = fresh.iter().map(|m| m[k]).collect();
        let (ma, va) = sample_moments(&a);
        let (mb, vb) = sample_moments(&b);
        let se = (va / pairs as f64 + vb / pairs as f64).sqrt();
        worst = worst.max((ma - mb).abs() / se);
    }
    outcome(worst <= 3.0, format!("largest |online - fresh| / combined SE over 4 coordinates: {worst:.2} (need <= 3)"))
}

fn sample_moments(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0))
}

// 7: change-point detection.

fn conjugate_log_evidence(m: &ConjugateGaussian, ys: &[f64]) -> f64 {
    let n = ys.len();
    let cov = DMatrix::from_fn(n, n, |i, j| m.prior_var + if i == j { m.noise_var } else { 0.0 });
    dense_mvn_logpdf(ys, &vec![m.prior_mean; n], &cov)
}

/// P(a segment starts at the last point | ys) by enumerating all
/// segmentations.
fn exhaustive_change_probability(m: &ConjugateGaussian, ys: &[f64], h: f64) -> f64 {
    let t = ys.len();
    if t == 1 {
        return 1.0;
    }
    let mut terms = Vec::new();
    for mask in 0u32..(1 << (t - 1)) {
        let mut lp = 0.0;
        let mut start = 0;
        for k in 1..t {
            if mask >> (k - 1) & 1 == 1 {
                lp += h.ln() + conjugate_log_evidence(m, &ys[start..k]);
                start = k;
            } else {
                lp += (1.0 - h).ln();
            }
        }
        lp += conjugate_log_evidence(m, &ys[start..]);
        terms.push((start == t - 1, lp));
    }
    let max = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let den: f64 = terms.iter().map(|t| (t.1 - max).exp()).sum();
    let num: f64 = terms.iter().filter(|t| t.0).map(|t| (t.1 - max).exp()).sum();
    num / den
}

fn two_regime(n1: usize, n2: usize, shift: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).unwrap();
    (0..n1 + n2).map(|t| z.sample(&mut rng) + if t >= n1 { shift } else { 0.0 }).collect()
}

fn criterion_7() -> Outcome {
    let mut worst = 0.0f64;
    let conj = ConjugateGaussian { prior_mean: 0.0, prior_var: 4.0, noise_var: 1.0 };
    for (seed, t_max) in (0..4).zip([6, 8, 10, 10]) {
        let ys = two_regime(t_max / 2, t_max - t_max / 2, 3.0, 100 + seed);
        for h in [0.05, 0.3] {
            let mut det = Bocpd::new(conj, Hazard::new(h).unwrap(), Pruning::disabled(), Execution::Sequential);
            for t in 1..=ys.len() {
                let p = det.step(t as f64, ys[t - 1]).unwrap().change_probability();
                worst = worst.max((p - exhaustive_change_probability(&conj, &ys[..t], h)).abs());
            }
        }
    }

    let spec = ModelSpec::new(KernelSpec::iso(1), MeanSpec::Constant);
    let prior = PriorSpec::new(vec![
        Prior::GaussianOnLog { mean: 2.0, std: 0.5 },
        // Segments are level shifts in white noise: weak within-segment signal.
        Prior::GaussianOnLog { mean: -2.0, std: 0.5 },
        Prior::GaussianOnNatural { mean: 0.0, std: 5.0 },
        Prior::GaussianOnLog { mean: 0.0, std: 0.5 },
    ])
    .unwrap();
    let mut hits = 0;
    let mut found = Vec::new();
    for seed in 0..10u64 {
        let ys = two_regime(40, 40, 5.0, seed);
        let xs: Vec<f64> = (1..=80).map(|t| t as f64).collect();
        let smc = SmcConfig { seed, ..SmcConfig::preset("changepoint").unwrap() };
        let model = GpSegmentModel::new(spec, prior.clone(), smc).unwrap();
        let mut det = Bocpd::new(model, Hazard::new(0.02).unwrap(), Pruning::default(), Execution::Parallel);
        det.run(&xs, &ys).unwrap();
        let cps = det.posterior().threshold_segments(0.5).unwrap();
        if cps.len() == 1 && cps[0].abs_diff(41) <= 3 {
            hits += 1;
        }
        found.push(cps);
    }
    outcome(
        worst < 1e-8 && hits >= 8,
        format!("conjugate oracle max error {worst:.2e} (tol 1e-8); GP detector exact single hit near t=41 in {hits}/10 seeds (need 8), found {found:?}"),
    )
}

// 8: metric anchors.

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_smse = 0.0f64;
    let mut worst_msll = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..40);
        let train: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let test: Vec<f64> = (0..rng.random_range(1..40)).map(|_| rng.random_range(-10.0..10.0)).collect();
        let (m, v) = metrics::moments(&train);
        let s = metrics::smse(&vec![m; n], &train, &train).unwrap();
        worst_smse = worst_smse.max((s - 1.0).abs());
        let trivial = PredictiveGaussian { mean: vec![m; test.len()], variance: vec![v; test.len()], covariance: None };
        worst_msll = worst_msll.max(metrics::msll(&trivial, &test, &train).unwrap().abs());
    }
    outcome(
        worst_smse <= 1e-12 && worst_msll <= 1e-12,
        format!("max |smse - 1| {worst_smse:.1e}, max |msll| {worst_msll:.1e} (tol 1e-12)"),
    )
}

// 9: optional SARCOS harness.

fn criterion_9() -> Option<Outcome> {
    let train = std::env::var("GPSMC_SARCOS_TRAIN").ok()?;
    let test = std::env::var("GPSMC_SARCOS_TEST").ok()?;
    let dir = tempfile::tempdir().unwrap();
    let cols: Vec<usize> = (0..21).collect();
    let ls = json!({"kind": "gaussian_on_log", "mean": 3.0, "variance": 3.0});
    let mut prior = vec![ls; 22];
    prior.push(json!({"kind": "gaussian_on_log", "mean": 1.0, "variance": 1.0}));
    let v = json!({
        "task": "predict",
        "seed": 0,
        "preset": "sarcos",
        "dataset": {"path": train, "input_columns": cols, "output_column": 21, "has_header": false},
        "model": {"kernel": "se_ard", "mean": "zero"},
        "prior": prior,
        "predict": {
            "test_dataset": {"path": test, "input_columns": cols, "output_column": 21, "has_header": false},
            "approximation": {"kind": "subset_of_datapoints", "m": 256}
        }
    });
    let mut cfg = RunConfig::from_json(&v.to_string()).unwrap();
    cfg.finalize(None, None).unwrap();
    Some(match execute(cfg, Some(dir.path())) {
        Ok(out) => {
            let m: PredictMetrics = read_json(&out.dir.join("metrics.json")).unwrap();
            outcome(m.smse < 0.15, format!("SMSE {:.4} (need < 0.15), MSLL {:.3}", m.smse, m.msll))
        }
        Err(e) => outcome(false, format!("run failed: {e}")),
    })
}

// 10: determinism from the manifest.

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut s = String::from("x,y\n");
    let ys = two_regime(15, 15, 5.0, 3);
    for (t, y) in ys.iter().enumerate() {
        s.push_str(&format!("{:?},{y:?}\n", t as f64 * 0.25));
    }
    std::fs::write(root.join("train.csv"), &s).unwrap();
    let mut s = String::from("x,y\n");
    for i in 0..7 {
        s.push_str(&format!("{:?},{:?}\n", 0.1 + i as f64, ys[i * 4]));
    }
    std::fs::write(root.join("test.csv"), &s).unwrap();

    let mut failures = Vec::new();
    for task in ["sample", "predict", "compare", "changepoint"] {
        let mut v = json!({
            "task": task,
            "seed": 5,
            "dataset": {"path": "train.csv", "input_columns": ["x"], "output_column": "y"},
            "model": {"kernel": "se_iso", "mean": "constant"},
            "prior": [
                {"kind": "gaussian_on_log", "mean": 0.0, "std": 1.0},
                {"kind": "gaussian_on_log", "mean": 0.0, "std": 1.0},
                {"kind": "gaussian_on_natural", "mean": 0.0, "std": 5.0},
                {"kind": "gaussian_on_log", "mean": 0.0, "std": 1.0}
            ],
            "smc": {"particles": 30, "batches": 3, "moves": 2}
        });
        match task {
            "predict" => {
                v["predict"] = json!({"test_dataset": {"path": "test.csv", "input_columns": ["x"], "output_column": "y"}});
            }
            "compare" => {
                v["compare"] = json!({"runs": 3});
                v["predict"] = json!({"query": {"grid": {"lo": 0.0, "hi": 7.0, "count": 8}}});
            }
            "changepoint" => v["preset"] = json!("changepoint"),
            _ => {}
        }
        let cfg_path = root.join(format!("{task}.json"));
        std::fs::write(&cfg_path, serde_json::to_vec_pretty(&v).unwrap()).unwrap();
        let mut cfg = RunConfig::load(&cfg_path).unwrap();
        cfg.finalize(None, None).unwrap();
        let first = execute(cfg, Some(&root.join(format!("{task}-a")))).unwrap();

        let mut replay = RunConfig::load(&first.dir.join(MANIFEST_FILE)).unwrap();
        replay.finalize(None, None).unwrap();
        let again = execute(replay, Some(&root.join(format!("{task}-b")))).unwrap();
        let same = artifact_bytes(&first.dir, &first.manifest).unwrap() == artifact_bytes(&again.dir, &again.manifest).unwrap()
            && first.manifest.config_sha256 == again.manifest.config_sha256
            && first.manifest.artifacts == again.manifest.artifacts;
        if !same {
            failures.push(task);
        }
    }
    outcome(failures.is_empty(), format!("replayed sample, predict, compare, changepoint; mismatches {failures:?}"))
}

fn round(v: &[f64], digits: i32) -> Vec<f64> {
    v.iter().map(|x| round1(*x, digits)).collect()
}

fn round1(x: f64, digits: i32) -> f64 {
    let s = 10f64.powi(digits);
    (x * s).round() / s
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "likelihood matches dense MVN oracle", criterion_1),
        (2, "posterior CDF matches grid quadrature", criterion_2),
        (3, "bimodal posterior covered", criterion_3),
        (4, "run-to-run dispersion vs prior IS", criterion_4),
        (5, "likelihood evaluation budget", criterion_5),
        (6, "online extension matches fresh run", criterion_6),
        (7, "change-point detection", criterion_7),
        (8, "metric anchors", criterion_8),
        (10, "determinism from manifest", criterion_10),
    ];
    let mut failed = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict} {name} [{:.1}s]: {}", start.elapsed().as_secs_f64(), o.detail);
        if !o.pass {
            failed.push(id);
        }
        if id == 4 {
            let start = Instant::now();
            println!("criterion  4 INFO {} [{:.1}s]", criterion_4_informative(), start.elapsed().as_secs_f64());
        }
        if id == 8 {
            match criterion_9() {
                Some(o) => println!("criterion  9 {} SARCOS m=256 subset of datapoints (non-gating): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail),
                None => println!("criterion  9 SKIP SARCOS m=256 subset of datapoints (non-gating): set GPSMC_SARCOS_TRAIN and GPSMC_SARCOS_TEST"),
            }
        }
    }
    println!("gating criteria failed: {failed:?}");
    if !failed.is_empty() && std::env::var("GPSMC_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
