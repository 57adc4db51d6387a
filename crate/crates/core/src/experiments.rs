//! Synthetic recovery experiments and the enumerable-space posterior check.

use crate::data::{gen_synthetic, Generator, SyntheticSpec, Truth};
use crate::error::{Error, Result};
use crate::feature::{AlphaStrategy, Constraints, FeatureRef, FitContext, TransformLibrary};
use crate::glm::{log_marginal, FamilySpec};
use crate::gmjmcmc::{run_chain, ChainConfig, ScheduleConfig};
use crate::linalg::Matrix;
use crate::math::log_sum_exp;
use crate::mjmcmc::KernelConfig;
use crate::parallel::{aggregate, run_parallel, ChainPosterior, WeightMode};
use crate::predict::{detection_metrics, pearson, DetectionMetrics, TruthClass};
use crate::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

/// Detected columns correlating with a truth member at least this strongly count as that member.
pub const EQUIVALENCE_CORR: f64 = 1.0 - 1e-6;

/// Offset between the data seed and the chain seeds of a replicate.
const CHAIN_SEED_STRIDE: u64 = 10_000;

#[derive(Debug, Clone)]
pub struct DetectionExperiment {
    pub data: SyntheticSpec,
    pub chain: ChainConfig,
    /// Number of chains `B` per replicate.
    pub threads: usize,
    pub replicates: usize,
    pub threshold: f64,
    pub weights: WeightMode,
}

impl DetectionExperiment {
    /// Logic regression simulation: n = 1000, 50 binary covariates, BIC-like prior.
    pub fn logic(replicates: usize, threads: usize, seed: u64) -> Self {
        let n = 1000;
        Self {
            data: SyntheticSpec { generator: Generator::Logic, n, noise_sd: 1.0, relative_noise: false, seed },
            chain: inference_chain(n, ScheduleConfig {
                population_size: 20,
                populations: 450,
                n_init: 300,
                n_expl: 100,
                n_final: 2000,
                max_final_steps: 6000,
                ..ScheduleConfig::default()
            }),
            threads,
            replicates,
            threshold: 0.5,
            weights: WeightMode::MassWeighted,
        }
    }

    /// Kepler's third law on synthetic planets, 1 % noise.
    pub fn kepler(replicates: usize, threads: usize, seed: u64) -> Self {
        let n = 223;
        Self {
            data: SyntheticSpec { generator: Generator::Kepler, n, noise_sd: 0.01, relative_noise: true, seed },
            chain: inference_chain(n, ScheduleConfig {
                population_size: 15,
                populations: 120,
                n_init: 250,
                n_expl: 250,
                n_final: 10_000,
                max_final_steps: 30_000,
                ..ScheduleConfig::default()
            }),
            threads,
            replicates,
            threshold: 0.25,
            weights: WeightMode::MassWeighted,
        }
    }

    /// Planetary mass law `R^3 rho`, 1 % noise.
    pub fn mass(replicates: usize, threads: usize, seed: u64) -> Self {
        let mut e = Self::kepler(replicates, threads, seed);
        e.data.generator = Generator::Mass;
        e.data.n = 223;
        e
    }

    pub fn by_name(name: &str, replicates: usize, threads: usize, seed: u64) -> Result<Self> {
        match name {
            "logic" => Ok(Self::logic(replicates, threads, seed)),
            "kepler" => Ok(Self::kepler(replicates, threads, seed)),
            "mass" => Ok(Self::mass(replicates, threads, seed)),
            other => Err(Error::Config(format!("unknown experiment `{other}` (kepler, mass, logic, enumeration)"))),
        }
    }
}

/// G_1, D = 5, L = Q = 15, `a = exp(-2 log n)`, Strategy 1.
fn inference_chain(n: usize, schedule: ScheduleConfig) -> ChainConfig {
    ChainConfig {
        schedule,
        kernel: KernelConfig { max_features: 15, ..KernelConfig::default() },
        constraints: Constraints { max_depth: 5, max_width: 15 },
        library: TransformLibrary::g1(),
        strategy: AlphaStrategy::Naive,
        log_a: -2.0 * (n as f64).ln(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateResult {
    pub data_seed: u64,
    /// Detected keys after truth matching, with merged posteriors.
    pub detected: Vec<(String, f64)>,
    pub seconds: f64,
    pub failed_chains: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectionReport {
    pub name: String,
    pub threads: usize,
    pub threshold: f64,
    pub truths: Vec<TruthClass>,
    pub replicates: Vec<ReplicateResult>,
    pub metrics: DetectionMetrics,
}

/// Replaces every detected key by the truth member whose column it reproduces,
/// if any. Keys that end up equal are reported once, with the larger posterior.
pub fn match_truths<S: Scalar>(detected: &[(FeatureRef<S>, f64)], truths: &[Truth<S>], x: &Matrix<S>) -> Vec<(String, f64)> {
    let member_cols: Vec<(String, Vec<f64>)> = truths
        .iter()
        .flat_map(|t| t.members.iter())
        .filter_map(|m| m.evaluate(x).ok().map(|c| (m.key().to_string(), c.iter().map(|v| v.to_f64_lossy()).collect())))
        .collect();
    detected
        .iter()
        .map(|(f, p)| {
            if member_cols.iter().any(|(k, _)| k == f.key()) {
                return (f.key().to_string(), *p);
            }
            let col: Option<Vec<f64>> = f.evaluate(x).ok().map(|c| c.iter().map(|v| v.to_f64_lossy()).collect());
            let hit = col.and_then(|c| {
                member_cols
                    .iter()
                    .find(|(_, m)| pearson(&c, m).is_some_and(|r| r.abs() >= EQUIVALENCE_CORR))
                    .map(|(k, _)| k.clone())
            });
            (hit.unwrap_or_else(|| f.key().to_string()), *p)
        })
        .fold(Vec::new(), |mut out: Vec<(String, f64)>, (k, p)| {
            match out.iter_mut().find(|(seen, _)| *seen == k) {
                Some(e) => e.1 = e.1.max(p),
                None => out.push((k, p)),
            }
            out
        })
}

/// Runs the replicates; `progress` is called after each one.
pub fn run_detection(
    name: &str,
    exp: &DetectionExperiment,
    mut progress: impl FnMut(usize, &ReplicateResult),
) -> Result<DetectionReport> {
    exp.chain.validate()?;
    if exp.threads == 0 || exp.replicates == 0 {
        return Err(Error::Config("threads and replicates must be positive".into()));
    }
    let spec = FamilySpec::<f64>::gaussian();
    let mut reps = Vec::with_capacity(exp.replicates);
    let mut runs = Vec::with_capacity(exp.replicates);
    let mut truth_classes = Vec::new();
    for r in 0..exp.replicates {
        let t0 = Instant::now();
        let data_seed = exp.data.seed.wrapping_add(r as u64);
        let syn = gen_synthetic::<f64>(&SyntheticSpec { seed: data_seed, ..exp.data })?;
        truth_classes = syn.truths.iter().map(|t| t.class()).collect();
        let ds = &syn.dataset;
        let ctx = FitContext { x: &ds.x, y: &ds.y, spec: &spec };
        let chain_seed = data_seed.wrapping_mul(CHAIN_SEED_STRIDE);
        let results = run_parallel(&ctx, &exp.chain, exp.threads, chain_seed);
        let mut features: BTreeMap<String, FeatureRef<f64>> = BTreeMap::new();
        let mut posts = Vec::new();
        let mut failed = 0;
        for res in &results {
            match res {
                Ok(s) => {
                    posts.push(ChainPosterior::from(s));
                    features.extend(s.features.iter().map(|(k, f)| (k.clone(), f.clone())));
                }
                Err(e) => {
                    log::warn!("chain failed: {e}");
                    failed += 1;
                }
            }
        }
        let detected = if posts.is_empty() {
            Vec::new()
        } else {
            let agg = aggregate(&posts, exp.weights)?;
            let hits: Vec<(FeatureRef<f64>, f64)> =
                agg.detected(exp.threshold).into_iter().map(|(k, p)| (features[k].clone(), p)).collect();
            match_truths(&hits, &syn.truths, &ds.x)
        };
        runs.push(detected.iter().map(|d| d.0.clone()).collect::<Vec<_>>());
        let rep = ReplicateResult { data_seed, detected, seconds: t0.elapsed().as_secs_f64(), failed_chains: failed };
        progress(r, &rep);
        reps.push(rep);
    }
    let metrics = detection_metrics(&runs, &truth_classes)?;
    Ok(DetectionReport {
        name: name.to_string(),
        threads: exp.threads,
        threshold: exp.threshold,
        truths: truth_classes,
        replicates: reps,
        metrics,
    })
}

impl DetectionReport {
    /// Power per truth (and per accepted form), overall power, FP and FDR.
    pub fn table(&self) -> String {
        let m = &self.metrics;
        let mut out = String::new();
        let _ = writeln!(out, "{} (B = {}, N = {}, threshold {})", self.name, self.threads, m.runs, self.threshold);
        let several_forms = self.truths.iter().any(|t| t.members.len() > 1);
        if several_forms {
            for (i, (k, p)) in m.member_power.iter().enumerate() {
                let _ = writeln!(out, "F{:<22} {p:.4}   {k}", i + 1);
            }
        } else {
            for (label, p) in &m.class_power {
                let _ = writeln!(out, "{label:<23} {p:.4}");
            }
        }
        let _ = writeln!(out, "{:<23} {:.4}", if several_forms { "Pow" } else { "Overall power" }, m.power);
        let _ = writeln!(out, "{:<23} {:.4}", "FP", m.fp);
        let _ = writeln!(out, "{:<23} {:.4}", "FDR", m.fdr);
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationRun {
    pub seed: u64,
    pub models_visited: usize,
    pub tv: f64,
    pub max_abs_diff: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnumerationReport {
    pub m: usize,
    pub budget: usize,
    pub runs: Vec<EnumerationRun>,
}

impl EnumerationReport {
    pub fn table(&self) -> String {
        let mut out = format!("enumeration (m = {}, visit budget {})\nseed   models   TV\n", self.m, self.budget);
        for r in &self.runs {
            let _ = writeln!(out, "{:<6} {:<8} {:.3e}", r.seed, r.models_visited, r.tv);
        }
        out
    }
}

/// Gaussian data with `m` covariates, two of them active.
pub fn enumeration_data(n: usize, m: usize, seed: u64) -> (Matrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = Normal::new(0.0, 1.0).expect("unit normal");
    let cols: Vec<Vec<f64>> = (0..m).map(|_| (0..n).map(|_| z.sample(&mut rng)).collect()).collect();
    let y = (0..n)
        .map(|i| 0.5 + 0.6 * cols[0][i] - 0.3 * cols[1.min(m - 1)][i] + z.sample(&mut rng))
        .collect();
    (Matrix::from_columns(&cols).expect("equal columns"), y)
}

/// Exact posterior over all `2^m` input subsets, keyed by model key.
pub fn exact_input_posterior(x: &Matrix<f64>, y: &[f64], log_a: f64) -> Result<BTreeMap<String, f64>> {
    let m = x.cols();
    let spec = FamilySpec::gaussian();
    let mut keys = Vec::new();
    let mut scores = Vec::new();
    for mask in 0u32..(1 << m) {
        let idx: Vec<usize> = (0..m).filter(|j| mask >> j & 1 == 1).collect();
        let cols: Vec<&[f64]> = idx.iter().map(|&j| x.col(j)).collect();
        let (lm, _) = log_marginal(&cols, y, &spec)?;
        scores.push(lm + log_a * idx.len() as f64);
        let mut names: Vec<String> = idx.iter().map(|j| format!("x{j}")).collect();
        names.sort();
        keys.push(if names.is_empty() { crate::model_space::EMPTY_MODEL_KEY.to_string() } else { names.join(";") });
    }
    let lse = log_sum_exp(&scores);
    Ok(keys.into_iter().zip(scores).map(|(k, s)| (k, (s - lse).exp())).collect())
}

/// Chain configuration restricted to the input covariates (`D = 0`).
pub fn enumeration_chain(m: usize, budget: usize, log_a: f64) -> ChainConfig {
    ChainConfig {
        schedule: ScheduleConfig {
            population_size: m,
            populations: 1,
            n_init: budget,
            n_expl: 0,
            n_final: 0,
            max_final_steps: 0,
            kind_probs: [0.0, 0.0, 0.0, 1.0],
            ..ScheduleConfig::default()
        },
        kernel: KernelConfig { max_features: m, local_steps: 4, ..KernelConfig::default() },
        constraints: Constraints { max_depth: 0, max_width: 2 },
        library: TransformLibrary::g1(),
        strategy: AlphaStrategy::Naive,
        log_a,
    }
}

/// TV distance between the renormalized store posterior and the exact one, per seed.
pub fn run_enumeration(m: usize, budget: usize, seeds: &[u64]) -> Result<EnumerationReport> {
    let log_a = -2.0;
    let spec = FamilySpec::gaussian();
    let mut runs = Vec::new();
    for &seed in seeds {
        let (x, y) = enumeration_data(100, m, seed);
        let exact = exact_input_posterior(&x, &y, log_a)?;
        let ctx = FitContext { x: &x, y: &y, spec: &spec };
        let summary = run_chain(&ctx, &enumeration_chain(m, budget, log_a), seed)?;
        let est: BTreeMap<String, f64> = summary.model_posteriors.unwrap_or_default().into_iter().collect();
        let diffs: Vec<f64> = exact.iter().map(|(k, p)| (p - est.get(k).copied().unwrap_or(0.0)).abs()).collect();
        runs.push(EnumerationRun {
            seed,
            models_visited: summary.model_count,
            tv: 0.5 * diffs.iter().sum::<f64>(),
            max_abs_diff: diffs.iter().copied().fold(0.0, f64::max),
        });
    }
    Ok(EnumerationReport { m, budget, runs })
}
