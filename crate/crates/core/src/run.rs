//! End-to-end fit and prediction on tabular data, and the files a run writes.

use crate::config::RunConfig;
use crate::data::{load_csv, Dataset, DatasetSummary, Standardizer};
use crate::error::{Error, Result};
use crate::feature::FitContext;
use crate::glm::Family;
use crate::gmjmcmc::RunSummary;
use crate::parallel::{aggregate, run_parallel, Aggregate, ChainPosterior};
use crate::predict::{
    classification_metrics, regression_metrics, report, ClassificationMetrics, ModelAverage, ModelAverageArtifact,
    PredictionReport, RegressionMetrics,
};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

/// Everything needed to predict from a finished fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitArtifact {
    pub columns: Vec<String>,
    pub response: String,
    pub categorical: Vec<String>,
    pub offset: Option<String>,
    pub standardizer: Option<Standardizer>,
    pub eta: f64,
    pub seeds: Vec<u64>,
    pub chain_weights: Vec<f64>,
    pub model_average: ModelAverageArtifact,
}

impl FitArtifact {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        serde_json::to_writer(BufWriter::new(File::create(path)?), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let f = File::open(path.as_ref())
            .map_err(|e| Error::Io(format!("cannot open {}: {e}", path.as_ref().display())))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
    }
}

pub struct FitOutcome {
    pub aggregate: Aggregate,
    pub chains: Vec<RunSummary<f64>>,
    /// Seeds and messages of chains that failed.
    pub failures: Vec<(u64, String)>,
    pub artifact: FitArtifact,
    pub dataset: DatasetSummary,
    pub seconds: f64,
}

/// Runs `cfg.threads` chains on `data` and merges them.
pub fn fit(cfg: &RunConfig, mut data: Dataset<f64>) -> Result<FitOutcome> {
    let t0 = Instant::now();
    cfg.validate()?;
    let offset_name = (!cfg.offset.trim().is_empty()).then(|| cfg.offset.trim().to_string());
    let offset = match &offset_name {
        Some(name) => Some(data.take_column(name)?),
        None => None,
    };
    let standardizer = cfg.standardize.then(|| Standardizer::fit(&data.x));
    if let Some(s) = &standardizer {
        s.apply(&mut data.x)?;
    }
    let spec = cfg.family_spec(offset)?;
    let chain = cfg.chain_config(data.n())?;
    let ctx = FitContext { x: &data.x, y: &data.y, spec: &spec };
    let mut chains = Vec::new();
    let mut failures = Vec::new();
    let mut first_err = None;
    for (b, res) in run_parallel(&ctx, &chain, cfg.threads, cfg.seed).into_iter().enumerate() {
        match res {
            Ok(s) => {
                if let Some(f) = &s.failure {
                    log::warn!("chain {} stopped early: {f}", s.seed);
                }
                chains.push(s);
            }
            Err(e) => {
                let seed = cfg.seed.wrapping_add(b as u64);
                log::warn!("chain {seed} failed: {e}");
                failures.push((seed, e.to_string()));
                first_err.get_or_insert(e);
            }
        }
    }
    if chains.is_empty() {
        return Err(first_err.unwrap_or(Error::EmptyStore));
    }
    let posts: Vec<ChainPosterior> = chains.iter().map(ChainPosterior::from).collect();
    let agg = aggregate(&posts, cfg.weight_mode()?)?;
    let stores: Vec<_> = chains.iter().zip(&agg.weights).map(|(c, &w)| (&c.store, w)).collect();
    let avg = ModelAverage::from_chains(&stores, spec.family())?;
    let artifact = FitArtifact {
        columns: data.column_names.clone(),
        response: cfg.response.clone(),
        categorical: cfg.categorical_columns(),
        offset: offset_name,
        standardizer,
        eta: cfg.eta,
        seeds: agg.seeds.clone(),
        chain_weights: agg.weights.clone(),
        model_average: avg.to_artifact(),
    };
    Ok(FitOutcome {
        aggregate: agg,
        chains,
        failures,
        artifact,
        dataset: data.summary(),
        seconds: t0.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub version: &'static str,
    pub git_hash: String,
    pub seed: u64,
    pub threads: usize,
    pub seconds: f64,
    pub dataset: DatasetSummary,
    pub chain_seeds: Vec<u64>,
    pub chain_masses: Vec<f64>,
    pub chain_weights: Vec<f64>,
    pub chain_models: Vec<usize>,
    pub failures: Vec<(u64, String)>,
}

fn git_hash() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".into())
}

/// Writes `report.csv`, `report.json`, `store.csv`, `store.json`,
/// `config.echo` and `metadata.json` into `dir`.
pub fn write_run(outcome: &FitOutcome, cfg: &RunConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    outcome.aggregate.write_csv(File::create(dir.join("report.csv"))?)?;
    outcome.aggregate.write_json(BufWriter::new(File::create(dir.join("report.json"))?))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join("store.csv"))?));
    w.write_record(["chain_seed", "model_key", "log_marginal", "log_prior", "posterior", "size", "visits"])?;
    for c in &outcome.chains {
        for (k, p) in c.store.posterior()? {
            let r = c.store.get(k).expect("posterior keys come from the store");
            w.write_record([
                c.seed.to_string(),
                k.to_string(),
                r.log_marginal.to_string(),
                r.log_prior.to_string(),
                p.to_string(),
                r.size().to_string(),
                r.visit_count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    outcome.artifact.save(dir.join("store.json"))?;
    std::fs::write(dir.join("config.echo"), cfg.echo())?;
    let meta = RunMetadata {
        version: env!("CARGO_PKG_VERSION"),
        git_hash: git_hash(),
        seed: cfg.seed,
        threads: cfg.threads,
        seconds: outcome.seconds,
        dataset: outcome.dataset.clone(),
        chain_seeds: outcome.aggregate.seeds.clone(),
        chain_masses: outcome.aggregate.masses.clone(),
        chain_weights: outcome.aggregate.weights.clone(),
        chain_models: outcome.chains.iter().map(|c| c.model_count).collect(),
        failures: outcome.failures.clone(),
    };
    serde_json::to_writer_pretty(File::create(dir.join("metadata.json"))?, &meta)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MetricBlock {
    Classification(ClassificationMetrics),
    Regression(RegressionMetrics),
}

pub struct PredictionOutcome {
    pub report: PredictionReport<f64>,
    pub metrics: Option<MetricBlock>,
}

fn has_column(path: &Path, name: &str) -> Result<bool> {
    let mut rdr = csv::Reader::from_path(path)?;
    Ok(rdr.headers()?.iter().any(|h| h.trim() == name))
}

/// Predicts every row of a CSV file; metrics are added when it holds the response.
pub fn predict_csv(artifact: &FitArtifact, path: &Path, eta: f64) -> Result<PredictionOutcome> {
    let with_truth = has_column(path, &artifact.response)?;
    let response = with_truth.then_some(artifact.response.as_str());
    let mut data: Dataset<f64> = load_csv(path, response, &artifact.categorical)?;
    let offset = match &artifact.offset {
        Some(name) => Some(data.take_column(name)?),
        None => None,
    };
    let mut x = data.align_to(&artifact.columns)?;
    if let Some(s) = &artifact.standardizer {
        s.apply(&mut x)?;
    }
    let avg = ModelAverage::<f64>::from_artifact(&artifact.model_average)?;
    if let Some(j) = avg.max_input() {
        if j >= x.cols() {
            return Err(Error::UnknownColumn(format!("x{j}")));
        }
    }
    let mean = avg.predict_mean(&x, offset.as_deref())?;
    let rep = report(mean, avg.family, eta);
    let metrics = if with_truth {
        Some(match (&rep.class, avg.family) {
            (Some(class), Family::Bernoulli) => {
                let truth: Vec<u8> = data.y.iter().map(|&v| (v >= 0.5) as u8).collect();
                MetricBlock::Classification(classification_metrics(&truth, class)?)
            }
            _ => MetricBlock::Regression(regression_metrics(&data.y, &rep.mean)?),
        })
    } else {
        None
    };
    Ok(PredictionOutcome { report: rep, metrics })
}

/// `row_id,posterior_mean_or_prob[,class]`.
pub fn write_predictions<W: Write>(report: &PredictionReport<f64>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match &report.class {
        Some(class) => {
            w.write_record(["row_id", "posterior_mean_or_prob", "class"])?;
            for (i, (p, c)) in report.mean.iter().zip(class).enumerate() {
                w.write_record([i.to_string(), p.to_string(), c.to_string()])?;
            }
        }
        None => {
            w.write_record(["row_id", "posterior_mean_or_prob"])?;
            for (i, p) in report.mean.iter().enumerate() {
                w.write_record([i.to_string(), p.to_string()])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
