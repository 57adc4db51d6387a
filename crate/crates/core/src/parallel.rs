//! Independent chains and the mass-weighted merge of their estimates.

use crate::error::{Error, Result};
use crate::feature::FitContext;
use crate::gmjmcmc::{run_chain, ChainConfig, RunSummary};
use crate::math::log_sum_exp;
use crate::Scalar;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMode {
    /// `u_b` proportional to the posterior mass `exp(s_b)` found by chain `b`.
    MassWeighted,
    Uniform,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mass_weighted" | "mass" => Ok(WeightMode::MassWeighted),
            "uniform" => Ok(WeightMode::Uniform),
            other => Err(Error::Config(format!("unknown weight mode {other:?}"))),
        }
    }
}

/// What a chain contributes to the merge: its posterior map and `s_b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainPosterior {
    pub seed: u64,
    pub mass_s_b: f64,
    pub feature_posteriors: BTreeMap<String, f64>,
}

impl<S: Scalar> From<&RunSummary<S>> for ChainPosterior {
    fn from(r: &RunSummary<S>) -> Self {
        Self { seed: r.seed, mass_s_b: r.mass_s_b, feature_posteriors: r.feature_posteriors.clone() }
    }
}

/// Runs `chains` chains with seeds `base_seed + b` in parallel. Each entry is
/// that chain's result; failures do not affect the other chains.
pub fn run_parallel<S: Scalar>(
    ctx: &FitContext<'_, S>,
    cfg: &ChainConfig,
    chains: usize,
    base_seed: u64,
) -> Vec<Result<RunSummary<S>>> {
    (0..chains as u64)
        .into_par_iter()
        .map(|b| run_chain(ctx, cfg, base_seed.wrapping_add(b)))
        .collect()
}

/// Chain weights; they sum to one.
pub fn chain_weights(masses: &[f64], mode: WeightMode) -> Vec<f64> {
    let b = masses.len() as f64;
    match mode {
        WeightMode::Uniform => vec![1.0 / b; masses.len()],
        WeightMode::MassWeighted => {
            let total = log_sum_exp(masses);
            if !total.is_finite() {
                return vec![1.0 / b; masses.len()];
            }
            let w: Vec<f64> = masses.iter().map(|&s| (s - total).exp()).collect();
            let sum = crate::model_space::neumaier_sum(&w);
            w.into_iter().map(|v| v / sum).collect()
        }
    }
}

/// Merged estimate of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergedFeature {
    pub posterior: f64,
    pub chain_min: f64,
    pub chain_max: f64,
    /// One entry per chain, 0 where the chain never saw the feature.
    pub per_chain: Vec<f64>,
}

/// Weighted merge of several chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mode: WeightMode,
    pub weights: Vec<f64>,
    pub seeds: Vec<u64>,
    pub masses: Vec<f64>,
    pub features: BTreeMap<String, MergedFeature>,
}

/// `p(Delta | y) = sum_b u_b p_b(Delta | y)` for every feature seen by any chain.
pub fn aggregate(chains: &[ChainPosterior], mode: WeightMode) -> Result<Aggregate> {
    if chains.is_empty() {
        return Err(Error::EmptyStore);
    }
    let masses: Vec<f64> = chains.iter().map(|c| c.mass_s_b).collect();
    let weights = chain_weights(&masses, mode);
    let mut keys: Vec<&String> = chains.iter().flat_map(|c| c.feature_posteriors.keys()).collect();
    keys.sort();
    keys.dedup();
    let mut features = BTreeMap::new();
    for k in keys {
        let per_chain: Vec<f64> = chains.iter().map(|c| c.feature_posteriors.get(k).copied().unwrap_or(0.0)).collect();
        let posterior: f64 = per_chain.iter().zip(&weights).map(|(p, w)| p * w).sum();
        let chain_min = per_chain.iter().copied().fold(f64::INFINITY, f64::min);
        let chain_max = per_chain.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // guard rounding at the ends of the convex hull
        let posterior = posterior.clamp(chain_min, chain_max);
        features.insert(k.clone(), MergedFeature { posterior, chain_min, chain_max, per_chain });
    }
    Ok(Aggregate { mode, weights, seeds: chains.iter().map(|c| c.seed).collect(), masses, features })
}

impl Aggregate {
    /// Features whose merged posterior exceeds `threshold`, best first.
    pub fn detected(&self, threshold: f64) -> Vec<(&str, f64)> {
        let mut out: Vec<(&str, f64)> =
            self.features.iter().filter(|(_, m)| m.posterior > threshold).map(|(k, m)| (k.as_str(), m.posterior)).collect();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
        out
    }

    /// CSV report: `feature_key,aggregated_posterior,chain_min,chain_max`, best first.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut rows: Vec<(&String, &MergedFeature)> = self.features.iter().collect();
        rows.sort_by(|a, b| b.1.posterior.total_cmp(&a.1.posterior).then(a.0.cmp(b.0)));
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["feature_key", "aggregated_posterior", "chain_min", "chain_max"])?;
        for (k, m) in rows {
            w.write_record([k.clone(), m.posterior.to_string(), m.chain_min.to_string(), m.chain_max.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON report with per-chain detail.
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }
}
