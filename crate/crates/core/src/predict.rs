//! Model-averaged prediction and evaluation metrics.

use crate::error::{Error, Result};
use crate::feature::{FeatureRef, FeatureSpec};
use crate::glm::{Family, FamilySpec};
use crate::linalg::Matrix;
use crate::model_space::VisitedStore;
use crate::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

/// Models whose averaging weight falls below this are left out of a [`ModelAverage`].
pub const MIN_MODEL_WEIGHT: f64 = 1e-15;

/// One model of a model average.
#[derive(Debug, Clone)]
pub struct WeightedModel<S> {
    pub weight: S,
    pub features: Vec<FeatureRef<S>>,
    /// Intercept first, then one coefficient per feature.
    pub beta: Vec<S>,
}

/// Posterior-weighted collection of fitted models, possibly pooled over chains.
#[derive(Debug, Clone)]
pub struct ModelAverage<S> {
    pub family: Family,
    pub models: Vec<WeightedModel<S>>,
}

impl<S: Scalar> ModelAverage<S> {
    /// Single-store average with weights `p(m | y)`.
    pub fn from_store(store: &VisitedStore<S>, family: Family) -> Result<Self> {
        Self::from_chains(&[(store, S::one())], family)
    }

    /// `sum_b u_b sum_m p_b(m | y)` over several chains.
    pub fn from_chains(chains: &[(&VisitedStore<S>, S)], family: Family) -> Result<Self> {
        let mut models = Vec::new();
        for (store, u) in chains {
            for (key, p) in store.posterior()? {
                let w = *u * p;
                if w.to_f64_lossy() < MIN_MODEL_WEIGHT {
                    continue;
                }
                let r = store.get(key).expect("posterior keys come from the store");
                models.push(WeightedModel { weight: w, features: r.features.clone(), beta: r.beta_hat.clone() });
            }
        }
        if models.is_empty() {
            return Err(Error::EmptyStore);
        }
        Ok(Self { family, models })
    }

    /// Posterior mean (Gaussian, Poisson) or class-1 probability (Bernoulli) per row.
    pub fn predict_mean(&self, x: &Matrix<S>, offset: Option<&[S]>) -> Result<Vec<S>> {
        let n = x.rows();
        let spec = match self.family {
            Family::Gaussian => FamilySpec::gaussian(),
            Family::Bernoulli => FamilySpec::bernoulli(),
            Family::Poisson => FamilySpec::poisson(offset.map(|o| o.to_vec())),
        };
        let mut cache: HashMap<String, Arc<Vec<S>>> = HashMap::new();
        let mut out = vec![S::zero(); n];
        let mut total = S::zero();
        for m in &self.models {
            let mut eta = vec![m.beta[0]; n];
            for (f, &b) in m.features.iter().zip(&m.beta[1..]) {
                let col = f.evaluate_cached(x, &mut cache).map_err(|e| match e {
                    Error::NonFiniteOutput { row, feature } => Error::FeatureEvalFailure { row, feature },
                    Error::Dimension(_) => Error::FeatureEvalFailure { row: 0, feature: f.key().to_string() },
                    other => other,
                })?;
                for (e, &c) in eta.iter_mut().zip(col.iter()) {
                    *e += b * c;
                }
            }
            for (i, e) in eta.into_iter().enumerate() {
                out[i] += m.weight * spec.mean(e + spec.offset_at(i));
            }
            total += m.weight;
        }
        for v in out.iter_mut() {
            *v /= total;
        }
        Ok(out)
    }

    pub fn to_artifact(&self) -> ModelAverageArtifact {
        ModelAverageArtifact {
            family: self.family,
            models: self
                .models
                .iter()
                .map(|m| ArtifactModel {
                    weight: m.weight.to_f64_lossy(),
                    features: m.features.iter().map(|f| FeatureSpec::from(f.as_ref())).collect(),
                    beta: m.beta.iter().map(|b| b.to_f64_lossy()).collect(),
                })
                .collect(),
        }
    }

    pub fn from_artifact(a: &ModelAverageArtifact) -> Result<Self> {
        let mut built: HashMap<String, FeatureRef<S>> = HashMap::new();
        let mut models = Vec::with_capacity(a.models.len());
        for m in &a.models {
            if m.beta.len() != m.features.len() + 1 {
                return Err(Error::Dimension("artifact model has mismatched coefficients".into()));
            }
            let mut feats = Vec::with_capacity(m.features.len());
            for spec in &m.features {
                let f: FeatureRef<S> = spec.build()?;
                feats.push(built.entry(f.key().to_string()).or_insert(f).clone());
            }
            models.push(WeightedModel {
                weight: S::lit(m.weight),
                features: feats,
                beta: m.beta.iter().map(|&b| S::lit(b)).collect(),
            });
        }
        if models.is_empty() {
            return Err(Error::EmptyStore);
        }
        Ok(Self { family: a.family, models })
    }

    /// Largest input index used by any model.
    pub fn max_input(&self) -> Option<usize> {
        self.models.iter().flat_map(|m| m.features.iter().map(|f| f.max_input())).max()
    }
}

/// Serializable form of a [`ModelAverage`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactModel {
    pub weight: f64,
    pub features: Vec<FeatureSpec>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAverageArtifact {
    pub family: Family,
    pub models: Vec<ArtifactModel>,
}

/// Averaged predictions, with classes for binary responses.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionReport<S> {
    pub mean: Vec<S>,
    pub class: Option<Vec<u8>>,
}

/// Model-averaged prediction over a store at class threshold `eta`.
pub fn predict<S: Scalar>(
    store: &VisitedStore<S>,
    x: &Matrix<S>,
    spec: &FamilySpec<S>,
    eta: S,
) -> Result<PredictionReport<S>> {
    let avg = ModelAverage::from_store(store, spec.family())?;
    let mean = avg.predict_mean(x, spec.offset())?;
    Ok(report(mean, spec.family(), eta))
}

/// Attaches classes `I(p >= eta)` for Bernoulli responses.
pub fn report<S: Scalar>(mean: Vec<S>, family: Family, eta: S) -> PredictionReport<S> {
    let class = (family == Family::Bernoulli).then(|| mean.iter().map(|&p| (p >= eta) as u8).collect());
    PredictionReport { mean, class }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub acc: f64,
    /// `None` when the truth has no positives.
    pub fnr: Option<f64>,
    /// `None` when the truth has no negatives.
    pub fpr: Option<f64>,
}

impl ClassificationMetrics {
    pub fn fnr(&self) -> Result<f64> {
        self.fnr.ok_or(Error::UndefinedRate("FNR"))
    }

    pub fn fpr(&self) -> Result<f64> {
        self.fpr.ok_or(Error::UndefinedRate("FPR"))
    }
}

pub fn classification_metrics(y_true: &[u8], y_pred: &[u8]) -> Result<ClassificationMetrics> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(Error::Dimension("truth and prediction lengths differ or are empty".into()));
    }
    if y_true.iter().chain(y_pred).any(|&v| v > 1) {
        return Err(Error::Dimension("classification metrics need 0/1 labels".into()));
    }
    let (mut tp, mut tn, mut fp, mut fneg) = (0usize, 0usize, 0usize, 0usize);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 0) => tn += 1,
            (0, 1) => fp += 1,
            _ => fneg += 1,
        }
    }
    let pos = tp + fneg;
    let neg = tn + fp;
    Ok(ClassificationMetrics {
        acc: (tp + tn) as f64 / y_true.len() as f64,
        fnr: (pos > 0).then(|| fneg as f64 / pos as f64),
        fpr: (neg > 0).then(|| fp as f64 / neg as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub rmse: f64,
    pub mae: f64,
    /// Pearson correlation; `None` when either vector is constant.
    pub corr: Option<f64>,
}

impl RegressionMetrics {
    pub fn corr(&self) -> Result<f64> {
        self.corr.ok_or(Error::DegenerateCorrelation)
    }
}

pub fn regression_metrics(y_true: &[f64], y_pred: &[f64]) -> Result<RegressionMetrics> {
    if y_true.len() != y_pred.len() || y_true.len() < 2 {
        return Err(Error::Dimension("regression metrics need two equally long vectors of length >= 2".into()));
    }
    let n = y_true.len() as f64;
    let rmse = (y_true.iter().zip(y_pred).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n).sqrt();
    let mae = y_true.iter().zip(y_pred).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    Ok(RegressionMetrics { rmse, mae, corr: pearson(y_true, y_pred) })
}

/// Pearson correlation, `None` for a constant input.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// A true feature together with the forms that count as detecting it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthClass {
    pub label: String,
    /// Canonical keys of the accepted forms.
    pub members: Vec<String>,
}

impl TruthClass {
    pub fn single(key: &str) -> Self {
        Self { label: key.to_string(), members: vec![key.to_string()] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionMetrics {
    pub runs: usize,
    /// Per truth class: fraction of runs detecting any member.
    pub class_power: Vec<(String, f64)>,
    /// Per member key: fraction of runs detecting it.
    pub member_power: Vec<(String, f64)>,
    /// Mean of the per-class powers.
    pub power: f64,
    pub fp: f64,
    pub fdr: f64,
}

/// Power, expected false positives and false discovery rate over runs, each run
/// given as its set of detected feature keys.
pub fn detection_metrics(runs: &[Vec<String>], truths: &[TruthClass]) -> Result<DetectionMetrics> {
    if runs.is_empty() {
        return Err(Error::Config("detection metrics need at least one run".into()));
    }
    let n = runs.len() as f64;
    let true_keys: BTreeSet<&str> = truths.iter().flat_map(|t| t.members.iter().map(|m| m.as_str())).collect();
    let mut fp_total = 0.0;
    let mut fdr_total = 0.0;
    for run in runs {
        let detected: BTreeSet<&str> = run.iter().map(|s| s.as_str()).collect();
        let false_pos = detected.iter().filter(|k| !true_keys.contains(*k)).count();
        fp_total += false_pos as f64;
        if !detected.is_empty() {
            fdr_total += false_pos as f64 / detected.len() as f64;
        }
    }
    let hit = |key: &str| runs.iter().filter(|r| r.iter().any(|k| k == key)).count() as f64 / n;
    let class_power: Vec<(String, f64)> = truths
        .iter()
        .map(|t| {
            let c = runs.iter().filter(|r| r.iter().any(|k| t.members.contains(k))).count() as f64 / n;
            (t.label.clone(), c)
        })
        .collect();
    let member_power = truths.iter().flat_map(|t| t.members.iter().map(|m| (m.clone(), hit(m)))).collect();
    let power = if class_power.is_empty() {
        0.0
    } else {
        class_power.iter().map(|c| c.1).sum::<f64>() / class_power.len() as f64
    };
    Ok(DetectionMetrics { runs: runs.len(), class_power, member_power, power, fp: fp_total / n, fdr: fdr_total / n })
}
