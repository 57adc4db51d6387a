//! Scoring of models over a population of features, with caching and recording
//! into the visited-model store.

use crate::error::{Error, Result};
use crate::feature::FeatureRef;
use crate::glm::{fit_mle, log_marginal_of_fit, mc_marginal, Family, FamilySpec};
use crate::linalg::{cholesky, Matrix};
use crate::mjmcmc::ModelEvaluator;
use crate::model_space::{log_model_prior, model_key, VisitedStore};
use crate::Scalar;
use indexmap::IndexMap;
use rustc_hash::FxBuildHasher;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;

/// How the marginal likelihood of a model is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarginalMode {
    /// Exact Gaussian form or Laplace approximation at the fitted weights.
    Plugin,
    /// Average over projection weights drawn from their prior.
    MonteCarlo { sigma_alpha: f64, draws: usize, seed: u64 },
}

/// Sufficient statistics for Gaussian fits on standardized columns.
#[derive(Debug, Clone)]
struct GaussStats<S> {
    n: S,
    ybar: S,
    syy: S,
    means: Vec<S>,
    scales: Vec<S>,
    gram: Matrix<S>,
    cross: Vec<S>,
}

impl<S: Scalar> GaussStats<S> {
    fn new(columns: &[Arc<Vec<S>>], y: &[S]) -> Self {
        let n = S::from_usize_lossy(y.len());
        let ybar = y.iter().copied().sum::<S>() / n;
        let yc: Vec<S> = y.iter().map(|&v| v - ybar).collect();
        let syy = yc.iter().map(|&v| v * v).sum();
        let mut means = Vec::with_capacity(columns.len());
        let mut scales = Vec::with_capacity(columns.len());
        let mut z: Vec<Vec<S>> = Vec::with_capacity(columns.len());
        for c in columns {
            let m = c.iter().copied().sum::<S>() / n;
            let centered: Vec<S> = c.iter().map(|&v| v - m).collect();
            let s = centered.iter().map(|&v| v * v).sum::<S>().sqrt();
            let s = if s > S::zero() && s.is_finite() { s } else { S::zero() };
            means.push(m);
            scales.push(s);
            z.push(if s > S::zero() { centered.iter().map(|&v| v / s).collect() } else { centered });
        }
        let k = columns.len();
        let mut gram = Matrix::zeros(k, k);
        for i in 0..k {
            for j in 0..=i {
                let v = crate::linalg::dot(&z[i], &z[j]);
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        let cross = z.iter().map(|zi| crate::linalg::dot(zi, &yc)).collect();
        Self { n, ybar, syy, means, scales, gram, cross }
    }

    /// RSS and coefficients (intercept first) of the model on `idx`, or `None`
    /// when the standardized system is too ill-conditioned to trust.
    fn fit(&self, idx: &[usize]) -> Option<(S, Vec<S>)> {
        let k = idx.len();
        if idx.iter().any(|&i| self.scales[i] == S::zero()) {
            return None;
        }
        let mut g = Matrix::zeros(k, k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                g[(a, b)] = self.gram[(i, j)];
            }
        }
        let l = cholesky(&g)?;
        if (0..k).any(|j| l[(j, j)] * l[(j, j)] < S::lit(1e-9)) {
            return None;
        }
        let c: Vec<S> = idx.iter().map(|&i| self.cross[i]).collect();
        let coef = crate::linalg::cholesky_solve(&l, &c);
        let explained: S = coef.iter().zip(&c).map(|(&a, &b)| a * b).sum();
        let rss = self.syy - explained;
        if !(rss > self.syy * S::lit(1e-9)) {
            return None;
        }
        let slopes: Vec<S> = idx.iter().zip(&coef).map(|(&i, &a)| a / self.scales[i]).collect();
        let intercept = self.ybar - idx.iter().zip(&slopes).map(|(&i, &b)| b * self.means[i]).sum::<S>();
        Some((rss, std::iter::once(intercept).chain(slopes).collect()))
    }
}

#[derive(Debug, Clone)]
struct CacheEntry<S> {
    log_target: S,
    key: Option<String>,
}

/// Scores subsets of a population and records every fitted model in a store.
pub struct PopulationEvaluator<'a, S> {
    features: Vec<FeatureRef<S>>,
    columns: Vec<Arc<Vec<S>>>,
    x: &'a Matrix<S>,
    y: &'a [S],
    spec: &'a FamilySpec<S>,
    log_a: S,
    max_features: usize,
    mode: MarginalMode,
    gauss: Option<GaussStats<S>>,
    cache: IndexMap<Vec<bool>, CacheEntry<S>, FxBuildHasher>,
    store: &'a mut VisitedStore<S>,
    new_models: usize,
    evaluations: usize,
}

impl<'a, S: Scalar> PopulationEvaluator<'a, S> {
    /// `columns[j]` must be `features[j]` evaluated on `x`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        features: Vec<FeatureRef<S>>,
        columns: Vec<Arc<Vec<S>>>,
        x: &'a Matrix<S>,
        y: &'a [S],
        spec: &'a FamilySpec<S>,
        log_a: S,
        max_features: usize,
        mode: MarginalMode,
        store: &'a mut VisitedStore<S>,
    ) -> Result<Self> {
        if features.len() != columns.len() {
            return Err(Error::Dimension("one column per feature required".into()));
        }
        let gauss = (spec.family() == Family::Gaussian && mode == MarginalMode::Plugin)
            .then(|| GaussStats::new(&columns, y));
        Ok(Self {
            features,
            columns,
            x,
            y,
            spec,
            log_a,
            max_features,
            mode,
            gauss,
            cache: IndexMap::default(),
            store,
            new_models: 0,
            evaluations: 0,
        })
    }

    pub fn features(&self) -> &[FeatureRef<S>] {
        &self.features
    }

    /// Models first inserted into the store by this evaluator.
    pub fn new_models(&self) -> usize {
        self.new_models
    }

    /// Fits performed (cache misses).
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    /// Store keys of every model scored by this evaluator, in first-visit order.
    pub fn visited_keys(&self) -> Vec<String> {
        self.cache.values().filter_map(|e| e.key.clone()).collect()
    }

    pub fn store(&self) -> &VisitedStore<S> {
        self.store
    }

    fn score(&mut self, gamma: &[bool]) -> CacheEntry<S> {
        let idx: Vec<usize> = (0..gamma.len()).filter(|&i| gamma[i]).collect();
        if idx.len() > self.max_features {
            return CacheEntry { log_target: S::neg_infinity(), key: None };
        }
        let feats: Vec<FeatureRef<S>> = idx.iter().map(|&i| self.features[i].clone()).collect();
        let key = model_key(&feats);
        if let Some(r) = self.store.get(&key) {
            let log_target = r.log_mass();
            self.store.revisit(&key);
            return CacheEntry { log_target, key: Some(key) };
        }
        self.evaluations += 1;
        let log_prior = log_model_prior(&feats, self.log_a);
        match self.marginal(&idx, &feats, &key) {
            Ok((lm, beta)) => {
                self.store.record_keyed(key.clone(), feats, lm, log_prior, beta);
                self.new_models += 1;
                CacheEntry { log_target: lm + log_prior, key: Some(key) }
            }
            Err(_) => CacheEntry { log_target: S::neg_infinity(), key: None },
        }
    }

    fn marginal(&self, idx: &[usize], feats: &[FeatureRef<S>], key: &str) -> Result<(S, Vec<S>)> {
        if let Some(g) = &self.gauss {
            if let Some((rss, beta)) = g.fit(idx) {
                let lm = -g.n / S::lit(2.0) * (rss / g.n).ln();
                if lm.is_finite() {
                    return Ok((lm, beta));
                }
            }
        }
        let cols: Vec<&[S]> = idx.iter().map(|&i| self.columns[i].as_slice()).collect();
        let design = Matrix::with_intercept(self.y.len(), &cols)?;
        let fit = fit_mle(&design, self.y, self.spec)?;
        let plug = log_marginal_of_fit(&fit, self.y.len(), self.spec.family())?;
        let lm = match self.mode {
            MarginalMode::Plugin => plug,
            MarginalMode::MonteCarlo { sigma_alpha, draws, seed } => {
                let mut h = DefaultHasher::new();
                key.hash(&mut h);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ h.finish());
                mc_marginal(feats, self.x, self.y, self.spec, S::lit(sigma_alpha), draws, &mut rng)?
            }
        };
        Ok((lm, fit.beta_hat))
    }
}

impl<S: Scalar> ModelEvaluator<S> for PopulationEvaluator<'_, S> {
    fn space_size(&self) -> usize {
        self.features.len()
    }

    fn log_target(&mut self, gamma: &[bool]) -> S {
        if let Some(e) = self.cache.get(gamma) {
            let v = e.log_target;
            if let Some(k) = &e.key {
                self.store.revisit(k);
            }
            return v;
        }
        let e = self.score(gamma);
        let v = e.log_target;
        self.cache.insert(gamma.to_vec(), e);
        v
    }
}
