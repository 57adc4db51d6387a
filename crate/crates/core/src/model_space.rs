//! Model prior, the store of visited models and the posterior quantities derived
//! from it.

use crate::error::{Error, Result};
use crate::feature::FeatureRef;
use crate::math::log_add_exp;
use crate::Scalar;
use indexmap::IndexMap;
use rustc_hash::{FxBuildHasher, FxHashMap};
use std::collections::BTreeMap;
use std::io::Write;

/// Key of the intercept-only model.
pub const EMPTY_MODEL_KEY: &str = "1";

/// Unnormalized log prior `log(a) * sum_j c(F_j)`.
pub fn log_model_prior<S: Scalar>(features: &[FeatureRef<S>], log_a: S) -> S {
    features.iter().map(|f| f.complexity()).sum::<S>() * log_a
}

/// Key of a model: sorted canonical feature keys joined by `;`.
pub fn model_key<S: Scalar>(features: &[FeatureRef<S>]) -> String {
    if features.is_empty() {
        return EMPTY_MODEL_KEY.to_string();
    }
    let mut keys: Vec<&str> = features.iter().map(|f| f.key()).collect();
    keys.sort_unstable();
    keys.join(";")
}

/// One evaluated model.
#[derive(Debug, Clone)]
pub struct ModelRecord<S> {
    /// Included features sorted by key (the intercept is implicit).
    pub features: Vec<FeatureRef<S>>,
    pub log_marginal: S,
    pub log_prior: S,
    /// Coefficients, intercept first, in `features` order.
    pub beta_hat: Vec<S>,
    pub visit_count: u64,
}

impl<S: Scalar> ModelRecord<S> {
    pub fn log_mass(&self) -> S {
        self.log_marginal + self.log_prior
    }

    pub fn size(&self) -> usize {
        self.features.len()
    }

    pub fn contains(&self, feature_key: &str) -> bool {
        self.features.binary_search_by(|f| f.key().cmp(feature_key)).is_ok()
    }
}

/// Every model evaluated by a chain, with a running `log sum exp` of the
/// unnormalized posterior masses.
#[derive(Debug, Clone)]
pub struct VisitedStore<S> {
    records: IndexMap<String, ModelRecord<S>, FxBuildHasher>,
    log_mass: S,
}

impl<S: Scalar> Default for VisitedStore<S> {
    fn default() -> Self {
        Self::new()
    }
}

impl<S: Scalar> VisitedStore<S> {
    pub fn new() -> Self {
        Self { records: IndexMap::default(), log_mass: S::neg_infinity() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Accumulated `log sum exp(log_prior + log_marginal)` over distinct models.
    pub fn log_mass(&self) -> S {
        self.log_mass
    }

    pub fn get(&self, key: &str) -> Option<&ModelRecord<S>> {
        self.records.get(key)
    }

    pub fn records(&self) -> impl Iterator<Item = (&str, &ModelRecord<S>)> {
        self.records.iter().map(|(k, r)| (k.as_str(), r))
    }

    /// Records a visit. A model seen before only has its visit count increased;
    /// returns whether the model was new.
    pub fn record(&mut self, features: Vec<FeatureRef<S>>, log_marginal: S, log_prior: S, beta_hat: Vec<S>) -> bool {
        let key = model_key(&features);
        self.record_keyed(key, features, log_marginal, log_prior, beta_hat)
    }

    /// [`VisitedStore::record`] with a precomputed `key == model_key(&features)`.
    pub fn record_keyed(
        &mut self,
        key: String,
        mut features: Vec<FeatureRef<S>>,
        log_marginal: S,
        log_prior: S,
        beta_hat: Vec<S>,
    ) -> bool {
        debug_assert_eq!(key, model_key(&features));
        if let Some(r) = self.records.get_mut(&key) {
            r.visit_count += 1;
            return false;
        }
        // keep beta aligned with the sorted feature order
        let mut order: Vec<usize> = (0..features.len()).collect();
        order.sort_by(|&a, &b| features[a].key().cmp(features[b].key()));
        let beta_hat = if beta_hat.len() == features.len() + 1 {
            std::iter::once(beta_hat[0]).chain(order.iter().map(|&i| beta_hat[i + 1])).collect()
        } else {
            beta_hat
        };
        features = order.iter().map(|&i| features[i].clone()).collect();
        self.log_mass = log_add_exp(self.log_mass, log_marginal + log_prior);
        self.records.insert(key, ModelRecord { features, log_marginal, log_prior, beta_hat, visit_count: 1 });
        true
    }

    /// Increments the visit count of a known model.
    pub fn revisit(&mut self, key: &str) -> bool {
        match self.records.get_mut(key) {
            Some(r) => {
                r.visit_count += 1;
                true
            }
            None => false,
        }
    }

    /// Drops models whose mass is below `exp(-gap)` times the best one. Their
    /// mass stays in [`VisitedStore::log_mass`]; returns how many were removed.
    pub fn prune(&mut self, gap: S) -> usize {
        let best = self.records.values().map(|r| r.log_mass()).fold(S::neg_infinity(), S::max);
        if !best.is_finite() {
            return 0;
        }
        let before = self.records.len();
        self.records.retain(|_, r| r.log_mass() >= best - gap);
        before - self.records.len()
    }

    /// Renormalized posterior over the given keys (compensated summation).
    fn normalized<'a>(&'a self, keys: impl Iterator<Item = &'a str>) -> Result<Vec<(&'a str, S)>> {
        let items: Vec<(&str, S)> =
            keys.filter_map(|k| self.records.get_key_value(k)).map(|(k, r)| (k.as_str(), r.log_mass())).collect();
        if items.is_empty() {
            return Err(Error::EmptyStore);
        }
        let max = items.iter().map(|x| x.1).fold(S::neg_infinity(), S::max);
        if !max.is_finite() {
            return Err(Error::NonFiniteLikelihood);
        }
        let w: Vec<S> = items.iter().map(|x| (x.1 - max).exp()).collect();
        let total = neumaier_sum(&w);
        Ok(items.iter().zip(w).map(|((k, _), wi)| (*k, wi / total)).collect())
    }

    /// `p(m | y)` for every stored model, in insertion order.
    pub fn posterior(&self) -> Result<Vec<(&str, S)>> {
        self.normalized(self.records.keys().map(|k| k.as_str()))
    }

    /// Marginal inclusion probability of every feature appearing in the store.
    pub fn inclusion_probabilities(&self) -> Result<BTreeMap<String, S>> {
        self.inclusion_over(self.records.keys().map(|k| k.as_str()))
    }

    /// Inclusion probabilities renormalized over a subset of stored models.
    pub fn inclusion_over<'a>(&'a self, keys: impl Iterator<Item = &'a str>) -> Result<BTreeMap<String, S>> {
        let post = self.normalized(keys)?;
        let mut acc: FxHashMap<&str, S> = FxHashMap::default();
        for (k, p) in post {
            for f in &self.records[k].features {
                *acc.entry(f.key()).or_insert(S::zero()) += p;
            }
        }
        Ok(acc.into_iter().map(|(k, v)| (k.to_string(), v.min(S::one()))).collect())
    }

    /// Posterior expectation of `stat` over the store.
    pub fn posterior_statistic(&self, stat: impl Fn(&ModelRecord<S>) -> S) -> Result<S> {
        let post = self.posterior()?;
        Ok(post.iter().map(|(k, p)| stat(&self.records[*k]) * *p).sum())
    }

    /// Features appearing in any stored model, keyed by canonical key.
    pub fn features(&self) -> BTreeMap<String, FeatureRef<S>> {
        let mut out = BTreeMap::new();
        for r in self.records.values() {
            for f in &r.features {
                out.entry(f.key().to_string()).or_insert_with(|| f.clone());
            }
        }
        out
    }

    /// CSV dump: `model_key,log_marginal,log_prior,posterior,size`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let post = self.posterior()?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["model_key", "log_marginal", "log_prior", "posterior", "size"])?;
        for (k, p) in post {
            let r = &self.records[k];
            w.write_record([
                k.to_string(),
                r.log_marginal.to_string(),
                r.log_prior.to_string(),
                p.to_string(),
                r.size().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Sum with Neumaier compensation.
pub fn neumaier_sum<S: Scalar>(xs: &[S]) -> S {
    let mut sum = S::zero();
    let mut c = S::zero();
    for &x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::{Feature, Transform};
    use std::sync::Arc;

    fn x(j: usize) -> FeatureRef<f64> {
        Arc::new(Feature::input(j))
    }

    #[test]
    fn prior_examples() {
        assert_eq!(log_model_prior::<f64>(&[], -2.0), 0.0);
        assert_eq!(log_model_prior(&[x(0)], -2.0), -2.0);
        let sq = Arc::new(Feature::multiplication(x(0), x(0)));
        assert_eq!(sq.complexity(), 4.0);
        let log_a = -2.0 * 100f64.ln();
        let lp = log_model_prior(&[x(1), sq], log_a);
        assert!((lp + 10.0 * 100f64.ln()).abs() < 1e-12);
        assert!((lp + 46.051_701_859_880_91).abs() < 1e-9);
    }

    #[test]
    fn record_is_idempotent() {
        let mut s = VisitedStore::new();
        assert!(s.record(vec![x(0)], -1.0, -2.0, vec![0.0, 1.0]));
        assert!(!s.record(vec![x(0)], -1.0, -2.0, vec![0.0, 1.0]));
        assert_eq!(s.len(), 1);
        assert_eq!(s.get("x0").unwrap().visit_count, 2);
        assert!(s.record(vec![x(1)], -3.0, -2.0, vec![0.0, 1.0]));
        let expect = crate::math::log_sum_exp(&[-3.0, -5.0]);
        assert!((s.log_mass() - expect).abs() < 1e-15);
    }

    #[test]
    fn posterior_examples() {
        let mut s: VisitedStore<f64> = VisitedStore::new();
        assert!(matches!(s.posterior(), Err(Error::EmptyStore)));
        s.record(vec![x(0)], 0.0, -1.0, vec![]);
        assert_eq!(s.posterior().unwrap()[0].1, 1.0);
        s.record(vec![x(1)], -0.5, -0.5, vec![]);
        for (_, p) in s.posterior().unwrap() {
            assert!((p - 0.5).abs() < 1e-15);
        }
        let incl = s.inclusion_probabilities().unwrap();
        assert!((incl["x0"] - 0.5).abs() < 1e-15);
        assert!(!incl.contains_key("x2"));
        let size = s.posterior_statistic(|r| r.size() as f64).unwrap();
        assert!((size - 1.0).abs() < 1e-15);
    }

    #[test]
    fn beta_follows_sorted_features() {
        let mut s = VisitedStore::new();
        let f = Arc::new(Feature::modification(Transform::Sin, x(0)));
        s.record(vec![f, x(0)], 0.0, 0.0, vec![9.0, 1.0, 2.0]);
        let r = s.get("sin(x0);x0").unwrap();
        assert_eq!(r.features[0].key(), "sin(x0)");
        assert_eq!(r.beta_hat, vec![9.0, 1.0, 2.0]);
        let mut s = VisitedStore::new();
        s.record(vec![x(1), x(0)], 0.0, 0.0, vec![9.0, 1.0, 2.0]);
        assert_eq!(s.get("x0;x1").unwrap().beta_hat, vec![9.0, 2.0, 1.0]);
    }

    #[test]
    fn csv_dump_columns() {
        let mut s = VisitedStore::new();
        s.record(vec![], -1.0, 0.0, vec![0.0]);
        s.record(vec![x(0)], -0.5, -2.0, vec![0.0, 1.0]);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("model_key,log_marginal,log_prior,posterior,size\n1,"));
        assert_eq!(text.lines().count(), 3);
    }
}
