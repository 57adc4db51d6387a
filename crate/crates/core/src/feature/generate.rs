//! Random generation of new features from a pool and the redundancy check.

use super::alpha::{estimate_alpha, AlphaStrategy, FitContext};
use super::transform::TransformLibrary;
use super::tree::{Feature, FeatureRef};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, OrthoBasis};
use crate::Scalar;
use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::seq::{index::sample_weighted, IndexedRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::Arc;

/// Transformation used to fill a population slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Projection,
    Modification,
    Multiplication,
    Input,
}

impl FeatureKind {
    pub const ALL: [FeatureKind; 4] =
        [FeatureKind::Projection, FeatureKind::Modification, FeatureKind::Multiplication, FeatureKind::Input];
}

/// Structural limits on generated features: depth `D` and local width `L`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraints {
    pub max_depth: usize,
    pub max_width: usize,
}

impl Constraints {
    pub fn check<S: Scalar>(&self, f: &Feature<S>) -> Result<()> {
        if f.depth() > self.max_depth {
            return Err(Error::DepthExceeded { depth: f.depth(), max: self.max_depth });
        }
        if f.local_width() > self.max_width {
            return Err(Error::WidthExceeded { width: f.local_width(), max: self.max_width });
        }
        Ok(())
    }
}

/// Evaluated feature columns keyed by canonical key.
pub type ColumnCache<S> = HashMap<String, Arc<Vec<S>>>;

/// Candidate parents with selection weights.
#[derive(Debug, Clone)]
pub struct Pool<S> {
    features: Vec<FeatureRef<S>>,
    weights: Vec<f64>,
}

impl<S: Scalar> Pool<S> {
    pub fn uniform(features: Vec<FeatureRef<S>>) -> Self {
        let weights = vec![1.0; features.len()];
        Self { features, weights }
    }

    /// Non-finite or negative weights are treated as zero.
    pub fn weighted(features: Vec<FeatureRef<S>>, weights: Vec<f64>) -> Result<Self> {
        if features.len() != weights.len() {
            return Err(Error::Dimension("pool weights do not match the features".into()));
        }
        let weights = weights.into_iter().map(|w| if w.is_finite() && w > 0.0 { w } else { 0.0 }).collect();
        Ok(Self { features, weights })
    }

    pub fn features(&self) -> &[FeatureRef<S>] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    fn positive(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<FeatureRef<S>> {
        let dist = WeightedIndex::new(&self.weights).map_err(|_| Error::Config("empty feature pool".into()))?;
        Ok(Arc::clone(&self.features[dist.sample(rng)]))
    }

    fn pick_distinct<R: Rng + ?Sized>(&self, rng: &mut R, k: usize) -> Result<Vec<FeatureRef<S>>> {
        let idx = sample_weighted(rng, self.len(), |i| self.weights[i], k)
            .map_err(|_| Error::Config("feature pool too small".into()))?;
        Ok(idx.into_iter().map(|i| Arc::clone(&self.features[i])).collect())
    }
}

/// Everything a new feature is generated against.
pub struct Generator<'a, S> {
    pub lib: &'a TransformLibrary,
    pub strategy: AlphaStrategy,
    pub constraints: Constraints,
    pub fit: FitContext<'a, S>,
}

impl<S: Scalar> Generator<'_, S> {
    pub fn column(&self, f: &Feature<S>, cache: &mut ColumnCache<S>) -> Result<Arc<Vec<S>>> {
        f.evaluate_cached(self.fit.x, cache)
    }

    /// Draws one feature of the given kind. Nested parts come from `pool`,
    /// inputs from `originals`.
    pub fn generate<R: Rng + ?Sized>(
        &self,
        kind: FeatureKind,
        pool: &Pool<S>,
        originals: &[FeatureRef<S>],
        cache: &mut ColumnCache<S>,
        rng: &mut R,
    ) -> Result<FeatureRef<S>> {
        let transform = |rng: &mut R| *self.lib.transforms().choose(rng).expect("library is non-empty");
        let f = match kind {
            FeatureKind::Input => {
                originals.choose(rng).cloned().ok_or_else(|| Error::Config("no original covariates".into()))?
            }
            FeatureKind::Modification => {
                let child = pool.pick(rng)?;
                Arc::new(Feature::modification(transform(rng), child))
            }
            FeatureKind::Multiplication => {
                let a = pool.pick(rng)?;
                let b = pool.pick(rng)?;
                Arc::new(Feature::multiplication(a, b))
            }
            FeatureKind::Projection => {
                let upper = self.constraints.max_width.min(pool.positive());
                if upper < 2 {
                    return Err(Error::WidthExceeded { width: 2, max: upper });
                }
                let k = rng.random_range(2..=upper);
                let children = pool.pick_distinct(rng, k)?;
                let depth = 1 + children.iter().map(|c| c.depth()).max().unwrap_or(0);
                if depth > self.constraints.max_depth {
                    return Err(Error::DepthExceeded { depth, max: self.constraints.max_depth });
                }
                let g = transform(rng);
                let cols = children.iter().map(|c| self.column(c, cache)).collect::<Result<Vec<_>>>()?;
                estimate_alpha(self.strategy, g, &children, &cols, &self.fit, rng)?
            }
        };
        self.constraints.check(&f)?;
        Ok(f)
    }
}

/// Redundancy against an already built span: key collision with `keys`, or the
/// column lies (relatively) within [`Scalar::redundancy_tol`] of the span.
pub fn is_redundant_in<'k, S: Scalar>(
    f: &Feature<S>,
    column: &[S],
    mut keys: impl Iterator<Item = &'k str>,
    basis: &OrthoBasis<S>,
) -> bool {
    if keys.any(|k| k == f.key()) {
        return true;
    }
    if column.iter().any(|v| !v.is_finite()) {
        return true;
    }
    basis.relative_residual(column) < S::redundancy_tol()
}

/// True when `f` duplicates a member of `population` or is (numerically) an
/// affine combination of the population columns. Features that cannot be
/// evaluated on `x` count as redundant.
pub fn is_redundant<S: Scalar>(f: &Feature<S>, population: &[FeatureRef<S>], x: &Matrix<S>) -> bool {
    let mut cache = ColumnCache::new();
    let Ok(col) = f.evaluate_cached(x, &mut cache) else {
        return true;
    };
    let mut basis = OrthoBasis::with_intercept(x.rows());
    for p in population {
        match p.evaluate_cached(x, &mut cache) {
            Ok(c) => {
                basis.push(&c);
            }
            Err(_) => continue,
        }
    }
    is_redundant_in(f, &col, population.iter().map(|p| p.key()), &basis)
}
