//! Feature expression trees with cached complexity measures and canonical keys.

use super::transform::Transform;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::Scalar;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

/// Shared handle to an immutable feature.
pub type FeatureRef<S> = Arc<Feature<S>>;

#[derive(Debug, Clone)]
pub enum Node<S> {
    Input(usize),
    /// `g(alpha[0] + sum_k alpha[k+1] * children[k])`
    Projection { transform: Transform, alpha: Vec<S>, children: Vec<FeatureRef<S>> },
    Modification { transform: Transform, child: FeatureRef<S> },
    Multiplication { left: FeatureRef<S>, right: FeatureRef<S> },
}

/// Depth, local width and total width of a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Measures {
    pub depth: usize,
    pub local_width: usize,
    pub total_width: usize,
}

/// A nonlinear feature `F(x, alpha)` built from the input covariates.
///
/// Children are stored in canonical order (multiplication operands and
/// projection children sorted by key, weights carried along), so structurally
/// equal features compare equal through [`Feature::key`].
#[derive(Debug, Clone)]
pub struct Feature<S> {
    node: Node<S>,
    measures: Measures,
    key: String,
}

/// Significant digits used when rendering projection weights into keys.
pub const KEY_DIGITS: usize = 6;

fn render_weight<S: Scalar>(out: &mut String, w: S) {
    let v = w.to_f64_lossy();
    let v = if v == 0.0 { 0.0 } else { v };
    let _ = write!(out, "{:.*e}", KEY_DIGITS - 1, v);
}

impl<S: Scalar> Feature<S> {
    pub fn input(index: usize) -> Self {
        Self {
            node: Node::Input(index),
            measures: Measures { depth: 0, local_width: 1, total_width: 1 },
            key: format!("x{index}"),
        }
    }

    pub fn modification(transform: Transform, child: FeatureRef<S>) -> Self {
        let m = child.measures;
        let key = format!("{}({})", transform.name(), child.key);
        Self {
            measures: Measures { depth: m.depth + 1, local_width: 1, total_width: m.total_width + 1 },
            node: Node::Modification { transform, child },
            key,
        }
    }

    /// Product of two features; `a` and `b` may be the same feature.
    pub fn multiplication(a: FeatureRef<S>, b: FeatureRef<S>) -> Self {
        let (left, right) = if a.key <= b.key { (a, b) } else { (b, a) };
        let key = format!("({}*{})", left.key, right.key);
        let measures = Measures {
            depth: 1 + left.measures.depth + right.measures.depth,
            local_width: 2,
            total_width: 2 + left.measures.total_width + right.measures.total_width,
        };
        Self { node: Node::Multiplication { left, right }, measures, key }
    }

    /// Projection `g(alpha_0 + sum_k alpha_k F_k)`; `alpha` holds the intercept first.
    pub fn projection(transform: Transform, alpha: Vec<S>, children: Vec<FeatureRef<S>>) -> Result<Self> {
        if children.len() < 2 {
            return Err(Error::Config(format!(
                "projection needs at least two children, got {}",
                children.len()
            )));
        }
        if alpha.len() != children.len() + 1 {
            return Err(Error::Dimension(format!(
                "projection over {} children needs {} weights, got {}",
                children.len(),
                children.len() + 1,
                alpha.len()
            )));
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(Error::AlphaFitFailed("non-finite projection weight".into()));
        }
        let mut pairs: Vec<(S, FeatureRef<S>)> = alpha[1..].iter().copied().zip(children).collect();
        pairs.sort_by(|a, b| a.1.key.cmp(&b.1.key));

        let mut key = format!("{}(", transform.name());
        render_weight(&mut key, alpha[0]);
        for (w, c) in &pairs {
            key.push('+');
            render_weight(&mut key, *w);
            key.push('*');
            key.push_str(&c.key);
        }
        key.push(')');

        let depth = 1 + pairs.iter().map(|(_, c)| c.measures.depth).max().unwrap_or(0);
        let local_width = pairs.len();
        let total_width = local_width + pairs.iter().map(|(_, c)| c.measures.total_width).sum::<usize>();
        let mut weights = Vec::with_capacity(pairs.len() + 1);
        weights.push(alpha[0]);
        let mut kids = Vec::with_capacity(pairs.len());
        for (w, c) in pairs {
            weights.push(w);
            kids.push(c);
        }
        Ok(Self {
            node: Node::Projection { transform, alpha: weights, children: kids },
            measures: Measures { depth, local_width, total_width },
            key,
        })
    }

    pub fn node(&self) -> &Node<S> {
        &self.node
    }

    pub fn measure(&self) -> Measures {
        self.measures
    }

    pub fn depth(&self) -> usize {
        self.measures.depth
    }

    pub fn local_width(&self) -> usize {
        self.measures.local_width
    }

    pub fn total_width(&self) -> usize {
        self.measures.total_width
    }

    /// Complexity used by the model prior: the total width.
    pub fn complexity(&self) -> S {
        S::from_usize_lossy(self.measures.total_width)
    }

    /// Canonical structural key.
    pub fn key(&self) -> &str {
        &self.key
    }

    pub fn is_input(&self) -> bool {
        matches!(self.node, Node::Input(_))
    }

    /// Largest input index referenced, if any.
    pub fn max_input(&self) -> usize {
        match &self.node {
            Node::Input(j) => *j,
            Node::Projection { children, .. } => children.iter().map(|c| c.max_input()).max().unwrap_or(0),
            Node::Modification { child, .. } => child.max_input(),
            Node::Multiplication { left, right } => left.max_input().max(right.max_input()),
        }
    }

    /// Whether any projection occurs in the tree.
    pub fn has_projection(&self) -> bool {
        self.alpha_count() > 0
    }

    /// Number of projection weights in the whole tree.
    pub fn alpha_count(&self) -> usize {
        match &self.node {
            Node::Input(_) => 0,
            Node::Projection { alpha, children, .. } => {
                alpha.len() + children.iter().map(|c| c.alpha_count()).sum::<usize>()
            }
            Node::Modification { child, .. } => child.alpha_count(),
            Node::Multiplication { left, right } => left.alpha_count() + right.alpha_count(),
        }
    }

    /// All projection weights, outer layer first, children in stored order.
    pub fn alphas(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.alpha_count());
        self.collect_alphas(&mut out);
        out
    }

    fn collect_alphas(&self, out: &mut Vec<S>) {
        match &self.node {
            Node::Input(_) => {}
            Node::Projection { alpha, children, .. } => {
                out.extend_from_slice(alpha);
                for c in children {
                    c.collect_alphas(out);
                }
            }
            Node::Modification { child, .. } => child.collect_alphas(out),
            Node::Multiplication { left, right } => {
                left.collect_alphas(out);
                right.collect_alphas(out);
            }
        }
    }

    /// Rebuilds the tree with weights taken in [`Feature::alphas`] order. Subtrees
    /// without projections are shared, everything else is a fresh copy.
    pub fn with_alphas(self: &Arc<Self>, weights: &[S]) -> Result<FeatureRef<S>> {
        if weights.len() != self.alpha_count() {
            return Err(Error::Dimension(format!(
                "expected {} weights, got {}",
                self.alpha_count(),
                weights.len()
            )));
        }
        let mut pos = 0;
        self.rebuild(weights, &mut pos)
    }

    fn rebuild(self: &Arc<Self>, weights: &[S], pos: &mut usize) -> Result<FeatureRef<S>> {
        if self.alpha_count() == 0 {
            return Ok(Arc::clone(self));
        }
        Ok(Arc::new(match &self.node {
            Node::Input(_) => unreachable!("inputs carry no weights"),
            Node::Projection { transform, alpha, children } => {
                let own = weights[*pos..*pos + alpha.len()].to_vec();
                *pos += alpha.len();
                let kids = children
                    .iter()
                    .map(|c| c.rebuild(weights, pos))
                    .collect::<Result<Vec<_>>>()?;
                Feature::projection(*transform, own, kids)?
            }
            Node::Modification { transform, child } => Feature::modification(*transform, child.rebuild(weights, pos)?),
            Node::Multiplication { left, right } => {
                let l = left.rebuild(weights, pos)?;
                let r = right.rebuild(weights, pos)?;
                Feature::multiplication(l, r)
            }
        }))
    }

    /// Evaluates the feature on every row of `x` (`n x m`, one column per input).
    pub fn evaluate(&self, x: &Matrix<S>) -> Result<Vec<S>> {
        let mut cache = HashMap::new();
        self.evaluate_cached(x, &mut cache).map(|c| c.as_ref().clone())
    }

    /// Like [`Feature::evaluate`], memoizing every subfeature column by key.
    pub fn evaluate_cached(&self, x: &Matrix<S>, cache: &mut HashMap<String, Arc<Vec<S>>>) -> Result<Arc<Vec<S>>> {
        if let Some(c) = cache.get(&self.key) {
            return Ok(Arc::clone(c));
        }
        let col: Vec<S> = match &self.node {
            Node::Input(j) => {
                if *j >= x.cols() {
                    return Err(Error::Dimension(format!("input x{j} but data has {} columns", x.cols())));
                }
                x.col(*j).to_vec()
            }
            Node::Projection { transform, alpha, children } => {
                let mut acc = vec![alpha[0]; x.rows()];
                for (w, c) in alpha[1..].iter().zip(children) {
                    let cv = c.evaluate_cached(x, cache)?;
                    for (a, &v) in acc.iter_mut().zip(cv.iter()) {
                        *a += *w * v;
                    }
                }
                acc.into_iter().map(|v| transform.apply(v)).collect()
            }
            Node::Modification { transform, child } => {
                let cv = child.evaluate_cached(x, cache)?;
                cv.iter().map(|&v| transform.apply(v)).collect()
            }
            Node::Multiplication { left, right } => {
                let l = left.evaluate_cached(x, cache)?;
                let r = right.evaluate_cached(x, cache)?;
                l.iter().zip(r.iter()).map(|(&a, &b)| a * b).collect()
            }
        };
        if let Some(row) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteOutput { row, feature: self.key.clone() });
        }
        let col = Arc::new(col);
        cache.insert(self.key.clone(), Arc::clone(&col));
        Ok(col)
    }

    /// Human readable rendering using column names for the inputs.
    pub fn display_with(&self, names: &[String]) -> String {
        match &self.node {
            Node::Input(j) => names.get(*j).cloned().unwrap_or_else(|| format!("x{j}")),
            Node::Projection { transform, alpha, children } => {
                let mut s = format!("{}({:.4}", transform.name(), alpha[0].to_f64_lossy());
                for (w, c) in alpha[1..].iter().zip(children) {
                    let _ = write!(s, "{:+.4}*{}", w.to_f64_lossy(), c.display_with(names));
                }
                s.push(')');
                s
            }
            Node::Modification { transform, child } => format!("{}({})", transform.name(), child.display_with(names)),
            Node::Multiplication { left, right } => {
                format!("{}*{}", left.display_with(names), right.display_with(names))
            }
        }
    }
}

impl<S> PartialEq for Feature<S> {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}

impl<S> Eq for Feature<S> {}

impl<S> std::fmt::Display for Feature<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.key)
    }
}

/// Serializable mirror of [`Feature`] used in artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSpec {
    Input { index: usize },
    Projection { transform: Transform, alpha: Vec<f64>, children: Vec<FeatureSpec> },
    Modification { transform: Transform, child: Box<FeatureSpec> },
    Multiplication { left: Box<FeatureSpec>, right: Box<FeatureSpec> },
}

impl<S: Scalar> From<&Feature<S>> for FeatureSpec {
    fn from(f: &Feature<S>) -> Self {
        match &f.node {
            Node::Input(j) => FeatureSpec::Input { index: *j },
            Node::Projection { transform, alpha, children } => FeatureSpec::Projection {
                transform: *transform,
                alpha: alpha.iter().map(|a| a.to_f64_lossy()).collect(),
                children: children.iter().map(|c| FeatureSpec::from(c.as_ref())).collect(),
            },
            Node::Modification { transform, child } => FeatureSpec::Modification {
                transform: *transform,
                child: Box::new(FeatureSpec::from(child.as_ref())),
            },
            Node::Multiplication { left, right } => FeatureSpec::Multiplication {
                left: Box::new(FeatureSpec::from(left.as_ref())),
                right: Box::new(FeatureSpec::from(right.as_ref())),
            },
        }
    }
}

impl FeatureSpec {
    pub fn build<S: Scalar>(&self) -> Result<FeatureRef<S>> {
        Ok(Arc::new(match self {
            FeatureSpec::Input { index } => Feature::input(*index),
            FeatureSpec::Projection { transform, alpha, children } => Feature::projection(
                *transform,
                alpha.iter().map(|&a| S::lit(a)).collect(),
                children.iter().map(|c| c.build()).collect::<Result<Vec<_>>>()?,
            )?,
            FeatureSpec::Modification { transform, child } => Feature::modification(*transform, child.build()?),
            FeatureSpec::Multiplication { left, right } => Feature::multiplication(left.build()?, right.build()?),
        }))
    }
}
