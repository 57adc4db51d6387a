//! Specification of projection weights.

use super::transform::Transform;
use super::tree::{Feature, FeatureRef, Node};
use crate::error::{Error, Result};
use crate::glm::{log_marginal, FamilySpec};
use crate::linalg::{cholesky, cholesky_solve, Matrix};
use crate::Scalar;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

pub const MAX_ALPHA_ITERATIONS: usize = 100;
pub const ALPHA_GRADIENT_TOL: f64 = 1e-6;

/// How projection weights are chosen when a projection is generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AlphaStrategy {
    /// GLM fit of the response on the children, ignoring `g`.
    Naive,
    /// Fit through `g` with nested weights frozen.
    Concave,
    /// Joint fit of the outer and all nested weights.
    Deep,
    /// All weights drawn from `N(0, sigma_alpha^2)`; models are scored by averaging
    /// over `draws` prior samples.
    FullyBayes { sigma_alpha: f64, draws: usize },
}

impl AlphaStrategy {
    /// Strategy from its 1-based number; 4 selects the fully Bayesian variant.
    pub fn from_number(k: u32, sigma_alpha: f64, draws: usize) -> Result<Self> {
        match k {
            1 => Ok(AlphaStrategy::Naive),
            2 => Ok(AlphaStrategy::Concave),
            3 => Ok(AlphaStrategy::Deep),
            4 => {
                if !(sigma_alpha > 0.0) || draws == 0 {
                    return Err(Error::Config("strategy 4 needs sigma_alpha > 0 and at least one draw".into()));
                }
                Ok(AlphaStrategy::FullyBayes { sigma_alpha, draws })
            }
            other => Err(Error::Config(format!("strategy must be 1, 2, 3 or 4, got {other}"))),
        }
    }

    pub fn number(&self) -> u32 {
        match self {
            AlphaStrategy::Naive => 1,
            AlphaStrategy::Concave => 2,
            AlphaStrategy::Deep => 3,
            AlphaStrategy::FullyBayes { .. } => 4,
        }
    }
}

/// Data a projection is fitted against.
pub struct FitContext<'a, S> {
    pub x: &'a Matrix<S>,
    pub y: &'a [S],
    pub spec: &'a FamilySpec<S>,
}

/// Builds the projection `g(alpha_0 + sum alpha_k F_k)` with weights chosen by `strategy`.
/// `child_columns` are the children evaluated on `ctx.x`.
pub fn estimate_alpha<S: Scalar, R: Rng + ?Sized>(
    strategy: AlphaStrategy,
    g: Transform,
    children: &[FeatureRef<S>],
    child_columns: &[Arc<Vec<S>>],
    ctx: &FitContext<'_, S>,
    rng: &mut R,
) -> Result<FeatureRef<S>> {
    if children.len() < 2 || children.len() != child_columns.len() {
        return Err(Error::Dimension("projection needs at least two evaluated children".into()));
    }
    if ctx.y.len() <= children.len() + 1 {
        return Err(Error::AlphaFitFailed("too few rows for the projection fit".into()));
    }
    let build = |alpha: Vec<S>| Feature::projection(g, alpha, children.to_vec()).map(Arc::new);
    match strategy {
        AlphaStrategy::Naive => build(naive_alpha(child_columns, ctx)?),
        AlphaStrategy::Concave => build(concave_alpha(g, child_columns, ctx)?),
        AlphaStrategy::Deep => {
            let warm = build(concave_alpha(g, child_columns, ctx)?)?;
            deep_alpha(&warm, ctx)
        }
        AlphaStrategy::FullyBayes { sigma_alpha, .. } => {
            let normal = Normal::new(0.0, sigma_alpha).map_err(|e| Error::Config(e.to_string()))?;
            let template = build(vec![S::one(); children.len() + 1])?;
            let w: Vec<S> = (0..template.alpha_count()).map(|_| S::lit(normal.sample(rng))).collect();
            template.with_alphas(&w)
        }
    }
}

/// Strategy 1: maximum likelihood of `h(mu) = alpha_0 + sum alpha_k F_k`.
pub fn naive_alpha<S: Scalar>(child_columns: &[Arc<Vec<S>>], ctx: &FitContext<'_, S>) -> Result<Vec<S>> {
    let cols: Vec<&[S]> = child_columns.iter().map(|c| c.as_slice()).collect();
    let (_, fit) = log_marginal(&cols, ctx.y, ctx.spec).map_err(|e| Error::AlphaFitFailed(e.to_string()))?;
    Ok(fit.beta_hat)
}

/// Log-likelihood of `h(mu) = g(z)` with `z = design * alpha` (Gaussian: `-RSS/2`).
fn outer_loglik<S: Scalar>(g: Transform, design: &Matrix<S>, alpha: &[S], ctx: &FitContext<'_, S>) -> S {
    let z = design.mul_vec(alpha);
    loglik_of_eta(z.iter().map(|&v| g.apply(v)), ctx)
}

fn loglik_of_eta<S: Scalar>(eta: impl Iterator<Item = S>, ctx: &FitContext<'_, S>) -> S {
    let mut acc = S::zero();
    for (i, e) in eta.enumerate() {
        let e = e + ctx.spec.offset_at(i);
        acc += match ctx.spec.family() {
            crate::glm::Family::Gaussian => {
                let r = ctx.y[i] - e;
                -r * r / S::lit(2.0)
            }
            _ => ctx.spec.log_density(ctx.y[i], e),
        };
    }
    if acc.is_finite() {
        acc
    } else {
        S::neg_infinity()
    }
}

/// Strategy 2: damped Fisher scoring through `g`, started at the Strategy 1
/// weights; compass search when `g` is not differentiable. Falls back to the
/// Strategy 1 weights when the optimizer fails to improve on them.
pub fn concave_alpha<S: Scalar>(g: Transform, child_columns: &[Arc<Vec<S>>], ctx: &FitContext<'_, S>) -> Result<Vec<S>> {
    let start = naive_alpha(child_columns, ctx)?;
    let cols: Vec<&[S]> = child_columns.iter().map(|c| c.as_slice()).collect();
    let design = Matrix::with_intercept(ctx.y.len(), &cols)?;
    let obj = |a: &[S]| outer_loglik(g, &design, a, ctx);
    let result = if g.is_smooth() {
        fisher_scoring(g, &design, start.clone(), ctx)
    } else {
        Some(compass_search(&obj, start.clone(), S::lit(0.5)))
    };
    match result {
        Some(a) if a.iter().all(|v| v.is_finite()) && obj(&a) >= obj(&start) => Ok(a),
        _ => Ok(start),
    }
}

fn fisher_scoring<S: Scalar>(g: Transform, design: &Matrix<S>, mut alpha: Vec<S>, ctx: &FitContext<'_, S>) -> Option<Vec<S>> {
    let p = design.cols();
    let mut obj = outer_loglik(g, design, &alpha, ctx);
    if !obj.is_finite() {
        return None;
    }
    let tol = S::lit(ALPHA_GRADIENT_TOL);
    for _ in 0..MAX_ALPHA_ITERATIONS {
        let z = design.mul_vec(&alpha);
        let mut resid = Vec::with_capacity(z.len());
        let mut w = Vec::with_capacity(z.len());
        for (i, &zi) in z.iter().enumerate() {
            let mu = ctx.spec.mean(g.apply(zi) + ctx.spec.offset_at(i));
            let d = g.derivative(zi);
            resid.push((ctx.y[i] - mu) * d);
            w.push(ctx.spec.variance(mu) * d * d);
        }
        let grad = design.tr_mul_vec(&resid);
        if grad.iter().all(|v| v.abs() < tol) {
            return Some(alpha);
        }
        let info = design.weighted_gram(Some(&w));
        let trace = (0..p).map(|j| info[(j, j)]).sum::<S>() / S::from_usize_lossy(p);
        let mut damping = S::lit(1e-10) * (trace + S::one());
        let step = loop {
            let mut m = info.clone();
            for j in 0..p {
                m[(j, j)] += damping;
            }
            if let Some(l) = cholesky(&m) {
                break cholesky_solve(&l, &grad);
            }
            damping *= S::lit(100.0);
            if !damping.is_finite() || damping > S::lit(1e12) * (trace + S::one()) {
                return None;
            }
        };
        let mut t = S::one();
        let mut improved = false;
        for _ in 0..40 {
            let cand: Vec<S> = alpha.iter().zip(&step).map(|(&a, &s)| a + t * s).collect();
            let c = outer_loglik(g, design, &cand, ctx);
            if c.is_finite() && c >= obj {
                let rel = (c - obj).abs() / (obj.abs() + S::one());
                alpha = cand;
                obj = c;
                improved = rel > S::lit(1e-14);
                break;
            }
            t /= S::lit(2.0);
        }
        if !improved {
            return Some(alpha);
        }
    }
    Some(alpha)
}

/// Derivative-free coordinate search with step halving.
fn compass_search<S: Scalar>(obj: &dyn Fn(&[S]) -> S, mut x: Vec<S>, mut step: S) -> Vec<S> {
    let mut best = obj(&x);
    let min_step = S::lit(1e-8);
    for _ in 0..MAX_ALPHA_ITERATIONS {
        let mut moved = false;
        for j in 0..x.len() {
            for dir in [S::one(), -S::one()] {
                let mut cand = x.clone();
                cand[j] += dir * step * (x[j].abs() + S::one());
                let v = obj(&cand);
                if v.is_finite() && v > best {
                    best = v;
                    x = cand;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            step /= S::lit(2.0);
            if step < min_step {
                break;
            }
        }
    }
    x
}

/// Strategy 3: finite-difference gradient ascent over every weight in the tree,
/// started from `warm`. The result is a fresh tree; `warm`'s nested features are
/// left untouched.
pub fn deep_alpha<S: Scalar>(warm: &FeatureRef<S>, ctx: &FitContext<'_, S>) -> Result<FeatureRef<S>> {
    if !all_smooth(warm) {
        return Ok(Arc::clone(warm));
    }
    let obj = |w: &[S]| -> S {
        match warm.with_alphas(w).and_then(|f| f.evaluate(ctx.x)) {
            Ok(col) => loglik_of_eta(col.into_iter(), ctx),
            Err(_) => S::neg_infinity(),
        }
    };
    let mut w = warm.alphas();
    let mut best = obj(&w);
    if !best.is_finite() {
        return Ok(Arc::clone(warm));
    }
    let h = S::epsilon().cbrt();
    let tol = S::lit(ALPHA_GRADIENT_TOL);
    let mut rate = S::one();
    for _ in 0..MAX_ALPHA_ITERATIONS {
        let mut grad = vec![S::zero(); w.len()];
        for j in 0..w.len() {
            let hj = h * (w[j].abs() + S::one());
            let mut up = w.clone();
            up[j] += hj;
            let mut dn = w.clone();
            dn[j] -= hj;
            grad[j] = (obj(&up) - obj(&dn)) / (hj + hj);
        }
        if grad.iter().any(|v| !v.is_finite()) {
            break;
        }
        let gnorm = grad.iter().map(|v| *v * *v).sum::<S>().sqrt();
        if grad.iter().all(|v| v.abs() < tol) {
            break;
        }
        let mut accepted = false;
        for _ in 0..40 {
            let cand: Vec<S> = w.iter().zip(&grad).map(|(&a, &gj)| a + rate * gj / gnorm).collect();
            let v = obj(&cand);
            if v.is_finite() && v > best {
                w = cand;
                best = v;
                rate *= S::lit(2.0);
                accepted = true;
                break;
            }
            rate /= S::lit(2.0);
        }
        if !accepted {
            break;
        }
    }
    warm.with_alphas(&w)
}

fn all_smooth<S: Scalar>(f: &Feature<S>) -> bool {
    match f.node() {
        Node::Input(_) => true,
        Node::Projection { transform, children, .. } => transform.is_smooth() && children.iter().all(|c| all_smooth(c)),
        Node::Modification { transform, child } => transform.is_smooth() && all_smooth(child),
        Node::Multiplication { left, right } => all_smooth(left) && all_smooth(right),
    }
}
