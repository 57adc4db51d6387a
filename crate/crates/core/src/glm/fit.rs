use super::family::{Family, FamilySpec};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, cholesky_solve, least_squares, Matrix};
use crate::Scalar;

pub const MAX_IRLS_ITERATIONS: usize = 50;
pub const REL_LOGLIK_TOL: f64 = 1e-10;
pub const GRADIENT_TOL: f64 = 1e-6;
pub const SEPARATION_RIDGE: f64 = 1e-6;
const MAX_HALVINGS: usize = 40;

/// Maximum likelihood fit of a GLM.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<S> {
    /// Coefficients, intercept first.
    pub beta_hat: Vec<S>,
    pub log_lik: S,
    pub fisher_info: Matrix<S>,
    /// `RSS / n`, Gaussian only.
    pub dispersion_hat: Option<S>,
    /// Residual sum of squares, Gaussian only.
    pub rss: Option<S>,
    pub converged: bool,
    pub iterations: usize,
}

/// Score vector `X^T (y - mu)` of a canonical-link GLM.
pub fn score<S: Scalar>(design: &Matrix<S>, y: &[S], beta: &[S], spec: &FamilySpec<S>) -> Vec<S> {
    let eta = design.mul_vec(beta);
    let resid: Vec<S> = eta
        .iter()
        .enumerate()
        .map(|(i, &e)| y[i] - spec.mean(e + spec.offset_at(i)))
        .collect();
    design.tr_mul_vec(&resid)
}

/// Log-likelihood at `beta` (Gaussian: unit dispersion).
pub fn log_likelihood<S: Scalar>(design: &Matrix<S>, y: &[S], beta: &[S], spec: &FamilySpec<S>) -> S {
    design
        .mul_vec(beta)
        .iter()
        .enumerate()
        .map(|(i, &e)| spec.log_density(y[i], e + spec.offset_at(i)))
        .sum()
}

fn check_inputs<S: Scalar>(design: &Matrix<S>, y: &[S], spec: &FamilySpec<S>) -> Result<()> {
    if design.rows() != y.len() {
        return Err(Error::Dimension(format!("design has {} rows, response {}", design.rows(), y.len())));
    }
    if let Some(o) = spec.offset() {
        if o.len() != y.len() {
            return Err(Error::Dimension(format!("offset has {} rows, response {}", o.len(), y.len())));
        }
    }
    if design.rows() <= design.cols() {
        return Err(Error::SingularDesign { column: design.rows() });
    }
    if !design.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    Ok(())
}

/// Fits the canonical-link GLM `h(mu) = design * beta (+ offset)`.
///
/// Gaussian fits are closed-form least squares; the other families use IRLS with
/// step halving. When Bernoulli probabilities pin at 0/1 or the Newton system
/// breaks down, the fit is redone with a small ridge and flagged unconverged.
pub fn fit_mle<S: Scalar>(design: &Matrix<S>, y: &[S], spec: &FamilySpec<S>) -> Result<FitResult<S>> {
    check_inputs(design, y, spec)?;
    match spec.family() {
        Family::Gaussian => fit_gaussian(design, y),
        _ => {
            // rank check on the unweighted design
            least_squares(design, y, None)?;
            match irls(design, y, spec, None) {
                Ok(fit) if !separated(design, &fit.beta_hat, spec) => Ok(fit),
                _ => {
                    let mut fit = irls(design, y, spec, Some(S::lit(SEPARATION_RIDGE)))?;
                    fit.converged = false;
                    Ok(fit)
                }
            }
        }
    }
}

fn fit_gaussian<S: Scalar>(design: &Matrix<S>, y: &[S]) -> Result<FitResult<S>> {
    let n = S::from_usize_lossy(y.len());
    let ls = least_squares(design, y, None)?;
    let sigma2 = ls.rss / n;
    let two_pi = S::lit(2.0 * std::f64::consts::PI);
    let log_lik = -n / S::lit(2.0) * ((two_pi * sigma2).ln() + S::one());
    let mut fisher_info = design.weighted_gram(None);
    for j in 0..fisher_info.cols() {
        for v in fisher_info.col_mut(j) {
            *v /= sigma2;
        }
    }
    Ok(FitResult {
        beta_hat: ls.beta,
        log_lik,
        fisher_info,
        dispersion_hat: Some(sigma2),
        rss: Some(ls.rss),
        converged: true,
        iterations: 1,
    })
}

fn separated<S: Scalar>(design: &Matrix<S>, beta: &[S], spec: &FamilySpec<S>) -> bool {
    if spec.family() != Family::Bernoulli {
        return false;
    }
    let tiny = S::lit(1e-10);
    design.mul_vec(beta).iter().any(|&e| {
        let mu = spec.mean(e);
        mu < tiny || mu > S::one() - tiny
    })
}

fn starting_point<S: Scalar>(design: &Matrix<S>, y: &[S], spec: &FamilySpec<S>) -> Vec<S> {
    let mut beta = vec![S::zero(); design.cols()];
    let n = S::from_usize_lossy(y.len());
    let ybar = y.iter().copied().sum::<S>() / n;
    let intercept_col = (0..design.rows()).all(|i| design[(i, 0)] == S::one());
    if intercept_col {
        beta[0] = match spec.family() {
            Family::Gaussian => ybar,
            Family::Bernoulli => {
                let p = ybar.max(S::lit(1e-3)).min(S::one() - S::lit(1e-3));
                (p / (S::one() - p)).ln()
            }
            Family::Poisson => {
                let exposure = (0..y.len()).map(|i| spec.offset_at(i).exp()).sum::<S>() / n;
                (ybar.max(S::lit(1e-3)) / exposure).ln()
            }
        };
    }
    beta
}

fn grad_norm<S: Scalar>(g: &[S]) -> S {
    g.iter().map(|&v| v * v).sum::<S>().sqrt()
}

fn irls<S: Scalar>(design: &Matrix<S>, y: &[S], spec: &FamilySpec<S>, ridge: Option<S>) -> Result<FitResult<S>> {
    let penalty = |beta: &[S]| ridge.map_or(S::zero(), |l| l * beta.iter().map(|&b| b * b).sum::<S>() / S::lit(2.0));
    let objective = |beta: &[S]| log_likelihood(design, y, beta, spec) - penalty(beta);
    let mut beta = starting_point(design, y, spec);
    let mut obj = objective(&beta);
    if !obj.is_finite() {
        beta = vec![S::zero(); design.cols()];
        obj = objective(&beta);
    }
    let grad_tol = S::lit(GRADIENT_TOL);
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=MAX_IRLS_ITERATIONS {
        iterations = it;
        let (grad, info) = newton_system(design, y, &beta, spec, ridge);
        let gnorm = grad_norm(&grad);
        let Some(l) = cholesky(&info) else {
            return Err(Error::SingularDesign { column: design.cols() });
        };
        let step = cholesky_solve(&l, &grad);
        let mut t = S::one();
        let mut accepted = None;
        // changes below this are rounding noise in the objective
        let slack = S::epsilon() * S::lit(64.0) * (obj.abs() + S::one());
        for _ in 0..MAX_HALVINGS {
            let cand: Vec<S> = beta.iter().zip(&step).map(|(&b, &s)| b + t * s).collect();
            let cand_obj = objective(&cand);
            if cand_obj.is_finite() && cand_obj >= obj - slack {
                accepted = Some((cand, cand_obj));
                break;
            }
            t /= S::lit(2.0);
        }
        let Some((cand, cand_obj)) = accepted else {
            // no ascent direction left: stationary up to rounding
            converged = gnorm < grad_tol;
            break;
        };
        let rel = (cand_obj - obj).abs() / (obj.abs() + S::one());
        beta = cand;
        obj = cand_obj;
        if rel < S::lit(REL_LOGLIK_TOL) {
            let (g, _) = newton_system(design, y, &beta, spec, ridge);
            let gn = grad_norm(&g);
            converged = gn < grad_tol;
            // one more Newton step is cheap and leaves the score well inside the tolerance
            if gn < grad_tol * S::lit(1e-3) {
                break;
            }
        }
    }
    if !obj.is_finite() {
        return Err(Error::NonFiniteLikelihood);
    }
    if !converged && ridge.is_none() && !separated(design, &beta, spec) {
        return Err(Error::NoConvergence { iterations });
    }
    let (_, fisher_info) = newton_system(design, y, &beta, spec, None);
    Ok(FitResult {
        log_lik: log_likelihood(design, y, &beta, spec),
        beta_hat: beta,
        fisher_info,
        dispersion_hat: None,
        rss: None,
        converged,
        iterations,
    })
}

/// Penalized score and Fisher information at `beta`.
fn newton_system<S: Scalar>(
    design: &Matrix<S>,
    y: &[S],
    beta: &[S],
    spec: &FamilySpec<S>,
    ridge: Option<S>,
) -> (Vec<S>, Matrix<S>) {
    let eta = design.mul_vec(beta);
    let mut resid = Vec::with_capacity(y.len());
    let mut w = Vec::with_capacity(y.len());
    for (i, &e) in eta.iter().enumerate() {
        let mu = spec.mean(e + spec.offset_at(i));
        resid.push(y[i] - mu);
        w.push(spec.variance(mu));
    }
    let mut grad = design.tr_mul_vec(&resid);
    let mut info = design.weighted_gram(Some(&w));
    if let Some(l) = ridge {
        for (j, g) in grad.iter_mut().enumerate() {
            *g -= l * beta[j];
            info[(j, j)] += l;
        }
    }
    (grad, info)
}
