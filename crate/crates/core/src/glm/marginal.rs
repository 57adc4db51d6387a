use super::family::{Family, FamilySpec};
use super::fit::{fit_mle, FitResult};
use crate::error::{Error, Result};
use crate::feature::FeatureRef;
use crate::linalg::Matrix;
use crate::math::log_sum_exp;
use crate::Scalar;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Log marginal likelihood of a fitted model.
///
/// Gaussian: `-(n/2) log(RSS/n)`. Bernoulli and Poisson: the Laplace
/// approximation under the Jeffreys prior, where the prior density cancels the
/// Hessian determinant; the `(2 pi)^{d/2}` factor is dropped so that the model
/// prior alone carries the dimension penalty.
pub fn log_marginal_of_fit<S: Scalar>(fit: &FitResult<S>, n: usize, family: Family) -> Result<S> {
    let v = match family {
        Family::Gaussian => {
            let rss = fit.rss.ok_or(Error::NonFiniteLikelihood)?;
            let n = S::from_usize_lossy(n);
            -n / S::lit(2.0) * (rss / n).ln()
        }
        Family::Bernoulli | Family::Poisson => fit.log_lik,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteLikelihood)
    }
}

/// Fits the model with an intercept plus `columns` and returns its log marginal
/// likelihood together with the fit.
pub fn log_marginal<S: Scalar, C: AsRef<[S]>>(columns: &[C], y: &[S], spec: &FamilySpec<S>) -> Result<(S, FitResult<S>)> {
    let design = Matrix::with_intercept(y.len(), columns)?;
    let fit = fit_mle(&design, y, spec)?;
    Ok((log_marginal_of_fit(&fit, y.len(), spec.family())?, fit))
}

/// Monte Carlo marginal over projection weights drawn from `N(0, sigma_alpha^2)`:
/// `log( (1/M) sum_t p(y | m, alpha_t) )`. Models without projections need no
/// sampling and return the plain log marginal.
pub fn mc_marginal<S: Scalar, R: Rng + ?Sized>(
    features: &[FeatureRef<S>],
    x: &Matrix<S>,
    y: &[S],
    spec: &FamilySpec<S>,
    sigma_alpha: S,
    draws: usize,
    rng: &mut R,
) -> Result<S> {
    let evaluate = |fs: &[FeatureRef<S>]| -> Result<S> {
        let cols = fs.iter().map(|f| f.evaluate(x)).collect::<Result<Vec<_>>>()?;
        Ok(log_marginal(&cols, y, spec)?.0)
    };
    if !features.iter().any(|f| f.has_projection()) {
        return evaluate(features);
    }
    if draws == 0 {
        return Err(Error::Config("mc_marginal needs at least one draw".into()));
    }
    if !(sigma_alpha > S::zero()) {
        return Err(Error::Config("alpha prior standard deviation must be positive".into()));
    }
    let normal = Normal::new(0.0, sigma_alpha.to_f64_lossy()).map_err(|e| Error::Config(e.to_string()))?;
    let mut logs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let mut drawn = Vec::with_capacity(features.len());
        for f in features {
            let w: Vec<S> = (0..f.alpha_count()).map(|_| S::lit(normal.sample(rng))).collect();
            drawn.push(f.with_alphas(&w)?);
        }
        // draws producing overflow or collinear columns carry no likelihood mass
        logs.push(evaluate(&drawn).unwrap_or(S::neg_infinity()));
    }
    let v = log_sum_exp(&logs) - S::from_usize_lossy(draws).ln();
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteLikelihood)
    }
}
