//! Generalized linear models: canonical-link maximum likelihood and marginal
//! likelihoods.

mod family;
mod fit;
mod marginal;

pub use family::{Family, FamilySpec, Link};
pub use fit::{
    fit_mle, log_likelihood, score, FitResult, GRADIENT_TOL, MAX_IRLS_ITERATIONS, REL_LOGLIK_TOL, SEPARATION_RIDGE,
};
pub use marginal::{log_marginal, log_marginal_of_fit, mc_marginal};
