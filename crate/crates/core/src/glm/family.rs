use crate::error::{Error, Result};
use crate::math::{sigmoid, softplus, ln_factorial};
use crate::Scalar;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Bernoulli,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    Identity,
    Logit,
    Log,
}

impl Family {
    pub fn canonical_link(self) -> Link {
        match self {
            Family::Gaussian => Link::Identity,
            Family::Bernoulli => Link::Logit,
            Family::Poisson => Link::Log,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Bernoulli => "bernoulli",
            Family::Poisson => "poisson",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(Family::Gaussian),
            "bernoulli" | "binomial" | "logistic" => Ok(Family::Bernoulli),
            "poisson" => Ok(Family::Poisson),
            other => Err(Error::Config(format!("unknown family {other:?}"))),
        }
    }
}

impl std::str::FromStr for Link {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" => Ok(Link::Identity),
            "logit" => Ok(Link::Logit),
            "log" => Ok(Link::Log),
            other => Err(Error::Config(format!("unknown link {other:?}"))),
        }
    }
}

/// Response family with its canonical link and an optional offset.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec<S> {
    family: Family,
    offset: Option<Arc<Vec<S>>>,
}

impl<S: Scalar> FamilySpec<S> {
    pub fn new(family: Family, link: Option<Link>, offset: Option<Vec<S>>) -> Result<Self> {
        if let Some(link) = link {
            if link != family.canonical_link() {
                return Err(Error::Config(format!(
                    "family {} only supports its canonical link {:?}, got {link:?}",
                    family.name(),
                    family.canonical_link()
                )));
            }
        }
        if offset.is_some() && family != Family::Poisson {
            return Err(Error::Config("an offset is only supported for the poisson family".into()));
        }
        if let Some(o) = &offset {
            if o.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("offset contains non-finite values".into()));
            }
        }
        Ok(Self { family, offset: offset.map(Arc::new) })
    }

    pub fn gaussian() -> Self {
        Self { family: Family::Gaussian, offset: None }
    }

    pub fn bernoulli() -> Self {
        Self { family: Family::Bernoulli, offset: None }
    }

    pub fn poisson(offset: Option<Vec<S>>) -> Self {
        Self { family: Family::Poisson, offset: offset.map(Arc::new) }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn link(&self) -> Link {
        self.family.canonical_link()
    }

    pub fn offset(&self) -> Option<&[S]> {
        self.offset.as_deref().map(|v| v.as_slice())
    }

    /// Same family restricted to the given rows (offset subset accordingly).
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            family: self.family,
            offset: self.offset.as_ref().map(|o| Arc::new(rows.iter().map(|&i| o[i]).collect())),
        }
    }

    #[inline]
    pub fn offset_at(&self, i: usize) -> S {
        self.offset.as_ref().map_or(S::zero(), |o| o[i])
    }

    /// Inverse link `h^{-1}(eta)`.
    #[inline]
    pub fn mean(&self, eta: S) -> S {
        match self.family {
            Family::Gaussian => eta,
            Family::Bernoulli => sigmoid(eta),
            Family::Poisson => eta.exp(),
        }
    }

    /// Variance function; for canonical links also `d mu / d eta`.
    #[inline]
    pub fn variance(&self, mu: S) -> S {
        match self.family {
            Family::Gaussian => S::one(),
            Family::Bernoulli => mu * (S::one() - mu),
            Family::Poisson => mu,
        }
    }

    /// Log-likelihood contribution of one observation at linear predictor `eta`
    /// (unit dispersion for the Gaussian).
    #[inline]
    pub fn log_density(&self, y: S, eta: S) -> S {
        match self.family {
            Family::Gaussian => {
                let r = y - eta;
                -(r * r + S::lit((2.0 * std::f64::consts::PI).ln())) / S::lit(2.0)
            }
            Family::Bernoulli => y * eta - softplus(eta),
            Family::Poisson => y * eta - eta.exp() - S::lit(ln_factorial(y.to_f64_lossy())),
        }
    }

    /// Checks the response is in the family's support.
    pub fn validate_response(&self, y: &[S]) -> Result<()> {
        for (i, &v) in y.iter().enumerate() {
            let ok = match self.family {
                Family::Gaussian => v.is_finite(),
                Family::Bernoulli => v == S::zero() || v == S::one(),
                Family::Poisson => v >= S::zero() && v.is_finite() && v.fract() == S::zero(),
            };
            if !ok {
                return Err(Error::Parse {
                    row: i,
                    column: "response".into(),
                    message: format!("{v} is outside the {} support", self.family.name()),
                });
            }
        }
        if let Some(o) = &self.offset {
            if o.len() != y.len() {
                return Err(Error::Dimension(format!("offset has {} rows, response {}", o.len(), y.len())));
            }
        }
        Ok(())
    }
}
