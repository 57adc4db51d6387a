//! Nonlinear functions available to projections and modifications.

use crate::error::{Error, Result};
use crate::Scalar;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// A named scalar nonlinearity `g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Transform {
    Identity,
    /// `exp(-x^2)`
    Gauss,
    Tanh,
    Atan,
    Sin,
    Sigmoid,
    Exp,
    /// `log(|x| + 1)`
    Log1pAbs,
    /// `|x|^(1/3)`
    CbrtAbs,
    /// `|x|^(5/2)`
    P25,
    /// `|x|^(7/2)`
    P35,
    /// `|x|^2.3`
    P23,
    /// `|x|^(7/2)`, alternative name
    P72,
    /// `exp(-|x|)`
    ExpNegAbs,
    Relu,
    /// `I(x >= 1)`
    IndicatorGe1,
}

impl Transform {
    pub const ALL: [Transform; 16] = [
        Transform::Identity,
        Transform::Gauss,
        Transform::Tanh,
        Transform::Atan,
        Transform::Sin,
        Transform::Sigmoid,
        Transform::Exp,
        Transform::Log1pAbs,
        Transform::CbrtAbs,
        Transform::P25,
        Transform::P35,
        Transform::P23,
        Transform::P72,
        Transform::ExpNegAbs,
        Transform::Relu,
        Transform::IndicatorGe1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Transform::Identity => "id",
            Transform::Gauss => "gauss",
            Transform::Tanh => "tanh",
            Transform::Atan => "atan",
            Transform::Sin => "sin",
            Transform::Sigmoid => "sigmoid",
            Transform::Exp => "exp",
            Transform::Log1pAbs => "log1pabs",
            Transform::CbrtAbs => "cbrt_abs",
            Transform::P25 => "p25",
            Transform::P35 => "p35",
            Transform::P23 => "p23",
            Transform::P72 => "p72",
            Transform::ExpNegAbs => "expnabs",
            Transform::Relu => "relu",
            Transform::IndicatorGe1 => "indicator_ge1",
        }
    }

    #[inline]
    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Transform::Identity => x,
            Transform::Gauss => (-(x * x)).exp(),
            Transform::Tanh => x.tanh(),
            Transform::Atan => x.atan(),
            Transform::Sin => x.sin(),
            Transform::Sigmoid => crate::math::sigmoid(x),
            Transform::Exp => x.exp(),
            Transform::Log1pAbs => x.abs().ln_1p(),
            Transform::CbrtAbs => x.abs().cbrt(),
            Transform::P25 => x.abs().powf(S::lit(2.5)),
            Transform::P35 | Transform::P72 => x.abs().powf(S::lit(3.5)),
            Transform::P23 => x.abs().powf(S::lit(2.3)),
            Transform::ExpNegAbs => (-x.abs()).exp(),
            Transform::Relu => x.max(S::zero()),
            Transform::IndicatorGe1 => {
                if x >= S::one() {
                    S::one()
                } else {
                    S::zero()
                }
            }
        }
    }

    /// `g'(x)`. Non-differentiable points return the one-sided value (or a
    /// non-finite number for the cusp of `|x|^(1/3)`).
    #[inline]
    pub fn derivative<S: Scalar>(self, x: S) -> S {
        let sgn = if x > S::zero() {
            S::one()
        } else if x < S::zero() {
            -S::one()
        } else {
            S::zero()
        };
        match self {
            Transform::Identity => S::one(),
            Transform::Gauss => S::lit(-2.0) * x * (-(x * x)).exp(),
            Transform::Tanh => {
                let t = x.tanh();
                S::one() - t * t
            }
            Transform::Atan => S::one() / (S::one() + x * x),
            Transform::Sin => x.cos(),
            Transform::Sigmoid => {
                let s = crate::math::sigmoid(x);
                s * (S::one() - s)
            }
            Transform::Exp => x.exp(),
            Transform::Log1pAbs => sgn / (S::one() + x.abs()),
            Transform::CbrtAbs => sgn / (S::lit(3.0) * x.abs().powf(S::lit(2.0 / 3.0))),
            Transform::P25 => S::lit(2.5) * sgn * x.abs().powf(S::lit(1.5)),
            Transform::P35 | Transform::P72 => S::lit(3.5) * sgn * x.abs().powf(S::lit(2.5)),
            Transform::P23 => S::lit(2.3) * sgn * x.abs().powf(S::lit(1.3)),
            Transform::ExpNegAbs => -sgn * (-x.abs()).exp(),
            Transform::Relu => {
                if x > S::zero() {
                    S::one()
                } else {
                    S::zero()
                }
            }
            Transform::IndicatorGe1 => S::zero(),
        }
    }

    /// Whether gradient-based weight fitting is meaningful for this transform.
    pub fn is_smooth(self) -> bool {
        !matches!(self, Transform::Relu | Transform::IndicatorGe1 | Transform::CbrtAbs)
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Transform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Transform::ALL
            .iter()
            .copied()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown transform `{s}`")))
    }
}

impl From<Transform> for String {
    fn from(t: Transform) -> Self {
        t.name().to_string()
    }
}

impl TryFrom<String> for Transform {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Ordered set of transforms `G` a run draws from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformLibrary {
    transforms: Vec<Transform>,
}

impl TransformLibrary {
    pub fn new(transforms: Vec<Transform>) -> Result<Self> {
        if transforms.is_empty() {
            return Err(Error::Config("transform set must not be empty".into()));
        }
        for (i, t) in transforms.iter().enumerate() {
            if transforms[..i].contains(t) {
                return Err(Error::Config(format!("transform `{t}` listed twice")));
            }
        }
        Ok(Self { transforms })
    }

    /// {gauss, tanh, atan, sin}
    pub fn classification() -> Self {
        Self { transforms: vec![Transform::Gauss, Transform::Tanh, Transform::Atan, Transform::Sin] }
    }

    /// {sigmoid, exp, log(|x|+1), |x|^(1/3), |x|^(5/2), |x|^(7/2)}
    pub fn regression() -> Self {
        Self {
            transforms: vec![
                Transform::Sigmoid,
                Transform::Exp,
                Transform::Log1pAbs,
                Transform::CbrtAbs,
                Transform::P25,
                Transform::P35,
            ],
        }
    }

    /// G_1 = {sigmoid, sin, tanh, atan, |x|^(1/3)}
    pub fn g1() -> Self {
        Self {
            transforms: vec![
                Transform::Sigmoid,
                Transform::Sin,
                Transform::Tanh,
                Transform::Atan,
                Transform::CbrtAbs,
            ],
        }
    }

    /// G_2 = {sigmoid, sin, exp(-|x|), log(|x|+1), |x|^(1/3), |x|^2.3, |x|^(7/2)}
    pub fn g2() -> Self {
        Self {
            transforms: vec![
                Transform::Sigmoid,
                Transform::Sin,
                Transform::ExpNegAbs,
                Transform::Log1pAbs,
                Transform::CbrtAbs,
                Transform::P23,
                Transform::P72,
            ],
        }
    }

    /// Resolves a preset name or a comma separated list of transform names.
    pub fn from_name(spec: &str) -> Result<Self> {
        match spec.trim() {
            "classification" | "G_classification" => Ok(Self::classification()),
            "regression" => Ok(Self::regression()),
            "G1" | "G_1" | "g1" => Ok(Self::g1()),
            "G2" | "G_2" | "g2" => Ok(Self::g2()),
            list => Self::new(
                list.split(',')
                    .map(|s| s.trim().parse())
                    .collect::<Result<Vec<_>>>()?,
            ),
        }
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    pub fn len(&self) -> usize {
        self.transforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transforms.is_empty()
    }
}
