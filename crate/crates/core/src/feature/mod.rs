//! Nonlinear feature grammar: transforms, expression trees, weight estimation,
//! random generation and feature-space counting.

mod alpha;
mod count;
mod generate;
mod transform;
mod tree;

pub use alpha::{concave_alpha, deep_alpha, estimate_alpha, naive_alpha, AlphaStrategy, FitContext};
pub use count::{count_features, depth_counts, enumerate_features, CountMode, DepthCounts};
pub use generate::{is_redundant, is_redundant_in, ColumnCache, Constraints, FeatureKind, Generator, Pool};
pub use transform::{Transform, TransformLibrary};
pub use tree::{Feature, FeatureRef, FeatureSpec, Measures, Node, KEY_DIGITS};
