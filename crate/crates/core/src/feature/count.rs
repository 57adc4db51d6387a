//! Exact feature-space counts and small-scale exhaustive enumeration.

use super::transform::TransformLibrary;
use super::tree::{Feature, FeatureRef};
use crate::error::{Error, Result};
use crate::Scalar;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountMode {
    /// Projections, modifications and multiplications.
    Full,
    /// Projections and modifications only.
    LowerBound,
}

impl std::str::FromStr for CountMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(CountMode::Full),
            "lower_bound" | "lower-bound" => Ok(CountMode::LowerBound),
            other => Err(Error::Config(format!("unknown count mode {other:?}"))),
        }
    }
}

/// Per-depth counts `(q, q^p, q^*)` for depths `0..=d`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthCounts {
    pub total: Vec<BigUint>,
    pub projection: Vec<BigUint>,
    pub multiplication: Vec<BigUint>,
}

fn pow2(e: &BigUint) -> Result<BigUint> {
    let e = e
        .to_u64()
        .filter(|&e| e <= 1 << 26)
        .ok_or_else(|| Error::Config("feature count exponent too large to represent".into()))?;
    Ok(BigUint::one() << e)
}

fn choose2(n: &BigUint) -> BigUint {
    n * (n - 1u32) / 2u32
}

/// Runs the depth recursions up to `d`.
pub fn depth_counts(m: usize, gsize: usize, d: usize, mode: CountMode) -> Result<DepthCounts> {
    if m == 0 || gsize == 0 {
        return Err(Error::Config("feature counts need m >= 1 and |G| >= 1".into()));
    }
    let g = BigUint::from(gsize);
    let mut q = vec![BigUint::from(m)];
    let mut qp = vec![BigUint::zero()];
    let mut qs = vec![BigUint::zero()];
    for depth in 1..=d {
        let below: BigUint = q.iter().sum();
        let p = match mode {
            CountMode::Full => {
                let sub: BigUint = q[1..(depth - 1).max(1)].iter().sum();
                &g * (pow2(&below)? - 1u32) - sub - &qp[depth - 1]
            }
            CountMode::LowerBound => {
                let sub: BigUint = q[1..depth].iter().sum();
                &g * (pow2(&below)? - 1u32) - sub
            }
        };
        let s = match mode {
            CountMode::LowerBound => BigUint::zero(),
            CountMode::Full => {
                // operand depths (t, depth-1-t) with t < depth-1-t, plus the
                // unordered pairs of equal depth when depth is odd
                let half = (depth - 1) / 2;
                let mut acc = BigUint::zero();
                for t in 0..depth {
                    let other = depth - 1 - t;
                    if t < other {
                        acc += &q[t] * &q[other];
                    }
                }
                if depth % 2 == 1 {
                    acc += choose2(&(&q[half] + 1u32));
                }
                acc
            }
        };
        q.push(&p + &s);
        qp.push(p);
        qs.push(s);
    }
    Ok(DepthCounts { total: q, projection: qp, multiplication: qs })
}

/// Number of features of depth exactly `d` over `m` inputs and `gsize` transforms.
pub fn count_features(m: usize, gsize: usize, d: usize, mode: CountMode) -> Result<BigUint> {
    Ok(depth_counts(m, gsize, d, mode)?.total.swap_remove(d))
}

/// Largest depth and input count accepted by [`enumerate_features`].
pub const ENUMERATION_MAX_DEPTH: usize = 2;
pub const ENUMERATION_MAX_INPUTS: usize = 2;

/// Every structural feature of depth at most `max_depth`, grouped by depth.
/// Projection weights are set to one with a zero intercept.
pub fn enumerate_features<S: Scalar>(
    m: usize,
    lib: &TransformLibrary,
    max_depth: usize,
) -> Result<Vec<FeatureRef<S>>> {
    if max_depth > ENUMERATION_MAX_DEPTH || m > ENUMERATION_MAX_INPUTS || m == 0 {
        return Err(Error::ScaleGuard { depth: max_depth, m });
    }
    let mut by_depth: Vec<Vec<FeatureRef<S>>> = vec![(0..m).map(|j| Arc::new(Feature::input(j))).collect()];
    for d in 1..=max_depth {
        let pool: Vec<FeatureRef<S>> = by_depth.iter().flatten().cloned().collect();
        let mut found: BTreeMap<String, FeatureRef<S>> = BTreeMap::new();
        let mut add = |f: Feature<S>| {
            if f.depth() == d {
                found.entry(f.key().to_string()).or_insert_with(|| Arc::new(f));
            }
        };
        // non-empty subsets of the pool; singletons are modifications
        for mask in 1u64..(1u64 << pool.len()) {
            let subset: Vec<FeatureRef<S>> =
                (0..pool.len()).filter(|i| mask >> i & 1 == 1).map(|i| Arc::clone(&pool[i])).collect();
            for &g in lib.transforms() {
                if subset.len() == 1 {
                    add(Feature::modification(g, Arc::clone(&subset[0])));
                } else {
                    let mut alpha = vec![S::one(); subset.len() + 1];
                    alpha[0] = S::zero();
                    add(Feature::projection(g, alpha, subset.clone())?);
                }
            }
        }
        for i in 0..pool.len() {
            for j in i..pool.len() {
                add(Feature::multiplication(Arc::clone(&pool[i]), Arc::clone(&pool[j])));
            }
        }
        by_depth.push(found.into_values().collect());
    }
    Ok(by_depth.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::transform::Transform;

    fn n(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn toy_counts() {
        let c = depth_counts(1, 2, 3, CountMode::Full).unwrap();
        assert_eq!(c.total, vec![n(1), n(3), n(31), n(68_719_476_740)]);
        assert_eq!(c.projection, vec![n(0), n(2), n(28), n(68_719_476_703)]);
        assert_eq!(c.multiplication, vec![n(0), n(1), n(3), n(37)]);
        let l: Vec<_> = (0..3).map(|d| count_features(1, 2, d, CountMode::LowerBound).unwrap()).collect();
        assert_eq!(l, vec![n(1), n(2), n(12)]);
    }

    #[test]
    fn single_transform_depth_one() {
        assert_eq!(count_features(1, 1, 1, CountMode::Full).unwrap(), n(2));
        let lib = TransformLibrary::new(vec![Transform::Sin]).unwrap();
        let keys: Vec<String> =
            enumerate_features::<f64>(1, &lib, 1).unwrap().iter().map(|f| f.key().to_string()).collect();
        assert_eq!(keys, vec!["x0", "(x0*x0)", "sin(x0)"]);
    }

    #[test]
    fn enumeration_matches_counts() {
        for m in 1..=2 {
            for gsize in 1..=2 {
                let lib = TransformLibrary::new([Transform::Sin, Transform::Tanh][..gsize].to_vec()).unwrap();
                let feats = enumerate_features::<f64>(m, &lib, 2).unwrap();
                for d in 0..=2 {
                    let got = feats.iter().filter(|f| f.depth() == d).count();
                    assert_eq!(n(got as u64), count_features(m, gsize, d, CountMode::Full).unwrap(), "m={m} g={gsize} d={d}");
                }
                let mut keys: Vec<_> = feats.iter().map(|f| f.key()).collect();
                keys.sort();
                keys.dedup();
                assert_eq!(keys.len(), feats.len());
            }
        }
    }

    #[test]
    fn scale_guard() {
        let lib = TransformLibrary::classification();
        assert!(matches!(enumerate_features::<f64>(1, &lib, 3), Err(Error::ScaleGuard { .. })));
        assert!(matches!(enumerate_features::<f64>(3, &lib, 1), Err(Error::ScaleGuard { .. })));
        assert_eq!(enumerate_features::<f64>(1, &lib, 0).unwrap().len(), 1);
    }
}
