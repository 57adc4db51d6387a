//! Dataset loading, dummy coding, splitting and synthetic generators.

use crate::error::{Error, Result};
use crate::feature::{Feature, FeatureRef, Transform};
use crate::glm::Family;
use crate::linalg::Matrix;
use crate::predict::TruthClass;
use crate::Scalar;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

/// Cell contents treated as missing.
const MISSING: [&str; 4] = ["", "NA", "?", "NaN"];

#[derive(Debug, Clone)]
pub struct Dataset<S> {
    pub x: Matrix<S>,
    pub y: Vec<S>,
    pub column_names: Vec<String>,
    pub family_hint: Family,
    /// Rows dropped at load time because of missing cells.
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub m: usize,
    pub columns: Vec<String>,
    pub family_hint: Family,
    pub dropped_rows: usize,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(x: Matrix<S>, y: Vec<S>, column_names: Vec<String>) -> Result<Self> {
        if x.rows() != y.len() || x.cols() != column_names.len() {
            return Err(Error::Dimension("dataset parts disagree in size".into()));
        }
        if y.len() < 2 {
            return Err(Error::EmptyAfterFiltering);
        }
        let family_hint = hint_family(&y);
        Ok(Self { x, y, column_names, family_hint, dropped_rows: 0 })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn m(&self) -> usize {
        self.x.cols()
    }

    pub fn summary(&self) -> DatasetSummary {
        DatasetSummary {
            n: self.n(),
            m: self.m(),
            columns: self.column_names.clone(),
            family_hint: self.family_hint,
            dropped_rows: self.dropped_rows,
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let cols: Vec<Vec<S>> = self.x.columns().map(|c| rows.iter().map(|&i| c[i]).collect()).collect();
        Self {
            x: Matrix::from_columns(&cols).unwrap_or_else(|_| Matrix::zeros(rows.len(), 0)),
            y: rows.iter().map(|&i| self.y[i]).collect(),
            column_names: self.column_names.clone(),
            family_hint: self.family_hint,
            dropped_rows: 0,
        }
    }

    /// Random split into (train, test) with `test_fraction` of the rows in the test part.
    pub fn train_test_split(&self, test_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::Config(format!("test fraction must lie in [0, 1) (got {test_fraction})")));
        }
        let mut idx: Vec<usize> = (0..self.n()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = (self.n() as f64 * test_fraction).round() as usize;
        if self.n() - n_test < 2 {
            return Err(Error::EmptyAfterFiltering);
        }
        let (test, train) = idx.split_at(n_test);
        let (mut train, mut test) = (train.to_vec(), test.to_vec());
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.select_rows(&train), self.select_rows(&test)))
    }

    /// Removes a covariate column and returns it.
    pub fn take_column(&mut self, name: &str) -> Result<Vec<S>> {
        let j = self
            .column_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        let col = self.x.col(j).to_vec();
        let rest: Vec<Vec<S>> =
            (0..self.m()).filter(|&k| k != j).map(|k| self.x.col(k).to_vec()).collect();
        self.x = if rest.is_empty() { Matrix::zeros(self.n(), 0) } else { Matrix::from_columns(&rest)? };
        self.column_names.remove(j);
        Ok(col)
    }

    /// Reorders columns to `names`. Dummy columns `base=level` absent from this
    /// data set are filled with zeros when `base` was dummy coded here too.
    pub fn align_to(&self, names: &[String]) -> Result<Matrix<S>> {
        let n = self.n();
        let mut cols = Vec::with_capacity(names.len());
        for name in names {
            if let Some(j) = self.column_names.iter().position(|c| c == name) {
                cols.push(self.x.col(j).to_vec());
                continue;
            }
            let dummy_base = name.split_once('=').map(|(b, _)| format!("{b}="));
            match dummy_base {
                Some(b) if self.column_names.iter().any(|c| c.starts_with(&b)) => cols.push(vec![S::zero(); n]),
                _ => return Err(Error::UnknownColumn(name.clone())),
            }
        }
        if cols.is_empty() {
            return Ok(Matrix::zeros(n, 0));
        }
        Matrix::from_columns(&cols)
    }
}

fn hint_family<S: Scalar>(y: &[S]) -> Family {
    if y.iter().all(|&v| v == S::zero() || v == S::one()) {
        Family::Bernoulli
    } else {
        Family::Gaussian
    }
}

/// Per-column centring and scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Standardizer {
    /// Constant columns keep a unit scale.
    pub fn fit<S: Scalar>(x: &Matrix<S>) -> Self {
        let n = x.rows() as f64;
        let (mut means, mut sds) = (Vec::new(), Vec::new());
        for c in x.columns() {
            let m = c.iter().map(|v| v.to_f64_lossy()).sum::<f64>() / n;
            let var = c.iter().map(|v| (v.to_f64_lossy() - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            means.push(m);
            sds.push(if var > 0.0 { var.sqrt() } else { 1.0 });
        }
        Self { means, sds }
    }

    pub fn apply<S: Scalar>(&self, x: &mut Matrix<S>) -> Result<()> {
        if x.cols() != self.means.len() {
            return Err(Error::Dimension("standardizer column count differs".into()));
        }
        for j in 0..x.cols() {
            let (m, s) = (S::lit(self.means[j]), S::lit(self.sds[j]));
            for v in x.col_mut(j) {
                *v = (*v - m) / s;
            }
        }
        Ok(())
    }
}

fn is_missing(cell: &str) -> bool {
    MISSING.contains(&cell.trim())
}

/// Reads a headed CSV file. Columns in `categorical` become k-1 dummies named
/// `col=level` (reference = first level in sorted order). A categorical
/// response with two levels is coded 0/1 in sorted order. Rows with a missing
/// cell are dropped and counted.
pub fn load_csv<S: Scalar>(path: impl AsRef<Path>, response: Option<&str>, categorical: &[String]) -> Result<Dataset<S>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_path(path.as_ref())?;
    let header: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    for c in categorical.iter().chain(response.map(|r| r.to_string()).as_ref()) {
        if !header.contains(c) {
            return Err(Error::UnknownColumn(c.clone()));
        }
    }
    let mut rows = Vec::new();
    let mut dropped = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.iter().any(is_missing) {
            dropped += 1;
            continue;
        }
        rows.push(rec.iter().map(|s| s.trim().to_string()).collect::<Vec<_>>());
    }
    if rows.len() < 2 {
        return Err(Error::EmptyAfterFiltering);
    }
    // row numbers in errors are 1-based data rows after filtering
    let parse = |j: usize| -> Result<Vec<S>> {
        rows.iter()
            .enumerate()
            .map(|(i, r)| {
                f64::from_str(&r[j]).map(S::lit).map_err(|_| Error::Parse {
                    row: i + 1,
                    column: header[j].clone(),
                    message: format!("`{}` is not a number", r[j]),
                })
            })
            .collect()
    };
    let mut cols = Vec::new();
    let mut names = Vec::new();
    let mut y = Vec::new();
    for (j, name) in header.iter().enumerate() {
        let is_cat = categorical.contains(name);
        if Some(name.as_str()) == response {
            if is_cat {
                let levels: BTreeSet<&str> = rows.iter().map(|r| r[j].as_str()).collect();
                let levels: Vec<&str> = levels.into_iter().collect();
                if levels.len() != 2 {
                    return Err(Error::Parse {
                        row: 0,
                        column: name.clone(),
                        message: format!("categorical response needs 2 levels, found {}", levels.len()),
                    });
                }
                y = rows.iter().map(|r| if r[j] == levels[1] { S::one() } else { S::zero() }).collect();
            } else {
                y = parse(j)?;
            }
        } else if is_cat {
            let levels: BTreeSet<&str> = rows.iter().map(|r| r[j].as_str()).collect();
            for level in levels.iter().skip(1) {
                names.push(format!("{name}={level}"));
                cols.push(rows.iter().map(|r| if r[j] == *level { S::one() } else { S::zero() }).collect());
            }
        } else {
            names.push(name.clone());
            cols.push(parse(j)?);
        }
    }
    let n = rows.len();
    let x = if cols.is_empty() { Matrix::zeros(n, 0) } else { Matrix::from_columns(&cols)? };
    if response.is_none() {
        y = vec![S::zero(); n];
    }
    let mut ds = Dataset::new(x, y, names)?;
    ds.dropped_rows = dropped;
    if dropped > 0 {
        log::info!("dropped {dropped} rows with missing cells");
    }
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Kepler,
    Mass,
    Logic,
}

impl FromStr for Generator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "kepler" => Ok(Self::Kepler),
            "mass" => Ok(Self::Mass),
            "logic" => Ok(Self::Logic),
            other => Err(Error::Config(format!("unknown generator `{other}` (kepler, mass, logic)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub generator: Generator,
    pub n: usize,
    pub noise_sd: f64,
    /// Scale `noise_sd` by the standard deviation of the noiseless signal.
    pub relative_noise: bool,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Config(format!("noise_sd must be finite and >= 0 (got {})", self.noise_sd)));
        }
        let min_n = if self.generator == Generator::Logic { 50 } else { 2 };
        if self.n < min_n {
            return Err(Error::Config(format!("n must be at least {min_n} for this generator (got {})", self.n)));
        }
        Ok(())
    }
}

/// A ground-truth feature with the structurally different forms accepted for it.
#[derive(Debug, Clone)]
pub struct Truth<S> {
    pub label: String,
    pub members: Vec<FeatureRef<S>>,
}

impl<S: Scalar> Truth<S> {
    pub fn class(&self) -> TruthClass {
        TruthClass { label: self.label.clone(), members: self.members.iter().map(|f| f.key().to_string()).collect() }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic<S> {
    pub dataset: Dataset<S>,
    pub truths: Vec<Truth<S>>,
}

fn input<S: Scalar>(j: usize) -> FeatureRef<S> {
    Arc::new(Feature::input(j))
}

/// Left-nested product of the given inputs.
pub fn product<S: Scalar>(inputs: &[usize]) -> FeatureRef<S> {
    let mut f = input(inputs[0]);
    for &j in &inputs[1..] {
        f = Arc::new(Feature::multiplication(f, input(j)));
    }
    f
}

/// Logic regression terms as (coefficient, 1-based covariate indices).
pub const LOGIC_TERMS: [(f64, &[usize]); 8] = [
    (1.5, &[7]),
    (1.5, &[8]),
    (6.6, &[18, 21]),
    (3.5, &[2, 9]),
    (9.0, &[12, 20, 37]),
    (7.0, &[1, 3, 27]),
    (7.0, &[4, 10, 17, 30]),
    (7.0, &[11, 13, 19, 50]),
];
pub const LOGIC_INTERCEPT: f64 = 1.0;
pub const LOGIC_P: usize = 50;
pub const KEPLER_NUISANCE: usize = 6;
pub const MASS_NUISANCE: usize = 6;

fn log_uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Draws a synthetic data set and its ground truth.
pub fn gen_synthetic<S: Scalar>(spec: &SyntheticSpec) -> Result<Synthetic<S>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let std_normal = Normal::<f64>::new(0.0, 1.0).expect("unit normal");
    let n = spec.n;
    let (cols, names, signal, truths): (Vec<Vec<f64>>, Vec<String>, Vec<f64>, Vec<Truth<S>>) = match spec.generator {
        Generator::Kepler => {
            let mut p = Vec::with_capacity(n);
            let mut mh = Vec::with_capacity(n);
            let mut rh = Vec::with_capacity(n);
            let mut th = Vec::with_capacity(n);
            for _ in 0..n {
                let period = log_uniform(&mut rng, 1.0, 4000.0);
                let mass: f64 = rng.random_range(0.5..2.5);
                let radius = mass.powf(0.8) * (1.0 + 0.01 * std_normal.sample(&mut rng));
                let temp = 5778.0 * mass.powf(0.55) * (1.0 + 0.01 * std_normal.sample(&mut rng));
                p.push(period);
                mh.push(mass);
                rh.push(radius);
                th.push(temp);
            }
            let signal = p.iter().zip(&mh).map(|(p, m)| (p * p * m).cbrt()).collect();
            let mut cols = vec![p, mh, rh, th];
            let mut names: Vec<String> = ["P", "M_h", "R_h", "T_h"].iter().map(|s| s.to_string()).collect();
            for k in 0..KEPLER_NUISANCE {
                cols.push((0..n).map(|_| std_normal.sample(&mut rng)).collect());
                names.push(format!("z{}", k + 1));
            }
            let law = |j: usize| -> FeatureRef<S> { Arc::new(Feature::modification(Transform::CbrtAbs, product(&[0, 0, j]))) };
            let truths = vec![Truth { label: "(P^2 M_h)^(1/3)".into(), members: vec![law(1), law(2), law(3)] }];
            (cols, names, signal, truths)
        }
        Generator::Mass => {
            let r: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
            let rho: Vec<f64> = (0..n).map(|_| log_uniform(&mut rng, 0.1, 20.0)).collect();
            let signal = r.iter().zip(&rho).map(|(r, d)| r * r * r * d).collect();
            let mut cols = vec![r, rho];
            let mut names: Vec<String> = vec!["R_p".into(), "rho_p".into()];
            for k in 0..MASS_NUISANCE {
                cols.push((0..n).map(|_| std_normal.sample(&mut rng)).collect());
                names.push(format!("z{}", k + 1));
            }
            let truths = vec![Truth { label: "R*R*R*rho".into(), members: vec![product(&[0, 0, 0, 1])] }];
            (cols, names, signal, truths)
        }
        Generator::Logic => {
            let cols: Vec<Vec<f64>> =
                (0..LOGIC_P).map(|_| (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { 0.0 }).collect()).collect();
            let names = (1..=LOGIC_P).map(|j| format!("X{j}")).collect();
            let mut signal = vec![LOGIC_INTERCEPT; n];
            let mut truths = Vec::new();
            for (coef, idx) in LOGIC_TERMS {
                for (i, s) in signal.iter_mut().enumerate() {
                    *s += coef * idx.iter().map(|&j| cols[j - 1][i]).product::<f64>();
                }
                let zero_based: Vec<usize> = idx.iter().map(|j| j - 1).collect();
                let label = idx.iter().map(|j| format!("X{j}")).collect::<String>();
                truths.push(Truth { label, members: vec![product(&zero_based)] });
            }
            (cols, names, signal, truths)
        }
    };
    let scale = if spec.relative_noise {
        let m = signal.iter().sum::<f64>() / n as f64;
        (signal.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n as f64 - 1.0)).sqrt()
    } else {
        1.0
    };
    let sd = spec.noise_sd * scale;
    let y: Vec<S> = signal.iter().map(|s| S::lit(s + sd * std_normal.sample(&mut rng))).collect();
    let cols: Vec<Vec<S>> = cols.into_iter().map(|c| c.into_iter().map(S::lit).collect()).collect();
    let mut dataset = Dataset::new(Matrix::from_columns(&cols)?, y, names)?;
    dataset.family_hint = Family::Gaussian;
    Ok(Synthetic { dataset, truths })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_level_factor_gives_two_dummies() {
        let f = write("sex,len,rings\nM,0.5,7\nF,0.4,9\nI,0.3,4\nM,0.6,10\n");
        let ds: Dataset<f64> = load_csv(f.path(), Some("rings"), &["sex".into()]).unwrap();
        assert_eq!(ds.column_names, vec!["sex=I", "sex=M", "len"]);
        assert_eq!(ds.x.col(0), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(ds.x.col(1), &[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(ds.y, vec![7.0, 9.0, 4.0, 10.0]);
    }

    #[test]
    fn numeric_passthrough_and_missing_rows() {
        let mut s = String::from("a,b,y\n");
        for i in 0..100 {
            if i == 42 {
                s.push_str("1.0,,3\n");
            } else {
                s.push_str(&format!("{i},{},{}\n", i * 2, i % 2));
            }
        }
        let f = write(&s);
        let ds: Dataset<f64> = load_csv(f.path(), Some("y"), &[]).unwrap();
        assert_eq!((ds.n(), ds.dropped_rows), (99, 1));
        assert_eq!(ds.column_names, vec!["a", "b"]);
        assert_eq!(ds.family_hint, Family::Bernoulli);
    }

    #[test]
    fn load_errors() {
        let f = write("a,y\n1,2\nzz,3\n");
        match load_csv::<f64>(f.path(), Some("y"), &[]) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (2, "a")),
            other => panic!("{other:?}"),
        }
        assert_eq!(load_csv::<f64>(f.path(), Some("nope"), &[]).unwrap_err(), Error::UnknownColumn("nope".into()));
        let f = write("a,y\n1,\n,3\n");
        assert_eq!(load_csv::<f64>(f.path(), Some("y"), &[]).unwrap_err(), Error::EmptyAfterFiltering);
    }

    #[test]
    fn binary_categorical_response() {
        let f = write("d,v\nM,1\nB,2\nB,3\n");
        let ds: Dataset<f64> = load_csv(f.path(), Some("d"), &["d".into()]).unwrap();
        assert_eq!(ds.y, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn align_fills_unseen_levels() {
        let f = write("c,v,y\nA,1,0\nB,2,1\n");
        let ds: Dataset<f64> = load_csv(f.path(), Some("y"), &["c".into()]).unwrap();
        let names = vec!["v".to_string(), "c=C".to_string(), "c=B".to_string()];
        let x = ds.align_to(&names).unwrap();
        assert_eq!(x.col(0), &[1.0, 2.0]);
        assert_eq!(x.col(1), &[0.0, 0.0]);
        assert_eq!(x.col(2), &[0.0, 1.0]);
        assert_eq!(ds.align_to(&["w".to_string()]).unwrap_err(), Error::UnknownColumn("w".into()));
    }

    #[test]
    fn split_is_a_partition() {
        let x = Matrix::from_columns(&[(0..20).map(f64::from).collect::<Vec<_>>()]).unwrap();
        let ds = Dataset::new(x, (0..20).map(f64::from).collect(), vec!["a".into()]).unwrap();
        let (tr, te) = ds.train_test_split(0.25, 3).unwrap();
        assert_eq!((tr.n(), te.n()), (15, 5));
        let mut all: Vec<f64> = tr.y.iter().chain(&te.y).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, ds.y);
        assert_eq!(ds.train_test_split(0.25, 3).unwrap().1.y, te.y);
    }

    #[test]
    fn logic_generator_matches_the_display() {
        let spec = SyntheticSpec { generator: Generator::Logic, n: 1000, noise_sd: 0.0, relative_noise: false, seed: 1 };
        let s: Synthetic<f64> = gen_synthetic(&spec).unwrap();
        let x = &s.dataset.x;
        assert_eq!(x.cols(), 50);
        for i in 0..1000 {
            let v = |j: usize| x[(i, j - 1)];
            let ey = 1.0 + 1.5 * v(7) + 1.5 * v(8) + 6.6 * v(18) * v(21) + 3.5 * v(2) * v(9)
                + 9.0 * v(12) * v(20) * v(37) + 7.0 * v(1) * v(3) * v(27) + 7.0 * v(4) * v(10) * v(17) * v(30)
                + 7.0 * v(11) * v(13) * v(19) * v(50);
            assert!((s.dataset.y[i] - ey).abs() < 1e-12);
        }
        let labels: Vec<String> = s.truths.iter().map(|t| t.label.clone()).collect();
        assert_eq!(labels[..4], ["X7", "X8", "X18X21", "X2X9"]);
        assert_eq!(s.truths[3].members[0].key(), "(x1*x8)");
        let noisy: Synthetic<f64> = gen_synthetic(&SyntheticSpec { noise_sd: 1.0, ..spec }).unwrap();
        let resid: Vec<f64> = noisy.dataset.y.iter().zip(&s.dataset.y).map(|(a, b)| a - b).collect();
        let sd = (resid.iter().map(|r| r * r).sum::<f64>() / 1000.0).sqrt();
        assert!((sd - 1.0).abs() < 0.1, "{sd}");
    }

    #[test]
    fn kepler_noiseless_equals_law_and_forms_correlate() {
        let spec = SyntheticSpec { generator: Generator::Kepler, n: 223, noise_sd: 0.0, relative_noise: true, seed: 5 };
        let s: Synthetic<f64> = gen_synthetic(&spec).unwrap();
        let members = &s.truths[0].members;
        let law = members[0].evaluate(&s.dataset.x).unwrap();
        assert_eq!(law, s.dataset.y);
        for alt in &members[1..] {
            let c = alt.evaluate(&s.dataset.x).unwrap();
            assert!(crate::predict::pearson(&law, &c).unwrap() > 0.99);
        }
        assert_eq!(members[0].key(), "cbrt_abs(((x0*x0)*x1))");
    }

    #[test]
    fn mass_truth_key() {
        let spec = SyntheticSpec { generator: Generator::Mass, n: 100, noise_sd: 0.01, relative_noise: true, seed: 2 };
        let s: Synthetic<f64> = gen_synthetic(&spec).unwrap();
        let r = input::<f64>(0);
        let rho = input::<f64>(1);
        let rr = Arc::new(Feature::multiplication(r.clone(), r.clone()));
        let rrr = Arc::new(Feature::multiplication(rr, r));
        let want = Feature::multiplication(rrr, rho);
        assert_eq!(s.truths[0].members[0].key(), want.key());
    }

    #[test]
    fn generators_are_seed_deterministic() {
        for generator in [Generator::Kepler, Generator::Mass, Generator::Logic] {
            let spec = SyntheticSpec { generator, n: 60, noise_sd: 0.5, relative_noise: false, seed: 11 };
            let a: Synthetic<f64> = gen_synthetic(&spec).unwrap();
            let b: Synthetic<f64> = gen_synthetic(&spec).unwrap();
            assert_eq!(a.dataset.y, b.dataset.y);
            assert_eq!(a.dataset.x, b.dataset.x);
        }
        let bad = SyntheticSpec { generator: Generator::Logic, n: 49, noise_sd: 1.0, relative_noise: false, seed: 0 };
        assert!(gen_synthetic::<f64>(&bad).is_err());
    }
}
