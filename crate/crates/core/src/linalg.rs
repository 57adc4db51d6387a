//! Small dense linear algebra: column-major matrices, Householder least squares
//! and Cholesky factorizations. Designs here have at most a few dozen columns.

use crate::error::{Error, Result};
use crate::Scalar;

/// Dense column-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    /// Builds a matrix from equally long columns.
    pub fn from_columns<C: AsRef<[S]>>(columns: &[C]) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(Error::Dimension(format!(
                    "column {j} has {} rows, expected {rows}",
                    c.len()
                )));
            }
            data.extend_from_slice(c);
        }
        Ok(Self { rows, cols: columns.len(), data })
    }

    /// Builds a matrix from row slices.
    pub fn from_rows<R: AsRef<[S]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, |r| r.as_ref().len());
        let mut m = Self::zeros(n, p);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::Dimension(format!("row {i} has {} entries, expected {p}", r.len())));
            }
            for (j, &v) in r.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Ok(m)
    }

    /// Design matrix with a leading column of ones.
    pub fn with_intercept<C: AsRef<[S]>>(n: usize, columns: &[C]) -> Result<Self> {
        let mut data = Vec::with_capacity(n * (columns.len() + 1));
        data.extend(std::iter::repeat_n(S::one(), n));
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != n {
                return Err(Error::Dimension(format!("column {j} has {} rows, expected {n}", c.len())));
            }
            data.extend_from_slice(c);
        }
        Ok(Self { rows: n, cols: columns.len() + 1, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[S] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [S] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<S> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> impl Iterator<Item = &[S]> {
        (0..self.cols).map(move |j| self.col(j))
    }

    /// `X * v`.
    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        debug_assert_eq!(v.len(), self.cols);
        let mut out = vec![S::zero(); self.rows];
        for (j, &vj) in v.iter().enumerate() {
            if vj == S::zero() {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(self.col(j)) {
                *o += x * vj;
            }
        }
        out
    }

    /// `X^T v`.
    pub fn tr_mul_vec(&self, v: &[S]) -> Vec<S> {
        (0..self.cols).map(|j| dot(self.col(j), v)).collect()
    }

    /// `X^T diag(w) X`, or `X^T X` when `w` is `None`.
    pub fn weighted_gram(&self, w: Option<&[S]>) -> Matrix<S> {
        let p = self.cols;
        let mut g = Matrix::zeros(p, p);
        for a in 0..p {
            for b in a..p {
                let ca = self.col(a);
                let cb = self.col(b);
                let v = match w {
                    Some(w) => ca.iter().zip(cb).zip(w).map(|((&x, &y), &wi)| x * y * wi).sum(),
                    None => dot(ca, cb),
                };
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        g
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

impl<S> std::ops::Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[j * self.rows + i]
    }
}

impl<S> std::ops::IndexMut<(usize, usize)> for Matrix<S> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[j * self.rows + i]
    }
}

#[inline]
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

#[inline]
pub fn norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

/// Orthonormal basis grown one column at a time (Gram-Schmidt with one round of
/// reorthogonalization). Used to measure how far a column is from a span.
#[derive(Debug, Clone)]
pub struct OrthoBasis<S> {
    n: usize,
    basis: Vec<Vec<S>>,
}

impl<S: Scalar> OrthoBasis<S> {
    pub fn new(n: usize) -> Self {
        Self { n, basis: Vec::new() }
    }

    /// Basis containing the constant column.
    pub fn with_intercept(n: usize) -> Self {
        let mut b = Self::new(n);
        b.push(&vec![S::one(); n]);
        b
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    fn orthogonalize(&self, col: &[S]) -> Vec<S> {
        let mut r = col.to_vec();
        for _ in 0..2 {
            for q in &self.basis {
                let c = dot(q, &r);
                for (ri, &qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
        }
        r
    }

    /// `|col - P col| / |col|` where `P` projects onto the span; 0 for a zero column.
    pub fn relative_residual(&self, col: &[S]) -> S {
        debug_assert_eq!(col.len(), self.n);
        let total = norm(col);
        if !(total > S::zero()) {
            return S::zero();
        }
        norm(&self.orthogonalize(col)) / total
    }

    /// Adds `col` unless it is numerically inside the span; returns whether it was added.
    pub fn push(&mut self, col: &[S]) -> bool {
        let total = norm(col);
        if !(total > S::zero()) || !total.is_finite() {
            return false;
        }
        let r = self.orthogonalize(col);
        let rn = norm(&r);
        if rn <= total * S::rank_tol() {
            return false;
        }
        self.basis.push(r.into_iter().map(|v| v / rn).collect());
        true
    }
}

/// Solution of a least-squares problem.
#[derive(Debug, Clone)]
pub struct LeastSquares<S> {
    pub beta: Vec<S>,
    /// `y - X beta`
    pub residuals: Vec<S>,
    pub rss: S,
}

/// Minimizes `|y - X b|^2 + ridge * |b|^2` by Householder QR on a column-scaled
/// copy of `X`. Columns whose scaled pivot falls below [`Scalar::rank_tol`] make the
/// problem singular.
pub fn least_squares<S: Scalar>(x: &Matrix<S>, y: &[S], ridge: Option<S>) -> Result<LeastSquares<S>> {
    let n = x.rows();
    let p = x.cols();
    if y.len() != n {
        return Err(Error::Dimension(format!("response has {} rows, design {n}", y.len())));
    }
    let extra = if ridge.is_some() { p } else { 0 };
    let m = n + extra;
    if m < p {
        return Err(Error::SingularDesign { column: m });
    }
    let mut scale = Vec::with_capacity(p);
    let mut a = Matrix::zeros(m, p);
    for j in 0..p {
        let s = norm(x.col(j));
        if !(s > S::zero()) || !s.is_finite() {
            return Err(Error::SingularDesign { column: j });
        }
        scale.push(s);
        let dst = a.col_mut(j);
        for (d, &v) in dst.iter_mut().zip(x.col(j)) {
            *d = v / s;
        }
        if let Some(l) = ridge {
            dst[n + j] = l.sqrt() / s;
        }
    }
    let mut qty: Vec<S> = y.to_vec();
    qty.resize(m, S::zero());

    let tol = S::rank_tol();
    let mut diag = vec![S::zero(); p];
    for k in 0..p {
        let col = &a.col(k)[k..];
        let nrm = norm(col);
        if nrm <= tol {
            return Err(Error::SingularDesign { column: k });
        }
        let akk = a[(k, k)];
        let alpha = if akk > S::zero() { -nrm } else { nrm };
        // v = a[k.., k] - alpha e_1, stored in place
        a[(k, k)] = akk - alpha;
        let vnorm2 = dot(&a.col(k)[k..], &a.col(k)[k..]);
        diag[k] = alpha;
        if vnorm2 == S::zero() {
            continue;
        }
        let v: Vec<S> = a.col(k)[k..].to_vec();
        for j in (k + 1)..p {
            let cj = &mut a.col_mut(j)[k..];
            let f = S::lit(2.0) * dot(&v, cj) / vnorm2;
            for (c, &vi) in cj.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let f = S::lit(2.0) * dot(&v, &qty[k..]) / vnorm2;
        for (q, &vi) in qty[k..].iter_mut().zip(&v) {
            *q -= f * vi;
        }
    }
    // back substitution on R (upper triangle of a, diagonal in `diag`)
    let mut beta = vec![S::zero(); p];
    for k in (0..p).rev() {
        let mut acc = qty[k];
        for j in (k + 1)..p {
            acc -= a[(k, j)] * beta[j];
        }
        beta[k] = acc / diag[k];
    }
    for (b, s) in beta.iter_mut().zip(&scale) {
        *b /= *s;
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::SingularDesign { column: p });
    }
    let fitted = x.mul_vec(&beta);
    let residuals: Vec<S> = y.iter().zip(&fitted).map(|(&yi, &fi)| yi - fi).collect();
    let rss = dot(&residuals, &residuals);
    Ok(LeastSquares { beta, residuals, rss })
}

/// Lower Cholesky factor of a symmetric positive-definite matrix.
pub fn cholesky<S: Scalar>(a: &Matrix<S>) -> Option<Matrix<S>> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > S::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Some(l)
}

/// Solves `L L^T x = b` given the lower factor.
pub fn cholesky_solve<S: Scalar>(l: &Matrix<S>, b: &[S]) -> Vec<S> {
    let n = l.rows();
    let mut z = b.to_vec();
    for i in 0..n {
        let mut s = z[i];
        for k in 0..i {
            s -= l[(i, k)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * z[k];
        }
        z[i] = s / l[(i, i)];
    }
    z
}

/// `log det A` from the lower Cholesky factor of `A`.
pub fn cholesky_log_det<S: Scalar>(l: &Matrix<S>) -> S {
    (0..l.rows()).map(|i| l[(i, i)].ln()).sum::<S>() * S::lit(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ortho_basis_residuals() {
        let x1 = [0.3, -1.2, 2.2, 0.7, 1.9];
        let mut b = OrthoBasis::<f64>::with_intercept(5);
        assert!(b.push(&x1));
        let affine: Vec<f64> = x1.iter().map(|v| 2.0 * v + 3.0).collect();
        assert!(b.relative_residual(&affine) < 1e-14);
        assert!(!b.push(&affine));
        let sq: Vec<f64> = x1.iter().map(|v| v * v).collect();
        assert!(b.relative_residual(&sq) > 1e-3);
        assert_eq!(b.len(), 2);
    }

    fn normal_equations(x: &Matrix<f64>, y: &[f64]) -> Vec<f64> {
        let g = x.weighted_gram(None);
        let l = cholesky(&g).unwrap();
        cholesky_solve(&l, &x.tr_mul_vec(y))
    }

    #[test]
    fn least_squares_matches_normal_equations() {
        let x1 = [0.3, -1.2, 2.2, 0.7, 1.9, -0.4, 0.05];
        let x2 = [1.0, 0.5, -0.3, 2.2, -1.1, 0.9, 0.4];
        let y = [1.2, -0.7, 3.3, 2.0, 1.1, 0.2, 0.9];
        let x = Matrix::with_intercept(7, &[&x1[..], &x2[..]]).unwrap();
        let ls = least_squares(&x, &y, None).unwrap();
        let ne = normal_equations(&x, &y);
        for (a, b) in ls.beta.iter().zip(&ne) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        // residuals orthogonal to the design
        for g in x.tr_mul_vec(&ls.residuals) {
            assert!(g.abs() < 1e-10);
        }
    }

    #[test]
    fn exact_fit_has_zero_rss() {
        let x1 = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x1.iter().map(|v| 2.0 * v).collect();
        let x = Matrix::with_intercept(4, &[&x1[..]]).unwrap();
        let ls = least_squares(&x, &y, None).unwrap();
        assert!(ls.beta[0].abs() < 1e-12);
        assert!((ls.beta[1] - 2.0).abs() < 1e-12);
        assert!(ls.rss < 1e-20);
    }

    #[test]
    fn collinear_design_is_singular() {
        let x1 = [1.0, 2.0, 3.0, 4.0, 5.0];
        let x2: Vec<f64> = x1.iter().map(|v| 3.0 * v + 1.0).collect();
        let x = Matrix::with_intercept(5, &[&x1[..], &x2[..]]).unwrap();
        let err = least_squares(&x, &[1.0, 0.0, 2.0, 1.0, 3.0], None).unwrap_err();
        assert!(matches!(err, Error::SingularDesign { .. }));
        // ridge makes it solvable
        assert!(least_squares(&x, &[1.0, 0.0, 2.0, 1.0, 3.0], Some(1e-6)).is_ok());
    }

    #[test]
    fn cholesky_log_det_of_diagonal() {
        let mut a = Matrix::<f64>::identity(3);
        a[(0, 0)] = 2.0;
        a[(2, 2)] = 5.0;
        let l = cholesky(&a).unwrap();
        assert!((cholesky_log_det(&l) - 10f64.ln()).abs() < 1e-14);
        let x = cholesky_solve(&l, &[2.0, 1.0, 5.0]);
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }
}
