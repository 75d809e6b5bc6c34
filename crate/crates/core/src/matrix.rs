//! Dense matrix type, the matrix norms used throughout the crate, and the
//! factorizations (SVD, symmetric eigendecomposition) the proximal operators
//! are built on.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative reconstruction tolerance accepted from a factorization.
pub const FACTOR_TOL: f64 = 1e-10;
/// Absolute fallback for the reconstruction check on (near-)zero matrices.
pub const FACTOR_TOL_ABS: f64 = 1e-12;
/// Singular values below `RANK_CUTOFF * sigma_max` count as zero in rank decisions.
pub const RANK_CUTOFFF_REL: f64 = 1e-12;

/// Dense real matrix. Entries are always finite: constructors reject NaN and
/// infinities, so downstream code never has to re-check.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    inner: DMatrix<f64>,
}

impl Mat {
    /// Builds a matrix from entries listed row by row.
    pub fn from_row_major(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        if entries.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                entries.len()
            )));
        }
        let inner = DMatrix::from_row_slice(rows, cols, entries);
        Self::from_inner(inner)
    }

    /// Builds a matrix by evaluating `f(i, j)` at every position.
    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("matrix dimensions must be positive"));
        }
        Self::from_inner(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            inner: DMatrix::zeros(rows.max(1), cols.max(1)),
        }
    }

    pub fn identity(n: usize) -> Self {
        Mat {
            inner: DMatrix::identity(n.max(1), n.max(1)),
        }
    }

    pub fn from_diag(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("diagonal must be nonempty"));
        }
        Self::from_inner(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    /// Wraps a raw nalgebra matrix, enforcing the finiteness invariant.
    pub(crate) fn from_inner(inner: DMatrix<f64>) -> Result<Self> {
        for j in 0..inner.ncols() {
            for i in 0..inner.nrows() {
                let v = inner[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        Ok(Mat { inner })
    }

    /// Like `from_inner` but panics; for internal arithmetic whose operands are
    /// already validated, where a non-finite result is a bug, not bad input.
    pub(crate) fn from_inner_unchecked(inner: DMatrix<f64>) -> Self {
        debug_assert!(inner.iter().all(|v| v.is_finite()));
        Mat { inner }
    }

    pub(crate) fn inner(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn nrows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.inner.nrows(), self.inner.ncols())
    }

    pub fn is_square(&self) -> bool {
        self.inner.is_square()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.inner[(row, col)]
    }

    /// Entries in row-major order, matching `from_row_major`.
    pub fn to_row_major(&self) -> Vec<f64> {
        let (r, c) = self.shape();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn transpose(&self) -> Mat {
        Mat {
            inner: self.inner.transpose(),
        }
    }

    /// Entrywise map. Returns an error if `f` produces a non-finite value.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Mat> {
        Self::from_inner(self.inner.map(f))
    }

    pub fn scale(&self, c: f64) -> Mat {
        Mat::from_inner_unchecked(&self.inner * c)
    }

    /// The symmetric part `(M + M^T) / 2`.
    pub fn symmetric_part(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.nrows(),
                cols: self.ncols(),
            });
        }
        let t = self.inner.transpose();
        Ok(Mat::from_inner_unchecked((&self.inner + t) * 0.5))
    }

    /// Exact (bitwise) symmetry test; used to pick cheaper spectral paths.
    pub fn is_symmetric_exact(&self) -> bool {
        if !self.is_square() {
            return false;
        }
        let n = self.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                if self.inner[(i, j)] != self.inner[(j, i)] {
                    return false;
                }
            }
        }
        true
    }

    /// Frobenius inner product `<A, B> = sum_ij A_ij B_ij`.
    pub fn frob_inner(&self, other: &Mat) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.inner.dot(&other.inner))
    }

    pub(crate) fn check_same_shape(&self, other: &Mat) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                expected_rows: self.nrows(),
                expected_cols: self.ncols(),
                rows: other.nrows(),
                cols: other.ncols(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_square(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare {
                rows: self.nrows(),
                cols: self.ncols(),
            });
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.inner[idx]
    }
}

impl std::ops::Add for &Mat {
    type Output = Mat;

    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "matrix addition shape mismatch");
        Mat::from_inner_unchecked(&self.inner + &rhs.inner)
    }
}

impl std::ops::Sub for &Mat {
    type Output = Mat;

    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!(self.shape(), rhs.shape(), "matrix subtraction shape mismatch");
        Mat::from_inner_unchecked(&self.inner - &rhs.inner)
    }
}

impl std::ops::Mul for &Mat {
    type Output = Mat;

    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.ncols(), rhs.nrows(), "matrix product shape mismatch");
        Mat::from_inner_unchecked(&self.inner * &rhs.inner)
    }
}

impl std::ops::Mul<f64> for &Mat {
    type Output = Mat;

    fn mul(self, c: f64) -> Mat {
        self.scale(c)
    }
}

/// Boolean matrix used as an entry mask (the observed edge set `E`,
/// evaluation cells, recovered supports).
#[derive(Clone, Debug, PartialEq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    on: Vec<bool>,
}

impl Mask {
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut on = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                on.push(f(i, j));
            }
        }
        Mask { rows, cols, on }
    }

    pub fn full(rows: usize, cols: usize) -> Self {
        Mask {
            rows,
            cols,
            on: vec![true; rows * cols],
        }
    }

    /// Interprets a 0/1 matrix as a mask; any other entry is rejected.
    pub fn from_binary_mat(m: &Mat) -> Result<Self> {
        let mut on = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m.get(i, j);
                if v == 0.0 {
                    on.push(false);
                } else if v == 1.0 {
                    on.push(true);
                } else {
                    return Err(Error::invalid(format!(
                        "mask entry at ({i}, {j}) is {v}, expected 0 or 1"
                    )));
                }
            }
        }
        Ok(Mask {
            rows: m.nrows(),
            cols: m.ncols(),
            on,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_on(&self, row: usize, col: usize) -> bool {
        self.on[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.on[row * self.cols + col] = value;
    }

    pub fn count_on(&self) -> usize {
        self.on.iter().filter(|&&b| b).count()
    }

    pub fn positions(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let cols = self.cols;
        self.on
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k / cols, k % cols))
    }
}

/// The matrix functionals from the problem formulation: four norms, the
/// entrywise max, and the exact sparsity index.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NormKind {
    /// Sum of absolute entries.
    L1,
    /// Sum of singular values (nuclear norm).
    Trace,
    Frobenius,
    /// Largest singular value.
    Operator,
    /// Largest absolute entry.
    EntrywiseMax,
    /// Number of exactly nonzero entries.
    SparsityIndex,
}

/// Evaluates the selected functional of `m`. `SparsityIndex` returns an
/// integer-valued count.
pub fn norm(m: &Mat, kind: NormKind) -> Result<f64> {
    Ok(match kind {
        NormKind::L1 => m.inner().iter().map(|v| v.abs()).sum(),
        NormKind::Trace => singular_values(m)?.iter().sum(),
        NormKind::Frobenius => m.inner().norm(),
        NormKind::Operator => singular_values(m)?.first().copied().unwrap_or(0.0),
        NormKind::EntrywiseMax => m.inner().iter().fold(0.0_f64, |acc, v| acc.max(v.abs())),
        NormKind::SparsityIndex => m.inner().iter().filter(|v| **v != 0.0).count() as f64,
    })
}

/// Singular values of `m`, sorted nonincreasing.
///
/// Exact symmetric inputs go through the symmetric eigendecomposition
/// (singular values are the absolute eigenvalues), which is substantially
/// cheaper than a full SVD.
pub fn singular_values(m: &Mat) -> Result<Vec<f64>> {
    if m.is_symmetric_exact() {
        let (eigenvalues, _) = sym_eig(m)?;
        let mut sv: Vec<f64> = eigenvalues.iter().map(|l| l.abs()).collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        return Ok(sv);
    }
    let sv = m
        .inner()
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::FactorizationFailure("singular values did not converge".into()))?
        .singular_values;
    let mut sv: Vec<f64> = sv.iter().copied().collect();
    if sv.iter().any(|v| !v.is_finite()) {
        return Err(Error::FactorizationFailure(
            "singular values are not finite".into(),
        ));
    }
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(sv)
}

/// Number of singular values above the `1e-12 * sigma_max` cutoff.
pub fn numerical_rank(m: &Mat) -> Result<usize> {
    let sv = singular_values(m)?;
    let sigma_max = sv.first().copied().unwrap_or(0.0);
    if sigma_max == 0.0 {
        return Ok(0);
    }
    Ok(sv.iter().filter(|s| **s > RANK_CUTOFFF_REL * sigma_max).count())
}

/// Thin singular value decomposition `M = U diag(sigma) V^T`.
#[derive(Clone, Debug)]
pub struct SvdFactors {
    /// n x k, orthonormal columns.
    pub left_vectors: Mat,
    /// Length k, sorted nonincreasing, all nonnegative.
    pub singular_values: Vec<f64>,
    /// m x k, orthonormal columns.
    pub right_vectors: Mat,
}

impl SvdFactors {
    /// Rebuilds `U diag(sigma) V^T`.
    pub fn reconstruct(&self) -> Mat {
        let u = self.left_vectors.inner();
        let vt = self.right_vectors.inner().transpose();
        let d = DMatrix::from_diagonal(&DVector::from_row_slice(&self.singular_values));
        Mat::from_inner_unchecked(u * d * vt)
    }
}

/// Thin SVD with singular values sorted nonincreasing.
///
/// Fails with `FactorizationFailure` if the underlying iteration does not
/// converge or the reconstruction misses `M` by more than
/// `1e-10 * ||M||_F` (absolute `1e-12` for the zero matrix).
pub fn svd(m: &Mat) -> Result<SvdFactors> {
    let svd = m
        .inner()
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::FactorizationFailure("svd did not converge".into()))?;
    let u = svd.u.expect("svd computed with u");
    let vt = svd.v_t.expect("svd computed with v_t");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();

    // nalgebra sorts, but the contract here is explicit: enforce the order.
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].partial_cmp(&sigma[a]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |i, j| u[(i, order[j])]);
    let v_sorted = DMatrix::from_fn(vt.ncols(), order.len(), |i, j| vt[(order[j], i)]);

    let factors = SvdFactors {
        left_vectors: Mat::from_inner(u_sorted)
            .map_err(|_| Error::FactorizationFailure("svd produced non-finite vectors".into()))?,
        singular_values: sorted,
        right_vectors: Mat::from_inner(v_sorted)
            .map_err(|_| Error::FactorizationFailure("svd produced non-finite vectors".into()))?,
    };

    let residual = (&factors.reconstruct() - m).inner().norm();
    let scale = m.inner().norm();
    let tol = if scale == 0.0 {
        FACTOR_TOL_ABS
    } else {
        FACTOR_TOL * scale
    };
    if residual > tol {
        return Err(Error::FactorizationFailure(format!(
            "svd reconstruction residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )));
    }
    Ok(factors)
}

/// Symmetric eigendecomposition of `(M + M^T) / 2`, eigenvalues sorted
/// nonincreasing, `Q` orthonormal.
///
/// The input is symmetrized first so that numerically asymmetric iterates
/// produced by solver arithmetic are accepted.
pub fn sym_eig(m: &Mat) -> Result<(Vec<f64>, Mat)> {
    m.check_square()?;
    let sym = m.symmetric_part()?;
    let eig = nalgebra::SymmetricEigen::try_new(sym.inner().clone(), f64::EPSILON, 0)
        .ok_or_else(|| {
            Error::FactorizationFailure("symmetric eigendecomposition did not converge".into())
        })?;

    let lambda: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..lambda.len()).collect();
    order.sort_by(|&a, &b| lambda[b].partial_cmp(&lambda[a]).unwrap());
    let sorted: Vec<f64> = order.iter().map(|&i| lambda[i]).collect();
    let q = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |i, j| {
        eig.eigenvectors[(i, order[j])]
    });

    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(Error::FactorizationFailure(
            "eigenvalues are not finite".into(),
        ));
    }
    let q = Mat::from_inner(q)
        .map_err(|_| Error::FactorizationFailure("eigenvectors are not finite".into()))?;

    let d = DMatrix::from_diagonal(&DVector::from_row_slice(&sorted));
    let rebuilt = q.inner() * d * q.inner().transpose();
    let residual = (&rebuilt - sym.inner()).norm();
    let scale = sym.inner().norm();
    let tol = if scale == 0.0 {
        FACTOR_TOL_ABS
    } else {
        FACTOR_TOL * scale
    };
    if residual > tol {
        return Err(Error::FactorizationFailure(format!(
            "eigendecomposition residual {residual:.3e} exceeds tolerance {tol:.3e}"
        )));
    }
    Ok((sorted, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mat(rows: usize, cols: usize, entries: &[f64]) -> Mat {
        Mat::from_row_major(rows, cols, entries).unwrap()
    }

    #[test]
    fn rejects_non_finite_entries() {
        let err = Mat::from_row_major(1, 2, &[1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
        let err = Mat::from_row_major(2, 1, &[f64::INFINITY, 0.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn l1_norm_sums_absolute_values() {
        let m = mat(2, 2, &[1.0, -2.0, 0.0, 3.0]);
        assert_eq!(norm(&m, NormKind::L1).unwrap(), 6.0);
    }

    #[test]
    fn trace_norm_of_nonnegative_diagonal() {
        let m = Mat::from_diag(&[3.0, 4.0]).unwrap();
        assert_relative_eq!(norm(&m, NormKind::Trace).unwrap(), 7.0, max_relative = 1e-12);
    }

    #[test]
    fn operator_norm_of_identity_is_one() {
        let m = Mat::identity(5);
        assert_relative_eq!(norm(&m, NormKind::Operator).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn frobenius_three_four_five() {
        let m = mat(1, 2, &[3.0, 4.0]);
        assert_relative_eq!(norm(&m, NormKind::Frobenius).unwrap(), 5.0);
    }

    #[test]
    fn entrywise_max_and_sparsity() {
        let m = mat(2, 2, &[0.0, -7.5, 2.0, 0.0]);
        assert_eq!(norm(&m, NormKind::EntrywiseMax).unwrap(), 7.5);
        assert_eq!(norm(&m, NormKind::SparsityIndex).unwrap(), 2.0);
    }

    #[test]
    fn svd_identity_singular_values() {
        let f = svd(&Mat::identity(3)).unwrap();
        for s in &f.singular_values {
            assert_relative_eq!(*s, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn svd_rank_one_outer_product() {
        // u, v unit vectors -> singular values (1, 0, 0)
        let u = [2.0 / 3.0, 2.0 / 3.0, 1.0 / 3.0];
        let v = [0.6, 0.8, 0.0];
        let m = Mat::from_fn(3, 3, |i, j| u[i] * v[j]).unwrap();
        let f = svd(&m).unwrap();
        assert_relative_eq!(f.singular_values[0], 1.0, max_relative = 1e-10);
        assert!(f.singular_values[1].abs() < 1e-10);
        assert!(f.singular_values[2].abs() < 1e-10);
    }

    #[test]
    fn svd_reconstructs_rectangular_input() {
        let m = mat(
            5,
            4,
            &[
                0.3, -1.2, 0.8, 2.1, 1.0, 0.4, -0.6, 0.9, -2.2, 1.5, 0.1, -0.3, 0.7, 0.7, -1.8,
                0.2, 1.1, -0.5, 0.6, -1.4,
            ],
        );
        let f = svd(&m).unwrap();
        let residual = norm(&(&f.reconstruct() - &m), NormKind::Frobenius).unwrap();
        assert!(residual <= FACTOR_TOL * norm(&m, NormKind::Frobenius).unwrap());
        // orthonormal columns
        let utu = &f.left_vectors.transpose() * &f.left_vectors;
        let vtv = &f.right_vectors.transpose() * &f.right_vectors;
        let id = Mat::identity(4);
        assert!(norm(&(&utu - &id), NormKind::Frobenius).unwrap() < 1e-10);
        assert!(norm(&(&vtv - &id), NormKind::Frobenius).unwrap() < 1e-10);
        // nonincreasing
        for w in f.singular_values.windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn sym_eig_diagonal() {
        let (lambda, _) = sym_eig(&Mat::from_diag(&[2.0, -3.0]).unwrap()).unwrap();
        assert_relative_eq!(lambda[0], 2.0, max_relative = 1e-12);
        assert_relative_eq!(lambda[1], -3.0, max_relative = 1e-12);
    }

    #[test]
    fn sym_eig_identity() {
        let (lambda, _) = sym_eig(&Mat::identity(4)).unwrap();
        for l in lambda {
            assert_relative_eq!(l, 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn sym_eig_rejects_rectangular() {
        let err = sym_eig(&Mat::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Error::NotSquare { .. }));
    }

    #[test]
    fn sym_eig_reconstructs_random_symmetric() {
        let base = mat(
            6,
            6,
            &[
                0.31, -1.2, 0.8, 2.1, 1.0, 0.4, -0.6, 0.9, -2.2, 1.5, 0.1, -0.3, 0.7, 0.72, -1.8,
                0.2, 1.1, -0.5, 0.6, -1.4, 0.05, 0.9, -0.7, 1.3, 0.45, -0.9, 1.7, -0.2, 0.6, 0.8,
                -1.1, 0.3, 0.25, -0.65, 1.9, -0.4,
            ],
        );
        let s = base.symmetric_part().unwrap();
        let (lambda, q) = sym_eig(&s).unwrap();
        let rebuilt = &(&q * &Mat::from_diag(&lambda).unwrap()) * &q.transpose();
        let residual = norm(&(&rebuilt - &s), NormKind::Frobenius).unwrap();
        assert!(residual <= FACTOR_TOL * norm(&s, NormKind::Frobenius).unwrap());
    }

    #[test]
    fn numerical_rank_uses_relative_cutoff() {
        let m = Mat::from_diag(&[1.0, 1e-6, 1e-13]).unwrap();
        assert_eq!(numerical_rank(&m).unwrap(), 2);
        assert_eq!(numerical_rank(&Mat::zeros(3, 3)).unwrap(), 0);
    }

    #[test]
    fn mask_round_trip_and_count() {
        let m = mat(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let mask = Mask::from_binary_mat(&m).unwrap();
        assert_eq!(mask.count_on(), 2);
        assert!(mask.is_on(0, 0) && mask.is_on(1, 1));
        assert!(!mask.is_on(0, 1));
        let bad = mat(1, 1, &[0.5]);
        assert!(Mask::from_binary_mat(&bad).is_err());
    }

    #[test]
    fn row_major_round_trip() {
        let entries = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let m = mat(2, 3, &entries);
        assert_eq!(m.to_row_major(), entries.to_vec());
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.get(1, 2), 6.0);
    }
}
