//! Dense complex matrices and the handful of decompositions the protocols need.
//!
//! [`ComplexMatrix`] is a thin newtype over `nalgebra::DMatrix<Complex64>` that
//! enforces finite entries and exposes row-major construction, which is the
//! layout used by state files and by the coefficient-matrix picture of a
//! bipartite state.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<Complex64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, rejecting wrong lengths and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix must be non-empty, got {rows}x{cols}"
            )));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        if let Some(k) = entries.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: k / cols, col: k % cols });
        }
        Ok(ComplexMatrix(DMatrix::from_row_slice(rows, cols, &entries)))
    }

    pub fn from_real(rows: usize, cols: usize, entries: &[f64]) -> Result<Self> {
        Self::new(rows, cols, entries.iter().map(|&x| re(x)).collect())
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        ComplexMatrix(DMatrix::from_fn(rows, cols, f))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        ComplexMatrix(DMatrix::identity(n, n))
    }

    /// Rectangular matrix with `diag` on the leading diagonal; extra entries
    /// of `diag` beyond `min(rows, cols)` are ignored.
    pub fn real_diag(rows: usize, cols: usize, diag: &[f64]) -> Self {
        let mut m = DMatrix::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(i, i)] = re(d);
        }
        ComplexMatrix(m)
    }

    /// Permutation matrix with a one at `(i, perm[i])`.
    pub fn permutation(perm: &[usize]) -> Self {
        let n = perm.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, &j) in perm.iter().enumerate() {
            m[(i, j)] = ONE;
        }
        ComplexMatrix(m)
    }

    pub fn inner(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.0[(r, c)]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.0[(r, c)] = v;
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for r in 0..self.rows() {
            for c in 0..self.cols() {
                out.push(self.0[(r, c)]);
            }
        }
        out
    }

    pub fn dagger(&self) -> Self {
        ComplexMatrix(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        ComplexMatrix(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        ComplexMatrix(self.0.map(|z| z.conj()))
    }

    pub fn scale(&self, s: f64) -> Self {
        ComplexMatrix(self.0.map(|z| z * s))
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows().min(self.cols())).map(|i| self.0[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.0.shape() != other.0.shape() {
            return f64::INFINITY;
        }
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max |M†M − I|`; infinite for non-square matrices.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.isometry_defect()
    }

    /// `max |M†M − I|` for a matrix whose columns should be orthonormal.
    pub fn isometry_defect(&self) -> f64 {
        let g = self.dagger().matmul(self);
        g.max_abs_diff(&ComplexMatrix::identity(self.cols()))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            self.cols(),
            rhs.rows(),
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows(),
            self.cols(),
            rhs.rows(),
            rhs.cols()
        );
        ComplexMatrix(&self.0 * &rhs.0)
    }

    pub fn try_matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols() != rhs.rows() {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows(),
                self.cols(),
                rhs.rows(),
                rhs.cols()
            )));
        }
        Ok(self.matmul(rhs))
    }

    pub fn kron(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0.kronecker(&rhs.0))
    }

    /// Copy of the `rows x cols` block starting at `(r0, c0)`.
    pub fn block(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> ComplexMatrix {
        ComplexMatrix(self.0.view((r0, c0), (rows, cols)).into_owned())
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &ComplexMatrix) {
        self.0.view_mut((r0, c0), (b.rows(), b.cols())).copy_from(&b.0);
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[ComplexMatrix]) -> Result<ComplexMatrix> {
        let cols = blocks.first().map(|b| b.cols()).ok_or_else(|| {
            Error::DimensionMismatch("cannot stack zero blocks".into())
        })?;
        if blocks.iter().any(|b| b.cols() != cols) {
            return Err(Error::DimensionMismatch("blocks differ in column count".into()));
        }
        let rows = blocks.iter().map(|b| b.rows()).sum();
        let mut out = ComplexMatrix::zeros(rows, cols);
        let mut r0 = 0;
        for b in blocks {
            out.set_block(r0, 0, b);
            r0 += b.rows();
        }
        Ok(out)
    }

    /// Eigen-decomposition of a Hermitian matrix, eigenvalues descending.
    pub fn hermitian_eigen(&self) -> Result<(Vec<f64>, ComplexMatrix)> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch("eigensolve needs a square matrix".into()));
        }
        let n = self.rows();
        // Symmetrize so round-off in the input does not leak into the solver.
        let h = (&self.0 + self.0.adjoint()) * re(0.5);
        let eig = nalgebra::SymmetricEigen::try_new(h, f64::EPSILON, 10_000).ok_or_else(|| {
            Error::NumericalFailure("Hermitian eigensolver did not converge".into())
        })?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
        Ok((values, ComplexMatrix(vectors)))
    }

    /// Eigenvalues of a Hermitian matrix, descending.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        self.hermitian_eigen().map(|(v, _)| v)
    }

    /// Principal square root of a positive-semidefinite Hermitian matrix.
    ///
    /// Eigenvalues below zero by no more than `1e-10` are clamped; anything
    /// more negative is rejected.
    pub fn psd_sqrt(&self) -> Result<ComplexMatrix> {
        if let Some(d) = self.real_diagonal() {
            let mut roots = Vec::with_capacity(d.len());
            for x in d {
                roots.push(clamped_sqrt(x)?);
            }
            return Ok(ComplexMatrix::real_diag(self.rows(), self.cols(), &roots));
        }
        let (values, vecs) = self.hermitian_eigen()?;
        let mut roots = Vec::with_capacity(values.len());
        for x in values {
            roots.push(clamped_sqrt(x)?);
        }
        let n = self.rows();
        let d = ComplexMatrix::real_diag(n, n, &roots);
        Ok(vecs.matmul(&d).matmul(&vecs.dagger()))
    }

    /// `Some(diagonal)` when the matrix is square, exactly diagonal and real.
    pub fn real_diagonal(&self) -> Option<Vec<f64>> {
        if !self.is_square() {
            return None;
        }
        let n = self.rows();
        for r in 0..n {
            for c in 0..n {
                let z = self.0[(r, c)];
                if (r != c && z != ZERO) || (r == c && z.im != 0.0) {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.0[(i, i)].re).collect())
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.svd().singular_values.first().copied().unwrap_or(0.0)
    }

    /// Full singular value decomposition `A = U diag(s) V†`.
    ///
    /// One-sided Jacobi on the columns of `A` (or of `A†` when `A` is wide),
    /// which keeps the computed singular vectors orthonormal to working
    /// precision even for rank-deficient input.
    pub fn svd(&self) -> Svd {
        if self.rows() < self.cols() {
            let t = self.dagger().svd();
            return Svd { u: t.v, singular_values: t.singular_values, v: t.u };
        }
        let (m, n) = (self.rows(), self.cols());
        let mut w = self.0.clone();
        let mut v = DMatrix::<Complex64>::identity(n, n);
        for _ in 0..JACOBI_MAX_SWEEPS {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = w.column(p).norm_squared();
                    let beta = w.column(q).norm_squared();
                    let gamma = w.column(p).dotc(&w.column(q));
                    let g = gamma.norm();
                    if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    // Rotate the phase of column q so the pair's overlap is real.
                    let phase = (gamma / g).conj();
                    let zeta = (beta - alpha) / (2.0 * g);
                    let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for mat in [&mut w, &mut v] {
                        for r in 0..mat.nrows() {
                            let (xp, xq) = (mat[(r, p)], mat[(r, q)] * phase);
                            mat[(r, p)] = xp * c - xq * s;
                            mat[(r, q)] = xp * s + xq * c;
                        }
                    }
                }
            }
            if !rotated {
                break;
            }
        }
        let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
        let kept: Vec<usize> = order.iter().copied().filter(|&j| norms[j] > f64::MIN_POSITIVE).collect();
        let left = ComplexMatrix::from_fn(m, kept.len(), |r, c| w[(r, kept[c])] / norms[kept[c]]);
        Svd {
            u: complete_to_unitary(&left),
            singular_values: order.iter().map(|&j| norms[j]).collect(),
            v: ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]),
        }
    }
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// Output of [`ComplexMatrix::svd`]: `A = U diag(s) V†` with `U` (`m x m`)
/// and `V` (`n x n`) unitary and `s` (`min(m, n)` entries) descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v: ComplexMatrix,
}

fn clamped_sqrt(x: f64) -> Result<f64> {
    if x < -1e-10 {
        return Err(Error::NumericalFailure(format!(
            "matrix square root of an operator with eigenvalue {x:e}"
        )));
    }
    Ok(x.max(0.0).sqrt())
}

/// Extends a matrix with orthonormal columns to a square unitary whose
/// leading columns are exactly the given ones.
///
/// New columns come from the standard basis vector with the largest component
/// outside the current span, projected out with an explicit second
/// Gram–Schmidt pass.
pub fn complete_to_unitary(isometry: &ComplexMatrix) -> ComplexMatrix {
    let n = isometry.rows();
    let k = isometry.cols();
    assert!(k <= n, "cannot complete {n}x{k}: more columns than rows");
    let mut out = DMatrix::<Complex64>::zeros(n, n);
    out.columns_mut(0, k).copy_from(&isometry.0);
    // Projector onto the orthogonal complement of the columns placed so far.
    let mut comp = DMatrix::<Complex64>::identity(n, n) - &isometry.0 * isometry.0.adjoint();
    let mut used = vec![false; n];
    for col in k..n {
        let e = (0..n)
            .filter(|&j| !used[j])
            .max_by(|&a, &b| comp.column(a).norm_squared().total_cmp(&comp.column(b).norm_squared()))
            .expect("a free basis vector always remains");
        used[e] = true;
        let mut v = comp.column(e).into_owned();
        for b in 0..col {
            let proj = out.column(b).dotc(&v);
            v.axpy(-proj, &out.column(b), ONE);
        }
        v /= Complex64::new(v.norm(), 0.0);
        comp -= &v * v.adjoint();
        out.set_column(col, &v);
    }
    ComplexMatrix(out)
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for r in 0..self.rows() {
            write!(f, "  ")?;
            for c in 0..self.cols() {
                let z = self.0[(r, c)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_shapes_and_nan() {
        assert!(matches!(
            ComplexMatrix::new(2, 2, vec![ONE; 3]),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            ComplexMatrix::new(1, 2, vec![ONE, c(f64::NAN, 0.0)]),
            Err(Error::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn row_major_layout() {
        let m = ComplexMatrix::from_real(2, 3, &[1., 2., 3., 4., 5., 6.]).unwrap();
        assert_eq!(m.get(0, 2), re(3.0));
        assert_eq!(m.get(1, 0), re(4.0));
        assert_eq!(m.to_row_major()[4], re(5.0));
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let a = ComplexMatrix::new(2, 2, vec![re(2.0), c(0.5, 0.5), c(0.5, -0.5), re(1.0)]).unwrap();
        let s = a.psd_sqrt().unwrap();
        assert!(s.matmul(&s).max_abs_diff(&a) < 1e-12);
        assert!(s.hermiticity_defect() < 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_negative() {
        let a = ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -0.5]).unwrap();
        assert!(a.psd_sqrt().is_err());
    }

    #[test]
    fn completion_keeps_leading_columns() {
        let s = 0.5f64.sqrt();
        let iso = ComplexMatrix::from_real(3, 1, &[s, s, 0.0]).unwrap();
        let u = complete_to_unitary(&iso);
        assert!(u.unitarity_defect() < 1e-14);
        assert_eq!(u.block(0, 0, 3, 1), iso);
    }

    #[test]
    fn eigenvalues_descending() {
        let a = ComplexMatrix::from_real(3, 3, &[0.1, 0., 0., 0., 0.7, 0., 0., 0., 0.2]).unwrap();
        assert_eq!(a.hermitian_eigenvalues().unwrap(), vec![0.7, 0.2, 0.1]);
    }

    #[test]
    fn svd_of_rank_deficient_complex_matrix() {
        // Rank one, wide, with complex phases.
        let u = ComplexMatrix::new(2, 1, vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let v = ComplexMatrix::new(1, 3, vec![c(0.0, 0.6), c(0.8, 0.0), ZERO]).unwrap();
        let a = u.matmul(&v).scale(2.0);
        let svd = a.svd();
        assert!((svd.singular_values[0] - 2.0).abs() < 1e-14);
        assert!(svd.singular_values[1].abs() < 1e-14);
        assert!(svd.u.unitarity_defect() < 1e-14);
        assert!(svd.v.unitarity_defect() < 1e-14);
        let d = ComplexMatrix::real_diag(2, 3, &svd.singular_values);
        assert!(svd.u.matmul(&d).matmul(&svd.v.dagger()).max_abs_diff(&a) < 1e-14);
        assert!((a.operator_norm() - 2.0).abs() < 1e-14);
    }
}
