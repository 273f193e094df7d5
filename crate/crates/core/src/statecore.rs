//! Bipartite pure states in the coefficient-matrix picture.
//!
//! A state `Σ λ_ij |i⟩_A |j⟩_B` is stored as its `M x N` coefficient matrix
//! `Λ`. Local maps act by multiplication: Alice's operator `A` and Bob's
//! operator `B` send `Λ` to `A Λ Bᵀ`. The reduced density matrices are
//! `ρ_A = Λ Λ†` and `ρ_B = Λᵀ Λ*`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{complete_to_unitary, ComplexMatrix};

/// Normalization tolerance for states and probability vectors.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for unitarity and reconstruction checks.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance for comparing spectra.
pub const SPECTRUM_TOL: f64 = 1e-9;
/// Schmidt coefficients at or below this are treated as zero.
pub const ZERO_COEFF: f64 = 1e-10;

/// Weights at or below this are reported as a null outcome by [`apply_local`].
const NULL_WEIGHT: f64 = 1e-24;

#[derive(Clone, Debug, PartialEq)]
pub struct BipartitePureState {
    coeffs: ComplexMatrix,
}

impl BipartitePureState {
    /// Validates a raw `dim_a x dim_b` coefficient matrix.
    pub fn validate(raw: ComplexMatrix, dim_a: usize, dim_b: usize) -> Result<Self> {
        if raw.rows() != dim_a || raw.cols() != dim_b {
            return Err(Error::DimensionMismatch(format!(
                "declared {dim_a}x{dim_b}, matrix is {}x{}",
                raw.rows(),
                raw.cols()
            )));
        }
        let norm = raw.frobenius_sq();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(format!("squared norm {norm:.17}")));
        }
        Ok(BipartitePureState { coeffs: raw })
    }

    /// Rescales `raw` to unit norm before validating.
    pub fn normalized(raw: ComplexMatrix) -> Result<Self> {
        let norm = raw.frobenius_sq();
        if norm <= NULL_WEIGHT {
            return Err(Error::NotNormalized("zero vector cannot be normalized".into()));
        }
        let (m, n) = (raw.rows(), raw.cols());
        Self::validate(raw.scale(1.0 / norm.sqrt()), m, n)
    }

    /// `Σ_i coeffs[i] |i⟩|i⟩` in an `m x n` space.
    pub fn from_schmidt(coeffs: &SchmidtVector, m: usize, n: usize) -> Result<Self> {
        if coeffs.rank() > m.min(n) {
            return Err(Error::DimensionMismatch(format!(
                "Schmidt rank {} does not fit in {m}x{n}",
                coeffs.rank()
            )));
        }
        Self::validate(ComplexMatrix::real_diag(m, n, coeffs.as_slice()), m, n)
    }

    pub fn dim_a(&self) -> usize {
        self.coeffs.rows()
    }

    pub fn dim_b(&self) -> usize {
        self.coeffs.cols()
    }

    pub fn coeffs(&self) -> &ComplexMatrix {
        &self.coeffs
    }

    /// Amplitudes in the product basis, `|i⟩_A|j⟩_B` at index `i * N + j`.
    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.coeffs.to_row_major()
    }

    pub fn to_multipartite(&self) -> MultipartiteState {
        MultipartiteState {
            dims: vec![self.dim_a(), self.dim_b()],
            amplitudes: self.amplitudes(),
        }
    }
}

/// Nonnegative Schmidt coefficients in standard (descending) form, with
/// squares summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct SchmidtVector(Vec<f64>);

impl SchmidtVector {
    pub fn from_coefficients(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidArgument("empty Schmidt vector".into()));
        }
        if coeffs.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument(
                "Schmidt coefficients must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = coeffs.iter().map(|x| x * x).sum();
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(format!("sum of squares {total:.17}")));
        }
        coeffs.sort_by(|a, b| b.total_cmp(a));
        Ok(SchmidtVector(coeffs))
    }

    /// From squared coefficients (a probability vector).
    pub fn from_squares(squares: &[f64]) -> Result<Self> {
        if squares.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidArgument("squares must be nonnegative".into()));
        }
        Self::from_coefficients(squares.iter().map(|x| x.sqrt()).collect())
    }

    /// The `m`-fold maximally entangled spectrum padded to `len` entries.
    pub fn maximally_entangled(m: usize, len: usize) -> Result<Self> {
        if m == 0 || m > len {
            return Err(Error::InvalidArgument(format!("need 1 <= m <= {len}, got {m}")));
        }
        let v = 1.0 / (m as f64).sqrt();
        let mut coeffs = vec![0.0; len];
        coeffs[..m].fill(v);
        Ok(SchmidtVector(coeffs))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn squares(&self) -> Vec<f64> {
        self.0.iter().map(|x| x * x).collect()
    }

    pub fn rank(&self) -> usize {
        self.0.iter().filter(|&&x| x > ZERO_COEFF).count()
    }

    /// Zero-padded (or zero-truncated) copy of length `len`.
    ///
    /// Panics if truncation would drop a nonzero coefficient.
    pub fn padded(&self, len: usize) -> SchmidtVector {
        let mut v = self.0.clone();
        if len < v.len() {
            assert!(
                v[len..].iter().all(|&x| x <= ZERO_COEFF),
                "truncating nonzero Schmidt coefficients"
            );
        }
        v.resize(len, 0.0);
        SchmidtVector(v)
    }

    pub fn approx_eq(&self, other: &SchmidtVector, tol: f64) -> bool {
        let len = self.len().max(other.len());
        let (a, b) = (self.padded_loose(len), other.padded_loose(len));
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    fn padded_loose(&self, len: usize) -> Vec<f64> {
        let mut v = self.0.clone();
        v.resize(len.max(v.len()), 0.0);
        v
    }
}

/// Pads two Schmidt vectors to their common length.
pub fn pad_pair(a: &SchmidtVector, b: &SchmidtVector) -> (SchmidtVector, SchmidtVector) {
    let len = a.len().max(b.len());
    (a.padded(len), b.padded(len))
}

/// Result of [`schmidt_decompose`]: `Λ = U† Λ_d V`.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    /// `min(M, N)` coefficients, descending, zeros kept.
    pub lambdas: Vec<f64>,
    pub rank: usize,
    /// `U`, `M x M`.
    pub left_unitary: ComplexMatrix,
    /// `V`, `N x N`.
    pub right_unitary: ComplexMatrix,
}

impl SchmidtForm {
    pub fn coefficients(&self) -> SchmidtVector {
        SchmidtVector(self.lambdas.clone())
    }

    /// `Λ_d` as an `M x N` matrix.
    pub fn diagonal(&self) -> ComplexMatrix {
        ComplexMatrix::real_diag(self.left_unitary.rows(), self.right_unitary.rows(), &self.lambdas)
    }

    /// `U† Λ_d V`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.left_unitary
            .dagger()
            .matmul(&self.diagonal())
            .matmul(&self.right_unitary)
    }
}

/// Schmidt decomposition via a complex SVD of the coefficient matrix.
///
/// Coefficients are sorted descending. Each left Schmidt vector (column of
/// `U†`) is rotated so its first entry with modulus above `1e-10` is real and
/// positive; the matching row of `V` absorbs the opposite phase.
pub fn schmidt_decompose(state: &BipartitePureState, tol: f64) -> Result<SchmidtForm> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let (m, n) = (state.dim_a(), state.dim_b());
    let k = m.min(n);
    let svd = state.coeffs().svd();
    let lambdas = svd.singular_values.clone();

    // Columns of U† (left vectors) and rows of V (right vectors, conjugated).
    let mut left = ComplexMatrix::zeros(m, k);
    let mut right = ComplexMatrix::zeros(k, n);
    for i in 0..k {
        let phase = leading_phase((0..m).map(|r| svd.u.get(r, i)));
        for r in 0..m {
            left.set(r, i, svd.u.get(r, i) * phase.conj());
        }
        for c in 0..n {
            right.set(i, c, svd.v.get(c, i).conj() * phase);
        }
    }

    let mut u_dagger = complete_to_unitary(&left);
    for col in k..m {
        let phase = leading_phase((0..m).map(|r| u_dagger.get(r, col)));
        for r in 0..m {
            let z = u_dagger.get(r, col) * phase.conj();
            u_dagger.set(r, col, z);
        }
    }
    let v = complete_to_unitary(&right.dagger()).dagger();

    let form = SchmidtForm {
        rank: lambdas.iter().filter(|&&x| x > tol).count(),
        lambdas,
        left_unitary: u_dagger.dagger(),
        right_unitary: v,
    };
    let residual = form.reconstruct().max_abs_diff(state.coeffs());
    if residual > UNITARY_TOL {
        return Err(Error::NumericalFailure(format!(
            "Schmidt reconstruction residual {residual:e}"
        )));
    }
    Ok(form)
}

/// Unit phase of the first entry with modulus above `1e-10` (1 if none).
fn leading_phase(entries: impl Iterator<Item = Complex64>) -> Complex64 {
    entries
        .into_iter()
        .find(|z| z.norm() > 1e-10)
        .map(|z| z / z.norm())
        .unwrap_or(Complex64::new(1.0, 0.0))
}

/// Which party's reduced state to take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    A,
    B,
}

/// A normalized, Hermitian, positive-semidefinite matrix.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity at `tol`.
    pub fn new(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch("density matrix must be square".into()));
        }
        let herm = matrix.hermiticity_defect();
        if herm > tol {
            return Err(Error::NumericalFailure(format!("not Hermitian ({herm:e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::NotNormalized(format!("trace {tr}")));
        }
        let low = matrix.hermitian_eigenvalues()?.last().copied().unwrap_or(0.0);
        if low < -UNITARY_TOL {
            return Err(Error::NumericalFailure(format!("negative eigenvalue {low:e}")));
        }
        Ok(DensityMatrix { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Eigenvalues, descending.
    pub fn spectrum(&self) -> Vec<f64> {
        self.matrix
            .hermitian_eigenvalues()
            .expect("validated density matrices are Hermitian")
    }
}

/// `ρ_A = ΛΛ†` or `ρ_B = ΛᵀΛ*`.
pub fn reduced_density(state: &BipartitePureState, side: Side) -> DensityMatrix {
    let l = state.coeffs();
    let rho = match side {
        Side::A => l.matmul(&l.dagger()),
        Side::B => l.transpose().matmul(&l.conj()),
    };
    DensityMatrix::new(rho, UNITARY_TOL).expect("reduced density of a valid state")
}

/// A pure state on a tensor product of factors, amplitudes in row-major
/// (first factor most significant) order.
#[derive(Clone, Debug)]
pub struct MultipartiteState {
    dims: Vec<usize>,
    amplitudes: Vec<Complex64>,
}

impl MultipartiteState {
    pub fn new(dims: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::DimensionMismatch("factor dimensions must be positive".into()));
        }
        let total = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::DimensionMismatch("global dimension overflows".into()))?;
        if total != amplitudes.len() {
            return Err(Error::DimensionMismatch(format!(
                "factors multiply to {total}, got {} amplitudes",
                amplitudes.len()
            )));
        }
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > UNITARY_TOL {
            return Err(Error::NotNormalized(format!("squared norm {norm:.17}")));
        }
        Ok(MultipartiteState { dims, amplitudes })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }
}

/// Reduced state on the factors listed in `keep` (strictly increasing).
///
/// Keeping every factor returns the projector `|Ψ⟩⟨Ψ|`.
pub fn partial_trace(state: &MultipartiteState, keep: &[usize]) -> Result<DensityMatrix> {
    let dims = state.dims();
    if keep.is_empty() {
        return Err(Error::DimensionMismatch("must keep at least one factor".into()));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&f| f >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep list {keep:?} is not an increasing subset of 0..{}",
            dims.len()
        )));
    }
    let kept_dim: usize = keep.iter().map(|&f| dims[f]).product();
    let traced_dim = state.amplitudes().len() / kept_dim;

    // Reshape into a kept x traced matrix X; the reduced state is X X†.
    let mut x = ComplexMatrix::zeros(kept_dim, traced_dim);
    let mut digits = vec![0usize; dims.len()];
    for &amp in state.amplitudes() {
        let (mut k, mut t) = (0usize, 0usize);
        for (f, &d) in digits.iter().enumerate() {
            if keep.binary_search(&f).is_ok() {
                k = k * dims[f] + d;
            } else {
                t = t * dims[f] + d;
            }
        }
        x.set(k, t, amp);
        for f in (0..dims.len()).rev() {
            digits[f] += 1;
            if digits[f] < dims[f] {
                break;
            }
            digits[f] = 0;
        }
    }
    DensityMatrix::new(x.matmul(&x.dagger()), UNITARY_TOL)
}

/// Sorts descending and zero-pads to `len`.
pub fn sorted_padded(v: &[f64], len: usize) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(|a, b| b.total_cmp(a));
    s.resize(len.max(s.len()), 0.0);
    s
}

fn check_probability_vector(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidArgument("empty probability vector".into()));
    }
    if v.iter().any(|x| !x.is_finite() || *x < -NORM_TOL) {
        return Err(Error::InvalidArgument("probabilities must be nonnegative".into()));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(format!("probabilities sum to {s:.17}")));
    }
    Ok(())
}

/// `x ≺ y`: every prefix sum of sorted `x` is at most the matching prefix sum
/// of sorted `y` plus `tol`.
pub fn is_majorized_by(x: &[f64], y: &[f64], tol: f64) -> Result<bool> {
    check_probability_vector(x)?;
    check_probability_vector(y)?;
    let len = x.len().max(y.len());
    let (xs, ys) = (sorted_padded(x, len), sorted_padded(y, len));
    let (mut px, mut py) = (0.0, 0.0);
    for (a, b) in xs.iter().zip(&ys) {
        px += a;
        py += b;
        if px > py + tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `|⟨s1|s2⟩|²`.
pub fn overlap(s1: &BipartitePureState, s2: &BipartitePureState) -> Result<f64> {
    if s1.dim_a() != s2.dim_a() || s1.dim_b() != s2.dim_b() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            s1.dim_a(),
            s1.dim_b(),
            s2.dim_a(),
            s2.dim_b()
        )));
    }
    let ip: Complex64 = s1
        .coeffs()
        .inner()
        .iter()
        .zip(s2.coeffs().inner().iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(ip.norm_sqr().min(1.0))
}

/// Outcome of a local map: its weight and the renormalized state, if any.
#[derive(Clone, Debug)]
pub struct LocalOutcome {
    pub weight: f64,
    pub state: Option<BipartitePureState>,
}

/// Applies Alice's `op_a` (`M' x M`) and Bob's `op_b` (`N' x N`): `Λ ↦ A Λ Bᵀ`.
pub fn apply_local(
    state: &BipartitePureState,
    op_a: &ComplexMatrix,
    op_b: &ComplexMatrix,
) -> Result<LocalOutcome> {
    if op_a.cols() != state.dim_a() || op_b.cols() != state.dim_b() {
        return Err(Error::DimensionMismatch(format!(
            "operators {}x{} and {}x{} on a {}x{} state",
            op_a.rows(),
            op_a.cols(),
            op_b.rows(),
            op_b.cols(),
            state.dim_a(),
            state.dim_b()
        )));
    }
    let out = op_a.matmul(state.coeffs()).matmul(&op_b.transpose());
    let weight = out.frobenius_sq();
    if weight <= NULL_WEIGHT {
        return Ok(LocalOutcome { weight, state: None });
    }
    Ok(LocalOutcome {
        weight,
        state: Some(BipartitePureState::normalized(out)?),
    })
}

/// `|ψ⟩⟨ψ|` for a bipartite state, as an `MN x MN` matrix.
pub fn projector(state: &BipartitePureState) -> ComplexMatrix {
    let amps = state.amplitudes();
    let d = amps.len();
    ComplexMatrix::from_fn(d, d, |r, c| amps[r] * amps[c].conj())
}

/// Sum of `|z|²` over entries; convenience for weights of unnormalized blocks.
pub fn weight(m: &ComplexMatrix) -> f64 {
    m.frobenius_sq()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, re};
    use approx::assert_abs_diff_eq;

    fn diag_state(d: &[f64]) -> BipartitePureState {
        BipartitePureState::validate(ComplexMatrix::real_diag(d.len(), d.len(), d), d.len(), d.len())
            .unwrap()
    }

    #[test]
    fn validate_examples() {
        let prod = ComplexMatrix::from_real(2, 2, &[1., 0., 0., 0.]).unwrap();
        assert!(BipartitePureState::validate(prod, 2, 2).is_ok());
        let pyth = ComplexMatrix::from_real(2, 2, &[0.6, 0., 0., 0.8]).unwrap();
        assert!(BipartitePureState::validate(pyth, 2, 2).is_ok());
        let id = ComplexMatrix::identity(2);
        assert!(matches!(
            BipartitePureState::validate(id.clone(), 2, 2),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            BipartitePureState::validate(id, 2, 3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn schmidt_reorders_diagonal() {
        let s = diag_state(&[0.6, 0.8]);
        let f = schmidt_decompose(&s, 1e-10).unwrap();
        assert_abs_diff_eq!(f.lambdas[0], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(f.lambdas[1], 0.6, epsilon = 1e-14);
        assert_eq!(f.rank, 2);
        // U and V are permutations (up to the fixed phase convention).
        for m in [&f.left_unitary, &f.right_unitary] {
            for z in m.inner().iter() {
                assert!(z.norm() < 1e-12 || (z.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schmidt_hadamard_like() {
        let m = ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, -0.5]).unwrap();
        let s = BipartitePureState::validate(m, 2, 2).unwrap();
        let f = schmidt_decompose(&s, 1e-10).unwrap();
        // Oracle: eigenvalues of ΛΛ† = I/2.
        let eig = reduced_density(&s, Side::A).spectrum();
        for (l, e) in f.lambdas.iter().zip(&eig) {
            assert_abs_diff_eq!(l * l, *e, epsilon = 1e-12);
            assert_abs_diff_eq!(*l, 0.5f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn schmidt_product_rank_one() {
        let m = ComplexMatrix::from_real(2, 2, &[1., 0., 0., 0.]).unwrap();
        let s = BipartitePureState::validate(m, 2, 2).unwrap();
        let f = schmidt_decompose(&s, 1e-10).unwrap();
        assert_eq!(f.lambdas, vec![1.0, 0.0]);
        assert_eq!(f.rank, 1);
    }

    #[test]
    fn schmidt_rectangular_and_phase_convention() {
        let m = ComplexMatrix::new(
            2,
            3,
            vec![c(0.1, 0.3), c(-0.2, 0.1), re(0.4), c(0.0, -0.5), re(0.3), c(0.2, 0.2)],
        )
        .unwrap();
        let s = BipartitePureState::normalized(m).unwrap();
        let f = schmidt_decompose(&s, 1e-10).unwrap();
        assert_eq!(f.left_unitary.rows(), 2);
        assert_eq!(f.right_unitary.rows(), 3);
        assert!(f.left_unitary.unitarity_defect() < 1e-10);
        assert!(f.right_unitary.unitarity_defect() < 1e-10);
        let u_dag = f.left_unitary.dagger();
        for col in 0..2 {
            let lead = (0..2).map(|r| u_dag.get(r, col)).find(|z| z.norm() > 1e-10).unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
        // Deterministic for fixed input.
        let g = schmidt_decompose(&s, 1e-10).unwrap();
        assert_eq!(f.left_unitary, g.left_unitary);
    }

    #[test]
    fn reduced_density_examples() {
        let s = 0.5f64.sqrt();
        let bell = diag_state(&[s, s]);
        let rho = reduced_density(&bell, Side::A);
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);

        let st = diag_state(&[0.8f64.sqrt(), 0.2f64.sqrt()]);
        let rho = reduced_density(&st, Side::A);
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::real_diag(2, 2, &[0.8, 0.2])) < 1e-15);

        let prod = diag_state(&[1.0, 0.0]);
        let rho = reduced_density(&prod, Side::B);
        assert_eq!(rho.matrix(), &ComplexMatrix::real_diag(2, 2, &[1.0, 0.0]));
    }

    #[test]
    fn partial_trace_bell_and_product() {
        let s = 0.5f64.sqrt();
        let bell = diag_state(&[s, s]).to_multipartite();
        let rho = partial_trace(&bell, &[0]).unwrap();
        assert!(rho.matrix().max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);

        // |ψ⟩ = (0.6, 0.8i) ⊗ |φ⟩ = (s, -s)
        let psi = [re(0.6), c(0.0, 0.8)];
        let phi = [re(s), re(-s)];
        let amps: Vec<_> = psi.iter().flat_map(|a| phi.iter().map(move |b| a * b)).collect();
        let st = MultipartiteState::new(vec![2, 2], amps).unwrap();
        let rho = partial_trace(&st, &[0]).unwrap();
        let expect = ComplexMatrix::from_fn(2, 2, |r, c| psi[r] * psi[c].conj());
        assert!(rho.matrix().max_abs_diff(&expect) < 1e-15);

        let full = partial_trace(&bell, &[0, 1]).unwrap();
        assert!(full.matrix().max_abs_diff(&projector(&diag_state(&[s, s]))) < 1e-15);

        assert!(partial_trace(&bell, &[1, 0]).is_err());
        assert!(partial_trace(&bell, &[2]).is_err());
        assert!(MultipartiteState::new(vec![2, 3], vec![re(1.0); 5]).is_err());
    }

    #[test]
    fn majorization_examples() {
        assert!(is_majorized_by(&[0.5, 0.5], &[0.8, 0.2], 1e-12).unwrap());
        assert!(!is_majorized_by(&[0.6, 0.4], &[0.5, 0.5], 1e-12).unwrap());
        assert!(is_majorized_by(&[0.3, 0.2, 0.5], &[0.5, 0.3, 0.2], 1e-12).unwrap());
        assert!(is_majorized_by(&[0.5, 0.5], &[1.0], 1e-12).unwrap());
        assert!(matches!(
            is_majorized_by(&[0.5, 0.6], &[1.0], 1e-12),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn overlap_examples() {
        let s = 0.5f64.sqrt();
        let bell = diag_state(&[s, s]);
        assert_abs_diff_eq!(overlap(&bell, &bell).unwrap(), 1.0, epsilon = 1e-15);
        let a = diag_state(&[1.0, 0.0]);
        let b = diag_state(&[0.0, 1.0]);
        assert_eq!(overlap(&a, &b).unwrap(), 0.0);
        let st = diag_state(&[0.8f64.sqrt(), 0.2f64.sqrt()]);
        // (Σ λ_i σ_i)² = (0.6325 + 0.3162)²
        assert_abs_diff_eq!(overlap(&st, &bell).unwrap(), 0.9, epsilon = 1e-12);
        assert_abs_diff_eq!(overlap(&bell, &st).unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn apply_local_examples() {
        let st = diag_state(&[0.8f64.sqrt(), 0.2f64.sqrt()]);
        let id = ComplexMatrix::identity(2);
        let out = apply_local(&st, &id, &id).unwrap();
        assert_abs_diff_eq!(out.weight, 1.0, epsilon = 1e-15);
        assert!(out.state.unwrap().coeffs().max_abs_diff(st.coeffs()) < 1e-15);

        let a = ComplexMatrix::real_diag(2, 2, &[0.5, 1.0]);
        let out = apply_local(&st, &a, &id).unwrap();
        assert_abs_diff_eq!(out.weight, 0.4, epsilon = 1e-12);
        let s = 0.5f64.sqrt();
        assert_abs_diff_eq!(overlap(&out.state.unwrap(), &diag_state(&[s, s])).unwrap(), 1.0, epsilon = 1e-12);

        let out = apply_local(&st, &ComplexMatrix::zeros(2, 2), &id).unwrap();
        assert_eq!(out.weight, 0.0);
        assert!(out.state.is_none());

        assert!(apply_local(&st, &ComplexMatrix::identity(3), &id).is_err());
    }

    #[test]
    fn schmidt_vector_validation() {
        assert!(SchmidtVector::from_coefficients(vec![0.6, 0.8]).is_ok());
        assert!(SchmidtVector::from_coefficients(vec![0.6, 0.6]).is_err());
        assert!(SchmidtVector::from_coefficients(vec![-0.6, 0.8]).is_err());
        let v = SchmidtVector::from_squares(&[0.2, 0.8]).unwrap();
        assert_eq!(v.as_slice()[0], 0.8f64.sqrt());
        let me = SchmidtVector::maximally_entangled(2, 3).unwrap();
        assert_eq!(me.rank(), 2);
        assert!(SchmidtVector::maximally_entangled(4, 3).is_err());
    }
}
