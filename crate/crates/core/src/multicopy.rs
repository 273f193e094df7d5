//! Deterministic conversion from `n` identical copies of the input.
//!
//! Alice runs the single-copy dilation on every copy at branch probability
//! `p_i ≤ p_opt` with `Σ p_i = 1`, places the `n` success blocks in orthogonal
//! subspaces and recombines them with `U₂`, whose first block column is
//! `(√p₁ I; …; √p_n I)`. Bob's `n` particles live in a labeled tensor space of
//! dimension `N^n`. Treating them as indistinguishable, every block carries
//! the same `Δ`, and `U₂†` folds everything into the first block, where
//! Alice's reduced state is exactly the target's.

use num_complex::Complex64;
use num_rational::Ratio;

use crate::error::{Error, Result};
use crate::linalg::{complete_to_unitary, ComplexMatrix};
use crate::singlecopy::{contraction_for, optimal_probability, Contraction};
use crate::statecore::{
    partial_trace, schmidt_decompose, BipartitePureState, DensityMatrix, MultipartiteState,
    SchmidtVector, UNITARY_TOL, ZERO_COEFF,
};

/// Largest Bob product-space dimension `N^n` we will materialize.
pub const DEFAULT_BOB_SPACE_CAP: usize = 4096;

/// Alice only signals that she has finished.
pub const MULTICOPY_MESSAGE_BITS: u32 = 1;

/// Absolute slack when deciding whether a copy-count ratio is an integer.
const RATIO_EPS: f64 = 1e-12;

/// Slack allowed on `p_i ≤ p_opt`.
const BRANCH_SLACK: f64 = 1e-12;

/// Greatest integer strictly less than `x`.
fn greatest_integer_below(x: f64) -> i64 {
    (x - RATIO_EPS).ceil() as i64 - 1
}

/// `n_min = [max_k σ_k²/λ_k²] + 1`, with `[x]` the greatest integer below `x`.
///
/// This is `ceil(1 / p_opt)` whether or not the ratio is an integer.
pub fn min_copies(lambda: &SchmidtVector, sigma: &SchmidtVector) -> Result<usize> {
    let p_opt = optimal_probability(lambda, sigma);
    if p_opt == 0.0 {
        return Err(Error::InfeasibleTarget("p_opt = 0: no number of copies suffices".into()));
    }
    let len = lambda.len().max(sigma.len());
    let (l, s) = (lambda.padded(len), sigma.padded(len));
    let max_ratio = l
        .as_slice()
        .iter()
        .zip(s.as_slice())
        .filter(|(_, &s)| s > ZERO_COEFF)
        .map(|(&l, &s)| (s * s) / (l * l))
        .fold(1.0, f64::max);
    Ok((greatest_integer_below(max_ratio) + 1).max(1) as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum YieldVerdict {
    /// `K < 1/n_min`: `nK` targets from `n` inputs with certainty.
    Certain,
    /// `K > 1/n_min`.
    Impossible,
    /// `K = 1/n_min` exactly; not settled by the dichotomy.
    Boundary,
}

/// Finite-copy yield dichotomy for `n` inputs and yield ratio `k`.
pub fn feasible_yield(
    lambda: &SchmidtVector,
    sigma: &SchmidtVector,
    n: u64,
    k: Ratio<u64>,
) -> Result<YieldVerdict> {
    if n == 0 || *k.numer() == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and K > 0".into()));
    }
    let n_min = match min_copies(lambda, sigma) {
        Ok(n) => n as u64,
        Err(Error::InfeasibleTarget(_)) => return Ok(YieldVerdict::Impossible),
        Err(e) => return Err(e),
    };
    // Compare K with 1/n_min exactly: K · n_min against 1.
    let scaled = k * Ratio::from_integer(n_min);
    Ok(match scaled.cmp(&Ratio::from_integer(1)) {
        std::cmp::Ordering::Less => YieldVerdict::Certain,
        std::cmp::Ordering::Greater => YieldVerdict::Impossible,
        std::cmp::Ordering::Equal => YieldVerdict::Boundary,
    })
}

/// Smallest `n` with `1/n ≤ p_opt`.
fn copies_needed(p_opt: f64) -> usize {
    (1.0 / p_opt - RATIO_EPS).ceil().max(1.0) as usize
}

/// Equal split `p_i = 1/n`, the last entry closing the sum.
pub fn plan_distribution(n: usize, p_opt: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one copy".into()));
    }
    if !(p_opt > 0.0 && p_opt <= 1.0) {
        return Err(Error::InfeasibleDistribution(format!("p_opt = {p_opt}")));
    }
    let needed = copies_needed(p_opt);
    if n < needed {
        return Err(Error::InfeasibleDistribution(format!(
            "{n} copies cannot share unit probability with p_opt = {p_opt}; need {needed}"
        )));
    }
    let mut probs = vec![1.0 / n as f64; n];
    let head: f64 = probs[..n - 1].iter().sum();
    probs[n - 1] = 1.0 - head;
    validate_distribution(&probs, p_opt)?;
    Ok(probs)
}

/// Accepts any caller-chosen distribution with `Σ p_i = 1` and
/// `0 ≤ p_i ≤ p_opt`.
pub fn validate_distribution(probs: &[f64], p_opt: f64) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidArgument("empty distribution".into()));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > UNITARY_TOL {
        return Err(Error::NotNormalized(format!("branch probabilities sum to {total}")));
    }
    if let Some(p) = probs.iter().find(|&&p| !(0.0..=p_opt + BRANCH_SLACK).contains(&p)) {
        return Err(Error::InfeasibleDistribution(format!("p_i = {p} outside [0, {p_opt}]")));
    }
    Ok(())
}

/// `N^n`, or `DimensionOverflow` above `cap`.
pub fn bob_space_dim(dim_b: usize, copies: usize, cap: usize) -> Result<usize> {
    let mut dim = 1usize;
    for _ in 0..copies {
        dim = dim.saturating_mul(dim_b);
        if dim > cap {
            return Err(Error::DimensionOverflow { dim, cap });
        }
    }
    Ok(dim)
}

/// `Δ` (`M x N^n`) and `Λ(Ω)` (`nM x N^n`).
///
/// Row `k` of `Δ` carries `σ_k / N^{(n−1)/2}` across the `N^{n−1}` columns
/// whose first Bob label is `k`, i.e. `Σ_k σ_k |k⟩_A |k⟩_{B₁} |+⟩^{⊗(n−1)}`.
pub fn build_omega(
    sigma: &SchmidtVector,
    probs: &[f64],
    dim_a: usize,
    dim_b: usize,
    cap: usize,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let n = probs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one copy".into()));
    }
    if sigma.rank() > dim_a.min(dim_b) {
        return Err(Error::DimensionMismatch("target does not fit the local dimensions".into()));
    }
    let cols = bob_space_dim(dim_b, n, cap)?;
    let band = cols / dim_b;
    let amp = 1.0 / (band as f64).sqrt();
    let mut delta = ComplexMatrix::zeros(dim_a, cols);
    for (k, &s) in sigma.as_slice().iter().enumerate().take(dim_a.min(dim_b)) {
        for c in k * band..(k + 1) * band {
            delta.set(k, c, Complex64::new(s * amp, 0.0));
        }
    }
    let blocks: Vec<_> = probs.iter().map(|p| delta.scale(p.sqrt())).collect();
    let omega = ComplexMatrix::vstack(&blocks)?;
    Ok((delta, omega))
}

/// `nM x nM` unitary with first block column `(√p₁ I; …; √p_n I)`.
pub fn assemble_u2(probs: &[f64], dim_a: usize) -> Result<ComplexMatrix> {
    let total: f64 = probs.iter().sum();
    if probs.is_empty() || (total - 1.0).abs() > UNITARY_TOL || probs.iter().any(|&p| p < 0.0) {
        return Err(Error::NotNormalized(format!("branch probabilities sum to {total}")));
    }
    let id = ComplexMatrix::identity(dim_a);
    let blocks: Vec<_> = probs.iter().map(|p| id.scale(p.sqrt())).collect();
    Ok(complete_to_unitary(&ComplexMatrix::vstack(&blocks)?))
}

#[derive(Clone, Debug)]
pub struct MultiCopyOptions {
    /// Copy count; defaults to `n_min`.
    pub copies: Option<usize>,
    /// Branch probabilities; defaults to the equal split.
    pub probs: Option<Vec<f64>>,
    pub bob_space_cap: usize,
}

impl Default for MultiCopyOptions {
    fn default() -> Self {
        MultiCopyOptions { copies: None, probs: None, bob_space_cap: DEFAULT_BOB_SPACE_CAP }
    }
}

#[derive(Clone, Debug)]
pub struct MultiCopyPlan {
    pub lambda: SchmidtVector,
    pub sigma: SchmidtVector,
    pub dim_a: usize,
    pub dim_b: usize,
    pub copies: usize,
    pub n_min: usize,
    pub p_opt: f64,
    pub branch_probs: Vec<f64>,
    /// Per-copy contraction realizing `√p_i Σ_d`.
    pub per_copy: Vec<Contraction>,
    pub delta: ComplexMatrix,
    pub omega: ComplexMatrix,
    pub u2: ComplexMatrix,
}

pub fn plan_multicopy(
    input: &BipartitePureState,
    target: &BipartitePureState,
    opts: &MultiCopyOptions,
) -> Result<MultiCopyPlan> {
    if input.dim_a() != target.dim_a() || input.dim_b() != target.dim_b() {
        return Err(Error::DimensionMismatch("input and target dimensions differ".into()));
    }
    let (m, nb) = (input.dim_a(), input.dim_b());
    let lambda = schmidt_decompose(input, ZERO_COEFF)?.coefficients();
    let sigma = schmidt_decompose(target, ZERO_COEFF)?.coefficients();
    let n_min = min_copies(&lambda, &sigma)?;
    let p_opt = optimal_probability(&lambda, &sigma);
    let copies = opts.copies.unwrap_or(n_min);
    let branch_probs = match &opts.probs {
        Some(p) => {
            if p.len() != copies {
                return Err(Error::InvalidArgument(format!(
                    "{} probabilities for {copies} copies",
                    p.len()
                )));
            }
            validate_distribution(p, p_opt)?;
            p.clone()
        }
        None => plan_distribution(copies, p_opt)?,
    };
    let per_copy = branch_probs
        .iter()
        .map(|&p| {
            if p == 0.0 {
                Contraction::new(vec![0.0; lambda.len()])
            } else {
                contraction_for(&lambda, &sigma, p.min(p_opt))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let (delta, omega) = build_omega(&sigma, &branch_probs, m, nb, opts.bob_space_cap)?;
    let u2 = assemble_u2(&branch_probs, m)?;
    Ok(MultiCopyPlan {
        lambda,
        sigma,
        dim_a: m,
        dim_b: nb,
        copies,
        n_min,
        p_opt,
        branch_probs,
        per_copy,
        delta,
        omega,
        u2,
    })
}

#[derive(Clone, Debug)]
pub struct MultiCopyResult {
    /// `U₂† Λ(Ω)Λ(Ω)† U₂` on the `nM`-dimensional extended space.
    pub rho_a_out: DensityMatrix,
    /// Entrywise distance from `block-diag(Σ_dΣ_d†, 0, …)`.
    pub block_defect: f64,
    /// First block of `U₂† Λ(Ω)` on `A ⊗ B₁ ⊗ … ⊗ B_n`.
    pub projected_state: MultipartiteState,
    pub projected_weight: f64,
    /// `(A, B_j)` marginals in the labeled model.
    pub pair_marginals: Vec<DensityMatrix>,
    /// `(A, B_j)` marginals after symmetrizing Bob's labels.
    pub symmetrized_pair_marginals: Vec<DensityMatrix>,
    pub classical_bits: u32,
}

pub fn finalize_multicopy(plan: &MultiCopyPlan) -> Result<MultiCopyResult> {
    let (m, n) = (plan.dim_a, plan.copies);
    let u2_dag = plan.u2.dagger();
    let rho = plan.omega.matmul(&plan.omega.dagger());
    let rho_out = u2_dag.matmul(&rho).matmul(&plan.u2);

    let mut expected = ComplexMatrix::zeros(n * m, n * m);
    let target_rho = ComplexMatrix::real_diag(m, m, &plan.sigma.padded(m.max(plan.sigma.len())).squares());
    expected.set_block(0, 0, &target_rho);
    let block_defect = rho_out.max_abs_diff(&expected);

    let folded = u2_dag.matmul(&plan.omega);
    let first = folded.block(0, 0, m, folded.cols());
    let projected_weight = first.frobenius_sq();
    let mut dims = vec![m];
    dims.extend(std::iter::repeat_n(plan.dim_b, n));
    let amps: Vec<Complex64> =
        first.to_row_major().into_iter().map(|z| z / projected_weight.sqrt()).collect();
    let projected_state = MultipartiteState::new(dims, amps)?;

    let pair_marginals = (1..=n)
        .map(|j| partial_trace(&projected_state, &[0, j]))
        .collect::<Result<Vec<_>>>()?;
    let symmetric = symmetrize_bob_slots(&projected_state)?;
    let symmetrized_pair_marginals = (1..=n)
        .map(|j| partial_trace(&symmetric, &[0, j]))
        .collect::<Result<Vec<_>>>()?;

    Ok(MultiCopyResult {
        rho_a_out: DensityMatrix::new(rho_out, UNITARY_TOL)?,
        block_defect,
        projected_state,
        projected_weight,
        pair_marginals,
        symmetrized_pair_marginals,
        classical_bits: MULTICOPY_MESSAGE_BITS,
    })
}

/// Index permutation exchanging Bob slots `a` and `b` (0-based) of an
/// `N^n`-dimensional labeled space.
pub fn slot_swap(dim_b: usize, copies: usize, a: usize, b: usize) -> Vec<usize> {
    let dim = dim_b.pow(copies as u32);
    let stride = |s: usize| dim_b.pow((copies - 1 - s) as u32);
    (0..dim)
        .map(|idx| {
            let da = (idx / stride(a)) % dim_b;
            let db = (idx / stride(b)) % dim_b;
            idx - da * stride(a) - db * stride(b) + db * stride(a) + da * stride(b)
        })
        .collect()
}

/// Projects factors `1..` (Bob's slots, all of equal dimension) onto their
/// symmetric subspace and renormalizes.
///
/// Uses `S_m = (1/m)(I + Σ_{j<m} T_{j,m}) S_{m−1}`, which costs `O(n²)`
/// slot swaps instead of `n!` permutations.
pub fn symmetrize_bob_slots(state: &MultipartiteState) -> Result<MultipartiteState> {
    let dims = state.dims();
    let copies = dims.len() - 1;
    if copies == 0 || dims[1..].iter().any(|&d| d != dims[1]) {
        return Err(Error::DimensionMismatch("Bob slots must share one dimension".into()));
    }
    let (dim_a, dim_b) = (dims[0], dims[1]);
    let bob_dim = state.amplitudes().len() / dim_a;
    let mut psi = state.amplitudes().to_vec();
    for m in 1..copies {
        let swaps: Vec<Vec<usize>> = (0..m).map(|j| slot_swap(dim_b, copies, j, m)).collect();
        let mut next = psi.clone();
        for swap in &swaps {
            for a in 0..dim_a {
                let row = a * bob_dim;
                for (c, &sc) in swap.iter().enumerate() {
                    next[row + c] += psi[row + sc];
                }
            }
        }
        let scale = 1.0 / (m + 1) as f64;
        psi = next.into_iter().map(|z| z * scale).collect();
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm <= 1e-150 {
        return Err(Error::NumericalFailure("state has no symmetric component".into()));
    }
    MultipartiteState::new(dims.to_vec(), psi.into_iter().map(|z| z / norm).collect())
}

#[derive(Clone, Debug)]
pub struct SpectrumReport {
    /// Eigenvalues of `Λ'Λ'†`, descending.
    pub omega_spectrum: Vec<f64>,
    /// `σ²` zero-padded to the same length.
    pub target_spectrum: Vec<f64>,
    pub max_deviation: f64,
}

/// Spectrum of Alice's reduced state when block `i` of `Λ(Ω)` is `√p_i Δ V_i`
/// for distinguishable Bob particles (`V_i` permutes the `N^n` labeled basis).
pub fn distinguishable_omega(
    sigma: &SchmidtVector,
    probs: &[f64],
    perms: &[Vec<usize>],
    dim_a: usize,
    dim_b: usize,
    cap: usize,
) -> Result<SpectrumReport> {
    if perms.len() != probs.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} permutations for {} blocks",
            perms.len(),
            probs.len()
        )));
    }
    let (delta, _) = build_omega(sigma, probs, dim_a, dim_b, cap)?;
    let cols = delta.cols();
    let mut blocks = Vec::with_capacity(probs.len());
    for (p, perm) in probs.iter().zip(perms) {
        let mut seen = vec![false; cols];
        if perm.len() != cols || perm.iter().any(|&c| c >= cols || std::mem::replace(&mut seen[c], true)) {
            return Err(Error::DimensionMismatch(format!(
                "V_i must be a permutation of {cols} labels"
            )));
        }
        // (Δ V)[:, perm[r]] = Δ[:, r]
        let mut b = ComplexMatrix::zeros(dim_a, cols);
        for (r, &c) in perm.iter().enumerate() {
            for a in 0..dim_a {
                b.set(a, c, delta.get(a, r) * p.sqrt());
            }
        }
        blocks.push(b);
    }
    let lp = ComplexMatrix::vstack(&blocks)?;
    let omega_spectrum = lp.matmul(&lp.dagger()).hermitian_eigenvalues()?;
    let mut target_spectrum = sigma.squares();
    target_spectrum.resize(omega_spectrum.len().max(target_spectrum.len()), 0.0);
    let max_deviation = omega_spectrum
        .iter()
        .zip(&target_spectrum)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(SpectrumReport { omega_spectrum, target_spectrum, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sv(squares: &[f64]) -> SchmidtVector {
        SchmidtVector::from_squares(squares).unwrap()
    }

    fn diag_state(squares: &[f64]) -> BipartitePureState {
        let d = squares.len();
        BipartitePureState::from_schmidt(&sv(squares), d, d).unwrap()
    }

    #[test]
    fn min_copies_examples() {
        let bell = sv(&[0.5, 0.5]);
        assert_eq!(min_copies(&sv(&[0.8, 0.2]), &bell).unwrap(), 3);
        assert_eq!(min_copies(&sv(&[0.75, 0.25]), &bell).unwrap(), 2);
        assert_eq!(min_copies(&bell, &bell).unwrap(), 1);
        assert!(matches!(min_copies(&sv(&[1.0, 0.0]), &bell), Err(Error::InfeasibleTarget(_))));
    }

    #[test]
    fn greatest_integer_convention() {
        assert_eq!(greatest_integer_below(2.5), 2);
        assert_eq!(greatest_integer_below(2.0), 1);
        assert_eq!(greatest_integer_below(2.0000000000000004), 1);
        assert_eq!(greatest_integer_below(1.0), 0);
    }

    #[test]
    fn yield_examples() {
        let (l, s) = (sv(&[0.8, 0.2]), sv(&[0.5, 0.5]));
        assert_eq!(feasible_yield(&l, &s, 10, Ratio::new(3, 10)).unwrap(), YieldVerdict::Certain);
        assert_eq!(feasible_yield(&l, &s, 10, Ratio::new(4, 10)).unwrap(), YieldVerdict::Impossible);
        assert_eq!(feasible_yield(&l, &s, 3, Ratio::new(1, 3)).unwrap(), YieldVerdict::Boundary);
        assert!(feasible_yield(&l, &s, 0, Ratio::new(1, 3)).is_err());
    }

    #[test]
    fn distribution_examples() {
        let p = plan_distribution(3, 0.4).unwrap();
        assert_eq!(p.len(), 3);
        assert_abs_diff_eq!(p[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(matches!(plan_distribution(2, 0.4), Err(Error::InfeasibleDistribution(_))));
        assert_eq!(plan_distribution(1, 1.0).unwrap(), vec![1.0]);
        assert!(validate_distribution(&[0.5, 0.3, 0.2], 0.5).is_ok());
        assert!(validate_distribution(&[0.6, 0.4], 0.5).is_err());
    }

    #[test]
    fn omega_examples() {
        let bell = sv(&[0.5, 0.5]);
        let (delta, omega) = build_omega(&bell, &[0.5, 0.5], 2, 2, 4096).unwrap();
        let expect = ComplexMatrix::from_real(2, 4, &[0.5, 0.5, 0., 0., 0., 0., 0.5, 0.5]).unwrap();
        assert!(delta.max_abs_diff(&expect) < 1e-15);
        assert_abs_diff_eq!(omega.frobenius_sq(), 1.0, epsilon = 1e-14);

        let s = sv(&[0.7, 0.3]);
        let (delta, omega) = build_omega(&s, &[1.0], 2, 2, 4096).unwrap();
        let sigma_d = ComplexMatrix::real_diag(2, 2, s.as_slice());
        assert_eq!(delta, sigma_d);
        assert_eq!(omega, sigma_d);

        let (delta, _) = build_omega(&bell, &[1. / 3., 1. / 3., 1. / 3.], 2, 2, 4096).unwrap();
        for c in 0..4 {
            assert_abs_diff_eq!(delta.get(0, c).re, 0.5f64.sqrt() / 2.0, epsilon = 1e-15);
            assert_abs_diff_eq!(delta.get(1, 4 + c).re, 0.353553390593274, epsilon = 1e-14);
        }

        assert!(matches!(
            build_omega(&bell, &[1.0 / 13.0; 13], 2, 2, 4096),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn u2_examples() {
        assert_eq!(assemble_u2(&[1.0], 2).unwrap(), ComplexMatrix::identity(2));
        let u = assemble_u2(&[0.5, 0.5], 1).unwrap();
        assert_abs_diff_eq!(u.get(0, 0).re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(u.get(1, 0).re, 0.5f64.sqrt(), epsilon = 1e-15);
        assert!(u.unitarity_defect() < 1e-14);
        let u = assemble_u2(&[1. / 3., 1. / 3., 1. / 3.], 2).unwrap();
        assert_eq!(u.rows(), 6);
        assert!(u.unitarity_defect() < 1e-10);
        assert!(matches!(assemble_u2(&[0.5, 0.4], 2), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn finalize_bell_from_three_copies() {
        let plan = plan_multicopy(&diag_state(&[0.8, 0.2]), &diag_state(&[0.5, 0.5]), &Default::default())
            .unwrap();
        assert_eq!(plan.copies, 3);
        let res = finalize_multicopy(&plan).unwrap();
        assert!(res.block_defect < 1e-10);
        let top = res.rho_a_out.matrix().block(0, 0, 2, 2);
        assert!(top.max_abs_diff(&ComplexMatrix::identity(2).scale(0.5)) < 1e-10);
        assert_abs_diff_eq!(res.projected_weight, 1.0, epsilon = 1e-10);
        assert!(res.classical_bits <= 1);
    }

    #[test]
    fn finalize_single_copy_identity() {
        let st = diag_state(&[0.6, 0.4]);
        let plan = plan_multicopy(&st, &st, &Default::default()).unwrap();
        assert_eq!(plan.copies, 1);
        let res = finalize_multicopy(&plan).unwrap();
        assert!(res.rho_a_out.matrix().max_abs_diff(&ComplexMatrix::real_diag(2, 2, &[0.6, 0.4])) < 1e-12);
    }

    #[test]
    fn labeled_pair_marginals() {
        let bell = diag_state(&[0.5, 0.5]);
        let opts = MultiCopyOptions { copies: Some(2), ..Default::default() };
        let plan = plan_multicopy(&bell, &bell, &opts).unwrap();
        let res = finalize_multicopy(&plan).unwrap();

        // Oracle: Σ_k σ_k |k⟩_A |k⟩_{B₁} |+⟩_{B₂}, traced over B₂ by hand.
        let bell_proj = crate::statecore::projector(&bell);
        assert!(res.pair_marginals[0].matrix().max_abs_diff(&bell_proj) < 1e-12);
        let plus = ComplexMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        let expect = ComplexMatrix::identity(2).scale(0.5).kron(&plus);
        assert!(res.pair_marginals[1].matrix().max_abs_diff(&expect) < 1e-12);
    }

    #[test]
    fn symmetrized_marginals_agree() {
        let opts = MultiCopyOptions { copies: Some(3), ..Default::default() };
        let plan = plan_multicopy(&diag_state(&[0.7, 0.3]), &diag_state(&[0.55, 0.45]), &opts).unwrap();
        let res = finalize_multicopy(&plan).unwrap();
        let first = res.symmetrized_pair_marginals[0].matrix();
        for m in &res.symmetrized_pair_marginals[1..] {
            assert!(m.matrix().max_abs_diff(first) < 1e-10);
        }
    }

    #[test]
    fn slot_swap_is_involution() {
        let p = slot_swap(3, 3, 0, 2);
        for (i, &j) in p.iter().enumerate() {
            assert_eq!(p[j], i);
        }
        // |0,1,2⟩ ↔ |2,1,0⟩
        assert_eq!(p[5], 21);
    }

    #[test]
    fn distinguishable_examples() {
        let bell = sv(&[0.5, 0.5]);
        let probs = [0.5, 0.5];
        let id: Vec<usize> = (0..4).collect();
        let r = distinguishable_omega(&bell, &probs, &[id.clone(), id.clone()], 2, 2, 4096).unwrap();
        assert!(r.max_deviation < 1e-10);

        let other = vec![3, 1, 0, 2];
        let r = distinguishable_omega(&bell, &probs, &[other.clone(), other], 2, 2, 4096).unwrap();
        assert!(r.max_deviation < 1e-10);

        let swap = slot_swap(2, 2, 0, 1);
        let r = distinguishable_omega(&bell, &probs, &[id, swap], 2, 2, 4096).unwrap();
        assert!(r.max_deviation > 1e-3);
    }
}
