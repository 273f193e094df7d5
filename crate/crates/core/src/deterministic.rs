//! Deterministic single-copy conversion when the input spectrum is majorized
//! by the target spectrum.
//!
//! The pipeline is: a doubly stochastic `D` with `λ² = D σ²` (a chain of
//! T-transforms), its Birkhoff decomposition `D = Σ p_i Π_i`, diagonal POVM
//! elements `A_i` with `A_i Λ_d = √p_i Π_i Σ_d Π_iᵀ`, and the block unitary
//! `U₁` whose first `M` columns stack the `A_i`. Alice reads off the branch,
//! undoes her half of the permutation locally and must tell Bob the branch so
//! he can undo his.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{complete_to_unitary, ComplexMatrix};
use crate::montecarlo::{message_bits, sample_outcome, trial_rng};
use crate::statecore::{
    apply_local, is_majorized_by, overlap, schmidt_decompose, sorted_padded, BipartitePureState,
    SchmidtForm, SchmidtVector, NORM_TOL, UNITARY_TOL, ZERO_COEFF,
};

/// Entries of a stochastic matrix below this are treated as zero.
const STOCHASTIC_ZERO: f64 = 1e-12;
/// Two probabilities closer than this are considered equal in the T-transform chain.
const CHAIN_EQ: f64 = 1e-15;

/// A permutation `i ↦ perm[i]`, as the matrix with ones at `(i, perm[i])`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &p in &perm {
            if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
                return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation")));
            }
        }
        Ok(Permutation(perm))
    }

    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &p) in self.0.iter().enumerate() {
            inv[p] = i;
        }
        Permutation(inv)
    }

    /// Extends with fixed points up to size `n`.
    pub fn extended(&self, n: usize) -> Self {
        assert!(n >= self.0.len());
        let mut p = self.0.clone();
        p.extend(self.0.len()..n);
        Permutation(p)
    }

    pub fn matrix(&self) -> ComplexMatrix {
        ComplexMatrix::permutation(&self.0)
    }

    pub fn real_matrix(&self) -> DMatrix<f64> {
        let n = self.0.len();
        DMatrix::from_fn(n, n, |r, c| if self.0[r] == c { 1.0 } else { 0.0 })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BirkhoffTerm {
    pub weight: f64,
    pub perm: Permutation,
}

fn check_doubly_stochastic(d: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !d.is_square() {
        return Err(Error::DimensionMismatch("doubly stochastic matrix must be square".into()));
    }
    if d.iter().any(|&x| !x.is_finite() || x < -tol) {
        return Err(Error::NumericalFailure("negative or non-finite entry".into()));
    }
    for r in 0..d.nrows() {
        let s = d.row(r).sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::NumericalFailure(format!("row {r} sums to {s}")));
        }
    }
    for c in 0..d.ncols() {
        let s = d.column(c).sum();
        if (s - 1.0).abs() > tol {
            return Err(Error::NumericalFailure(format!("column {c} sums to {s}")));
        }
    }
    Ok(())
}

/// Doubly stochastic `D` with `λ² = D σ²`, as a product of at most `d − 1`
/// T-transforms `t I + (1 − t) P_jk`.
///
/// Both vectors are sorted descending and zero-padded to a common length `d`
/// first; `D` acts on that sorted order.
pub fn doubly_stochastic_bridge(lambda_sq: &[f64], sigma_sq: &[f64], tol: f64) -> Result<DMatrix<f64>> {
    if !is_majorized_by(lambda_sq, sigma_sq, tol)? {
        return Err(Error::NotMajorized);
    }
    let d = lambda_sq.len().max(sigma_sq.len());
    let x = sorted_padded(lambda_sq, d);
    let mut y = sorted_padded(sigma_sq, d);
    let mut bridge = DMatrix::<f64>::identity(d, d);

    for _ in 0..d {
        // j: last index where y still exceeds x; k: first later index where x exceeds y.
        let Some(j) = (0..d).rev().find(|&i| y[i] > x[i] + CHAIN_EQ) else { break };
        let Some(k) = (j + 1..d).find(|&i| x[i] > y[i] + CHAIN_EQ) else { break };
        let (down, up) = (y[j] - x[j], x[k] - y[k]);
        let delta = down.min(up);
        let t = 1.0 - delta / (y[j] - y[k]);

        let mut step = DMatrix::<f64>::identity(d, d);
        step[(j, j)] = t;
        step[(k, k)] = t;
        step[(j, k)] = 1.0 - t;
        step[(k, j)] = 1.0 - t;
        bridge = &step * &bridge;

        let (yj, yk) = (y[j], y[k]);
        y[j] = t * yj + (1.0 - t) * yk;
        y[k] = t * yk + (1.0 - t) * yj;
        if down <= up {
            y[j] = x[j];
        }
        if up <= down {
            y[k] = x[k];
        }
    }

    let image = &bridge * nalgebra::DVector::from_vec(sorted_padded(sigma_sq, d));
    let err = image.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if err > UNITARY_TOL {
        return Err(Error::NumericalFailure(format!("bridge misses λ² by {err:e}")));
    }
    Ok(bridge)
}

/// Perfect matching using only entries of `m` at or above `floor`: greedy
/// first-free-column assignment, then augmenting paths for unmatched rows.
fn perfect_matching(m: &DMatrix<f64>, floor: f64) -> Option<Vec<usize>> {
    let n = m.nrows();
    let usable = |r: usize, c: usize| m[(r, c)] > STOCHASTIC_ZERO && m[(r, c)] >= floor;
    let mut col_owner: Vec<Option<usize>> = vec![None; n];
    let mut row_matched = vec![false; n];
    for (r, matched) in row_matched.iter_mut().enumerate() {
        if let Some(c) = (0..n).find(|&c| col_owner[c].is_none() && usable(r, c)) {
            col_owner[c] = Some(r);
            *matched = true;
        }
    }

    fn augment(
        r: usize,
        usable: &dyn Fn(usize, usize) -> bool,
        seen: &mut [bool],
        col_owner: &mut [Option<usize>],
    ) -> bool {
        for c in 0..seen.len() {
            if usable(r, c) && !seen[c] {
                seen[c] = true;
                if col_owner[c].is_none_or(|r2| augment(r2, usable, seen, col_owner)) {
                    col_owner[c] = Some(r);
                    return true;
                }
            }
        }
        false
    }

    for r in (0..n).filter(|&r| !row_matched[r]) {
        let mut seen = vec![false; n];
        if !augment(r, &usable, &mut seen, &mut col_owner) {
            return None;
        }
    }
    let mut perm = vec![0; n];
    for (c, owner) in col_owner.iter().enumerate() {
        perm[owner.expect("perfect matching covers every column")] = c;
    }
    Some(perm)
}

/// Perfect matching on the positive entries whose smallest entry is as
/// large as possible.
fn bottleneck_matching(m: &DMatrix<f64>) -> Option<Vec<usize>> {
    let mut levels: Vec<f64> = m.iter().copied().filter(|&x| x > STOCHASTIC_ZERO).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    // Matchability is monotone in the floor: search for the highest feasible one.
    let (mut lo, mut hi) = (0usize, levels.len());
    let mut best = None;
    while lo < hi {
        let mid = (lo + hi) / 2;
        match perfect_matching(m, levels[mid]) {
            Some(p) => {
                best = Some(p);
                hi = mid;
            }
            None => lo = mid + 1,
        }
    }
    best
}

/// Greedy Birkhoff–von Neumann decomposition: repeatedly match the positive
/// entries (bottleneck matching), peel off the smallest matched entry.
pub fn birkhoff_decompose(d: &DMatrix<f64>, tol: f64) -> Result<Vec<BirkhoffTerm>> {
    check_doubly_stochastic(d, tol.max(UNITARY_TOL))?;
    let n = d.nrows();
    let mut residual = d.map(|x| if x > STOCHASTIC_ZERO { x } else { 0.0 });
    let mut remaining = 1.0;
    let mut terms = Vec::new();
    let max_terms = (n - 1) * (n - 1) + 1;

    while remaining > tol {
        let Some(perm) = bottleneck_matching(&residual) else {
            if residual.max() <= STOCHASTIC_ZERO * n as f64 {
                break;
            }
            return Err(Error::NumericalFailure(format!(
                "no perfect matching with residual mass {remaining:e}"
            )));
        };
        let w = perm.iter().enumerate().map(|(r, &c)| residual[(r, c)]).fold(f64::INFINITY, f64::min);
        for (r, &c) in perm.iter().enumerate() {
            residual[(r, c)] -= w;
            if residual[(r, c)] <= STOCHASTIC_ZERO {
                residual[(r, c)] = 0.0;
            }
        }
        remaining -= w;
        terms.push(BirkhoffTerm { weight: w, perm: Permutation(perm) });
        if terms.len() > max_terms {
            return Err(Error::NumericalFailure("Birkhoff decomposition did not terminate".into()));
        }
    }
    Ok(terms)
}

/// `Σ p_i Π_i`.
pub fn recompose(terms: &[BirkhoffTerm], n: usize) -> DMatrix<f64> {
    terms
        .iter()
        .fold(DMatrix::zeros(n, n), |acc, t| acc + t.perm.real_matrix() * t.weight)
}

/// Diagonal POVM elements on Alice's `dim_a`-dimensional space.
///
/// Element `i` is `diag(g_i)` with `g_i[k]² = p_i σ²_{π_i(k)} / (D σ²)_k`, so
/// `Σ A_i†A_i = I` holds exactly and `A_i Λ_d = √p_i Π_i Σ_d Π_iᵀ` up to the
/// accuracy of `λ² = D σ²`. Indices beyond the Schmidt length get `√p_i`.
pub fn build_povm(
    lambda: &SchmidtVector,
    sigma: &SchmidtVector,
    terms: &[BirkhoffTerm],
    dim_a: usize,
) -> Result<Vec<ComplexMatrix>> {
    let d = lambda.len().max(sigma.len());
    if d > dim_a || terms.iter().any(|t| t.perm.len() != d) {
        return Err(Error::DimensionMismatch("terms do not match the Schmidt length".into()));
    }
    let lambda = lambda.padded(d);
    let sigma_sq = sigma.padded(d).squares();
    let mixed: Vec<f64> = (0..d)
        .map(|k| terms.iter().map(|t| t.weight * sigma_sq[t.perm.0[k]]).sum())
        .collect();

    let mut povm = Vec::with_capacity(terms.len());
    for t in terms {
        let mut g = vec![t.weight.sqrt(); dim_a];
        for k in 0..d {
            let need = t.weight * sigma_sq[t.perm.0[k]];
            if mixed[k] <= ZERO_COEFF * ZERO_COEFF {
                continue;
            }
            if lambda.as_slice()[k] <= ZERO_COEFF {
                return Err(Error::SingularInput(format!(
                    "λ_{k} = 0 but the target needs weight {need:e} there"
                )));
            }
            g[k] = (need / mixed[k]).sqrt();
        }
        povm.push(ComplexMatrix::real_diag(dim_a, dim_a, &g));
    }
    Ok(povm)
}

/// `n M x n M` unitary whose first `M` columns stack the POVM elements.
pub fn assemble_u1(povm: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let stacked = ComplexMatrix::vstack(povm)?;
    let defect = stacked.isometry_defect();
    if defect > 1e-8 {
        return Err(Error::NotIsometry(defect));
    }
    Ok(complete_to_unitary(&stacked))
}

#[derive(Clone, Debug)]
pub struct DeterministicPlan {
    pub lambda: SchmidtVector,
    pub sigma: SchmidtVector,
    /// `d x d` doubly stochastic, `λ² = D σ²`.
    pub bridge: DMatrix<f64>,
    pub terms: Vec<BirkhoffTerm>,
    /// Diagonal POVM elements in Alice's Schmidt basis.
    pub povm: Vec<ComplexMatrix>,
    pub u1: ComplexMatrix,
    /// Alice's local relabeling after branch `i` (`Π_iᵀ`, on `M`).
    pub alice_relabel: Vec<Permutation>,
    /// Bob's correction for branch `i` (on `N`); requires Alice's message.
    pub bob_corrections: Vec<Permutation>,
    /// Birkhoff weights `p_i`.
    pub branch_probs: Vec<f64>,
    /// Alice's full operation for branch `i` in the laboratory bases.
    pub alice_ops: Vec<ComplexMatrix>,
    /// Bob's full operation for branch `i` in the laboratory bases.
    pub bob_ops: Vec<ComplexMatrix>,
    /// Bob's operation when he does not learn the branch (frame change only).
    pub bob_uninformed_op: ComplexMatrix,
}

impl DeterministicPlan {
    pub fn classical_bits(&self) -> u32 {
        message_bits(self.terms.len())
    }
}

/// Plans the deterministic conversion `input → target` (equal local dimensions).
pub fn plan_deterministic(
    input: &BipartitePureState,
    target: &BipartitePureState,
) -> Result<DeterministicPlan> {
    if input.dim_a() != target.dim_a() || input.dim_b() != target.dim_b() {
        return Err(Error::DimensionMismatch(format!(
            "input is {}x{}, target {}x{}",
            input.dim_a(),
            input.dim_b(),
            target.dim_a(),
            target.dim_b()
        )));
    }
    let (m, n) = (input.dim_a(), input.dim_b());
    let sf_in = schmidt_decompose(input, ZERO_COEFF)?;
    let sf_t = schmidt_decompose(target, ZERO_COEFF)?;
    let lambda = sf_in.coefficients();
    let sigma = sf_t.coefficients();

    let bridge = doubly_stochastic_bridge(&lambda.squares(), &sigma.squares(), NORM_TOL)?;
    let terms = birkhoff_decompose(&bridge, NORM_TOL)?;
    let povm = build_povm(&lambda, &sigma, &terms, m)?;
    let u1 = assemble_u1(&povm)?;

    let alice_relabel: Vec<_> = terms.iter().map(|t| t.perm.extended(m).inverse()).collect();
    let bob_corrections: Vec<_> = terms.iter().map(|t| t.perm.extended(n).inverse()).collect();
    let (alice_ops, bob_ops) = lab_operations(&sf_in, &sf_t, &povm, &alice_relabel, &bob_corrections);
    let bob_uninformed_op = sf_in.right_unitary.dagger().matmul(&sf_t.right_unitary).transpose();

    Ok(DeterministicPlan {
        branch_probs: terms.iter().map(|t| t.weight).collect(),
        lambda,
        sigma,
        bridge,
        terms,
        povm,
        u1,
        alice_relabel,
        bob_corrections,
        alice_ops,
        bob_ops,
        bob_uninformed_op,
    })
}

/// With `Λ_in = U_in† Λ_d V_in` and `Λ_t = U_t† Σ_d V_t`, Alice applies
/// `U_t† R_i A_i U_in` and Bob `Y_i` with `Y_iᵀ = V_in† B_iᵀ V_t`.
fn lab_operations(
    sf_in: &SchmidtForm,
    sf_t: &SchmidtForm,
    povm: &[ComplexMatrix],
    alice_relabel: &[Permutation],
    bob_corrections: &[Permutation],
) -> (Vec<ComplexMatrix>, Vec<ComplexMatrix>) {
    let alice = povm
        .iter()
        .zip(alice_relabel)
        .map(|(a, r)| {
            sf_t.left_unitary
                .dagger()
                .matmul(&r.matrix())
                .matmul(a)
                .matmul(&sf_in.left_unitary)
        })
        .collect();
    let bob = bob_corrections
        .iter()
        .map(|b| {
            sf_in
                .right_unitary
                .dagger()
                .matmul(&b.matrix().transpose())
                .matmul(&sf_t.right_unitary)
                .transpose()
        })
        .collect();
    (alice, bob)
}

/// Result of one branch of the protocol.
#[derive(Clone, Debug)]
pub struct BranchReport {
    pub index: usize,
    /// `⟨Ψ₁|A_i†A_i|Ψ₁⟩` computed from the state.
    pub weight: f64,
    pub birkhoff_weight: f64,
    pub final_state: Option<BipartitePureState>,
    pub overlap_with_target: f64,
}

/// Evaluates every branch; with `inform_bob = false` Bob applies only his
/// branch-independent frame change.
pub fn exhaustive_branches(
    plan: &DeterministicPlan,
    input: &BipartitePureState,
    target: &BipartitePureState,
    inform_bob: bool,
) -> Result<Vec<BranchReport>> {
    plan.alice_ops
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let bob = if inform_bob { &plan.bob_ops[i] } else { &plan.bob_uninformed_op };
            let out = apply_local(input, a, bob)?;
            let overlap_with_target = match &out.state {
                Some(s) => overlap(s, target)?,
                None => 0.0,
            };
            Ok(BranchReport {
                index: i,
                weight: out.weight,
                birkhoff_weight: plan.branch_probs[i],
                final_state: out.state,
                overlap_with_target,
            })
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct ProtocolTrace {
    pub branch: usize,
    pub branch_probs: Vec<f64>,
    pub classical_bits_sent: u32,
    pub bob_applied: Permutation,
    pub final_state: BipartitePureState,
    pub final_overlap_with_target: f64,
}

/// Runs the protocol once with Born-rule branch sampling seeded by `seed`.
///
/// Branch probabilities are taken from the state and must agree with the
/// Birkhoff weights to `1e-10`.
pub fn run_deterministic(
    input: &BipartitePureState,
    target: &BipartitePureState,
    seed: u64,
) -> Result<ProtocolTrace> {
    let plan = plan_deterministic(input, target)?;
    run_plan(&plan, input, target, &mut trial_rng(seed, 0))
}

pub fn run_plan<R: rand::Rng + ?Sized>(
    plan: &DeterministicPlan,
    input: &BipartitePureState,
    target: &BipartitePureState,
    rng: &mut R,
) -> Result<ProtocolTrace> {
    let identity = ComplexMatrix::identity(input.dim_b());
    let weights = plan
        .alice_ops
        .iter()
        .map(|a| apply_local(input, a, &identity).map(|o| o.weight))
        .collect::<Result<Vec<_>>>()?;
    for (w, p) in weights.iter().zip(&plan.branch_probs) {
        if (w - p).abs() > UNITARY_TOL {
            return Err(Error::NumericalFailure(format!(
                "branch weight {w} disagrees with Birkhoff weight {p}"
            )));
        }
    }
    let branch = sample_outcome(&weights, rng)?;
    let out = apply_local(input, &plan.alice_ops[branch], &plan.bob_ops[branch])?;
    let final_state = out
        .state
        .ok_or_else(|| Error::NumericalFailure("sampled a zero-weight branch".into()))?;
    Ok(ProtocolTrace {
        branch,
        classical_bits_sent: plan.classical_bits(),
        bob_applied: plan.bob_corrections[branch].clone(),
        final_overlap_with_target: overlap(&final_state, target)?,
        final_state,
        branch_probs: weights,
    })
}
