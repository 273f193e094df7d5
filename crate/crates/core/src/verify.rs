//! Randomized invariant suites over every module.
//!
//! Each suite draws its instances from `trial_rng(seed, position)`, runs
//! single-threaded (apart from the thread-count comparison) and reduces to one
//! worst-case number compared against a fixed tolerance. Boolean checks count
//! violations against a tolerance of zero.

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::deterministic::{
    birkhoff_decompose, doubly_stochastic_bridge, exhaustive_branches, plan_deterministic,
    recompose, DeterministicPlan,
};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ONE};
use crate::montecarlo::{estimate_success, sample_outcome, trial_rng, TrialRng};
use crate::multicopy::{
    bob_space_dim, distinguishable_omega, feasible_yield, finalize_multicopy, min_copies,
    plan_distribution, plan_multicopy, slot_swap, MultiCopyOptions, MultiCopyPlan, YieldVerdict,
    DEFAULT_BOB_SPACE_CAP,
};
use crate::random::{
    ginibre, random_contraction, random_majorized_pair, random_mixture, random_simplex,
    random_spectrum, random_state, state_with_spectrum,
};
use crate::singlecopy::{
    bilateral_transform, concentrate, concentration_probability, dilate, optimal_probability,
    transform_single_copy, Contraction, Probability,
};
use crate::statecore::{
    is_majorized_by, partial_trace, reduced_density, schmidt_decompose, BipartitePureState,
    MultipartiteState, SchmidtVector, Side, ZERO_COEFF,
};

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Largest local dimension drawn.
    pub size_cap: usize,
    pub seed: u64,
    /// Added to one entry of every planned unitary before its check.
    pub perturb: f64,
    pub instances: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { size_cap: 6, seed: 0, perturb: 0.0, instances: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct SuiteParams {
    pub instances: usize,
    pub size_cap: usize,
    pub perturb: f64,
}

impl From<&VerifyOptions> for SuiteParams {
    fn from(o: &VerifyOptions) -> Self {
        SuiteParams { instances: o.instances, size_cap: o.size_cap.max(2), perturb: o.perturb }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub instances: usize,
    /// Worst deviation, or violation count; `None` if the suite errored.
    pub metric: Option<f64>,
    pub tol: f64,
    pub passed: bool,
    pub error: Option<String>,
}

/// Worst value and the number of instances that contributed.
#[derive(Clone, Copy, Debug, Default)]
pub struct Measure {
    pub worst: f64,
    pub instances: usize,
}

impl Measure {
    fn push(&mut self, v: f64) {
        self.worst = self.worst.max(v);
        self.instances += 1;
    }

    /// For boolean suites `worst` counts failures.
    fn violation(&mut self, failed: bool) {
        self.instances += 1;
        if failed {
            self.worst += 1.0;
        }
    }
}

type SuiteFn = fn(&mut TrialRng, &SuiteParams) -> Result<Measure>;

struct Suite {
    name: &'static str,
    tol: f64,
    run: SuiteFn,
}

const VIOLATIONS: f64 = 0.0;

const SUITES: &[Suite] = &[
    Suite { name: "statecore.schmidt_reconstruction", tol: 1e-10, run: schmidt_reconstruction },
    Suite { name: "statecore.spectrum_link", tol: 1e-9, run: spectrum_link },
    Suite { name: "statecore.marginal_spectra", tol: 1e-9, run: marginal_spectra },
    Suite { name: "statecore.majorization_order", tol: VIOLATIONS, run: majorization_order },
    Suite { name: "statecore.partial_trace_product", tol: 1e-12, run: partial_trace_product },
    Suite { name: "singlecopy.dilation_unitarity", tol: 1e-10, run: dilation_unitarity },
    Suite { name: "singlecopy.povm_blocks", tol: 1e-10, run: povm_blocks },
    Suite { name: "singlecopy.optimality_search", tol: 1e-9, run: optimality_search },
    Suite { name: "singlecopy.bilateral_no_gain", tol: 1e-9, run: bilateral_no_gain },
    Suite { name: "singlecopy.concentration", tol: 1e-10, run: concentration },
    Suite { name: "singlecopy.residual_at_opt", tol: 1e-10, run: residual_at_opt },
    Suite { name: "deterministic.bridge", tol: 1e-10, run: bridge },
    Suite { name: "deterministic.birkhoff", tol: 1e-10, run: birkhoff },
    Suite { name: "deterministic.povm_completeness", tol: 1e-10, run: povm_completeness },
    Suite { name: "deterministic.u1_unitarity", tol: 1e-10, run: u1_unitarity },
    Suite { name: "deterministic.branch_overlap", tol: 1e-9, run: branch_overlap },
    Suite { name: "deterministic.branch_weights", tol: 1e-10, run: branch_weights },
    Suite { name: "deterministic.spectrum_claim", tol: 1e-9, run: spectrum_claim },
    Suite { name: "deterministic.necessity_witness", tol: VIOLATIONS, run: necessity_witness },
    Suite { name: "multicopy.min_copies", tol: VIOLATIONS, run: min_copies_bruteforce },
    Suite { name: "multicopy.block_identity", tol: 1e-10, run: block_identity },
    Suite { name: "multicopy.delta_gram", tol: 1e-12, run: delta_gram },
    Suite { name: "multicopy.u2_unitarity", tol: 1e-10, run: u2_unitarity },
    Suite { name: "multicopy.symmetric_marginals", tol: 1e-10, run: symmetric_marginals },
    Suite { name: "multicopy.classical_bits", tol: VIOLATIONS, run: multicopy_bits },
    Suite { name: "multicopy.yield_dichotomy", tol: VIOLATIONS, run: yield_dichotomy },
    Suite { name: "multicopy.distinguishable", tol: VIOLATIONS, run: distinguishable },
    Suite { name: "montecarlo.reproducibility", tol: VIOLATIONS, run: mc_reproducibility },
    Suite { name: "montecarlo.three_sigma", tol: VIOLATIONS, run: mc_three_sigma },
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.name).collect()
}

/// Runs one suite by name.
pub fn run_suite(name: &str, seed: u64, params: &SuiteParams) -> Result<SuiteResult> {
    let (pos, suite) = SUITES
        .iter()
        .enumerate()
        .find(|(_, s)| s.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {name}")))?;
    let mut rng = trial_rng(seed, pos as u64);
    Ok(match (suite.run)(&mut rng, params) {
        Ok(m) => SuiteResult {
            name: suite.name,
            instances: m.instances,
            metric: Some(m.worst.max(0.0)),
            tol: suite.tol,
            passed: m.worst <= suite.tol,
            error: None,
        },
        Err(e) => SuiteResult {
            name: suite.name,
            instances: 0,
            metric: None,
            tol: suite.tol,
            passed: false,
            error: Some(e.to_string()),
        },
    })
}

pub fn run_all(opts: &VerifyOptions) -> Vec<SuiteResult> {
    let params = SuiteParams::from(opts);
    SUITES
        .iter()
        .map(|s| run_suite(s.name, opts.seed, &params).expect("registered suite"))
        .collect()
}

fn dim<R: Rng + ?Sized>(rng: &mut R, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi.max(lo))
}

fn perturbed(u: &ComplexMatrix, eps: f64) -> ComplexMatrix {
    let mut u = u.clone();
    if eps != 0.0 {
        u.set(0, 0, u.get(0, 0) + ONE * eps);
    }
    u
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    (0..len)
        .map(|i| (a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max)
}

fn diag_state(coeffs: &SchmidtVector) -> Result<BipartitePureState> {
    BipartitePureState::from_schmidt(coeffs, coeffs.len(), coeffs.len())
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                extend(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Best success weight over diagonal contractions that turn `Λ_d` into some
/// relabeling of `Σ_d`: every pairing `π` and `p` on a grid of `grid` steps
/// plus the boundary `min_k λ_k²/σ_π(k)²` of that pairing.
pub fn diagonal_search(lambda: &SchmidtVector, sigma: &SchmidtVector, grid: usize) -> f64 {
    let len = lambda.len().max(sigma.len());
    let (l, s) = (lambda.padded(len), sigma.padded(len));
    let (l, s) = (l.as_slice(), s.as_slice());
    let mut best: f64 = 0.0;
    for perm in permutations(len) {
        let boundary = (0..len)
            .filter(|&k| s[perm[k]] > ZERO_COEFF)
            .map(|k| (l[k] * l[k]) / (s[perm[k]] * s[perm[k]]))
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let candidates = (1..=grid).map(|j| j as f64 / grid as f64).chain([boundary]);
        for p in candidates {
            let mut weight = 0.0;
            let mut ok = true;
            for k in 0..len {
                let target = s[perm[k]];
                if target <= ZERO_COEFF {
                    continue;
                }
                if l[k] <= ZERO_COEFF {
                    ok = false;
                    break;
                }
                let c = p.sqrt() * target / l[k];
                if c > 1.0 + 1e-12 {
                    ok = false;
                    break;
                }
                let c = c.min(1.0);
                weight += c * c * l[k] * l[k];
            }
            if ok {
                best = best.max(weight);
            }
        }
    }
    best
}

fn schmidt_reconstruction(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let state = random_state(dim(rng, 1, p.size_cap), dim(rng, 1, p.size_cap), rng);
        let sf = schmidt_decompose(&state, ZERO_COEFF)?;
        m.push(
            sf.reconstruct()
                .max_abs_diff(state.coeffs())
                .max(sf.left_unitary.unitarity_defect())
                .max(sf.right_unitary.unitarity_defect()),
        );
    }
    Ok(m)
}

fn spectrum_link(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let state = random_state(dim(rng, 1, p.size_cap), dim(rng, 1, p.size_cap), rng);
        let lambda = schmidt_decompose(&state, ZERO_COEFF)?.coefficients();
        m.push(max_diff(&reduced_density(&state, Side::A).spectrum(), &lambda.squares()));
    }
    Ok(m)
}

fn marginal_spectra(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let state = random_state(dim(rng, 1, p.size_cap), dim(rng, 1, p.size_cap), rng);
        m.push(max_diff(
            &reduced_density(&state, Side::A).spectrum(),
            &reduced_density(&state, Side::B).spectrum(),
        ));
    }
    Ok(m)
}

fn majorization_order(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let len = dim(rng, 1, p.size_cap);
        let z = random_simplex(len, rng);
        let y = random_mixture(&z, rng);
        let x = random_mixture(&y, rng);
        let mut e1 = vec![0.0; len];
        e1[0] = 1.0;
        let uniform = vec![1.0 / len as f64; len];
        let maj = |a: &[f64], b: &[f64]| is_majorized_by(a, b, 1e-12);
        let chain = maj(&x, &x)? && maj(&x, &y)? && maj(&y, &z)? && maj(&x, &z)?;
        let extremes = maj(&z, &e1)? && maj(&uniform, &z)?;
        // Transitivity on an unrelated triple.
        let (a, b, c) = (random_simplex(len, rng), random_simplex(len, rng), random_simplex(len, rng));
        let transitive = !(maj(&a, &b)? && maj(&b, &c)?) || maj(&a, &c)?;
        m.violation(!(chain && extremes && transitive));
    }
    Ok(m)
}

fn partial_trace_product(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let factors = dim(rng, 2, 3);
        let dims: Vec<usize> = (0..factors).map(|_| dim(rng, 1, p.size_cap.min(4))).collect();
        let vecs: Vec<ComplexMatrix> = dims
            .iter()
            .map(|&d| {
                let g = ginibre(d, 1, rng);
                g.scale(1.0 / g.frobenius_sq().sqrt())
            })
            .collect();
        let psi = vecs[1..].iter().fold(vecs[0].clone(), |acc, v| acc.kron(v));
        let state = MultipartiteState::new(dims.clone(), psi.to_row_major())?;
        let mut keep: Vec<usize> = (0..factors).filter(|_| rng.random_bool(0.5)).collect();
        if keep.is_empty() {
            keep.push(rng.random_range(0..factors));
        }
        let expect = keep
            .iter()
            .map(|&f| vecs[f].matmul(&vecs[f].dagger()))
            .reduce(|a, b| a.kron(&b))
            .expect("nonempty keep list");
        m.push(partial_trace(&state, &keep)?.matrix().max_abs_diff(&expect));
    }
    Ok(m)
}

fn dilation_unitarity(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let d = dim(rng, 1, p.size_cap);
        let mut a = random_contraction(d, rng);
        if rng.random_range(0..8) == 0 {
            a = a.scale(1.0 / a.operator_norm());
        }
        let u = perturbed(&dilate(&a)?, p.perturb);
        m.push(u.unitarity_defect().max(u.block(0, 0, d, d).max_abs_diff(&a)));
    }
    Ok(m)
}

fn povm_blocks(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let d = dim(rng, 1, p.size_cap);
        let a = random_contraction(d, rng);
        let u = dilate(&a)?;
        let rho = reduced_density(&random_state(d, d, rng), Side::A).matrix().clone();
        let mut big = ComplexMatrix::zeros(2 * d, 2 * d);
        big.set_block(0, 0, &rho);
        let out = u.matmul(&big).matmul(&u.dagger());
        let at = (&ComplexMatrix::identity(d) - &a.dagger().matmul(&a)).psd_sqrt()?;
        let expect = [
            (0, 0, a.matmul(&rho).matmul(&a.dagger())),
            (0, d, a.matmul(&rho).matmul(&at)),
            (d, 0, at.matmul(&rho).matmul(&a.dagger())),
            (d, d, at.matmul(&rho).matmul(&at)),
        ];
        let worst = expect
            .iter()
            .map(|(r, c, blk)| out.block(*r, *c, d, d).max_abs_diff(blk))
            .fold(0.0, f64::max);
        m.push(worst);
    }
    Ok(m)
}

fn optimality_search(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let len = dim(rng, 2, p.size_cap.min(5));
        let lambda = random_spectrum(len, dim(rng, 1, len), rng);
        let sigma = random_spectrum(len, dim(rng, 1, len), rng);
        let excess = diagonal_search(&lambda, &sigma, 200) - optimal_probability(&lambda, &sigma);
        m.push(excess);
    }
    Ok(m)
}

fn bilateral_no_gain(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let len = dim(rng, 2, p.size_cap.min(5));
        let lambda = random_spectrum(len, len, rng);
        let sigma = random_spectrum(len, dim(rng, 1, len), rng);
        let (l, s) = (lambda.as_slice(), sigma.as_slice());
        let b: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..=1.0)).collect();
        let t_max = (0..len)
            .filter(|&k| s[k] > 0.0)
            .map(|k| l[k] * b[k] / s[k])
            .fold(f64::INFINITY, f64::min);
        let t = if rng.random_bool(0.5) { t_max } else { t_max * rng.random::<f64>() };
        let a: Vec<f64> = (0..len)
            .map(|k| if s[k] > 0.0 { (t * s[k] / (l[k] * b[k])).min(1.0) } else { 0.0 })
            .collect();
        let out = bilateral_transform(&diag_state(&lambda)?, &Contraction::new(a)?, &Contraction::new(b)?)?;
        let excess = out.components[0].weight - optimal_probability(&lambda, &sigma);
        let leak = if (out.total_weight() - 1.0).abs() > 1e-10 { 1.0 } else { 0.0 };
        m.push(excess.max(leak));
    }
    Ok(m)
}

fn concentration(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let len = dim(rng, 2, p.size_cap);
        let lambda = random_spectrum(len, dim(rng, 2, len), rng);
        let state = state_with_spectrum(&lambda, len, len, rng)?;
        let lambda = schmidt_decompose(&state, ZERO_COEFF)?.coefficients();
        for k in 2..=lambda.rank() {
            let expect = concentration_probability(&lambda, k);
            let out = concentrate(&state, k)?;
            let me = SchmidtVector::maximally_entangled(k, len)?;
            m.push(
                (out.success_prob - expect)
                    .abs()
                    .max((optimal_probability(&lambda, &me) - expect).abs()),
            );
        }
    }
    Ok(m)
}

fn residual_at_opt(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let len = dim(rng, 2, p.size_cap);
        let rank = dim(rng, 1, len);
        let lambda = random_spectrum(len, rank, rng);
        let sigma = random_spectrum(len, dim(rng, 1, rank), rng);
        let input = state_with_spectrum(&lambda, len, len, rng)?;
        let target = state_with_spectrum(&sigma, len, len, rng)?;
        let out = transform_single_copy(&input, &target, Probability::Optimal)?;
        m.push(out.residual_extractability.max((out.success_prob - out.plan.optimal_prob).abs()));
    }
    Ok(m)
}

fn check_doubly_stochastic(d: &DMatrix<f64>) -> f64 {
    let rows = d.row_iter().map(|r| (r.sum() - 1.0).abs());
    let cols = d.column_iter().map(|c| (c.sum() - 1.0).abs());
    let neg = d.iter().map(|&x| (-x).max(0.0));
    rows.chain(cols).chain(neg).fold(0.0, f64::max)
}

fn bridge(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let (lambda, sigma) = random_majorized_pair(dim(rng, 1, p.size_cap), rng);
        let d = doubly_stochastic_bridge(&lambda.squares(), &sigma.squares(), 1e-12)?;
        let mapped = &d * DMatrix::from_column_slice(sigma.len(), 1, &sigma.squares());
        m.push(max_diff(mapped.as_slice(), &lambda.squares()).max(check_doubly_stochastic(&d)));
    }
    Ok(m)
}

fn birkhoff(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let len = dim(rng, 1, p.size_cap);
        let (lambda, sigma) = random_majorized_pair(len, rng);
        let d = doubly_stochastic_bridge(&lambda.squares(), &sigma.squares(), 1e-12)?;
        let terms = birkhoff_decompose(&d, 1e-12)?;
        let too_many = terms.len() > (len - 1) * (len - 1) + 1;
        let err = (recompose(&terms, len) - &d).abs().max();
        m.push(if too_many { 1.0 } else { err });
    }
    Ok(m)
}

/// Random majorized pair embedded in random local frames.
fn det_instance(
    rng: &mut TrialRng,
    cap: usize,
) -> Result<(BipartitePureState, BipartitePureState, DeterministicPlan)> {
    let len = dim(rng, 1, cap);
    let (lambda, sigma) = random_majorized_pair(len, rng);
    let input = state_with_spectrum(&lambda, len, len, rng)?;
    let target = state_with_spectrum(&sigma, len, len, rng)?;
    let plan = plan_deterministic(&input, &target)?;
    Ok((input, target, plan))
}

fn povm_completeness(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let (input, _, plan) = det_instance(rng, p.size_cap)?;
        let d = input.dim_a();
        let sum = plan
            .povm
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, a| &acc + &a.dagger().matmul(a));
        m.push(sum.max_abs_diff(&ComplexMatrix::identity(d)));
    }
    Ok(m)
}

fn u1_unitarity(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let (_, _, plan) = det_instance(rng, p.size_cap)?;
        m.push(perturbed(&plan.u1, p.perturb).unitarity_defect());
    }
    Ok(m)
}

fn branch_overlap(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let (input, target, plan) = det_instance(rng, p.size_cap)?;
        let worst = exhaustive_branches(&plan, &input, &target, true)?
            .iter()
            .map(|b| 1.0 - b.overlap_with_target)
            .fold(0.0, f64::max);
        m.push(worst);
    }
    Ok(m)
}

fn branch_weights(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let (input, target, plan) = det_instance(rng, p.size_cap)?;
        let worst = exhaustive_branches(&plan, &input, &target, true)?
            .iter()
            .map(|b| (b.weight - b.birkhoff_weight).abs())
            .fold(0.0, f64::max);
        m.push(worst);
    }
    Ok(m)
}

fn spectrum_claim(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let (input, _, plan) = det_instance(rng, p.size_cap)?;
        let d = input.dim_a();
        let rho = ComplexMatrix::real_diag(d, d, &plan.lambda.padded(d).squares());
        let sigma_sq = plan.sigma.squares();
        for (a, &w) in plan.povm.iter().zip(&plan.branch_probs) {
            let eig = a.matmul(&rho).matmul(&a.dagger()).hermitian_eigenvalues()?;
            let expect: Vec<f64> = sigma_sq.iter().map(|s| w * s).collect();
            m.worst = m.worst.max(max_diff(&eig, &expect));
        }
        m.instances += 1;
    }
    Ok(m)
}

/// Spectra this close are equal: the transformation is trivial and needs no
/// message.
const WITNESS_GAP: f64 = 1e-9;

fn necessity_witness(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let (input, target, plan) = det_instance(rng, p.size_cap)?;
        if max_diff(&plan.lambda.squares(), &plan.sigma.squares()) <= WITNESS_GAP {
            continue;
        }
        let distinct = plan.bob_corrections.iter().any(|b| *b != plan.bob_corrections[0]);
        let broken = exhaustive_branches(&plan, &input, &target, false)?
            .iter()
            .any(|b| b.overlap_with_target < 1.0 - 1e-6);
        m.violation(!(distinct && broken));
    }
    Ok(m)
}

fn min_copies_bruteforce(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    while m.instances < p.instances {
        let len = dim(rng, 2, p.size_cap.min(4));
        let rank = dim(rng, 1, len);
        let lambda = random_spectrum(len, rank, rng);
        let sigma = random_spectrum(len, dim(rng, 1, rank), rng);
        let p_opt = optimal_probability(&lambda, &sigma);
        if p_opt < 1.0 / 32.0 {
            continue;
        }
        let brute = (1..=32usize).find(|&n| 1.0 / n as f64 <= p_opt);
        let planned = (1..=32usize).find(|&n| plan_distribution(n, p_opt).is_ok());
        let n_min = min_copies(&lambda, &sigma)?;
        m.violation(brute != Some(n_min) || planned != Some(n_min));
    }
    Ok(m)
}

/// Random multi-copy plan with `N^n` within the cap.
fn multi_instance(rng: &mut TrialRng, cap: usize) -> Result<MultiCopyPlan> {
    loop {
        let (ma, nb) = (dim(rng, 2, cap.min(4)), dim(rng, 2, cap.min(4)));
        let len = ma.min(nb);
        let rank = dim(rng, 1, len);
        let lambda = random_spectrum(len, rank, rng);
        let sigma = random_spectrum(len, dim(rng, 1, rank), rng);
        let n_min = min_copies(&lambda, &sigma)?;
        let copies = n_min + rng.random_range(0..=2);
        if bob_space_dim(nb, copies, DEFAULT_BOB_SPACE_CAP).is_err() {
            continue;
        }
        let input = state_with_spectrum(&lambda, ma, nb, rng)?;
        let target = state_with_spectrum(&sigma, ma, nb, rng)?;
        let opts = MultiCopyOptions { copies: Some(copies), ..Default::default() };
        return plan_multicopy(&input, &target, &opts);
    }
}

fn block_identity(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        m.push(finalize_multicopy(&multi_instance(rng, p.size_cap)?)?.block_defect);
    }
    Ok(m)
}

fn delta_gram(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let plan = multi_instance(rng, p.size_cap)?;
        let d = plan.dim_a;
        let expect = ComplexMatrix::real_diag(d, d, &plan.sigma.padded(d.max(plan.sigma.len())).squares());
        m.push(plan.delta.matmul(&plan.delta.dagger()).max_abs_diff(&expect));
    }
    Ok(m)
}

fn u2_unitarity(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let plan = multi_instance(rng, p.size_cap)?;
        m.push(perturbed(&plan.u2, p.perturb).unitarity_defect());
    }
    Ok(m)
}

fn symmetric_marginals(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let res = finalize_multicopy(&multi_instance(rng, p.size_cap)?)?;
        let first = res.symmetrized_pair_marginals[0].matrix();
        let worst = res.symmetrized_pair_marginals[1..]
            .iter()
            .map(|r| r.matrix().max_abs_diff(first))
            .fold(0.0, f64::max);
        m.push(worst);
    }
    Ok(m)
}

fn multicopy_bits(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances.min(10) {
        let res = finalize_multicopy(&multi_instance(rng, p.size_cap)?)?;
        m.violation(res.classical_bits > 1);
    }
    Ok(m)
}

fn yield_dichotomy(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances {
        let len = dim(rng, 2, p.size_cap.min(4));
        let lambda = random_spectrum(len, len, rng);
        let sigma = random_spectrum(len, dim(rng, 1, len), rng);
        let n_min = min_copies(&lambda, &sigma)? as u64;
        let n = rng.random_range(1..=64u64);
        let (a, b) = (rng.random_range(1..=64u64), rng.random_range(1..=64u64));
        // K = a/b against 1/n_min: a · n_min versus b.
        let expect = match (a * n_min).cmp(&b) {
            std::cmp::Ordering::Less => YieldVerdict::Certain,
            std::cmp::Ordering::Greater => YieldVerdict::Impossible,
            std::cmp::Ordering::Equal => YieldVerdict::Boundary,
        };
        let at = |k: Ratio<u64>| feasible_yield(&lambda, &sigma, n, k);
        let mut ok = at(Ratio::new(a, b))? == expect;
        ok &= at(Ratio::new(1, n_min))? == YieldVerdict::Boundary;
        ok &= at(Ratio::new(1, n_min + 1))? == YieldVerdict::Certain;
        if n_min > 1 {
            ok &= at(Ratio::new(1, n_min - 1))? == YieldVerdict::Impossible;
        }
        m.violation(!ok);
    }
    Ok(m)
}

fn distinguishable(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    let bell = SchmidtVector::from_squares(&[0.5, 0.5])?;
    let id: Vec<usize> = (0..4).collect();
    let witness = distinguishable_omega(&bell, &[0.5, 0.5], &[id, slot_swap(2, 2, 0, 1)], 2, 2, 4096)?;
    m.violation(witness.max_deviation <= 1e-3);
    for _ in 0..p.instances {
        let nb = dim(rng, 2, p.size_cap.min(3));
        let copies = dim(rng, 1, if nb == 2 { 6 } else { 4 });
        let sigma = random_spectrum(nb, dim(rng, 1, nb), rng);
        let probs = vec![1.0 / copies as f64; copies];
        let mut v: Vec<usize> = (0..nb.pow(copies as u32)).collect();
        v.shuffle(rng);
        let perms = vec![v; copies];
        let r = distinguishable_omega(&sigma, &probs, &perms, nb, nb, 4096)?;
        m.violation(r.max_deviation > 1e-10);
    }
    Ok(m)
}

fn mc_reproducibility(rng: &mut TrialRng, p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    for _ in 0..p.instances.min(5) {
        let weights = random_simplex(dim(rng, 1, p.size_cap), rng);
        let seed = rng.random::<u64>();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .map_err(|e| Error::NumericalFailure(e.to_string()))?
                .install(|| estimate_success(|r| sample_outcome(&weights, r), 5_000, seed))
        };
        m.violation(run(1)? != run(3)?);
    }
    Ok(m)
}

fn mc_three_sigma(rng: &mut TrialRng, _p: &SuiteParams) -> Result<Measure> {
    let mut m = Measure::default();
    let lambda = SchmidtVector::from_squares(&[0.8, 0.2])?;
    let bell = SchmidtVector::from_squares(&[0.5, 0.5])?;
    let out = transform_single_copy(&diag_state(&lambda)?, &diag_state(&bell)?, Probability::Optimal)?;
    let p = out.success_prob;
    let stats = estimate_success(|r| sample_outcome(&[p, 1.0 - p], r), 100_000, rng.random())?;
    m.violation(!stats.within(0, p, 3.0));
    Ok(m)
}
