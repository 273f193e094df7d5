//! Optimal probabilistic single-copy conversion by one party alone.
//!
//! Both states are brought to Schmidt form, Alice picks a diagonal
//! contraction `A` with `A Λ_d = √p Σ_d`, and embeds it in the unitary
//!
//! ```text
//!         ⎡ A           −(I − AA†)^½ ⎤
//!   U₀ =  ⎣ (I − A†A)^½   A†          ⎦
//! ```
//!
//! acting on her space doubled by a complementary block of basis vectors.
//! Applied to `(Λ_d; 0)`, the top block is the target with weight `p` and the
//! bottom block the failure branch. Projecting onto the two blocks replaces
//! the usual ancilla-assisted POVM `{A†A, I − A†A}`.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::statecore::{
    pad_pair, schmidt_decompose, BipartitePureState, SchmidtVector, NORM_TOL, UNITARY_TOL,
    ZERO_COEFF,
};

/// Slack allowed when checking `cos θ_i ≤ 1` and `p ≤ p_opt`.
const CONTRACTION_SLACK: f64 = 1e-12;

/// `p_opt = min_k λ_k² / σ_k²` over `σ_k > 0`, clamped to `[0, 1]`.
///
/// A target coefficient paired with a zero input coefficient makes the
/// conversion impossible (`0`). Vectors are zero-padded to a common length.
pub fn optimal_probability(lambda: &SchmidtVector, sigma: &SchmidtVector) -> f64 {
    let (lambda, sigma) = pad_pair(lambda, sigma);
    let mut p: f64 = 1.0;
    for (&l, &s) in lambda.as_slice().iter().zip(sigma.as_slice()) {
        if s <= ZERO_COEFF {
            continue;
        }
        if l <= ZERO_COEFF {
            return 0.0;
        }
        let r = l / s;
        p = p.min(r * r);
    }
    p.clamp(0.0, 1.0)
}

/// A diagonal contraction `diag(cos θ_i)` with every entry in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Contraction {
    diag: Vec<f64>,
}

impl Contraction {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("empty contraction".into()));
        }
        if let Some(x) = diag.iter().find(|x| !x.is_finite() || **x < 0.0 || **x > 1.0) {
            return Err(Error::NotContraction(format!("diagonal entry {x} outside [0, 1]")));
        }
        Ok(Contraction { diag })
    }

    pub fn identity(n: usize) -> Self {
        Contraction { diag: vec![1.0; n] }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `θ_i = arccos(diag_i)`.
    pub fn angles(&self) -> Vec<f64> {
        self.diag.iter().map(|c| c.acos()).collect()
    }

    pub fn as_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::real_diag(self.dim(), self.dim(), &self.diag)
    }

    /// `diag(√(1 − cos² θ_i)) = (I − A†A)^½`.
    pub fn complement(&self) -> ComplexMatrix {
        let s: Vec<f64> = self.diag.iter().map(|c| (1.0 - c * c).max(0.0).sqrt()).collect();
        ComplexMatrix::real_diag(self.dim(), self.dim(), &s)
    }

    /// Zero-extends to dimension `n` (extra rows carry no amplitude).
    pub fn padded(&self, n: usize) -> Contraction {
        assert!(n >= self.dim(), "cannot shrink a contraction");
        let mut diag = self.diag.clone();
        diag.resize(n, 0.0);
        Contraction { diag }
    }
}

/// Builds `A` with `A Λ_d = √p Σ_d`: `cos θ_i = √p σ_i / λ_i`, and zero where
/// `σ_i = 0`.
pub fn contraction_for(lambda: &SchmidtVector, sigma: &SchmidtVector, p: f64) -> Result<Contraction> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("probability {p} not in (0, 1]")));
    }
    let (lambda, sigma) = pad_pair(lambda, sigma);
    let sp = p.sqrt();
    let mut diag = Vec::with_capacity(lambda.len());
    for (i, (&l, &s)) in lambda.as_slice().iter().zip(sigma.as_slice()).enumerate() {
        if s <= ZERO_COEFF {
            diag.push(0.0);
            continue;
        }
        if l <= ZERO_COEFF {
            return Err(Error::NotContraction(format!(
                "target coefficient {i} is nonzero but the input's is zero"
            )));
        }
        let c = sp * s / l;
        if c > 1.0 + CONTRACTION_SLACK {
            return Err(Error::NotContraction(format!(
                "cos θ_{i} = {c} > 1; p = {p} exceeds the optimum {}",
                optimal_probability(&lambda, &sigma)
            )));
        }
        diag.push(c.min(1.0));
    }
    Contraction::new(diag)
}

/// Halmos dilation of a square contraction:
/// `[[A, −(I − AA†)^½], [(I − A†A)^½, A†]]`.
///
/// The two defect operators share the singular vectors of `A = W C Z†`:
/// `(I − AA†)^½ = W S W†` and `(I − A†A)^½ = Z S Z†` with `S = (I − C²)^½`,
/// which keeps the result unitary to working precision even when `‖A‖ = 1`.
pub fn dilate(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch("contraction must be square".into()));
    }
    let n = a.rows();
    let (left, right) = match a.real_diagonal() {
        Some(diag) => {
            let s = defect_values(&diag)?;
            let d = ComplexMatrix::real_diag(n, n, &s);
            (d.clone(), d)
        }
        None => {
            let svd = a.svd();
            let s = ComplexMatrix::real_diag(n, n, &defect_values(&svd.singular_values)?);
            (
                svd.u.matmul(&s).matmul(&svd.u.dagger()),
                svd.v.matmul(&s).matmul(&svd.v.dagger()),
            )
        }
    };
    let mut u = ComplexMatrix::zeros(2 * n, 2 * n);
    u.set_block(0, 0, a);
    u.set_block(0, n, &left.scale(-1.0));
    u.set_block(n, 0, &right);
    u.set_block(n, n, &a.dagger());
    Ok(u)
}

/// `√(1 − c²)` for each `|c| ≤ 1` (up to `1e-10`).
fn defect_values(cs: &[f64]) -> Result<Vec<f64>> {
    cs.iter()
        .map(|&c| {
            if c.abs() > 1.0 + UNITARY_TOL {
                return Err(Error::NotContraction(format!("singular value {c} exceeds one")));
            }
            Ok((1.0 - c * c).max(0.0).sqrt())
        })
        .collect()
}

/// The dilation unitary and its two measurement blocks.
#[derive(Clone, Debug)]
pub struct Dilation {
    pub contraction: Contraction,
    /// `2M x 2M`.
    pub u0: ComplexMatrix,
    /// Rows spanned by the success projector.
    pub success_block: Range<usize>,
    /// Rows spanned by the failure projector.
    pub failure_block: Range<usize>,
}

pub fn dilation_unitary(a: &Contraction) -> Result<Dilation> {
    let m = a.dim();
    Ok(Dilation {
        u0: dilate(&a.as_matrix())?,
        contraction: a.clone(),
        success_block: 0..m,
        failure_block: m..2 * m,
    })
}

/// A dilation together with the probability it was planned for.
#[derive(Clone, Debug)]
pub struct DilationPlan {
    pub dilation: Dilation,
    pub success_prob: f64,
    pub optimal_prob: f64,
}

/// Requested success probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Probability {
    Optimal,
    Fixed(f64),
}

#[derive(Clone, Debug)]
pub struct TransformOutcome {
    pub plan: DilationPlan,
    /// Weight of the success block, measured from the evolved state.
    pub success_prob: f64,
    /// The target state in its own local bases.
    pub success_state: BipartitePureState,
    /// The residual branch, in the input's local bases; `None` at weight zero.
    pub failure_state: Option<BipartitePureState>,
    pub failure_weight: f64,
    /// `U₀ (Λ_d; 0)` on the doubled Alice space, in Schmidt bases.
    pub output_state: BipartitePureState,
    /// `min_k sin²θ_k λ_k²/σ_k²` over `σ_k > 0`: how much target could still
    /// be pulled out of the failure branch.
    pub residual_extractability: f64,
}

/// Converts `input` toward `target` with the dilation scheme.
///
/// Both states must share the same local dimensions.
pub fn transform_single_copy(
    input: &BipartitePureState,
    target: &BipartitePureState,
    p: Probability,
) -> Result<TransformOutcome> {
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

    let p_opt = optimal_probability(&lambda, &sigma);
    if p_opt == 0.0 {
        return Err(Error::InfeasibleTarget(format!(
            "target Schmidt rank {} exceeds input rank {}",
            sf_t.rank, sf_in.rank
        )));
    }
    let p = match p {
        Probability::Optimal => p_opt,
        Probability::Fixed(p) if p > p_opt + CONTRACTION_SLACK => {
            return Err(Error::NotContraction(format!(
                "requested p = {p} exceeds the optimum {p_opt}"
            )))
        }
        Probability::Fixed(p) => p,
    };
    let contraction = contraction_for(&lambda, &sigma, p)?.padded(m);
    let dilation = dilation_unitary(&contraction)?;

    let mut extended = ComplexMatrix::zeros(2 * m, n);
    extended.set_block(0, 0, &sf_in.diagonal());
    let out = dilation.u0.matmul(&extended);
    let success = out.block(0, 0, m, n);
    let failure = out.block(m, 0, m, n);
    let success_prob = success.frobenius_sq();
    let failure_weight = failure.frobenius_sq();
    if (success_prob + failure_weight - 1.0).abs() > UNITARY_TOL {
        return Err(Error::NumericalFailure(format!(
            "branch weights sum to {}",
            success_prob + failure_weight
        )));
    }

    // Back to the target's local bases: Λ_t = U_t† Σ_d V_t.
    let success_lab = sf_t
        .left_unitary
        .dagger()
        .matmul(&success)
        .matmul(&sf_t.right_unitary);
    let success_state = BipartitePureState::normalized(success_lab)?;
    let failure_state = if failure_weight > NORM_TOL * NORM_TOL {
        let lab = sf_in
            .left_unitary
            .dagger()
            .matmul(&failure)
            .matmul(&sf_in.right_unitary);
        Some(BipartitePureState::normalized(lab)?)
    } else {
        None
    };

    let residual_extractability = residual_extractability(&lambda, &sigma, &contraction);
    Ok(TransformOutcome {
        plan: DilationPlan { dilation, success_prob: p, optimal_prob: p_opt },
        success_prob,
        success_state,
        failure_state,
        failure_weight,
        output_state: BipartitePureState::normalized(out)?,
        residual_extractability,
    })
}

fn residual_extractability(lambda: &SchmidtVector, sigma: &SchmidtVector, a: &Contraction) -> f64 {
    let (lambda, sigma) = pad_pair(lambda, sigma);
    lambda
        .as_slice()
        .iter()
        .zip(sigma.as_slice())
        .zip(a.diag())
        .filter(|((_, &s), _)| s > ZERO_COEFF)
        .map(|((&l, &s), &c)| (1.0 - c * c).max(0.0) * l * l / (s * s))
        .fold(f64::INFINITY, f64::min)
}

/// Concentrates `input` into the `m`-fold maximally entangled state.
///
/// The success probability is `m λ_m²`. For `m = 1` this gives `λ₁²`, the
/// value the dilation scheme achieves against the product target
/// `σ = (1, 0, …)`; other local procedures can disentangle with certainty.
pub fn concentrate(input: &BipartitePureState, m: usize) -> Result<TransformOutcome> {
    let sf = schmidt_decompose(input, ZERO_COEFF)?;
    if m == 0 || m > sf.rank {
        return Err(Error::InfeasibleTarget(format!(
            "cannot concentrate to {m}-ME from Schmidt rank {}",
            sf.rank
        )));
    }
    let sigma = SchmidtVector::maximally_entangled(m, sf.lambdas.len())?;
    let target = BipartitePureState::from_schmidt(&sigma, input.dim_a(), input.dim_b())?;
    transform_single_copy(input, &target, Probability::Optimal)
}

/// `m λ_m²` for a descending Schmidt vector (1-based `m`).
pub fn concentration_probability(lambda: &SchmidtVector, m: usize) -> f64 {
    assert!(m >= 1 && m <= lambda.len(), "m out of range");
    let l = lambda.as_slice()[m - 1];
    m as f64 * l * l
}

/// One of the four orthogonal pieces of a two-sided dilation.
#[derive(Clone, Debug)]
pub struct Component {
    /// Unnormalized coefficient block in Schmidt bases.
    pub block: ComplexMatrix,
    pub weight: f64,
    pub state: Option<BipartitePureState>,
}

/// Output of [`bilateral_transform`], in the order
/// `(A·, B·)`, `(A·, B̃·)`, `(Ã·, B·)`, `(Ã·, B̃·)`.
#[derive(Clone, Debug)]
pub struct BilateralOutcome {
    pub components: [Component; 4],
}

impl BilateralOutcome {
    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.weight).sum()
    }
}

/// Both parties dilate their own diagonal contraction in Schmidt bases.
///
/// The blocks are `AΛ_dBᵀ`, `AΛ_dB̃`, `ÃΛ_dBᵀ`, `ÃΛ_dB̃` with
/// `Ã = (I − A†A)^½` and `B̃ = (I − BᵀB*)^½`.
pub fn bilateral_transform(
    input: &BipartitePureState,
    a: &Contraction,
    b: &Contraction,
) -> Result<BilateralOutcome> {
    let (m, n) = (input.dim_a(), input.dim_b());
    if a.dim() > m || b.dim() > n {
        return Err(Error::DimensionMismatch(format!(
            "contractions of size {} and {} on a {m}x{n} state",
            a.dim(),
            b.dim()
        )));
    }
    let sf = schmidt_decompose(input, ZERO_COEFF)?;
    let lam = sf.diagonal();
    let (a, b) = (a.padded(m), b.padded(n));
    let (am, at) = (a.as_matrix(), a.complement());
    let (bt_m, bt) = (b.as_matrix().transpose(), b.complement());
    let blocks = [
        am.matmul(&lam).matmul(&bt_m),
        am.matmul(&lam).matmul(&bt),
        at.matmul(&lam).matmul(&bt_m),
        at.matmul(&lam).matmul(&bt),
    ];
    let components = blocks.map(|block| {
        let weight = block.frobenius_sq();
        let state = (weight > NORM_TOL * NORM_TOL)
            .then(|| BipartitePureState::normalized(block.clone()).ok())
            .flatten();
        Component { block, weight, state }
    });
    Ok(BilateralOutcome { components })
}
