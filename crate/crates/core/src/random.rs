//! Random instances for property checks.

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::Result;
use crate::linalg::ComplexMatrix;
use crate::statecore::{BipartitePureState, SchmidtVector};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Complex Gaussian `rows x cols` matrix.
pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Normalized Gaussian coefficient matrix.
pub fn random_state<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> BipartitePureState {
    BipartitePureState::normalized(ginibre(m, n, rng)).expect("Gaussian matrix is nonzero")
}

/// Unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let q = ginibre(n, n, rng).inner().clone().qr().q();
    ComplexMatrix::from_fn(n, n, |i, j| q[(i, j)])
}

/// Uniform point on the probability simplex with `len` entries.
pub fn random_simplex<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Schmidt vector of length `len` with exactly `rank` nonzero entries.
pub fn random_spectrum<R: Rng + ?Sized>(len: usize, rank: usize, rng: &mut R) -> SchmidtVector {
    assert!(rank >= 1 && rank <= len, "rank out of range");
    let mut sq = random_simplex(rank, rng);
    sq.resize(len, 0.0);
    SchmidtVector::from_squares(&sq).expect("simplex point is a valid spectrum")
}

/// `m x n` state with Schmidt coefficients `coeffs` in random local frames.
pub fn state_with_spectrum<R: Rng + ?Sized>(
    coeffs: &SchmidtVector,
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<BipartitePureState> {
    let d = ComplexMatrix::real_diag(m, n, coeffs.as_slice());
    let raw = random_unitary(m, rng).dagger().matmul(&d).matmul(&random_unitary(n, rng));
    BipartitePureState::normalized(raw)
}

/// General complex `m x m` matrix with operator norm uniform in `[0.5, 1)`.
pub fn random_contraction<R: Rng + ?Sized>(m: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(m, m, rng);
    g.scale(rng.random_range(0.5..1.0) / g.operator_norm())
}

/// Random convex combination of one to three permutations of `v`.
///
/// The result is majorized by `v`.
pub fn random_mixture<R: Rng + ?Sized>(v: &[f64], rng: &mut R) -> Vec<f64> {
    let weights = random_simplex(rng.random_range(1..=3), rng);
    let mut mixed = vec![0.0; v.len()];
    let mut perm: Vec<usize> = (0..v.len()).collect();
    for w in weights {
        perm.shuffle(rng);
        for (k, &j) in perm.iter().enumerate() {
            mixed[k] += w * v[j];
        }
    }
    mixed
}

/// `(λ, σ)` of length `len` with `λ² ≺ σ²`; `σ` has random rank.
pub fn random_majorized_pair<R: Rng + ?Sized>(
    len: usize,
    rng: &mut R,
) -> (SchmidtVector, SchmidtVector) {
    let rank = rng.random_range(1..=len);
    let sigma = random_spectrum(len, rank, rng);
    let mixed = random_mixture(&sigma.squares(), rng);
    let lambda = SchmidtVector::from_squares(&mixed).expect("mixture is a valid spectrum");
    (lambda, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::trial_rng;
    use crate::statecore::is_majorized_by;

    #[test]
    fn generators_respect_contracts() {
        let mut rng = trial_rng(1, 0);
        for _ in 0..50 {
            let m = rng.random_range(1..=8);
            let a = random_contraction(m, &mut rng);
            assert!(a.operator_norm() <= 1.0 + 1e-12);
            assert!(random_unitary(m, &mut rng).unitarity_defect() < 1e-12);
            let s = random_spectrum(5, 3, &mut rng);
            assert_eq!(s.rank(), 3);
            let (l, s) = random_majorized_pair(6, &mut rng);
            assert!(is_majorized_by(&l.squares(), &s.squares(), 1e-12).unwrap());
        }
    }
}
