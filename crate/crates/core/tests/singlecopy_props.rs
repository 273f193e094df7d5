use entrans::linalg::ComplexMatrix;
use entrans::montecarlo::trial_rng;
use entrans::random::{random_contraction, random_spectrum, state_with_spectrum};
use entrans::singlecopy::{
    bilateral_transform, concentrate, concentration_probability, dilate, optimal_probability,
    transform_single_copy, Contraction, Probability,
};
use entrans::statecore::{overlap, reduced_density, BipartitePureState, SchmidtVector, Side};
use entrans::verify::permutations;
use proptest::prelude::*;

fn spectrum(max_len: usize) -> impl Strategy<Value = SchmidtVector> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 5 => 0.01f64..1.0], 2..=max_len)
        .prop_filter_map("all-zero spectrum", |v| {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| {
                SchmidtVector::from_squares(&v.iter().map(|x| x / s).collect::<Vec<_>>()).unwrap()
            })
        })
}

/// Largest success weight over diagonal contractions whose dilation, applied
/// to `(Λ_d; 0)`, leaves a top block proportional to some relabeling of `Σ_d`.
/// Every pairing is tried on a grid of probabilities and at its boundary.
fn dilation_search(lambda: &SchmidtVector, sigma: &SchmidtVector) -> f64 {
    let len = lambda.len().max(sigma.len());
    let (l, s) = (lambda.padded(len), sigma.padded(len));
    let (l, s) = (l.as_slice(), s.as_slice());
    let input = ComplexMatrix::real_diag(2 * len, len, l);
    let mut best: f64 = 0.0;
    for perm in permutations(len) {
        let edge = (0..len)
            .filter(|&k| s[perm[k]] > 0.0 && l[k] > 0.0)
            .map(|k| (l[k] / s[perm[k]]).powi(2))
            .fold(1.0, f64::min);
        for p in (1..=40).map(|j| j as f64 / 40.0).chain([edge]) {
            let diag: Option<Vec<f64>> = (0..len)
                .map(|k| match (s[perm[k]] > 0.0, l[k] > 0.0) {
                    (false, _) => Some(0.0),
                    (true, false) => None,
                    (true, true) => {
                        let c = p.sqrt() * s[perm[k]] / l[k];
                        (c <= 1.0 + 1e-12).then_some(c.min(1.0))
                    }
                })
                .collect();
            let Some(diag) = diag else { continue };
            let u = dilate(&ComplexMatrix::real_diag(len, len, &diag)).unwrap();
            let top = u.matmul(&input).block(0, 0, len, len);
            let weight = top.frobenius_sq();
            // The top block must be √p times the relabeled target.
            let expect: Vec<f64> = (0..len).map(|k| p.sqrt() * s[perm[k]]).collect();
            let on_target = top.max_abs_diff(&ComplexMatrix::real_diag(len, len, &expect)) <= 1e-12;
            if on_target {
                best = best.max(weight);
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilation_is_unitary_with_contraction_block(seed: u64, m in 1usize..=8) {
        let a = random_contraction(m, &mut trial_rng(seed, 0));
        let u = dilate(&a).unwrap();
        prop_assert!(u.unitarity_defect() <= 1e-10);
        prop_assert!(u.block(0, 0, m, m).max_abs_diff(&a) <= 1e-10);
    }

    #[test]
    fn conjugation_gives_povm_blocks(seed: u64, m in 1usize..=6) {
        let mut rng = trial_rng(seed, 1);
        let a = random_contraction(m, &mut rng);
        let rho = reduced_density(&entrans::random::random_state(m, m, &mut rng), Side::A).matrix().clone();
        let u = dilate(&a).unwrap();
        let mut big = ComplexMatrix::zeros(2 * m, 2 * m);
        big.set_block(0, 0, &rho);
        let out = u.matmul(&big).matmul(&u.dagger());
        let at = (&ComplexMatrix::identity(m) - &a.dagger().matmul(&a)).psd_sqrt().unwrap();
        prop_assert!(out.block(0, 0, m, m).max_abs_diff(&a.matmul(&rho).matmul(&a.dagger())) <= 1e-10);
        prop_assert!(out.block(0, m, m, m).max_abs_diff(&a.matmul(&rho).matmul(&at)) <= 1e-10);
        prop_assert!(out.block(m, 0, m, m).max_abs_diff(&at.matmul(&rho).matmul(&a.dagger())) <= 1e-10);
        prop_assert!(out.block(m, m, m, m).max_abs_diff(&at.matmul(&rho).matmul(&at)) <= 1e-10);
        // The two POVM elements A†A and Ã² add to the identity.
        let sum = &a.dagger().matmul(&a) + &at.matmul(&at);
        prop_assert!(sum.max_abs_diff(&ComplexMatrix::identity(m)) <= 1e-10);
    }

    #[test]
    fn no_diagonal_scheme_beats_the_optimum(lambda in spectrum(4), sigma in spectrum(4)) {
        let best = dilation_search(&lambda, &sigma);
        let p_opt = optimal_probability(&lambda, &sigma);
        prop_assert!(best <= p_opt + 1e-9, "search {best} > p_opt {p_opt}");
        // The optimum itself is attained by the identity pairing.
        if p_opt > 0.0 {
            prop_assert!(best >= p_opt - 1e-12);
        }
    }

    #[test]
    fn transformation_at_optimum(seed: u64, len in 2usize..=5) {
        let mut rng = trial_rng(seed, 2);
        let lambda = random_spectrum(len, len, &mut rng);
        let sigma = random_spectrum(len, rng_rank(&mut rng, len), &mut rng);
        let input = state_with_spectrum(&lambda, len, len, &mut rng).unwrap();
        let target = state_with_spectrum(&sigma, len, len, &mut rng).unwrap();
        let out = transform_single_copy(&input, &target, Probability::Optimal).unwrap();
        let p_opt = optimal_probability(&lambda, &sigma);
        prop_assert!((out.success_prob - p_opt).abs() <= 1e-10);
        prop_assert!((out.success_prob + out.failure_weight - 1.0).abs() <= 1e-10);
        prop_assert!(overlap(&out.success_state, &target).unwrap() >= 1.0 - 1e-9);
        prop_assert!(out.residual_extractability.abs() <= 1e-10);
        prop_assert!(out.plan.dilation.u0.unitarity_defect() <= 1e-10);
    }

    #[test]
    fn bilateral_gains_nothing(
        lambda in spectrum(5),
        b_raw in prop::collection::vec(0.05f64..=1.0, 5),
        shrink in 0.0f64..=1.0,
    ) {
        let len = lambda.len();
        let rank = lambda.rank();
        let sigma = SchmidtVector::maximally_entangled(rank, len).unwrap();
        let (l, s) = (lambda.as_slice(), sigma.as_slice());
        let b = &b_raw[..len];
        let t_max = (0..rank).map(|k| l[k] * b[k] / s[k]).fold(f64::INFINITY, f64::min);
        let t = t_max * shrink.max(1e-3);
        let a: Vec<f64> = (0..len)
            .map(|k| if s[k] > 0.0 { (t * s[k] / (l[k] * b[k])).min(1.0) } else { 0.0 })
            .collect();
        let state = BipartitePureState::from_schmidt(&lambda, len, len).unwrap();
        let out = bilateral_transform(&state, &Contraction::new(a).unwrap(), &Contraction::new(b.to_vec()).unwrap()).unwrap();
        prop_assert!((out.total_weight() - 1.0).abs() <= 1e-10);
        prop_assert!(out.components[0].weight <= optimal_probability(&lambda, &sigma) + 1e-9);
    }

    #[test]
    fn concentration_hits_formula(seed: u64, len in 2usize..=6) {
        let mut rng = trial_rng(seed, 3);
        let lambda = random_spectrum(len, rng_rank(&mut rng, len).max(2), &mut rng);
        let state = state_with_spectrum(&lambda, len, len, &mut rng).unwrap();
        for m in 2..=lambda.rank() {
            let expect = concentration_probability(&lambda, m);
            let out = concentrate(&state, m).unwrap();
            prop_assert!((out.success_prob - expect).abs() <= 1e-10);
            let me = SchmidtVector::maximally_entangled(m, len).unwrap();
            prop_assert!((optimal_probability(&lambda, &me) - expect).abs() <= 1e-10);
        }
        let r = lambda.rank();
        let last = lambda.as_slice()[r - 1];
        prop_assert!((concentrate(&state, r).unwrap().success_prob - r as f64 * last * last).abs() <= 1e-10);
    }
}

fn rng_rank(rng: &mut entrans::montecarlo::TrialRng, len: usize) -> usize {
    use rand::Rng;
    rng.random_range(1..=len)
}

#[test]
fn single_copy_disentangling_value() {
    let lambda = SchmidtVector::from_squares(&[0.7, 0.3]).unwrap();
    let state = BipartitePureState::from_schmidt(&lambda, 2, 2).unwrap();
    let out = concentrate(&state, 1).unwrap();
    assert!((out.success_prob - 0.7).abs() < 1e-12);
}
