use entrans::montecarlo::trial_rng;
use entrans::multicopy::{
    bob_space_dim, feasible_yield, finalize_multicopy, min_copies, plan_distribution,
    plan_multicopy, MultiCopyOptions, YieldVerdict, DEFAULT_BOB_SPACE_CAP,
};
use entrans::random::{random_spectrum, state_with_spectrum};
use entrans::singlecopy::optimal_probability;
use entrans::statecore::{BipartitePureState, SchmidtVector};
use entrans::{ComplexMatrix, Error};
use num_rational::Ratio;
use proptest::prelude::*;
use rand::Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn min_copies_is_smallest_feasible(seed: u64, len in 2usize..=5) {
        let mut rng = trial_rng(seed, 0);
        let rank = rng.random_range(1..=len);
        let lambda = random_spectrum(len, rank, &mut rng);
        let sigma = random_spectrum(len, rng.random_range(1..=rank), &mut rng);
        let p_opt = optimal_probability(&lambda, &sigma);
        let n_min = min_copies(&lambda, &sigma).unwrap();
        if n_min <= 32 {
            let brute = (1..=32).find(|&n| plan_distribution(n, p_opt).is_ok());
            prop_assert_eq!(brute, Some(n_min));
            prop_assert!(1.0 / n_min as f64 <= p_opt + 1e-12);
            if n_min > 1 {
                prop_assert!(1.0 / (n_min - 1) as f64 > p_opt);
            }
        } else {
            prop_assert!((1..=32).all(|n| plan_distribution(n, p_opt).is_err()));
        }
    }

    #[test]
    fn yield_dichotomy(seed: u64, n in 1u64..100, a in 1u64..50, b in 1u64..50) {
        let mut rng = trial_rng(seed, 1);
        let lambda = random_spectrum(3, 3, &mut rng);
        let sigma = random_spectrum(3, rng.random_range(1..=3), &mut rng);
        let n_min = min_copies(&lambda, &sigma).unwrap() as u64;
        let verdict = feasible_yield(&lambda, &sigma, n, Ratio::new(a, b)).unwrap();
        let expect = match (a * n_min).cmp(&b) {
            std::cmp::Ordering::Less => YieldVerdict::Certain,
            std::cmp::Ordering::Equal => YieldVerdict::Boundary,
            std::cmp::Ordering::Greater => YieldVerdict::Impossible,
        };
        prop_assert_eq!(verdict, expect);
    }

    #[test]
    fn extended_state_carries_the_target(seed: u64, ma in 2usize..=3, nb in 2usize..=3, extra in 0usize..=2) {
        let mut rng = trial_rng(seed, 2);
        let len = ma.min(nb);
        let rank = rng.random_range(1..=len);
        let lambda = random_spectrum(len, rank, &mut rng);
        let sigma = random_spectrum(len, rng.random_range(1..=rank), &mut rng);
        let copies = min_copies(&lambda, &sigma).unwrap() + extra;
        prop_assume!(bob_space_dim(nb, copies, DEFAULT_BOB_SPACE_CAP).is_ok());
        let input = state_with_spectrum(&lambda, ma, nb, &mut rng).unwrap();
        let target = state_with_spectrum(&sigma, ma, nb, &mut rng).unwrap();
        let opts = MultiCopyOptions { copies: Some(copies), ..Default::default() };
        let plan = plan_multicopy(&input, &target, &opts).unwrap();
        prop_assert!(plan.u2.unitarity_defect() <= 1e-10);
        let target_rho = ComplexMatrix::real_diag(ma, ma, &sigma.squares());
        prop_assert!(plan.delta.matmul(&plan.delta.dagger()).max_abs_diff(&target_rho) <= 1e-12);

        let res = finalize_multicopy(&plan).unwrap();
        prop_assert!(res.block_defect <= 1e-10);
        prop_assert!((res.projected_weight - 1.0).abs() <= 1e-10);
        prop_assert!(res.classical_bits <= 1);
        let first = res.symmetrized_pair_marginals[0].matrix();
        for m in &res.symmetrized_pair_marginals {
            prop_assert!(m.matrix().max_abs_diff(first) <= 1e-10);
        }
        // Every labeled pair marginal keeps Alice's reduced state.
        let d = nb;
        for pm in &res.pair_marginals {
            let pm = pm.matrix();
            let alice = ComplexMatrix::from_fn(ma, ma, |i, j| (0..d).map(|k| pm.get(i * d + k, j * d + k)).sum());
            prop_assert!(alice.max_abs_diff(&target_rho) <= 1e-10);
        }
    }
}

fn diag_state(squares: &[f64]) -> BipartitePureState {
    let s = SchmidtVector::from_squares(squares).unwrap();
    BipartitePureState::from_schmidt(&s, squares.len(), squares.len()).unwrap()
}

#[test]
fn too_few_copies_and_overflow() {
    let (input, bell) = (diag_state(&[0.8, 0.2]), diag_state(&[0.5, 0.5]));
    let two = MultiCopyOptions { copies: Some(2), ..Default::default() };
    assert!(matches!(plan_multicopy(&input, &bell, &two), Err(Error::InfeasibleDistribution(_))));
    let many = MultiCopyOptions { copies: Some(13), ..Default::default() };
    assert!(matches!(plan_multicopy(&input, &bell, &many), Err(Error::DimensionOverflow { .. })));
    let custom = MultiCopyOptions { copies: Some(4), probs: Some(vec![0.4, 0.4, 0.1, 0.1]), ..Default::default() };
    let res = finalize_multicopy(&plan_multicopy(&input, &bell, &custom).unwrap()).unwrap();
    assert!(res.block_defect < 1e-10);
    let greedy = MultiCopyOptions { copies: Some(2), probs: Some(vec![0.6, 0.4]), ..Default::default() };
    assert!(plan_multicopy(&input, &bell, &greedy).unwrap_err().is_infeasible());
}
