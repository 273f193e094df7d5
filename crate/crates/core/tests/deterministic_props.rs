use entrans::deterministic::{
    birkhoff_decompose, doubly_stochastic_bridge, exhaustive_branches, plan_deterministic,
    recompose, run_plan,
};
use entrans::linalg::ComplexMatrix;
use entrans::montecarlo::{estimate_success, trial_rng};
use entrans::random::{random_majorized_pair, state_with_spectrum};
use entrans::statecore::{BipartitePureState, SchmidtVector};
use entrans::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bridge_and_birkhoff(seed: u64, len in 1usize..=6) {
        let (lambda, sigma) = random_majorized_pair(len, &mut trial_rng(seed, 0));
        let d = doubly_stochastic_bridge(&lambda.squares(), &sigma.squares(), 1e-12).unwrap();
        let mapped = &d * DMatrix::from_column_slice(len, 1, &sigma.squares());
        for (a, b) in mapped.iter().zip(lambda.squares()) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
        for i in 0..len {
            prop_assert!((d.row(i).sum() - 1.0).abs() <= 1e-10);
            prop_assert!((d.column(i).sum() - 1.0).abs() <= 1e-10);
        }
        prop_assert!(d.iter().all(|&x| x >= 0.0));
        let terms = birkhoff_decompose(&d, 1e-12).unwrap();
        prop_assert!(terms.len() <= (len - 1) * (len - 1) + 1);
        prop_assert!((recompose(&terms, len) - &d).abs().max() <= 1e-10);
        prop_assert!((terms.iter().map(|t| t.weight).sum::<f64>() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn protocol_is_deterministic_with_message(seed: u64, len in 1usize..=6) {
        let mut rng = trial_rng(seed, 1);
        let (lambda, sigma) = random_majorized_pair(len, &mut rng);
        let input = state_with_spectrum(&lambda, len, len, &mut rng).unwrap();
        let target = state_with_spectrum(&sigma, len, len, &mut rng).unwrap();
        let plan = plan_deterministic(&input, &target).unwrap();

        let sum = plan.povm.iter().fold(ComplexMatrix::zeros(len, len), |acc, a| &acc + &a.dagger().matmul(a));
        prop_assert!(sum.max_abs_diff(&ComplexMatrix::identity(len)) <= 1e-10);
        prop_assert!(plan.u1.unitarity_defect() <= 1e-10);

        let rho = ComplexMatrix::real_diag(len, len, &plan.lambda.squares());
        for (a, &p) in plan.povm.iter().zip(&plan.branch_probs) {
            let eig = a.matmul(&rho).matmul(&a.dagger()).hermitian_eigenvalues().unwrap();
            for (x, s) in eig.iter().zip(plan.sigma.squares()) {
                prop_assert!((x - p * s).abs() <= 1e-9);
            }
        }

        for b in exhaustive_branches(&plan, &input, &target, true).unwrap() {
            prop_assert!(b.overlap_with_target >= 1.0 - 1e-9);
            prop_assert!((b.weight - b.birkhoff_weight).abs() <= 1e-10);
        }

        // Without the message some branch is wrong whenever the spectra differ.
        let gap = lambda.squares().iter().zip(sigma.squares()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > 1e-9 {
            let distinct = plan.bob_corrections.iter().any(|c| *c != plan.bob_corrections[0]);
            prop_assert!(distinct);
            let uninformed = exhaustive_branches(&plan, &input, &target, false).unwrap();
            prop_assert!(uninformed.iter().any(|b| b.overlap_with_target < 1.0 - 1e-6));
        }
    }
}

fn diag_state(squares: &[f64]) -> BipartitePureState {
    let s = SchmidtVector::from_squares(squares).unwrap();
    BipartitePureState::from_schmidt(&s, squares.len(), squares.len()).unwrap()
}

#[test]
fn every_sampled_run_succeeds() {
    let (input, target) = (diag_state(&[0.6, 0.4]), diag_state(&[0.8, 0.2]));
    let plan = plan_deterministic(&input, &target).unwrap();
    assert_eq!(plan.classical_bits(), 1);
    let stats = estimate_success(
        |rng| {
            let trace = run_plan(&plan, &input, &target, rng)?;
            Ok(usize::from(trace.final_overlap_with_target >= 1.0 - 1e-9))
        },
        1000,
        3,
    )
    .unwrap();
    assert_eq!(stats.count(1), 1000);
    assert_eq!(stats.frequency(1), 1.0);
    // Both branches occur.
    let branches = estimate_success(|rng| Ok(run_plan(&plan, &input, &target, rng)?.branch), 1000, 3).unwrap();
    assert!(branches.within(0, 2.0 / 3.0, 3.0));
}

#[test]
fn non_majorized_pair_is_rejected() {
    let err = plan_deterministic(&diag_state(&[0.8, 0.2]), &diag_state(&[0.6, 0.4])).unwrap_err();
    assert_eq!(err, Error::NotMajorized);
    assert!(err.is_infeasible());
}
