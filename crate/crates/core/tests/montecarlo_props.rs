use entrans::montecarlo::{estimate_success, sample_outcome, trial_rng};
use entrans::singlecopy::{transform_single_copy, Probability};
use entrans::statecore::{BipartitePureState, SchmidtVector};
use proptest::prelude::*;

fn diag_state(squares: &[f64]) -> BipartitePureState {
    let s = SchmidtVector::from_squares(squares).unwrap();
    BipartitePureState::from_schmidt(&s, squares.len(), squares.len()).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    (v[n / 2 - 1] + v[n / 2]) / 2.0
}

#[test]
fn single_copy_frequency_in_band() {
    let out = transform_single_copy(&diag_state(&[0.8, 0.2]), &diag_state(&[0.5, 0.5]), Probability::Optimal)
        .unwrap();
    assert!((out.success_prob - 0.4).abs() < 1e-15);
    let w = [out.success_prob, out.failure_weight];
    let stats = estimate_success(|rng| sample_outcome(&w, rng), 100_000, 7).unwrap();
    let f = stats.frequency(0);
    assert!((0.39535..=0.40465).contains(&f), "frequency {f}");
    assert_eq!(stats.counts.values().sum::<u64>(), 100_000);
    assert!((stats.frequencies.values().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn error_shrinks_with_trials() {
    let p = 0.4;
    let errors: Vec<f64> = [1_000u64, 10_000, 100_000]
        .iter()
        .map(|&trials| {
            median(
                (0..20)
                    .map(|seed| {
                        let s = estimate_success(|rng| sample_outcome(&[p, 1.0 - p], rng), trials, seed).unwrap();
                        (s.frequency(0) - p).abs()
                    })
                    .collect(),
            )
        })
        .collect();
    assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn counts_ignore_thread_count(seed: u64, threads in 2usize..=6) {
        let w = [0.1, 0.2, 0.3, 0.4];
        let run = |t| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .unwrap()
                .install(|| estimate_success(|rng| sample_outcome(&w, rng), 4_000, seed).unwrap())
        };
        prop_assert_eq!(run(1), run(threads));
    }

    #[test]
    fn same_stream_same_draw(seed: u64, index: u64) {
        let w = [0.25, 0.25, 0.5];
        let a = sample_outcome(&w, &mut trial_rng(seed, index)).unwrap();
        let b = sample_outcome(&w, &mut trial_rng(seed, index)).unwrap();
        prop_assert_eq!(a, b);
    }
}
