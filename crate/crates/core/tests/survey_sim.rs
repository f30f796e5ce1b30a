mod common;

use common::{g2, ge};
use genpolar::bec::{bler_upper_bound, evolve_spectrum, info_size};
use genpolar::codec::PolarCode;
use genpolar::gf2::{enumerate_kernels, Kernel, KernelFamily};
use genpolar::sim::{compare_reports, run_monte_carlo, run_sweep, wilson_interval, StopRule, Verdict};
use genpolar::survey::{group_survey, signature};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wilson_interval_brackets_the_estimate(trials in 1u64..100_000, frac in 0.0f64..=1.0) {
        let k = ((trials as f64) * frac).round() as u64;
        let (lo, hi) = wilson_interval(k, trials);
        let p = k as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn signature_ignores_column_order(bits in prop::collection::vec(any::<bool>(), 9)) {
        let k = common::kernel_from_bits(3, &bits);
        let swapped: Vec<bool> = (0..9).map(|i| bits[(i / 3) * 3 + [2, 0, 1][i % 3]]).collect();
        let a = signature(&k, 0.5, 4).unwrap();
        let b = signature(&common::kernel_from_bits(3, &swapped), 0.5, 4).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn all_3x3_survey_is_consistent() {
    let survey = group_survey(enumerate_kernels(3, KernelFamily::All).unwrap(), 0.5, 4).unwrap();
    assert_eq!(survey.entries.len(), 512);
    assert_eq!(survey.singular_count(), 512 - 168);
    assert_eq!(survey.groups.iter().map(|g| g.member_count).sum::<usize>(), 512);
    // groups are ordered by distance at the final depth
    assert!(survey
        .groups
        .windows(2)
        .all(|w| w[0].distance_curve.last() <= w[1].distance_curve.last()));
    // members of a group share the representative's signature
    for e in survey.entries.iter().step_by(7) {
        let g = survey.group(e.group_id).unwrap();
        let s = signature(&e.kernel, 0.5, 4).unwrap();
        for (a, b) in s.distance_curve.iter().zip(&g.distance_curve) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert_eq!(e.exponent.is_some(), e.kernel.is_invertible());
    }
    let singular = survey.group(survey.groups.len()).unwrap();
    assert!(!singular.polarising);
}

#[test]
fn survey_rejects_bad_input() {
    assert!(group_survey(Vec::<Kernel>::new(), 0.5, 3).is_err());
    assert!(group_survey([g2(), ge()], 0.5, 3).is_err());
    assert!(group_survey([g2()], 0.5, 0).is_err());
    assert!(group_survey([g2()], 1.5, 3).is_err());
}

#[test]
fn simulated_fer_respects_the_union_bound() {
    let code = PolarCode::design(g2(), 7, 0.3, 40).unwrap();
    let r = run_monte_carlo(&code, 0.3, StopRule { min_frame_errors: 200, max_trials: 200_000 }, 8).unwrap();
    let bound = bler_upper_bound(&evolve_spectrum(&g2(), 0.3, 7).unwrap(), 40).unwrap();
    assert!(r.fer <= bound + 2.0 * r.ci_half_width(), "fer {} bound {}", r.fer, bound);
    assert!(r.bit_erasures <= r.bit_errors);
    assert!(r.ber <= r.fer);
}

#[test]
fn fer_grows_with_the_erasure_probability() {
    let code = PolarCode::with_rate(ge(), 3, 0.5, 0.5).unwrap();
    let stop = StopRule { min_frame_errors: 0, max_trials: 4_000 };
    let reports = run_sweep(&code, &[0.1, 0.3, 0.5, 0.7], stop, 21).unwrap();
    assert!(reports.windows(2).all(|w| w[0].fer <= w[1].fer));
    assert!(compare_reports(&reports[0], &reports[3]).is_err());
    let low_rate = PolarCode::with_rate(ge(), 3, 0.5, 0.125).unwrap();
    let other = run_monte_carlo(&low_rate, 0.5, stop, 21).unwrap();
    assert!(matches!(compare_reports(&reports[2], &other).unwrap(), Verdict::Distinguishable { .. }));
}

#[test]
fn info_size_rounds() {
    assert_eq!(info_size(0.25, 1024).unwrap(), 256);
    assert_eq!(info_size(0.1, 1024).unwrap(), 102);
    assert!(info_size(-0.1, 8).is_err());
}
