use cutoff_lab::families::Schedule;
use cutoff_lab::harness::{sweep, Assertion, OffsetRule, SweepSpec};
use cutoff_lab::{BetaSchedule, ParametricFamily};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn right_rows_never_exceed_certificates(
        beta in 0.0f64..=1.0,
        n in 20u64..200_000,
        c in 0.05f64..4.0,
    ) {
        let family = ParametricFamily::lemma31(BetaSchedule::constant(beta).unwrap());
        let spec = SweepSpec::new(family, vec![n], vec![c], OffsetRule::Right).unwrap();
        let row = &sweep(&spec).unwrap()[0];
        prop_assert_eq!(row.assertion, Assertion::Le);
        prop_assert!(row.pass, "{:?}", row);
        prop_assert!(row.slack <= 0.0);
    }

    #[test]
    fn left_rows_clear_the_floor(
        beta in 0.0f64..=1.0,
        n in 20u64..200_000,
        c in -4.0f64..-0.05,
    ) {
        let family = ParametricFamily::lemma31(BetaSchedule::constant(beta).unwrap());
        let spec = SweepSpec::new(family, vec![n], vec![c], OffsetRule::Left).unwrap();
        let row = &sweep(&spec).unwrap()[0];
        prop_assert!(row.pass, "{:?}", row);
        prop_assert!(row.slack >= -1e-9);
    }

    #[test]
    fn single_ou_profile_is_exact(
        slope in 0.5f64..50.0,
        rho in 0.1f64..10.0,
        n in 1u64..10_000,
        c in -3.0f64..3.0,
    ) {
        let family = ParametricFamily::single_ou(
            Schedule::Affine { slope, intercept: 0.0 },
            Schedule::Const { value: rho },
        );
        let spec = SweepSpec::new(family, vec![n], vec![c], OffsetRule::Left).unwrap();
        let row = &sweep(&spec).unwrap()[0];
        prop_assert!((row.log_d_lo + c).abs() <= 1e-12 * (1.0 + slope * n as f64));
    }
}
