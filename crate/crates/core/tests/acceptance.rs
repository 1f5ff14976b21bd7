//! Acceptance criteria 1 through 8, one test each.
//!
//! Every test prints a single `criterion N PASS|FAIL` line (visible with
//! `--nocapture` or in the failure output) and fails when the criterion
//! does. Budgets are part of the criterion.

use cutoff_lab::verify::run_criterion;

fn criterion(id: u8) {
    let result = run_criterion(id);
    println!("{result}");
    assert!(result.passed, "{result}");
}

#[test]
fn criterion_1_single_ou_exactness() {
    criterion(1);
}

#[test]
fn criterion_2_two_scale_closed_forms() {
    criterion(2);
}

#[test]
fn criterion_3_sandwich_soundness() {
    criterion(3);
}

#[test]
fn criterion_4_certificate_inequalities() {
    criterion(4);
}

#[test]
fn criterion_5_two_scale_limit() {
    criterion(5);
}

#[test]
fn criterion_6_distinct_window_locations() {
    criterion(6);
}

#[test]
fn criterion_7_spectral_oracle_equivalence() {
    criterion(7);
}

#[test]
fn criterion_8_upper_certificate_limit_recovery() {
    criterion(8);
}
