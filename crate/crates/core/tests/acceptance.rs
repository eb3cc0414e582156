//! Acceptance criteria. Each test prints one PASS/FAIL line and enforces its
//! runtime budget. Tolerances are the constants re-exported below.

use std::time::{Duration, Instant};

use augspec::harness::suite::{
    run_check, verify_suite, CheckResult, SuiteOptions, BLOCK_SUITE_GRAPHS, CHECKS, FACTORIZATION_GRAPHS,
    FACTORIZATION_PERTURBATIONS, FACTORIZATION_TOL, FLIP_SEEDS, MAX_SCALING_EXPONENT, MC_CONFIGS, MC_DRAWS,
    MC_STANDARD_ERRORS, TOLERANCE_TEST_FRACTION, WEYL_CASES, XI_RATIO_WINDOW,
};

#[test]
fn tolerances_are_pinned() {
    assert_eq!(MC_STANDARD_ERRORS, 3.0);
    assert_eq!(XI_RATIO_WINDOW, (1.8, 2.2));
    assert_eq!(MAX_SCALING_EXPONENT, 3.0);
    assert_eq!(FACTORIZATION_TOL, 1e-8);
    assert_eq!(TOLERANCE_TEST_FRACTION, 0.95);
    assert_eq!(augspec::bounds::HOLD_TOL, 1e-9);
    assert_eq!((MC_DRAWS, MC_CONFIGS, FLIP_SEEDS), (2000, 20, 20));
    assert_eq!((BLOCK_SUITE_GRAPHS, WEYL_CASES), (100, 100));
    assert_eq!((FACTORIZATION_GRAPHS, FACTORIZATION_PERTURBATIONS), (10, 1000));
}

fn criterion(id: u8) {
    let budget = Duration::from_secs(CHECKS[id as usize - 1].budget_secs);
    let start = Instant::now();
    let r: CheckResult = run_check(id, &SuiteOptions::default()).expect("check runs");
    let elapsed = start.elapsed();
    println!(
        "{} criterion {id} {} ({:.1}s): {}",
        if r.passed { "PASS" } else { "FAIL" },
        r.name,
        elapsed.as_secs_f64(),
        r.detail
    );
    assert!(r.passed, "criterion {id} failed: {}", r.detail);
    assert!(elapsed < budget, "criterion {id} took {elapsed:?}, budget {budget:?}");
}

#[test]
fn criterion_1_expected_error_identity() {
    criterion(1);
}

#[test]
fn criterion_2_error_bounds() {
    criterion(2);
}

#[test]
fn criterion_3_flip_tolerance_zero_slack() {
    criterion(3);
}

#[test]
fn criterion_4_flip_tolerance_positive_slack() {
    criterion(4);
}

#[test]
fn criterion_5_block_spectrum_bounds() {
    criterion(5);
}

#[test]
fn criterion_6_perturbation_trends() {
    criterion(6);
}

#[test]
fn criterion_7_factorization_optimality() {
    criterion(7);
}

#[test]
fn criterion_8_determinism() {
    let budget = Duration::from_secs(CHECKS[7].budget_secs);
    let start = Instant::now();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let opts = SuiteOptions::default();
    let ra = verify_suite(&opts, a.path(), false, false).unwrap();
    let rb = verify_suite(&opts, b.path(), false, false).unwrap();
    let same = std::fs::read(&ra.csv_path).unwrap() == std::fs::read(&rb.csv_path).unwrap();
    let elapsed = start.elapsed();
    println!(
        "{} criterion 8 determinism ({:.1}s): suite.csv {}",
        if same { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        if same { "byte-identical" } else { "differs" }
    );
    assert!(same);
    assert!(elapsed < budget);
}
