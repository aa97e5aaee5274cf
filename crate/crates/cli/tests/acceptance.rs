//! Acceptance gate: every criterion runs at its pinned tolerance and prints
//! one pass/fail line (visible with `--nocapture`, or via `quadtilt accept`).

use quadtilt_cli::acceptance;

fn check(report: acceptance::CriterionReport) {
    println!("{}", report.line());
    assert!(report.pass, "{}", report.line());
}

#[test]
fn criterion_01_tilted_score_identity() {
    check(acceptance::criterion_1());
}

#[test]
fn criterion_02_score_finite_difference() {
    check(acceptance::criterion_2());
}

#[test]
fn criterion_03_normalization_calibration() {
    check(acceptance::criterion_3());
}

#[test]
fn criterion_04_linear_tilt_w2() {
    check(acceptance::criterion_4());
}

#[test]
fn criterion_05_psd_sampler_w2() {
    check(acceptance::criterion_5());
}

#[test]
fn criterion_06_discretization_tv_budget() {
    check(acceptance::criterion_6());
}

#[test]
fn criterion_07_solution_mass_bound() {
    check(acceptance::criterion_7());
}

#[test]
fn criterion_08_rounding_mass_inequality() {
    check(acceptance::criterion_8());
}

#[test]
fn criterion_09_partition_decoder() {
    check(acceptance::criterion_9());
}

#[test]
fn criterion_10_maxcut_construction() {
    check(acceptance::criterion_10());
}

#[test]
fn criterion_11_gibbs_metastability_contrast() {
    check(acceptance::criterion_11());
}

#[test]
fn criterion_12_tv_unnormalized_bound() {
    check(acceptance::criterion_12());
}

#[test]
fn criterion_13_support_and_determinism() {
    check(acceptance::criterion_13());
}
