//! Acceptance suite: one test per criterion at the default truncation.
//! Each prints a pass/fail line per reproduced value, then asserts.

use catamp::fock::DEFAULT_DIM;
use catamp::verify::run_criterion;

fn criterion(id: u8) {
    let report = run_criterion(id, DEFAULT_DIM).expect("criterion evaluation failed");
    for line in report.lines() {
        println!("{line}");
    }
    let failed: Vec<String> = report.checks.iter().filter(|c| !c.pass).map(|c| c.line()).collect();
    assert!(failed.is_empty(), "criterion {id} failed checks:\n{}", failed.join("\n"));
    assert!(
        report.seconds <= report.budget_seconds,
        "criterion {id} took {:.2} s, budget {:.0} s",
        report.seconds,
        report.budget_seconds
    );
}

#[test]
fn criterion_01_small_cat_fidelities() {
    criterion(1);
}

#[test]
fn criterion_02_closed_form_fidelity() {
    criterion(2);
}

#[test]
fn criterion_03_success_probability() {
    criterion(3);
}

#[test]
fn criterion_04_cascade_probabilities() {
    criterion(4);
}

#[test]
fn criterion_05_click_resolved_output() {
    criterion(5);
}

#[test]
fn criterion_06_iterated_amplification() {
    criterion(6);
}

#[test]
fn criterion_07_purification() {
    criterion(7);
}

#[test]
fn criterion_08_detector_inefficiency() {
    criterion(8);
}

#[test]
fn criterion_09_wigner_functions() {
    criterion(9);
}

#[test]
fn criterion_10_qnd_equivalence() {
    criterion(10);
}

#[test]
fn criterion_11_photon_subtraction() {
    criterion(11);
}
