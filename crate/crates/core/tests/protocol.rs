//! End-to-end behaviour of the amplification protocol and its sources.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use catamp::ca::{
    ca_step, iterate_tree, mixed_parity_step, AcceptRule, CaStepConfig, DetectorModel, TreeConfig, TreeSource,
};
use catamp::fock::FockState;
use catamp::optics::{css_state, optimal_squeezing, squeezed_single_photon, CssSpec, SqueezeSpec};
use catamp::qnd::{qnd_postselect, QndConfig};

#[test]
fn output_amplitude_peaks_at_the_quadrature_sum() {
    let d = 30;
    let (a, b) = (0.8, 1.1);
    let out = ca_step(
        &css_state(CssSpec::odd(a), d).unwrap(),
        &css_state(CssSpec::odd(b), d).unwrap(),
        &CaStepConfig::new(a, b, PI, PI).unwrap(),
    )
    .unwrap();
    let (best, _) = (0..=200)
        .map(|k| 1.0 + k as f64 * 0.005)
        .map(|amp| (amp, out.fidelity(&css_state(CssSpec::even(amp), d).unwrap()).unwrap()))
        .fold((0.0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    assert!((best - a.hypot(b)).abs() <= 0.01, "argmax {best}");
}

#[test]
fn large_even_and_small_odd_give_odd_cat_of_three() {
    let d = 50;
    let big = CssSpec::even(2.0 * SQRT_2);
    let small = CssSpec::odd(1.0);
    let out = mixed_parity_step(
        &css_state(big, d).unwrap(),
        big,
        &css_state(small, d).unwrap(),
        small,
        DetectorModel::ideal_threshold(),
    )
    .unwrap();
    let target = css_state(CssSpec::odd(3.0), d).unwrap();
    assert!(out.fidelity(&target).unwrap() > 1.0 - 1e-9);
}

#[test]
fn odd_and_even_cats_of_equal_size_combine_exactly() {
    let d = 30;
    let a = 0.9;
    let out = ca_step(
        &css_state(CssSpec::odd(a), d).unwrap(),
        &css_state(CssSpec::even(a), d).unwrap(),
        &CaStepConfig::new(a, a, PI, 0.0).unwrap(),
    )
    .unwrap();
    let target = css_state(CssSpec::odd(SQRT_2 * a), d).unwrap();
    assert!(out.fidelity(&target).unwrap() > 1.0 - 1e-10);
}

#[test]
fn one_stage_from_odd_cats_is_even() {
    let cfg = TreeConfig {
        alpha_i: 1.0,
        source: TreeSource::Css { phase: PI },
        stages: 1,
        detector: DetectorModel::ideal_threshold(),
        accept: AcceptRule::ClickClick,
        dim: 30,
    };
    let res = iterate_tree(&cfg).unwrap();
    let m = res.state.matrix();
    let odd: f64 = (1..30).step_by(2).map(|n| m[(n, n)].re).sum();
    assert!(odd < 1e-12);
    assert!(res.phase.abs() < 1e-12);
}

#[test]
fn four_stages_from_squeezed_photons_reach_alpha_two() {
    let cfg = TreeConfig {
        alpha_i: 0.5,
        source: TreeSource::SqueezedPhoton { p: 0.0 },
        stages: 4,
        detector: DetectorModel::ideal_threshold(),
        accept: AcceptRule::ClickClick,
        dim: 30,
    };
    let res = iterate_tree(&cfg).unwrap();
    let last = res.final_record();
    assert!((last.amplitude - 2.0).abs() < 1e-12);
    assert!((last.fidelity - 0.995).abs() < 2e-3, "fidelity {}", last.fidelity);
}

#[test]
fn click_resolved_output_errors_start_at_four_photons() {
    // the (1,1) output equals the even cat of amplitude 1 on |0⟩ and |2⟩;
    // the squeezing error first shows up on |4⟩
    let d = 30;
    let r = optimal_squeezing(FRAC_1_SQRT_2).unwrap();
    let s = squeezed_single_photon(SqueezeSpec::new(r).unwrap(), d).unwrap();
    let cfg = CaStepConfig::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, PI, PI)
        .unwrap()
        .with_detector(DetectorModel::ideal_resolving())
        .with_accept(AcceptRule::counts(&[(1, 1)]));
    let out = ca_step(&s, &s, &cfg).unwrap();
    let rho = out.output.normalized().unwrap();
    let psi = &rho.ensemble(0.0)[0].1;
    let cat = css_state(CssSpec::even(1.0), d).unwrap();
    // scale so that the vacuum amplitudes agree, then compare level by level
    let scale = cat.amplitudes()[0] / psi.amplitudes()[0];
    let diff: Vec<f64> = (0..d).map(|n| (psi.amplitudes()[n] * scale - cat.amplitudes()[n]).re).collect();
    assert!(diff[2].abs() < 1e-12, "{diff:?}");
    assert!(diff[4].abs() > 1e-3, "{diff:?}");
    assert!(diff.iter().skip(1).step_by(2).all(|x| x.abs() < 1e-12));
}

#[test]
fn qnd_output_keeps_odd_parity_structure() {
    let out = qnd_postselect(1, &QndConfig::new(0.3, 0.1, 30).unwrap()).unwrap();
    let m = out.state.matrix();
    for i in 0..30 {
        for j in 0..30 {
            if (i + j) % 2 == 1 {
                assert!(m[(i, j)].norm() < 1e-10);
            }
        }
    }
    let odd = out.dominant.amplitudes().iter().step_by(2).map(|z| z.norm_sqr()).sum::<f64>();
    assert!(odd < 1e-10, "dominant eigenvector has even weight {odd}");
    assert!(FockState::basis(30, &[1]).unwrap().inner(&out.dominant).unwrap().norm() > 0.9);
}
