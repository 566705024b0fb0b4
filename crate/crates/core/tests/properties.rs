//! Randomized invariants of states, optics and the amplification step.

use std::f64::consts::PI;

use catamp::ca::{ca_step, success_prob_closed, AcceptRule, CaStepConfig, DetectorModel};
use catamp::fock::{fidelity_pure, C64};
use catamp::optics::{coherent_state, css_state, BeamSplitter, CssSpec};
use proptest::prelude::*;

fn phase() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(PI)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn cats_have_definite_parity(alpha in 0.05f64..2.5, phi in phase()) {
        let s = css_state(CssSpec::new(alpha, phi).unwrap(), 30).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        let wrong = if phi == 0.0 { 1 } else { 0 };
        for n in (wrong..30).step_by(2) {
            prop_assert_eq!(s.amplitudes()[n], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn beam_splitter_preserves_norm_and_maps_coherent_pairs(
        a in -1.2f64..1.2, b in -1.2f64..1.2, theta in 0.0f64..std::f64::consts::FRAC_PI_2,
    ) {
        let d = 24;
        let bs = BeamSplitter::new(theta.sin(), theta.cos(), d).unwrap();
        let ca = coherent_state(C64::new(a, 0.0), d).unwrap().value;
        let cb = coherent_state(C64::new(b, 0.0), d).unwrap().value;
        let input = catamp::fock::tensor(&[ca.clone(), cb.clone()]).unwrap();
        let out = bs.apply(&input).unwrap();
        prop_assert!((out.norm_sqr() - input.norm_sqr()).abs() < 1e-9);
        // |α⟩|β⟩ → |tα − rβ⟩|rα + tβ⟩ up to the sign convention of the splitter
        let (r, t) = (theta.sin(), theta.cos());
        let candidates = [(t * a - r * b, r * a + t * b), (t * a + r * b, t * b - r * a)];
        let best = candidates
            .iter()
            .map(|&(x, y)| {
                let f = coherent_state(C64::new(x, 0.0), d).unwrap().value;
                let g = coherent_state(C64::new(y, 0.0), d).unwrap().value;
                let target = catamp::fock::tensor(&[f, g]).unwrap();
                fidelity_pure(&target, &out).unwrap()
            })
            .fold(0.0, f64::max);
        prop_assert!(best > 1.0 - 1e-9, "best fidelity {best}");
    }

    #[test]
    fn closed_probability_is_a_probability(
        a in 0.05f64..3.0, b in 0.05f64..3.0, pa in phase(), pb in phase(),
    ) {
        let p = success_prob_closed(a, b, pa, pb).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        let swapped = success_prob_closed(b, a, pb, pa).unwrap();
        prop_assert!((p - swapped).abs() < 1e-14);
    }

    #[test]
    fn step_adds_phases_and_amplitudes(
        a in 0.3f64..1.2, b in 0.3f64..1.2, pa in phase(), pb in phase(),
    ) {
        let d = 30;
        let cfg = CaStepConfig::new(a, b, pa, pb).unwrap();
        let out = ca_step(
            &css_state(CssSpec::new(a, pa).unwrap(), d).unwrap(),
            &css_state(CssSpec::new(b, pb).unwrap(), d).unwrap(),
            &cfg,
        )
        .unwrap();
        let target = css_state(CssSpec::new(a.hypot(b), pa + pb).unwrap(), d).unwrap();
        prop_assert!(out.fidelity(&target).unwrap() > 1.0 - 1e-9);
        prop_assert!((out.prob - success_prob_closed(a, b, pa, pb).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn click_table_accounts_for_acceptance(a in 0.3f64..1.0, eta in 0.2f64..1.0) {
        let d = 20;
        let pairs: Vec<(usize, usize)> = (1..4).flat_map(|k| (1..4).map(move |l| (k, l))).collect();
        let det = DetectorModel::new(eta, catamp::ca::DetectorKind::Resolving).unwrap();
        let cfg = CaStepConfig::new(a, a, PI, PI).unwrap().with_detector(det).with_accept(AcceptRule::counts(&pairs));
        let s = css_state(CssSpec::odd(a), d).unwrap();
        let out = ca_step(&s, &s, &cfg).unwrap();
        let total: f64 = out.click_table.values().sum();
        prop_assert!((total - out.prob).abs() < 1e-10);
        prop_assert!((out.output.weight() - out.prob).abs() < 1e-10);
    }
}
