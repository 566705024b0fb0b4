//! Mixed squeezed-photon inputs from an imperfect single-photon source and
//! their purification by repeated amplification steps.
//!
//! A source that fails with probability `p` emits vacuum, so after the
//! squeezer the input is `p S(r)|0⟩⟨0|S†(r) + (1−p) S(r)|1⟩⟨1|S†(r)`.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ca::{ca_step, CaStepConfig, DetectorModel};
use crate::error::{invalid, Result};
use crate::fock::{c, fidelity_pure, purity, DensityOperator, FockState};
use crate::optics::{
    css_state, optimal_squeezing, squeezed_single_photon, squeezed_vacuum, CssSpec, SqueezeSpec,
};

/// Single-photon source with failure probability `p`, followed by `S(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub p: f64,
    pub r: f64,
}

impl SourceModel {
    pub fn new(p: f64, r: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return invalid(format!("source inefficiency must lie in [0, 1) (got {p})"));
        }
        if !r.is_finite() {
            return invalid("squeezing parameter must be finite");
        }
        Ok(Self { p, r })
    }

    /// Squeezing chosen to best approximate an odd cat of amplitude `alpha`.
    pub fn for_alpha(p: f64, alpha: f64) -> Result<Self> {
        Self::new(p, optimal_squeezing(alpha)?)
    }

    /// Cat amplitude whose optimal squeezing is `r` (`α² = (3/2) sinh 2r`).
    pub fn alpha(&self) -> f64 {
        (1.5 * (2.0 * self.r).sinh()).max(0.0).sqrt()
    }
}

/// Source output after the squeezer (trace 1).
pub fn mixed_sq_photon(model: SourceModel, dim: usize) -> Result<DensityOperator> {
    let model = SourceModel::new(model.p, model.r)?;
    let spec = SqueezeSpec::new(model.r)?;
    let one = squeezed_single_photon(spec, dim)?;
    let vac = squeezed_vacuum(spec, dim)?;
    DensityOperator::mixture(&[(1.0 - model.p, &one), (model.p, &vac)])
}

/// Metrics of a normalized state against a reference cat.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub fidelity: f64,
    pub purity: f64,
}

fn metrics(rho: &DensityOperator, target: CssSpec) -> Result<Metrics> {
    let t = css_state(target, rho.dim())?;
    Ok(Metrics { fidelity: fidelity_pure(&t, rho)?, purity: purity(rho)? })
}

/// One purification step and its heralding probability.
#[derive(Clone, Debug)]
pub struct PurifyStep {
    pub state: DensityOperator,
    pub metrics: Metrics,
    pub prob: f64,
}

fn step(
    a: &DensityOperator,
    alpha: f64,
    phi_a: f64,
    b: &DensityOperator,
    beta: f64,
    phi_b: f64,
    detector: DetectorModel,
) -> Result<PurifyStep> {
    let cfg = CaStepConfig::new(alpha, beta, phi_a, phi_b)?.with_detector(detector);
    let out = ca_step(a, b, &cfg)?;
    let state = out.output.normalized()?;
    Ok(PurifyStep { metrics: metrics(&state, cfg.target())?, state, prob: out.prob })
}

/// Two copies of the source output through one step; fidelity is taken
/// against the even cat of amplitude `√2 α`.
pub fn purify_once(model: SourceModel, dim: usize, detector: DetectorModel) -> Result<PurifyStep> {
    let rho = mixed_sq_photon(model, dim)?;
    let a = model.alpha();
    step(&rho, a, PI, &rho, a, PI, detector)
}

/// One row of a purification sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    pub purity_in: f64,
    pub purity_1: f64,
    pub purity_2: Option<f64>,
    pub fid_in: f64,
    pub fid_1: f64,
    pub fid_2: Option<f64>,
}

/// Input, first- and second-iteration purity and fidelity for each `p`.
/// References are the odd cat at `alpha_i` and even cats at `√2 alpha_i`
/// and `2 alpha_i`.
pub fn purify_sweep(
    p_grid: &[f64],
    iterations: usize,
    alpha_i: f64,
    dim: usize,
    detector: DetectorModel,
) -> Result<Vec<SweepRow>> {
    if !(1..=2).contains(&iterations) {
        return invalid(format!("iterations must be 1 or 2 (got {iterations})"));
    }
    p_grid
        .par_iter()
        .map(|&p| {
            let model = SourceModel::for_alpha(p, alpha_i)?;
            let rho = mixed_sq_photon(model, dim)?;
            let input = metrics(&rho, CssSpec::odd(alpha_i))?;
            let first = step(&rho, alpha_i, PI, &rho, alpha_i, PI, detector)?;
            let second = if iterations == 2 {
                let a1 = SQRT_2 * alpha_i;
                Some(step(&first.state, a1, 0.0, &first.state, a1, 0.0, detector)?.metrics)
            } else {
                None
            };
            Ok(SweepRow {
                p,
                purity_in: input.purity,
                purity_1: first.metrics.purity,
                purity_2: second.map(|m| m.purity),
                fid_in: input.fidelity,
                fid_1: first.metrics.fidelity,
                fid_2: second.map(|m| m.fidelity),
            })
        })
        .collect()
}

/// CSV `p,purity_in,purity_1,purity_2,fid_in,fid_1,fid_2`; missing second
/// iteration values are left empty.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    writeln!(out, "p,purity_in,purity_1,purity_2,fid_in,fid_1,fid_2")?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:.16e}")).unwrap_or_default();
    for r in rows {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{},{:.16e},{:.16e},{}",
            r.p,
            r.purity_in,
            r.purity_1,
            opt(r.purity_2),
            r.fid_in,
            r.fid_1,
            opt(r.fid_2)
        )?;
    }
    Ok(())
}

/// Intermediate and final states of the asymmetric route.
#[derive(Clone, Debug)]
pub struct AlternateResult {
    /// Even cat of amplitude `α√2` from two source copies.
    pub first: PurifyStep,
    /// Odd cat of amplitude `α√3` from the first output and a fresh copy.
    pub second: PurifyStep,
    /// Even cat of amplitude `2α` from the second output and a fresh copy.
    pub last: PurifyStep,
}

/// Builds the amplitude-`2α` cat by combining with fresh source copies one
/// at a time: `(α, α) → √2α`, then `+α → √3α`, then `+α → 2α`.
pub fn alternate_arrangement(model: SourceModel, dim: usize, detector: DetectorModel) -> Result<AlternateResult> {
    let rho = mixed_sq_photon(model, dim)?;
    let a = model.alpha();
    let first = step(&rho, a, PI, &rho, a, PI, detector)?;
    let second = step(&first.state, SQRT_2 * a, 0.0, &rho, a, PI, detector)?;
    let last = step(&second.state, 3f64.sqrt() * a, PI, &rho, a, PI, detector)?;
    Ok(AlternateResult { first, second, last })
}

/// Symmetric route to `2α`: two identical steps.
pub fn symmetric_arrangement(model: SourceModel, dim: usize, detector: DetectorModel) -> Result<(PurifyStep, PurifyStep)> {
    let rho = mixed_sq_photon(model, dim)?;
    let a = model.alpha();
    let first = step(&rho, a, PI, &rho, a, PI, detector)?;
    let a1 = SQRT_2 * a;
    let second = step(&first.state, a1, 0.0, &first.state, a1, 0.0, detector)?;
    Ok((first, second))
}

/// Excess amplitudes of a rescaled squeezed photon over the odd cat:
/// `S(r)|1⟩` is scaled so that its `|1⟩` amplitude equals the cat's, and
/// `δ^{(2k+1)}` is the difference on level `2k+1`. Returns
/// `(level, δ)` for `k = 1..=k_max`.
pub fn error_coefficients(r: f64, alpha: f64, k_max: usize) -> Result<Vec<(usize, f64)>> {
    if !(alpha > 0.0) {
        return invalid(format!("alpha must be positive (got {alpha})"));
    }
    // exact series coefficients on both sides, no truncation renormalization
    let t = r.tanh();
    let mut sq = vec![r.cosh().powf(-1.5)];
    let norm = CssSpec::odd(alpha).inverse_norm_sqr().sqrt();
    let mut cat = vec![2.0 * (-0.5 * alpha * alpha).exp() * alpha / norm];
    for k in 1..=k_max {
        let kf = k as f64;
        sq.push(sq[k - 1] * t * ((2.0 * kf) * (2.0 * kf + 1.0)).sqrt() / (2.0 * kf));
        cat.push(cat[k - 1] * alpha * alpha / ((2.0 * kf) * (2.0 * kf + 1.0)).sqrt());
    }
    let scale = cat[0] / sq[0];
    Ok((1..=k_max).map(|k| (2 * k + 1, scale * sq[k] - cat[k])).collect())
}

/// `N(|CSS₋(α)⟩ + δ|5⟩)`, the cat with its dominant error term added.
pub fn error_term_state(alpha: f64, delta: f64, dim: usize) -> Result<FockState> {
    if dim <= 5 {
        return invalid("error-term state needs dim > 5");
    }
    let css = css_state(CssSpec::odd(alpha), dim)?;
    let mut amps: Vec<_> = css.amplitudes().iter().copied().collect();
    amps[5] += c(delta);
    FockState::single_mode(amps).normalized()
}

/// `δ ≥ 0` for which [`error_term_state`] has the given fidelity with the
/// odd cat (bisection on `[0, 1]`).
pub fn matching_delta(alpha: f64, fidelity: f64, dim: usize) -> Result<f64> {
    if !(0.0 < fidelity && fidelity <= 1.0) {
        return invalid(format!("target fidelity must lie in (0, 1] (got {fidelity})"));
    }
    let css = css_state(CssSpec::odd(alpha), dim)?;
    let f = |d: f64| -> Result<f64> { fidelity_pure(&css, &error_term_state(alpha, d, dim)?) };
    let (mut lo, mut hi) = (0.0, 1.0);
    if f(hi)? > fidelity {
        return invalid("target fidelity not reachable with δ ≤ 1");
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > fidelity {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Squeezing that makes `S(r)|1⟩` closest to the odd cat of amplitude `1/√2`.
pub fn reference_squeezing() -> f64 {
    0.5 * (2.0 * FRAC_1_SQRT_2 * FRAC_1_SQRT_2 / 3.0).asinh()
}
