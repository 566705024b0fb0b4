//! Coherent states, cat states, squeezers, beam splitters and the closed-form
//! scalar functions that accompany them.
//!
//! Conventions: `S(r) = exp((r/2)(a†² − a²))`, so `S(r)|1⟩` has positive
//! amplitudes and is stretched along the real quadrature `X = a + a†`;
//! `B(r, t) = exp(θ(a†b − ab†))` with `cos θ = t`, `sin θ = r`, which maps
//! `|α⟩|β⟩ → |tα + rβ⟩|−rα + tβ⟩`.

use std::f64::consts::FRAC_1_SQRT_2;

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::fock::{c, FockState, ModeOperator, C64};

/// Coherent-state leakage above which construction fails.
pub const COHERENT_LEAKAGE_LIMIT: f64 = 1e-3;
/// Coherent-state leakage above which a warning is logged.
pub const COHERENT_LEAKAGE_WARN: f64 = 1e-8;
/// Default bound on `|r|` for squeezers.
pub const MAX_SQUEEZING: f64 = 2.0;
/// Minimum number of padding levels for matrix exponentials.
pub const MIN_PAD: usize = 10;

/// Target cat state `N(|α⟩ + e^{iφ}|−α⟩)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CssSpec {
    pub alpha: f64,
    pub phi: f64,
}

impl CssSpec {
    pub fn new(alpha: f64, phi: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite() && phi.is_finite()) {
            return invalid(format!("cat state needs finite alpha ≥ 0 (got {alpha}, φ = {phi})"));
        }
        Ok(Self { alpha, phi })
    }

    pub fn even(alpha: f64) -> Self {
        Self { alpha, phi: 0.0 }
    }

    pub fn odd(alpha: f64) -> Self {
        Self { alpha, phi: std::f64::consts::PI }
    }

    /// `|N_φ(α)|⁻² = 2(1 + cos φ · e^{−2α²})`.
    pub fn inverse_norm_sqr(&self) -> f64 {
        let a2 = self.alpha * self.alpha;
        let cp = self.phi.cos();
        // 1 + cos φ e^{-2α²} = (1 + cos φ) − cos φ (1 − e^{-2α²}), stable near α = 0, φ = π
        2.0 * ((1.0 + cp) + cp * (-2.0 * a2).exp_m1())
    }
}

/// Squeezing parameter `r`; quadrature variance `V = e^{−2r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezeSpec {
    pub r: f64,
}

impl SqueezeSpec {
    pub fn new(r: f64) -> Result<Self> {
        if !r.is_finite() {
            return invalid(format!("squeezing parameter must be finite (got {r})"));
        }
        Ok(Self { r })
    }

    pub fn variance(&self) -> f64 {
        (-2.0 * self.r).exp()
    }
}

/// A value together with the norm lost to truncation when building it.
#[derive(Clone, Debug)]
pub struct Truncated<T> {
    pub value: T,
    pub leakage: f64,
}

fn check_leakage(what: &str, leakage: f64, limit: f64) -> Result<()> {
    if leakage > limit {
        return Err(Error::Leakage { leakage, limit });
    }
    if leakage > COHERENT_LEAKAGE_WARN {
        warn!("{what}: truncation leakage {leakage:.3e}");
    }
    Ok(())
}

/// Unnormalized `e^{−|α|²/2} αⁿ/√n!` for `n < dim`.
fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(dim);
    let mut amp = c((-0.5 * alpha.norm_sqr()).exp());
    for n in 0..dim {
        if n > 0 {
            amp = amp * alpha / (n as f64).sqrt();
        }
        out.push(amp);
    }
    out
}

/// `|α⟩` truncated to `dim` levels and renormalized. Errors when more than
/// `1e-3` of the norm falls outside the truncated space.
pub fn coherent_state(alpha: C64, dim: usize) -> Result<Truncated<FockState>> {
    coherent_state_with_limit(alpha, dim, COHERENT_LEAKAGE_LIMIT)
}

pub fn coherent_state_with_limit(alpha: C64, dim: usize, limit: f64) -> Result<Truncated<FockState>> {
    if dim == 0 {
        return invalid("dim must be positive");
    }
    let amps = coherent_amplitudes(alpha, dim);
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let leakage = (1.0 - kept).max(0.0);
    check_leakage("coherent state", leakage, limit)?;
    let value = FockState::single_mode(amps).normalized()?;
    Ok(Truncated { value, leakage })
}

/// Normalized cat state. The amplitudes are evaluated per level as
/// `αⁿ + e^{iφ}(−α)ⁿ`, so odd cats with tiny `α` keep full precision.
pub fn css_state(spec: CssSpec, dim: usize) -> Result<FockState> {
    Ok(css_state_truncated(spec, dim)?.value)
}

pub fn css_state_truncated(spec: CssSpec, dim: usize) -> Result<Truncated<FockState>> {
    let spec = CssSpec::new(spec.alpha, spec.phi)?;
    if dim == 0 {
        return invalid("dim must be positive");
    }
    let exact = spec.inverse_norm_sqr();
    if exact <= 1e-300 {
        return Err(Error::ZeroVector);
    }
    let ph = C64::from_polar(1.0, spec.phi);
    let snap = |z: C64| if z.norm() < 1e-14 { C64::default() } else { z };
    let (even, odd) = (snap(1.0 + ph), snap(1.0 - ph));
    let coh = coherent_amplitudes(c(spec.alpha), dim);
    let amps: Vec<C64> = coh
        .iter()
        .enumerate()
        .map(|(n, &z)| if n % 2 == 0 { z * even } else { z * odd })
        .collect();
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    if kept <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let leakage = (1.0 - kept / exact).max(0.0);
    check_leakage("cat state", leakage, COHERENT_LEAKAGE_LIMIT)?;
    let value = FockState::single_mode(amps).normalized()?;
    Ok(Truncated { value, leakage })
}

/// Annihilation matrix on `n` levels.
fn annihilation(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

pub(crate) fn pad_for(dim: usize) -> usize {
    dim.max(MIN_PAD)
}

/// `S(r)` cropped to `dim` levels; computed at `dim + max(10, dim)` levels.
pub fn squeeze_op(spec: SqueezeSpec, dim: usize) -> Result<ModeOperator> {
    squeeze_op_padded(spec, dim, pad_for(dim), MAX_SQUEEZING)
}

pub fn squeeze_op_padded(spec: SqueezeSpec, dim: usize, pad: usize, max_r: f64) -> Result<ModeOperator> {
    if spec.r.abs() > max_r {
        return invalid(format!("|r| = {} exceeds the configured bound {max_r}", spec.r.abs()));
    }
    if pad < MIN_PAD {
        return invalid(format!("padding {pad} below the minimum {MIN_PAD}"));
    }
    let n = dim + pad;
    let a = annihilation(n);
    let a2 = &a * &a;
    let gen = (a2.transpose() - a2) * (0.5 * spec.r);
    let full = gen.exp();
    let crop = full.view((0, 0), (dim, dim)).map(c);
    ModeOperator::new(1, dim, crop)
}

/// `S(r)|1⟩` from its series: only odd levels `2n+1` are populated, with
/// amplitude `(tanh r)ⁿ (cosh r)^{−3/2} √((2n+1)!)/(2ⁿ n!)`. Normalized after
/// truncation.
pub fn squeezed_single_photon(spec: SqueezeSpec, dim: usize) -> Result<FockState> {
    let t = spec.r.tanh();
    let mut amps = vec![c(0.0); dim];
    let mut cn = spec.r.cosh().powf(-1.5);
    for n in 0.. {
        let level = 2 * n + 1;
        if level >= dim {
            break;
        }
        if n > 0 {
            let k = n as f64;
            cn *= t * ((2.0 * k) * (2.0 * k + 1.0)).sqrt() / (2.0 * k);
        }
        amps[level] = c(cn);
    }
    FockState::single_mode(amps).normalized()
}

/// `S(r)|0⟩` from its series, amplitude `(tanh r)ⁿ (cosh r)^{−1/2} √((2n)!)/(2ⁿ n!)`
/// on level `2n`. Normalized after truncation.
pub fn squeezed_vacuum(spec: SqueezeSpec, dim: usize) -> Result<FockState> {
    let t = spec.r.tanh();
    let mut amps = vec![c(0.0); dim];
    let mut cn = spec.r.cosh().powf(-0.5);
    for n in 0.. {
        let level = 2 * n;
        if level >= dim {
            break;
        }
        if n > 0 {
            let k = n as f64;
            cn *= t * ((2.0 * k - 1.0) * (2.0 * k)).sqrt() / (2.0 * k);
        }
        amps[level] = c(cn);
    }
    FockState::single_mode(amps).normalized()
}

/// Closed-form fidelity of `S(r)|1⟩` with the odd cat of amplitude `α`:
/// `2α² exp[α²(tanh r − 1)] / (cosh³r (1 − e^{−2α²}))`.
pub fn css_fidelity_closed(r: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return invalid(format!("closed-form fidelity needs alpha > 0 (got {alpha})"));
    }
    let a2 = alpha * alpha;
    Ok(2.0 * a2 * (a2 * (r.tanh() - 1.0)).exp() / (r.cosh().powi(3) * -(-2.0 * a2).exp_m1()))
}

/// Squeezing that maximizes [`css_fidelity_closed`]: the stationarity
/// condition is `α² = (3/2) sinh 2r`, equivalently
/// `cosh²r = 1/2 + √(9 + 4α⁴)/6`.
pub fn optimal_squeezing(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return invalid(format!("alpha must be finite and ≥ 0 (got {alpha})"));
    }
    Ok(0.5 * (2.0 * alpha * alpha / 3.0).asinh())
}

/// Two-mode beam splitter stored as its exact action on each
/// total-photon-number block, cropped to `dim` levels per mode.
#[derive(Clone, Debug)]
pub struct BeamSplitter {
    dim: usize,
    r: f64,
    t: f64,
    /// `blocks[N]` acts on `|k, N−k⟩`, `k = 0..=N`.
    blocks: Vec<DMatrix<f64>>,
}

impl BeamSplitter {
    pub fn new(r: f64, t: f64, dim: usize) -> Result<Self> {
        if !(r.is_finite() && t.is_finite()) || (r * r + t * t - 1.0).abs() > 1e-12 {
            return invalid(format!("beam splitter needs r² + t² = 1 (got r = {r}, t = {t})"));
        }
        if dim == 0 {
            return invalid("dim must be positive");
        }
        let theta = r.atan2(t);
        let blocks = (0..2 * dim - 1)
            .map(|total| {
                let g = DMatrix::from_fn(total + 1, total + 1, |i, j| {
                    // a†b |j, N−j⟩ = √((j+1)(N−j)) |j+1, N−j−1⟩; −ab† the transpose
                    let (j_, n_) = (j as f64, total as f64);
                    if i == j + 1 {
                        ((j_ + 1.0) * (n_ - j_)).sqrt()
                    } else if j == i + 1 {
                        -(j_ * (n_ - j_ + 1.0)).sqrt()
                    } else {
                        0.0
                    }
                });
                (g * theta).exp()
            })
            .collect();
        Ok(Self { dim, r, t, blocks })
    }

    /// Balanced splitter `B(1/√2, 1/√2)`.
    pub fn balanced(dim: usize) -> Result<Self> {
        Self::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2, dim)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn reflectivity(&self) -> f64 {
        self.r
    }

    pub fn transmissivity(&self) -> f64 {
        self.t
    }

    fn block_range(&self, total: usize) -> std::ops::RangeInclusive<usize> {
        total.saturating_sub(self.dim - 1)..=total.min(self.dim - 1)
    }

    /// Applies the splitter to a flat two-mode amplitude slice (`dim²`).
    pub(crate) fn apply_slice(&self, input: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![C64::default(); d * d];
        for (total, b) in self.blocks.iter().enumerate() {
            let range = self.block_range(total);
            for i in range.clone() {
                let mut acc = C64::default();
                for j in range.clone() {
                    acc += input[j * d + (total - j)] * b[(i, j)];
                }
                out[i * d + (total - i)] = acc;
            }
        }
        out
    }

    /// Applies the splitter to a two-mode state.
    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        if state.dim() != self.dim {
            return Err(Error::DimMismatch(state.dim(), self.dim));
        }
        if state.num_modes() != 2 {
            return Err(Error::ModeMismatch { expected: 2, got: state.num_modes() });
        }
        let out = self.apply_slice(state.amplitudes().as_slice());
        FockState::new(2, self.dim, out)
    }

    pub fn to_mode_operator(&self) -> ModeOperator {
        let d = self.dim;
        let mut m = DMatrix::zeros(d * d, d * d);
        for (total, b) in self.blocks.iter().enumerate() {
            let range = self.block_range(total);
            for i in range.clone() {
                for j in range.clone() {
                    m[(i * d + (total - i), j * d + (total - j))] = c(b[(i, j)]);
                }
            }
        }
        ModeOperator::unchecked(2, d, m)
    }
}

/// `B(r, t)` as a two-mode operator (see [`BeamSplitter`]).
pub fn beam_splitter(r: f64, t: f64, dim: usize) -> Result<ModeOperator> {
    Ok(BeamSplitter::new(r, t, dim)?.to_mode_operator())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderKind {
    Create,
    Annihilate,
}

pub fn ladder(kind: LadderKind, dim: usize) -> ModeOperator {
    let a = annihilation(dim).map(c);
    let m = match kind {
        LadderKind::Annihilate => a,
        LadderKind::Create => a.transpose(),
    };
    ModeOperator::unchecked(1, dim, m)
}

/// `X = a + a†` on `dim` levels.
pub fn quadrature_x(dim: usize) -> DMatrix<C64> {
    let a = annihilation(dim);
    (&a + a.transpose()).map(c)
}

/// `Y = −i(a − a†)` on `dim` levels.
pub fn quadrature_y(dim: usize) -> DMatrix<C64> {
    let a = annihilation(dim);
    (&a - a.transpose()).map(|x| C64::new(0.0, -x))
}

/// Normalized `a|ψ⟩` and the norm `‖a|ψ⟩‖` that was divided out.
pub fn photon_subtract(state: &FockState) -> Result<(FockState, f64)> {
    if state.num_modes() != 1 {
        return Err(Error::ModeMismatch { expected: 1, got: state.num_modes() });
    }
    let d = state.dim();
    let v = state.amplitudes();
    let out: DVector<C64> = DVector::from_fn(d, |n, _| {
        if n + 1 < d {
            v[n + 1] * ((n + 1) as f64).sqrt()
        } else {
            C64::default()
        }
    });
    let norm = out.norm();
    if norm < 1e-12 * v.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::ZeroVector);
    }
    Ok((FockState::single_mode(out.unscale(norm).as_slice().to_vec()), norm))
}

/// Probability of misidentifying `|±α⟩` by the sign of a homodyne reading:
/// `½ erfc(√2 α)`.
pub fn homodyne_error_prob(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return invalid(format!("alpha must be ≥ 0 (got {alpha})"));
    }
    Ok(0.5 * erfc(std::f64::consts::SQRT_2 * alpha))
}

/// Displacement `D(β) = exp(βa† − β*a)` by padded matrix exponential.
pub fn displacement_op(beta: C64, dim: usize) -> ModeOperator {
    let n = dim + pad_for(dim);
    let a = annihilation(n).map(c);
    let gen = a.transpose() * beta - a * beta.conj();
    let full = gen.exp();
    ModeOperator::unchecked(1, dim, full.view((0, 0), (dim, dim)).into_owned())
}
