//! Conditional amplification of cat states.
//!
//! One step mixes two cats on modes `a`, `b` at a beam splitter `BS1`
//! (outputs `f`, `g`), mixes `g` with an auxiliary coherent field `|γ⟩` on
//! mode `c` at a balanced splitter `BS2` (outputs `t1`, `t2`), and keeps `f`
//! when both `t1` and `t2` register photons. Identical odd cats of amplitude
//! `α` yield an even cat of amplitude `√2 α`; in general amplitudes add in
//! quadrature and relative phases add.
//!
//! Detector inefficiency is a loss channel in front of an ideal detector.
//! Because loss followed by a photon-number measurement is again diagonal in
//! the Fock basis, the step evaluates the equivalent POVM weights directly
//! and never builds the three-mode density operator.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{c, fidelity_pure, purity, DensityOperator, FockState, StateRef, C64};
use crate::optics::{coherent_state, css_state, BeamSplitter, CssSpec};

/// Acceptance probabilities below this are reported as [`Error::Degenerate`].
pub const MIN_ACCEPTANCE: f64 = 1e-15;
/// Relative cutoff for eigenvalues kept when expanding mixed inputs.
pub const ENSEMBLE_CUTOFF: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorKind {
    /// Reports only click (one or more photons) or no click.
    Threshold,
    /// Reports the number of detected photons.
    Resolving,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DetectorRepr")]
pub struct DetectorModel {
    efficiency: f64,
    kind: DetectorKind,
}

#[derive(Deserialize)]
struct DetectorRepr {
    efficiency: f64,
    kind: DetectorKind,
}

impl TryFrom<DetectorRepr> for DetectorModel {
    type Error = Error;

    fn try_from(r: DetectorRepr) -> Result<Self> {
        DetectorModel::new(r.efficiency, r.kind)
    }
}

impl DetectorModel {
    pub fn new(efficiency: f64, kind: DetectorKind) -> Result<Self> {
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return invalid(format!("detector efficiency must lie in (0, 1] (got {efficiency})"));
        }
        Ok(Self { efficiency, kind })
    }

    pub fn ideal_threshold() -> Self {
        Self { efficiency: 1.0, kind: DetectorKind::Threshold }
    }

    pub fn ideal_resolving() -> Self {
        Self { efficiency: 1.0, kind: DetectorKind::Resolving }
    }

    pub fn efficiency(&self) -> f64 {
        self.efficiency
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    /// `E[k][n]`: probability of registering `k` photons when `n` arrive.
    pub fn count_matrix(&self, dim: usize) -> DMatrix<f64> {
        let eta = self.efficiency;
        DMatrix::from_fn(dim, dim, |k, n| {
            if k > n {
                0.0
            } else {
                binomial(n, k) * eta.powi(k as i32) * (1.0 - eta).powi((n - k) as i32)
            }
        })
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Which detection events herald success.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AcceptRule {
    /// Both detectors fire.
    ClickClick,
    /// Explicit `(k1, k2)` count pairs; needs number-resolving detectors.
    Counts(BTreeSet<(usize, usize)>),
}

impl AcceptRule {
    pub fn counts(pairs: &[(usize, usize)]) -> Self {
        AcceptRule::Counts(pairs.iter().copied().collect())
    }
}

/// Parameters of one amplification step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaStepConfig {
    pub alpha: f64,
    pub beta: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    /// `(r, t)` of the first beam splitter.
    pub bs1: (f64, f64),
    pub gamma: f64,
    pub detector: DetectorModel,
    pub accept: AcceptRule,
}

impl CaStepConfig {
    /// Derives `BS1 = (β/A, α/A)` and `γ = 2αβ/A` with `A = √(α² + β²)`;
    /// ideal threshold detectors, click-click acceptance.
    pub fn new(alpha: f64, beta: f64, phi_a: f64, phi_b: f64) -> Result<Self> {
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return invalid(format!("input amplitudes must be positive (got {alpha}, {beta})"));
        }
        let a = alpha.hypot(beta);
        Ok(Self {
            alpha,
            beta,
            phi_a,
            phi_b,
            bs1: (beta / a, alpha / a),
            gamma: default_gamma(alpha, beta),
            detector: DetectorModel::ideal_threshold(),
            accept: AcceptRule::ClickClick,
        })
    }

    pub fn with_detector(mut self, detector: DetectorModel) -> Self {
        self.detector = detector;
        self
    }

    pub fn with_accept(mut self, accept: AcceptRule) -> Self {
        self.accept = accept;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn output_amplitude(&self) -> f64 {
        self.alpha.hypot(self.beta)
    }

    /// Cat expected on mode `f`: amplitude `√(α² + β²)`, phase `φ_a + φ_b`.
    pub fn target(&self) -> CssSpec {
        CssSpec {
            alpha: self.output_amplitude(),
            phi: (self.phi_a + self.phi_b).rem_euclid(2.0 * std::f64::consts::PI),
        }
    }

    fn validate(&self) -> Result<()> {
        let (r, t) = self.bs1;
        if (r * r + t * t - 1.0).abs() > 1e-12 {
            return invalid(format!("BS1 needs r² + t² = 1 (got r = {r}, t = {t})"));
        }
        if !self.gamma.is_finite() {
            return invalid("auxiliary amplitude must be finite");
        }
        if let AcceptRule::Counts(set) = &self.accept {
            if self.detector.kind == DetectorKind::Threshold {
                return invalid("explicit count pairs need number-resolving detectors");
            }
            if set.is_empty() {
                return invalid("empty accept set");
            }
        }
        Ok(())
    }
}

/// `γ = 2αβ/√(α² + β²)`.
pub fn default_gamma(alpha: f64, beta: f64) -> f64 {
    2.0 * alpha * beta / alpha.hypot(beta)
}

/// Result of one step: the heralded (sub-normalized) state of mode `f`.
#[derive(Clone, Debug)]
pub struct CaOutcome {
    pub output: DensityOperator,
    pub prob: f64,
    /// Probability of each accepted detection event. With threshold
    /// detectors the single key `(1, 1)` stands for click-click.
    pub click_table: BTreeMap<(usize, usize), f64>,
}

impl CaOutcome {
    pub fn fidelity(&self, target: &FockState) -> Result<f64> {
        fidelity_pure(target, &self.output)
    }

    pub fn purity(&self) -> Result<f64> {
        purity(&self.output)
    }
}

/// Precomputed pieces of a step that do not depend on the inputs.
struct StepKernel {
    dim: usize,
    bs1: BeamSplitter,
    /// Column `g` holds `BS2(|g⟩ ⊗ |γ⟩)` over `(t1, t2)`.
    aux: DMatrix<C64>,
    /// POVM weight of each `(t1, t2)` photon-number pair, flattened.
    weights: DVector<f64>,
}

impl StepKernel {
    fn new(cfg: &CaStepConfig, dim: usize) -> Result<Self> {
        cfg.validate()?;
        let bs1 = BeamSplitter::new(cfg.bs1.0, cfg.bs1.1, dim)?;
        let bs2 = BeamSplitter::balanced(dim)?;
        let gamma = coherent_state(c(cfg.gamma), dim)?.value;
        let mut aux = DMatrix::zeros(dim * dim, dim);
        for g in 0..dim {
            let mut input = vec![C64::default(); dim * dim];
            for (k, z) in gamma.amplitudes().iter().enumerate() {
                input[g * dim + k] = *z;
            }
            aux.set_column(g, &DVector::from_vec(bs2.apply_slice(&input)));
        }
        let weights = pair_weights(&cfg.detector, &cfg.accept, dim);
        Ok(Self { dim, bs1, aux, weights })
    }

    /// `Φ[f, (t1, t2)]` for a pure input pair.
    fn amplitudes(&self, a: &FockState, b: &FockState) -> DMatrix<C64> {
        let d = self.dim;
        let joint = a.amplitudes().kronecker(b.amplitudes());
        let fg = self.bs1.apply_slice(joint.as_slice());
        let psi = DMatrix::from_row_slice(d, d, &fg);
        psi * self.aux.transpose()
    }
}

/// POVM weight `Σ_{(k1,k2) accepted} E[k1][n] E[k2][m]` for photon numbers
/// `(n, m)` reaching the detectors.
fn pair_weights(det: &DetectorModel, accept: &AcceptRule, dim: usize) -> DVector<f64> {
    let e = det.count_matrix(dim);
    DVector::from_fn(dim * dim, |idx, _| {
        let (n, m) = (idx / dim, idx % dim);
        match accept {
            AcceptRule::ClickClick => (1.0 - e[(0, n)]) * (1.0 - e[(0, m)]),
            AcceptRule::Counts(set) => set
                .iter()
                .filter(|&&(k1, k2)| k1 < dim && k2 < dim)
                .map(|&(k1, k2)| e[(k1, n)] * e[(k2, m)])
                .sum(),
        }
    })
}

fn single_mode_dim(s: &StateRef) -> Result<usize> {
    if s.num_modes() != 1 {
        return Err(Error::ModeMismatch { expected: 1, got: s.num_modes() });
    }
    Ok(s.dim())
}

/// One amplification step on pure or mixed single-mode inputs.
///
/// Mixed inputs are expanded into their eigen-ensembles; the heralded
/// state is bilinear in the inputs, so the pairwise sum is exact.
pub fn ca_step<'a, 'b>(
    state_a: impl Into<StateRef<'a>>,
    state_b: impl Into<StateRef<'b>>,
    cfg: &CaStepConfig,
) -> Result<CaOutcome> {
    let (sa, sb) = (state_a.into(), state_b.into());
    let dim = single_mode_dim(&sa)?;
    let db = single_mode_dim(&sb)?;
    if dim != db {
        return Err(Error::DimMismatch(dim, db));
    }
    let kernel = StepKernel::new(cfg, dim)?;
    let ens_a = sa.ensemble(ENSEMBLE_CUTOFF);
    let ens_b = sb.ensemble(ENSEMBLE_CUTOFF);
    let pairs: Vec<(f64, &FockState, &FockState)> = ens_a
        .iter()
        .flat_map(|(wa, a)| ens_b.iter().map(move |(wb, b)| (wa * wb, a, b)))
        .collect();

    let sqrt_w = kernel.weights.map(f64::sqrt);
    // collected then summed in order so results do not depend on scheduling
    let parts: Vec<(DMatrix<C64>, DVector<f64>)> = pairs
        .par_iter()
        .map(|&(w, a, b)| {
            let phi = kernel.amplitudes(a, b);
            let counts = DVector::from_fn(dim * dim, |j, _| w * phi.column(j).norm_squared());
            let mut weighted = phi;
            for (j, mut col) in weighted.column_iter_mut().enumerate() {
                col *= c(sqrt_w[j]);
            }
            let rho = (&weighted * weighted.adjoint()) * c(w);
            (rho, counts)
        })
        .collect();
    let mut rho = DMatrix::zeros(dim, dim);
    let mut counts = DVector::zeros(dim * dim);
    for (r, n) in &parts {
        rho += r;
        counts += n;
    }

    let output = DensityOperator::from_parts(1, dim, (&rho + rho.adjoint()) * c(0.5));
    let prob = output.weight();
    if !(prob >= MIN_ACCEPTANCE) {
        return Err(Error::Degenerate(prob));
    }
    let click_table = click_table(&counts, cfg, dim);
    Ok(CaOutcome { output, prob, click_table })
}

fn click_table(
    counts: &DVector<f64>,
    cfg: &CaStepConfig,
    dim: usize,
) -> BTreeMap<(usize, usize), f64> {
    let e = cfg.detector.count_matrix(dim);
    let joint = |k1: usize, k2: usize| -> f64 {
        (0..dim * dim).map(|idx| counts[idx] * e[(k1, idx / dim)] * e[(k2, idx % dim)]).sum()
    };
    let mut table = BTreeMap::new();
    match (&cfg.accept, cfg.detector.kind) {
        (AcceptRule::ClickClick, DetectorKind::Threshold) => {
            let w = pair_weights(&cfg.detector, &cfg.accept, dim);
            table.insert((1, 1), counts.dot(&w));
        }
        (AcceptRule::ClickClick, DetectorKind::Resolving) => {
            for k1 in 1..dim {
                for k2 in 1..dim {
                    table.insert((k1, k2), joint(k1, k2));
                }
            }
        }
        (AcceptRule::Counts(set), _) => {
            for &(k1, k2) in set.iter().filter(|&&(a, b)| a < dim && b < dim) {
                table.insert((k1, k2), joint(k1, k2));
            }
        }
    }
    table
}

/// Heralding probability for ideal cat inputs:
/// `(1 − e^{−2α²β²/(α²+β²)})² [1 + cos(φ+φ′) e^{−2(α²+β²)}] / (2(1 + cos φ e^{−2α²})(1 + cos φ′ e^{−2β²}))`.
pub fn success_prob_closed(alpha: f64, beta: f64, phi: f64, phi2: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta > 0.0) {
        return invalid(format!("amplitudes must be positive (got {alpha}, {beta})"));
    }
    let (a2, b2) = (alpha * alpha, beta * beta);
    let s = a2 + b2;
    let click = -(-2.0 * a2 * b2 / s).exp_m1();
    let num = click * click * (1.0 + (phi + phi2).cos() * (-2.0 * s).exp());
    let den = 0.5 * CssSpec::new(alpha, phi)?.inverse_norm_sqr() * CssSpec::new(beta, phi2)?.inverse_norm_sqr();
    Ok(num / den)
}

/// Kraus operators of a loss channel with transmission `η` on `dim` levels:
/// `K_k = Σ_n √(C(n,k) (1−η)^k η^{n−k}) |n−k⟩⟨n|`.
pub fn loss_kraus(eta: f64, dim: usize) -> Result<Vec<DMatrix<C64>>> {
    if !(eta > 0.0 && eta <= 1.0) {
        return invalid(format!("efficiency must lie in (0, 1] (got {eta})"));
    }
    Ok((0..dim)
        .map(|k| {
            DMatrix::from_fn(dim, dim, |i, n| {
                if n >= k && i == n - k {
                    c((binomial(n, k) * (1.0 - eta).powi(k as i32) * eta.powi((n - k) as i32)).sqrt())
                } else {
                    c(0.0)
                }
            })
        })
        .collect())
}

/// Photon loss with transmission `η` on one mode; `η = 1` is the identity.
pub fn detector_loss(rho: &DensityOperator, mode: usize, eta: f64) -> Result<DensityOperator> {
    if mode >= rho.num_modes() {
        return Err(Error::ModeOutOfRange { index: mode, num_modes: rho.num_modes() });
    }
    if eta == 1.0 {
        return Ok(rho.clone());
    }
    rho.apply_kraus(&loss_kraus(eta, rho.dim())?, mode)
}

/// Step-by-step reference implementation of [`ca_step`]: builds the
/// three-mode operator, applies both splitters and the loss channels,
/// projects and traces. Cost grows as `dim⁹`; meant for cross-checks at
/// small `dim`.
pub fn ca_step_reference(
    state_a: &DensityOperator,
    state_b: &DensityOperator,
    cfg: &CaStepConfig,
) -> Result<CaOutcome> {
    use crate::fock::{partial_trace, tensor, ModeOperator};
    use crate::optics::beam_splitter;

    cfg.validate()?;
    let dim = state_a.dim();
    let gamma = coherent_state(c(cfg.gamma), dim)?.value.to_density();
    let rho = tensor(&[state_a.clone(), state_b.clone(), gamma])?;
    let rho = rho.apply(&beam_splitter(cfg.bs1.0, cfg.bs1.1, dim)?, &[0, 1])?;
    let rho = rho.apply(&beam_splitter(FRAC_1_SQRT_2, FRAC_1_SQRT_2, dim)?, &[1, 2])?;
    let eta = cfg.detector.efficiency;
    let rho = detector_loss(&detector_loss(&rho, 1, eta)?, 2, eta)?;

    let proj = |k: usize| {
        let mut m = DMatrix::zeros(dim, dim);
        m[(k, k)] = c(1.0);
        m
    };
    let click = {
        let mut m = DMatrix::identity(dim, dim);
        m[(0, 0)] = c(0.0);
        m
    };
    // (count pair, projector on t1, projector on t2)
    type Event = ((usize, usize), DMatrix<C64>, DMatrix<C64>);
    let events: Vec<Event> = match &cfg.accept {
        AcceptRule::ClickClick => vec![((1, 1), click.clone(), click)],
        AcceptRule::Counts(set) => set.iter().map(|&(a, b)| ((a, b), proj(a), proj(b))).collect(),
    };
    let mut out: Option<DensityOperator> = None;
    let mut table = BTreeMap::new();
    for (key, p1, p2) in events {
        let pair = ModeOperator::new(2, dim, p1.kronecker(&p2))?;
        let projected = partial_trace(&rho.apply(&pair, &[1, 2])?, &[0])?;
        table.insert(key, projected.weight());
        out = Some(match out {
            None => projected,
            Some(acc) => acc.add(&projected)?,
        });
    }
    let output = out.ok_or(Error::ZeroWeight)?;
    let prob = output.weight();
    if !(prob >= MIN_ACCEPTANCE) {
        return Err(Error::Degenerate(prob));
    }
    Ok(CaOutcome { output, prob, click_table: table })
}

/// Steps `odd_big ⊗ odd_small` with generalized splitter and auxiliary
/// amplitude, e.g. an even cat of amplitude `2√2` with an odd cat of
/// amplitude 1 gives an odd cat of amplitude 3.
pub fn mixed_parity_step<'a, 'b>(
    big: impl Into<StateRef<'a>>,
    big_spec: CssSpec,
    small: impl Into<StateRef<'b>>,
    small_spec: CssSpec,
    detector: DetectorModel,
) -> Result<CaOutcome> {
    let cfg = CaStepConfig::new(big_spec.alpha, small_spec.alpha, big_spec.phi, small_spec.phi)?
        .with_detector(detector);
    ca_step(big, small, &cfg)
}

/// Initial copies fed into the first stage of a tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeSource {
    /// Ideal cat state with the given phase.
    Css { phase: f64 },
    /// `S(r)|1⟩` with `r` chosen for the initial amplitude, mixed with
    /// `S(r)|0⟩` at weight `p`.
    SqueezedPhoton {
        #[serde(default)]
        p: f64,
    },
}

/// Configuration of a symmetric amplification tree (JSON shape:
/// `{alpha_i, source, stages, detector: {efficiency, kind}, accept, dim}`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub alpha_i: f64,
    pub source: TreeSource,
    pub stages: usize,
    #[serde(default = "DetectorModel::ideal_threshold")]
    pub detector: DetectorModel,
    #[serde(default = "default_accept")]
    pub accept: AcceptRule,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_accept() -> AcceptRule {
    AcceptRule::ClickClick
}

fn default_dim() -> usize {
    crate::fock::DEFAULT_DIM
}

/// Per-stage summary of a tree run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRecord {
    /// 0 for the initial copies.
    pub stage: usize,
    pub prob: f64,
    pub fidelity: f64,
    pub purity: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug)]
pub struct TreeResult {
    /// Normalized state after the last stage.
    pub state: DensityOperator,
    pub stages: Vec<StageRecord>,
    /// Phase of the cat expected after the last stage.
    pub phase: f64,
}

impl TreeResult {
    /// Step probabilities of stages `1..=n`.
    pub fn stage_probs(&self) -> Vec<f64> {
        self.stages.iter().skip(1).map(|s| s.prob).collect()
    }

    /// Probability that every one of the `2ⁿ − 1` steps succeeds at once.
    pub fn total_prob(&self) -> f64 {
        total_prob(&self.stage_probs())
    }

    pub fn final_record(&self) -> &StageRecord {
        self.stages.last().expect("tree has at least the initial record")
    }
}

/// `Π_k p_k^{2^{n−k}}` for stage probabilities `p_1..p_n`.
pub fn total_prob(stage_probs: &[f64]) -> f64 {
    let n = stage_probs.len();
    stage_probs.iter().enumerate().map(|(k, p)| p.powi(1 << (n - 1 - k))).product()
}

/// Initial state of a tree (normalized) and its phase.
pub fn tree_source_state(cfg: &TreeConfig) -> Result<(DensityOperator, f64)> {
    use crate::optics::{optimal_squeezing, squeezed_single_photon, squeezed_vacuum, SqueezeSpec};
    match cfg.source {
        TreeSource::Css { phase } => {
            Ok((css_state(CssSpec::new(cfg.alpha_i, phase)?, cfg.dim)?.to_density(), phase))
        }
        TreeSource::SqueezedPhoton { p } => {
            if !(0.0..1.0).contains(&p) {
                return invalid(format!("source inefficiency must lie in [0, 1) (got {p})"));
            }
            let spec = SqueezeSpec::new(optimal_squeezing(cfg.alpha_i)?)?;
            let one = squeezed_single_photon(spec, cfg.dim)?;
            let vac = squeezed_vacuum(spec, cfg.dim)?;
            let rho = DensityOperator::mixture(&[(1.0 - p, &one), (p, &vac)])?;
            Ok((rho, std::f64::consts::PI))
        }
    }
}

fn record(stage: usize, prob: f64, rho: &DensityOperator, amp: f64, phase: f64) -> Result<StageRecord> {
    let target = css_state(CssSpec::new(amp, phase)?, rho.dim())?;
    Ok(StageRecord {
        stage,
        prob,
        fidelity: fidelity_pure(&target, rho)?,
        purity: purity(rho)?,
        amplitude: amp,
    })
}

/// Runs `cfg.stages` symmetric steps: each stage combines two identical
/// copies of the previous stage's heralded state, so amplitudes grow by `√2`
/// and phases double. Fidelities are taken against the ideal cat of that
/// amplitude and phase.
pub fn iterate_tree(cfg: &TreeConfig) -> Result<TreeResult> {
    if cfg.stages == 0 {
        return invalid("a tree needs at least one stage");
    }
    let (mut rho, mut phase) = tree_source_state(cfg)?;
    let mut amp = cfg.alpha_i;
    let mut stages = vec![record(0, 1.0, &rho, amp, phase)?];
    for stage in 1..=cfg.stages {
        let step = CaStepConfig::new(amp, amp, phase, phase)?
            .with_detector(cfg.detector)
            .with_accept(cfg.accept.clone());
        let out = ca_step(&rho, &rho, &step)?;
        rho = out.output.normalized()?;
        amp *= std::f64::consts::SQRT_2;
        phase = (2.0 * phase).rem_euclid(2.0 * std::f64::consts::PI);
        stages.push(record(stage, out.prob, &rho, amp, phase)?);
    }
    Ok(TreeResult { state: rho, stages, phase })
}

/// Result of scanning tree depths for one final amplitude.
#[derive(Clone, Debug, PartialEq)]
pub struct DepthScan {
    pub best_n: usize,
    pub fidelity: f64,
    /// `(n, fidelity)` for every scanned depth.
    pub scan: Vec<(usize, f64)>,
}

/// Fidelity of the best tree depth for a final amplitude `alpha` built from
/// squeezed single photons at amplitude `alpha/√2ⁿ`, over `n` in `depths`.
/// Ties within `1e-6` go to the smaller depth.
pub fn best_tree_depth(alpha: f64, depths: std::ops::RangeInclusive<usize>, dim: usize) -> Result<DepthScan> {
    let scan: Vec<(usize, f64)> = depths
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&n| {
            let cfg = TreeConfig {
                alpha_i: alpha / std::f64::consts::SQRT_2.powi(n as i32),
                source: TreeSource::SqueezedPhoton { p: 0.0 },
                stages: n,
                detector: DetectorModel::ideal_threshold(),
                accept: AcceptRule::ClickClick,
                dim,
            };
            Ok((n, iterate_tree(&cfg)?.final_record().fidelity))
        })
        .collect::<Result<_>>()?;
    let mut best = *scan.first().ok_or_else(|| Error::InvalidParameter("empty depth range".into()))?;
    for &(n, f) in &scan[1..] {
        if f > best.1 + 1e-6 {
            best = (n, f);
        }
    }
    Ok(DepthScan { best_n: best.0, fidelity: best.1, scan })
}

/// Attempt-counting models for trees fed by quantum memories.
pub trait MemoryModel {
    fn expected_attempts(&self, stage_probs: &[f64]) -> f64;
}

/// Every step is retried independently until it succeeds; stage `k` of an
/// `n`-stage tree needs `2^{n−k}` successes, so the expected count is
/// `Σ_k 2^{n−k}/p_k`.
#[derive(Clone, Copy, Debug, Default)]
pub struct IndependentGeometric;

impl MemoryModel for IndependentGeometric {
    fn expected_attempts(&self, stage_probs: &[f64]) -> f64 {
        let n = stage_probs.len();
        stage_probs.iter().enumerate().map(|(k, p)| (1u64 << (n - 1 - k)) as f64 / p).sum()
    }
}

/// No storage: the whole tree is rerun until every step succeeds at once.
#[derive(Clone, Copy, Debug, Default)]
pub struct NoMemory;

impl MemoryModel for NoMemory {
    fn expected_attempts(&self, stage_probs: &[f64]) -> f64 {
        1.0 / total_prob(stage_probs)
    }
}

pub fn expected_attempts(stage_probs: &[f64], model: &dyn MemoryModel) -> Result<f64> {
    if stage_probs.is_empty() || stage_probs.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return invalid("stage probabilities must lie in (0, 1]");
    }
    Ok(model.expected_attempts(stage_probs))
}

/// Stage probabilities of an ideal-cat tree from the closed form.
pub fn cascade_probs(alpha_i: f64, phase: f64, stages: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(stages);
    let (mut a, mut ph) = (alpha_i, phase);
    for _ in 0..stages {
        out.push(success_prob_closed(a, a, ph, ph)?);
        a *= std::f64::consts::SQRT_2;
        ph = (2.0 * ph).rem_euclid(2.0 * std::f64::consts::PI);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{partial_trace, tensor};
    use crate::optics::beam_splitter;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn cat(alpha: f64, phi: f64, dim: usize) -> FockState {
        css_state(CssSpec::new(alpha, phi).unwrap(), dim).unwrap()
    }

    #[test]
    fn closed_probability_values() {
        assert_abs_diff_eq!(success_prob_closed(1.0, 1.0, PI, PI).unwrap(), 0.2721, epsilon = 5e-5);
        assert_abs_diff_eq!(success_prob_closed(8.0, 8.0, 0.0, 0.0).unwrap(), 0.5, epsilon = 1e-12);
        assert!(success_prob_closed(0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn ideal_cats_give_bigger_cat() {
        let d = 30;
        for (a, b, pa, pb) in [(1.0, 1.0, PI, PI), (0.5, 1.0, 0.0, PI), (1.0, 2f64.sqrt(), PI, 0.0)] {
            let cfg = CaStepConfig::new(a, b, pa, pb).unwrap();
            let out = ca_step(&cat(a, pa, d), &cat(b, pb, d), &cfg).unwrap();
            let closed = success_prob_closed(a, b, pa, pb).unwrap();
            assert_abs_diff_eq!(out.prob, closed, epsilon = 1e-9);
            let target = css_state(cfg.target(), d).unwrap();
            assert_abs_diff_eq!(out.fidelity(&target).unwrap(), 1.0, epsilon = 1e-9);
            let table: f64 = out.click_table.values().sum();
            assert_abs_diff_eq!(table, out.prob, epsilon = 1e-12);
        }
    }

    #[test]
    fn vacuum_inputs_leave_vacuum() {
        let d = 30;
        let vac = FockState::basis(d, &[0]).unwrap();
        let cfg = CaStepConfig::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let out = ca_step(&vac, &vac, &cfg).unwrap();
        assert_abs_diff_eq!(out.fidelity(&vac).unwrap(), 1.0, epsilon = 1e-12);
        // γ split evenly: each port gets |γ/√2⟩
        let click = -(-(cfg.gamma * cfg.gamma) / 2.0).exp_m1();
        assert_abs_diff_eq!(out.prob, click * click, epsilon = 1e-12);
    }

    #[test]
    fn threshold_with_counts_is_rejected() {
        let d = 8;
        let s = cat(0.5, PI, d);
        let cfg = CaStepConfig::new(0.5, 0.5, PI, PI).unwrap().with_accept(AcceptRule::counts(&[(1, 1)]));
        assert!(ca_step(&s, &s, &cfg).is_err());
    }

    #[test]
    fn degenerate_acceptance() {
        let d = 8;
        let s = cat(0.5, PI, d);
        let cfg = CaStepConfig::new(0.5, 0.5, PI, PI)
            .unwrap()
            .with_detector(DetectorModel::ideal_resolving())
            .with_accept(AcceptRule::counts(&[(7, 7)]))
            .with_gamma(0.0);
        assert!(matches!(ca_step(&s, &s, &cfg), Err(Error::Degenerate(_))));
    }

    #[test]
    fn loss_kraus_matches_beam_splitter_with_vacuum() {
        let d = 6;
        let eta: f64 = 0.6;
        let psi = FockState::single_mode(
            [0.3, 0.5, -0.4, 0.2, 0.6, 0.3].iter().map(|&x| c(x)).collect(),
        )
        .normalized()
        .unwrap();
        let rho = psi.to_density();
        let fast = detector_loss(&rho, 0, eta).unwrap();
        let joint = tensor(&[rho, FockState::basis(d, &[0]).unwrap().to_density()]).unwrap();
        let bs = beam_splitter((1.0 - eta).sqrt(), eta.sqrt(), d).unwrap();
        let slow = partial_trace(&joint.apply(&bs, &[0, 1]).unwrap(), &[0]).unwrap();
        assert_abs_diff_eq!((fast.matrix() - slow.matrix()).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn loss_on_fock_and_coherent_states() {
        let one = FockState::basis(5, &[1]).unwrap().to_density();
        let out = detector_loss(&one, 0, 0.3).unwrap();
        assert_abs_diff_eq!(out.matrix()[(1, 1)].re, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(out.matrix()[(0, 0)].re, 0.7, epsilon = 1e-15);
        assert_eq!(detector_loss(&one, 0, 1.0).unwrap(), one);
        let coh = coherent_state(c(1.2), 30).unwrap().value;
        let out = detector_loss(&coh.to_density(), 0, 0.5).unwrap();
        let want = coherent_state(c(1.2 * 0.5f64.sqrt()), 30).unwrap().value;
        assert_abs_diff_eq!(fidelity_pure(&want, &out).unwrap(), 1.0, epsilon = 1e-12);
        assert!(detector_loss(&one, 1, 0.5).is_err());
    }

    #[test]
    fn fast_step_matches_reference_route() {
        let d = 7;
        let a = cat(0.4, PI, d).to_density();
        let b = DensityOperator::mixture(&[(0.7, &cat(0.5, PI, d)), (0.3, &cat(0.5, 0.0, d))]).unwrap();
        for (det, accept) in [
            (DetectorModel::new(0.6, DetectorKind::Threshold).unwrap(), AcceptRule::ClickClick),
            (DetectorModel::new(0.8, DetectorKind::Resolving).unwrap(), AcceptRule::counts(&[(1, 1), (2, 1)])),
        ] {
            let cfg = CaStepConfig::new(0.4, 0.5, PI, PI).unwrap().with_detector(det).with_accept(accept);
            let fast = ca_step(&a, &b, &cfg).unwrap();
            let slow = ca_step_reference(&a, &b, &cfg).unwrap();
            assert_abs_diff_eq!((fast.output.matrix() - slow.output.matrix()).norm(), 0.0, epsilon = 1e-12);
            for (k, v) in &slow.click_table {
                assert_abs_diff_eq!(fast.click_table[k], *v, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn cascade_and_attempts() {
        let p = cascade_probs(1.0, PI, 2).unwrap();
        assert_abs_diff_eq!(total_prob(&p), 0.027, epsilon = 1e-3);
        let p4 = cascade_probs(0.5, PI, 4).unwrap();
        assert!((total_prob(&p4) / 2e-13 - 1.0).abs() < 0.15);
        let att = expected_attempts(&p4, &IndependentGeometric).unwrap();
        assert_abs_diff_eq!(att, 138.0, epsilon = 1.0);
        assert_abs_diff_eq!(expected_attempts(&[0.5], &IndependentGeometric).unwrap(), 2.0);
        assert_abs_diff_eq!(expected_attempts(&[0.5, 0.5], &NoMemory).unwrap(), 8.0);
        assert!(expected_attempts(&[0.0], &NoMemory).is_err());
    }

    #[test]
    fn ideal_tree_matches_closed_form() {
        let cfg = TreeConfig {
            alpha_i: 1.0,
            source: TreeSource::Css { phase: PI },
            stages: 2,
            detector: DetectorModel::ideal_threshold(),
            accept: AcceptRule::ClickClick,
            dim: 30,
        };
        let res = iterate_tree(&cfg).unwrap();
        let closed = cascade_probs(1.0, PI, 2).unwrap();
        for (got, want) in res.stage_probs().iter().zip(&closed) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(res.final_record().fidelity, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(res.phase, 0.0);
    }

    #[test]
    fn tree_config_json() {
        let text = r#"{"alpha_i": 0.5, "source": {"kind": "css", "phase": 3.14159},
            "stages": 2, "detector": {"efficiency": 0.5, "kind": "threshold"}}"#;
        let cfg: TreeConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.dim, 30);
        assert_eq!(cfg.accept, AcceptRule::ClickClick);
        let bad = r#"{"alpha_i": 0.5, "source": {"kind": "css", "phase": 0.0},
            "stages": 2, "detector": {"efficiency": 1.5, "kind": "threshold"}}"#;
        assert!(serde_json::from_str::<TreeConfig>(bad).is_err());
        let counts = r#"{"counts": [[1, 1], [2, 1]]}"#;
        assert_eq!(serde_json::from_str::<AcceptRule>(counts).unwrap(), AcceptRule::counts(&[(1, 1), (2, 1)]));
    }
}
