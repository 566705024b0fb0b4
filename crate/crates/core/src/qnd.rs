//! Quantum-non-demolition coupling of a signal mode to a vacuum meter,
//! homodyne-window post-selection on the meter, and the resulting squeezed
//! single photon.
//!
//! Quadratures are `X = a + a†`, `Y = −i(a − a†)` (`[X, Y] = 2i`, vacuum
//! variance 1). The coupling is `U = exp(i sinh r · X_m Y_s)`, which is
//! `exp(i 2 sinh r · x_m y_s)` in canonical quadratures `x = X/√2`,
//! `y = Y/√2`. It transforms
//!
//! ```text
//! X_s → X_s − 2 sinh r X_m     Y_s → Y_s
//! X_m → X_m                    Y_m → Y_m + 2 sinh r Y_s
//! ```
//!
//! Two-mode states are ordered (signal, meter). Everything is evaluated in a
//! padded space where `X_m` and `Y_s` are diagonalized exactly.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{c, fidelity_pure, DensityOperator, FockState, ModeOperator, C64};
use crate::optics::{pad_for, quadrature_x, quadrature_y, squeezed_single_photon, SqueezeSpec};

/// Acceptance below which post-selection is reported as degenerate.
pub const MIN_QND_ACCEPTANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QndConfig {
    pub r: f64,
    /// Half-width of the accepted meter window `(−δ, δ)`.
    pub delta: f64,
    pub dim: usize,
}

impl QndConfig {
    pub fn new(r: f64, delta: f64, dim: usize) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return invalid(format!("coupling r must be finite and ≥ 0 (got {r})"));
        }
        if !(delta > 0.0) {
            return invalid(format!("window half-width must be positive (got {delta})"));
        }
        if dim < 2 {
            return invalid("dim must be at least 2");
        }
        Ok(Self { r, delta, dim })
    }

    /// `κ = √(1 + 4σ sinh²r)` with meter variance `σ`.
    pub fn kappa(&self, sigma: f64) -> f64 {
        (1.0 + 4.0 * sigma * self.r.sinh().powi(2)).sqrt()
    }
}

/// The coupling in the joint eigenbasis of `Y_s` and `X_m`.
pub struct QndUnitary {
    dim: usize,
    pad_dim: usize,
    /// Columns: eigenvectors of `X` (real); also used for `X_m`.
    x_vecs: DMatrix<f64>,
    /// Columns: eigenvectors of `Y = diag(iⁿ) X diag(iⁿ)†`.
    y_vecs: DMatrix<C64>,
    /// `e^{i sinh r · y_k x_l}`.
    phases: DMatrix<C64>,
}

impl QndUnitary {
    pub fn new(r: f64, dim: usize) -> Result<Self> {
        Self::with_pad(r, dim, pad_for(dim))
    }

    /// Same as [`QndUnitary::new`] with `pad` extra levels per mode.
    pub fn with_pad(r: f64, dim: usize, pad: usize) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return invalid(format!("coupling r must be finite and ≥ 0 (got {r})"));
        }
        let pad_dim = dim + pad;
        let x = quadrature_x(pad_dim).map(|z| z.re);
        let eig = SymmetricEigen::new(x);
        let vals = eig.eigenvalues;
        let x_vecs = eig.eigenvectors;
        let y_vecs = DMatrix::from_fn(pad_dim, pad_dim, |n, k| {
            C64::new(0.0, 1.0).powu(n as u32) * x_vecs[(n, k)]
        });
        let s = r.sinh();
        let phases = DMatrix::from_fn(pad_dim, pad_dim, |k, l| C64::from_polar(1.0, s * vals[k] * vals[l]));
        Ok(Self { dim, pad_dim, x_vecs, y_vecs, phases })
    }

    pub fn pad_dim(&self) -> usize {
        self.pad_dim
    }

    /// Eigen-coordinates `C[k, l]` of `U|n_s, n_m⟩` (padded).
    fn eigen_coords(&self, n_s: usize, n_m: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.pad_dim, self.pad_dim, |k, l| {
            self.y_vecs[(n_s, k)].conj() * self.x_vecs[(n_m, l)] * self.phases[(k, l)]
        })
    }

    fn to_fock(&self, coords: &DMatrix<C64>) -> DMatrix<C64> {
        &self.y_vecs * coords * self.x_vecs.transpose().map(c)
    }

    /// `U|n_s⟩|n_m⟩` as a padded amplitude matrix `ψ[signal, meter]`.
    pub fn apply_basis(&self, n_s: usize, n_m: usize) -> DMatrix<C64> {
        self.to_fock(&self.eigen_coords(n_s, n_m))
    }

    /// The coupling cropped to `dim` levels per mode.
    pub fn to_mode_operator(&self) -> ModeOperator {
        let d = self.dim;
        let cols: Vec<Vec<C64>> = (0..d * d)
            .into_par_iter()
            .map(|idx| {
                let psi = self.apply_basis(idx / d, idx % d);
                (0..d * d).map(|o| psi[(o / d, o % d)]).collect()
            })
            .collect();
        let m = DMatrix::from_fn(d * d, d * d, |i, j| cols[j][i]);
        ModeOperator::unchecked(2, d, m)
    }
}

/// `exp(i sinh r · X_m Y_s)` on `dim` levels per mode, ordered (signal, meter).
pub fn qnd_unitary(cfg: &QndConfig) -> Result<ModeOperator> {
    Ok(QndUnitary::new(cfg.r, cfg.dim)?.to_mode_operator())
}

/// Nodes and weights of `n`-point Gauss–Legendre quadrature on `[−1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        let k = i.max(j) as f64;
        if i.abs_diff(j) == 1 {
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Oscillator eigenfunctions `ψ_0..ψ_{dim−1}` at `y` (vacuum variance 1).
fn wavefunctions(y: f64, dim: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dim);
    out.push((2.0 * std::f64::consts::PI).powf(-0.25) * (-0.25 * y * y).exp());
    for n in 0..dim.saturating_sub(1) {
        let prev = if n == 0 { 0.0 } else { out[n - 1] };
        out.push((y * out[n] - (n as f64).sqrt() * prev) / ((n + 1) as f64).sqrt());
    }
    out
}

/// POVM element `Π_{mn} = ∫_{−δ}^{δ} ψ_m(y) ψ_n(y) dy` for an `X` reading
/// inside `(−δ, δ)`.
pub fn quadrature_window_projector(delta: f64, dim: usize) -> Result<ModeOperator> {
    quadrature_window_projector_rotated(delta, 0.0, dim)
}

/// Window on the rotated quadrature `X cos θ + Y sin θ`:
/// `Π_θ = R Π R†` with `R = diag(e^{iθn})`. `θ = π/2` selects `Y`.
pub fn quadrature_window_projector_rotated(delta: f64, theta: f64, dim: usize) -> Result<ModeOperator> {
    if !(delta > 0.0 && delta.is_finite()) {
        return invalid(format!("window half-width must be positive and finite (got {delta})"));
    }
    let (nodes, weights) = gauss_legendre(16);
    let panels = (2.0 * delta).ceil().max(1.0) as usize;
    let width = 2.0 * delta / panels as f64;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for p in 0..panels {
        let centre = -delta + (p as f64 + 0.5) * width;
        for (x, w) in nodes.iter().zip(&weights) {
            let psi = DVector::from_vec(wavefunctions(centre + 0.5 * width * x, dim));
            m += (&psi * psi.transpose()) * (0.5 * width * w);
        }
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| C64::from_polar(m[(i, j)], theta * (i as f64 - j as f64)));
    Ok(ModeOperator::unchecked(1, dim, m))
}

/// Post-selected signal after coupling `|n⟩_s|0⟩_m` and accepting a meter
/// `Y` reading in `(−δ, δ)`.
#[derive(Clone, Debug)]
pub struct QndOutcome {
    /// Sub-normalized signal state; its weight is the acceptance probability.
    pub state: DensityOperator,
    /// Dominant eigenvector of the normalized signal state.
    pub dominant: FockState,
    pub prob: f64,
}

pub fn qnd_postselect(n_signal: usize, cfg: &QndConfig) -> Result<QndOutcome> {
    let cfg = QndConfig::new(cfg.r, cfg.delta, cfg.dim)?;
    if n_signal >= cfg.dim {
        return invalid(format!("signal level {n_signal} ≥ dim {}", cfg.dim));
    }
    let u = QndUnitary::new(cfg.r, cfg.dim)?;
    let psi = u.apply_basis(n_signal, 0);
    let window = quadrature_window_projector_rotated(cfg.delta, std::f64::consts::FRAC_PI_2, u.pad_dim)?;
    let sig = psi.rows(0, cfg.dim).into_owned();
    let rho = &sig * window.matrix().transpose() * sig.adjoint();
    let rho = (&rho + rho.adjoint()) * c(0.5);
    let state = DensityOperator::new(1, cfg.dim, rho)?;
    let prob = state.weight();
    if !(prob >= MIN_QND_ACCEPTANCE) {
        return Err(Error::Degenerate(prob));
    }
    let dominant = state
        .ensemble(0.0)
        .into_iter()
        .next()
        .map(|(_, v)| v)
        .ok_or(Error::ZeroWeight)?;
    Ok(QndOutcome { state, dominant, prob })
}

/// Squeezing `r′ ∈ [lo, hi]` maximizing the fidelity of `S(r′)|1⟩` with
/// `rho` (golden-section search), and that fidelity.
pub fn fit_squeezing(rho: &DensityOperator, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let f = |r: f64| -> Result<f64> { fidelity_pure(&squeezed_single_photon(SqueezeSpec::new(r)?, rho.dim())?, rho) };
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > 1e-9 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1)?;
        }
    }
    let r = 0.5 * (a + b);
    Ok((r, f(r)?))
}

/// One row of a window-width sweep.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaRow {
    pub delta: f64,
    pub prob: f64,
    /// Best-fit squeezed-photon fidelity of the normalized signal.
    pub fidelity: f64,
    pub r_fit: f64,
    /// Population on even Fock levels of the normalized signal.
    pub even_population: f64,
    /// Largest even/odd coherence of the normalized signal.
    pub parity_coherence: f64,
}

pub fn delta_sweep(n_signal: usize, r: f64, deltas: &[f64], dim: usize) -> Result<Vec<DeltaRow>> {
    deltas
        .par_iter()
        .map(|&delta| {
            let out = qnd_postselect(n_signal, &QndConfig::new(r, delta, dim)?)?;
            let rho = out.state.normalized()?;
            let (r_fit, fidelity) = fit_squeezing(&rho, 0.0, 1.5)?;
            let m = rho.matrix();
            let even_population = (0..dim).step_by(2).map(|n| m[(n, n)].re).sum();
            let mut parity_coherence: f64 = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    if (i + j) % 2 == 1 {
                        parity_coherence = parity_coherence.max(m[(i, j)].norm());
                    }
                }
            }
            Ok(DeltaRow { delta, prob: out.prob, fidelity, r_fit, even_population, parity_coherence })
        })
        .collect()
}

/// Largest relative deviation of each Heisenberg relation, evaluated on
/// basis states `|i, j⟩` with `i, j < dim − 4`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeisenbergReport {
    pub x_signal: f64,
    pub y_signal: f64,
    pub x_meter: f64,
    pub y_meter: f64,
}

impl HeisenbergReport {
    pub fn max(&self) -> f64 {
        self.x_signal.max(self.y_signal).max(self.x_meter).max(self.y_meter)
    }
}

/// Checks `U† O U` against the expected linear combination for the four
/// quadratures, with `pad` extra levels of headroom per mode (about
/// `4·dim` keeps `r = 0.5` below 1e-4). Both sides are compared in the eigen-coordinates of the
/// coupling, where the comparison is an exact unitary change of basis;
/// the reported error is `‖lhs − rhs‖ / ‖rhs‖` per basis state.
pub fn heisenberg_check(r: f64, dim: usize, pad: usize) -> Result<HeisenbergReport> {
    if dim < 6 {
        return invalid("dim must be at least 6");
    }
    let u = QndUnitary::with_pad(r, dim, pad)?;
    let p = u.pad_dim;
    let s = r.sinh();
    let x = quadrature_x(p);
    let y = quadrature_y(p);
    let xv = u.x_vecs.map(c);
    // operators in eigen-coordinates: signal side in the Y basis, meter side in the X basis
    let xs_t = u.y_vecs.adjoint() * &x * &u.y_vecs;
    let ys_t = u.y_vecs.adjoint() * &y * &u.y_vecs;
    let xm_t = xv.transpose() * &x * &xv;
    let ym_t = xv.transpose() * &y * &xv;
    let to_eigen = |fock: &DMatrix<C64>| u.y_vecs.adjoint() * fock * &xv;
    let undo = |coords: DMatrix<C64>| coords.component_mul(&u.phases.map(|z| z.conj()));

    let interior = dim - 4;
    let errs: Vec<[f64; 4]> = (0..interior * interior)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / interior, idx % interior);
            let coords = u.eigen_coords(i, j);
            let mut e = DMatrix::<C64>::zeros(p, p);
            e[(i, j)] = c(1.0);
            let rel = |lhs: DMatrix<C64>, rhs_fock: DMatrix<C64>| {
                let rhs = to_eigen(&rhs_fock);
                (lhs - &rhs).norm() / rhs.norm()
            };
            [
                rel(undo(&xs_t * &coords), &x * &e - (&e * x.transpose()) * c(2.0 * s)),
                rel(undo(&ys_t * &coords), &y * &e),
                rel(undo(&coords * xm_t.transpose()), &e * x.transpose()),
                rel(undo(&coords * ym_t.transpose()), &e * y.transpose() + (&y * &e) * c(2.0 * s)),
            ]
        })
        .collect();
    let worst = |k: usize| errs.iter().map(|e| e[k]).fold(0.0, f64::max);
    Ok(HeisenbergReport { x_signal: worst(0), y_signal: worst(1), x_meter: worst(2), y_meter: worst(3) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = w.iter().sum();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-13);
        let x30: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert_abs_diff_eq!(x30, 2.0 / 31.0, epsilon = 1e-13);
    }

    #[test]
    fn window_projector_basics() {
        let p = quadrature_window_projector(1.0, 8).unwrap();
        // vacuum mass within one standard deviation
        assert_abs_diff_eq!(p.matrix()[(0, 0)].re, 0.682_689_492_137_086, epsilon = 1e-13);
        assert_abs_diff_eq!(p.matrix()[(0, 1)].norm(), 0.0, epsilon = 1e-15);
        assert!(p.is_hermitian(1e-14));
        let full = quadrature_window_projector(12.0, 10).unwrap();
        let id = DMatrix::<C64>::identity(10, 10);
        assert_abs_diff_eq!((full.matrix() - id).camax(), 0.0, epsilon = 1e-10);
        let eig = SymmetricEigen::new(p.matrix().clone()).eigenvalues;
        assert!(eig.min() > -1e-12 && eig.max() < 1.0 + 1e-10);
        assert!(quadrature_window_projector(0.0, 4).is_err());
    }

    #[test]
    fn rotated_window_matches_y_wavefunctions() {
        // ⟨1|Π_Y|1⟩ equals ⟨1|Π_X|1⟩: rotation only adds phases
        let px = quadrature_window_projector(0.7, 6).unwrap();
        let py = quadrature_window_projector_rotated(0.7, std::f64::consts::FRAC_PI_2, 6).unwrap();
        assert_abs_diff_eq!(px.matrix()[(1, 1)].re, py.matrix()[(1, 1)].re, epsilon = 1e-15);
        assert_abs_diff_eq!(py.matrix()[(0, 2)].re, -px.matrix()[(0, 2)].re, epsilon = 1e-15);
    }

    #[test]
    fn zero_coupling_is_identity() {
        let op = qnd_unitary(&QndConfig::new(0.0, 0.1, 6).unwrap()).unwrap();
        assert_abs_diff_eq!((op.matrix() - DMatrix::<C64>::identity(36, 36)).camax(), 0.0, epsilon = 1e-12);
        let out = qnd_postselect(2, &QndConfig::new(0.0, 0.3, 12).unwrap()).unwrap();
        let two = FockState::basis(12, &[2]).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&two, &out.state).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn unitary_matches_matrix_exponential() {
        let d = 8;
        let r: f64 = 0.2;
        let op = qnd_unitary(&QndConfig::new(r, 0.1, d).unwrap()).unwrap();
        let pd = d + pad_for(d);
        let x = quadrature_x(pd);
        let y = quadrature_y(pd);
        let gen = y.kronecker(&x) * C64::new(0.0, r.sinh());
        let full = gen.exp();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let a = op.matrix()[(i * d + j, k * d + l)];
                        let b = full[(i * pd + j, k * pd + l)];
                        assert_abs_diff_eq!((a - b).norm(), 0.0, epsilon = 1e-10);
                    }
                }
            }
        }
    }

    #[test]
    fn heisenberg_relations_hold_in_the_interior() {
        for r in [0.1, 0.3, 0.5] {
            let rep = heisenberg_check(r, 8, 32).unwrap();
            assert!(rep.max() < 1e-4, "{rep:?}");
        }
        // too little headroom shows up as a large defect
        assert!(heisenberg_check(0.5, 8, 8).unwrap().max() > 1e-3);
    }

    #[test]
    fn postselected_photon_is_squeezed() {
        let out = qnd_postselect(1, &QndConfig::new(0.3, 0.05, 30).unwrap()).unwrap();
        let rho = out.state.normalized().unwrap();
        let (r_fit, f) = fit_squeezing(&rho, 0.0, 1.5).unwrap();
        assert!(f > 0.999);
        let cfg = QndConfig::new(0.3, 0.05, 30).unwrap();
        assert!((r_fit - cfg.kappa(1.0).ln()).abs() / cfg.kappa(1.0).ln() < 0.02);
        assert!(qnd_postselect(30, &cfg).is_err());
    }
}
