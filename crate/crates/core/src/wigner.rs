//! Phase-space diagnostics: analytic Wigner and characteristic functions,
//! a numeric Wigner evaluator for arbitrary single-mode density operators,
//! and negativity extraction.
//!
//! Phase space uses `z = z_r + i z_i` with `∫ W d²z = 1`, so a coherent
//! state `|α⟩` has `W(z) = (2/π) e^{−2|z−α|²}` and every state satisfies
//! `|W| ≤ 2/π`.

use std::f64::consts::{FRAC_2_PI, PI};
use std::io::Write;

use log::warn;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{DensityOperator, C64};

/// Fringe-resolution threshold (grid points per fringe period).
pub const MIN_POINTS_PER_FRINGE: f64 = 8.0;

/// Rectangular evaluation grid over `z_r × z_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub n_re: usize,
    pub n_im: usize,
}

impl Default for PhaseGrid {
    fn default() -> Self {
        Self { re_min: -4.0, re_max: 4.0, im_min: -4.0, im_max: 4.0, n_re: 81, n_im: 81 }
    }
}

impl PhaseGrid {
    pub fn new(re: (f64, f64), im: (f64, f64), n_re: usize, n_im: usize) -> Result<Self> {
        let ok = |(a, b): (f64, f64)| a.is_finite() && b.is_finite() && a < b;
        if !ok(re) || !ok(im) || n_re < 2 || n_im < 2 {
            return invalid("phase grid needs finite ranges with min < max and ≥ 2 points per axis");
        }
        Ok(Self { re_min: re.0, re_max: re.1, im_min: im.0, im_max: im.1, n_re, n_im })
    }

    /// Square grid `[−half, half]²` with `n` points per axis.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new((-half, half), (-half, half), n, n)
    }

    pub fn re_step(&self) -> f64 {
        (self.re_max - self.re_min) / (self.n_re - 1) as f64
    }

    pub fn im_step(&self) -> f64 {
        (self.im_max - self.im_min) / (self.n_im - 1) as f64
    }

    pub fn re_at(&self, i: usize) -> f64 {
        self.re_min + i as f64 * self.re_step()
    }

    pub fn im_at(&self, j: usize) -> f64 {
        self.im_min + j as f64 * self.im_step()
    }

    pub fn point(&self, i: usize, j: usize) -> C64 {
        C64::new(self.re_at(i), self.im_at(j))
    }

    /// Grid points per period of cat-state fringes `cos(4α z_i)`.
    pub fn points_per_fringe(&self, alpha: f64) -> f64 {
        if alpha <= 0.0 {
            return f64::INFINITY;
        }
        (PI / (2.0 * alpha)) / self.im_step()
    }
}

/// Wigner function sampled on a grid; `values[(i, j)]` sits at `grid.point(i, j)`.
#[derive(Clone, Debug)]
pub struct WignerField {
    pub grid: PhaseGrid,
    pub values: DMatrix<f64>,
    pub warnings: Vec<String>,
}

impl WignerField {
    pub fn from_fn(grid: PhaseGrid, f: impl Fn(C64) -> f64 + Sync) -> Self {
        let cells: Vec<f64> = (0..grid.n_re * grid.n_im)
            .into_par_iter()
            .map(|k| f(grid.point(k / grid.n_im, k % grid.n_im)))
            .collect();
        let values = DMatrix::from_row_slice(grid.n_re, grid.n_im, &cells);
        Self { grid, values, warnings: Vec::new() }
    }

    /// Trapezoid-rule integral over the grid.
    pub fn integral(&self) -> f64 {
        let g = &self.grid;
        let w = |k: usize, n: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
        let mut s = 0.0;
        for i in 0..g.n_re {
            for j in 0..g.n_im {
                s += w(i, g.n_re) * w(j, g.n_im) * self.values[(i, j)];
            }
        }
        s * g.re_step() * g.im_step()
    }

    /// Smallest grid value and its location.
    pub fn grid_min(&self) -> ((usize, usize), f64) {
        let mut best = ((0, 0), f64::INFINITY);
        for i in 0..self.grid.n_re {
            for j in 0..self.grid.n_im {
                if self.values[(i, j)] < best.1 {
                    best = ((i, j), self.values[(i, j)]);
                }
            }
        }
        best
    }

    pub fn max_abs_diff(&self, other: &WignerField) -> f64 {
        (&self.values - &other.values).amax()
    }

    /// CSV with header `z_re,z_im,w` and one row per grid point.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "z_re,z_im,w")?;
        for i in 0..self.grid.n_re {
            for j in 0..self.grid.n_im {
                let z = self.grid.point(i, j);
                writeln!(out, "{:.16e},{:.16e},{:.16e}", z.re, z.im, self.values[(i, j)])?;
            }
        }
        Ok(())
    }
}

/// Characteristic function `Tr[ρ D(η)]` of `S(r)|1⟩`:
/// `exp[−½(e^{−2r}η_r² + e^{2r}η_i²)] (1 − e^{−2r}η_r² − e^{2r}η_i²)`.
pub fn char_fn_sq_photon(eta: C64, r: f64) -> f64 {
    let q = (-2.0 * r).exp() * eta.re * eta.re + (2.0 * r).exp() * eta.im * eta.im;
    (-0.5 * q).exp() * (1.0 - q)
}

/// Wigner function of `S(r)|1⟩`:
/// `(2/π) exp[−2(e^{−2r}z_r² + e^{2r}z_i²)] (4e^{−2r}z_r² + 4e^{2r}z_i² − 1)`.
pub fn wigner_sq_photon(z: C64, r: f64) -> f64 {
    let q = (-2.0 * r).exp() * z.re * z.re + (2.0 * r).exp() * z.im * z.im;
    FRAC_2_PI * (-2.0 * q).exp() * (4.0 * q - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }

    pub fn phase(self) -> f64 {
        match self {
            Parity::Even => 0.0,
            Parity::Odd => PI,
        }
    }
}

/// Wigner function of the even/odd cat state with real amplitude `α`:
/// two Gaussian lobes at `z_r = ±α` and fringes `cos(4α z_i)` between them.
pub fn wigner_css(z: C64, alpha: f64, parity: Parity) -> Result<f64> {
    if !(alpha > 0.0) {
        return invalid(format!("cat Wigner function needs alpha > 0 (got {alpha})"));
    }
    let s = parity.sign();
    let a2 = alpha * alpha;
    let lobes = (-2.0 * (z.re - alpha).powi(2)).exp() + (-2.0 * (z.re + alpha).powi(2)).exp();
    let fringes = 2.0 * s * (-2.0 * z.re * z.re).exp() * (4.0 * alpha * z.im).cos();
    let norm = PI * (1.0 + s * (-2.0 * a2).exp());
    Ok((-2.0 * z.im * z.im).exp() * (lobes + fringes) / norm)
}

/// Exact matrix elements `⟨m|D(β)|n⟩` restricted to `dim` levels, from
/// associated Laguerre polynomials.
pub fn displacement_elements(beta: C64, dim: usize) -> DMatrix<C64> {
    let x = beta.norm_sqr();
    let mut out = DMatrix::zeros(dim, dim);
    if x == 0.0 {
        return DMatrix::identity(dim, dim);
    }
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..dim).scan(0.0, |acc, k| {
            *acc += (k as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_b = x.sqrt().ln();
    let unit = beta / x.sqrt();
    let unit_adj = -beta.conj() / x.sqrt();
    for k in 0..dim {
        let kf = k as f64;
        let (mut prev, mut cur) = (0.0, 1.0);
        for n in 0..dim - k {
            let lag = cur;
            // L_{n+1}^{(k)} = ((2n+1+k−x) L_n − (n+k) L_{n−1}) / (n+1)
            let nf = n as f64;
            let next = ((2.0 * nf + 1.0 + kf - x) * cur - (nf + kf) * prev) / (nf + 1.0);
            prev = cur;
            cur = next;
            let mag = (0.5 * (ln_fact[n] - ln_fact[n + k]) + kf * ln_b - 0.5 * x).exp() * lag;
            out[(n + k, n)] = unit.powu(k as u32) * mag;
            if k > 0 {
                out[(n, n + k)] = unit_adj.powu(k as u32) * mag;
            }
        }
    }
    out
}

fn single_mode(rho: &DensityOperator) -> Result<DensityOperator> {
    if rho.num_modes() != 1 {
        return Err(Error::ModeMismatch { expected: 1, got: rho.num_modes() });
    }
    rho.normalized()
}

/// `W(z) = (2/π) Σ_{mn} ρ_{nm} (−1)ⁿ ⟨m|D(2z)|n⟩` for a normalized `ρ`.
fn wigner_point(rho: &DMatrix<C64>, z: C64) -> f64 {
    let d = rho.nrows();
    let disp = displacement_elements(2.0 * z, d);
    let mut s = C64::default();
    for n in 0..d {
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for m in 0..d {
            s += rho[(n, m)] * disp[(m, n)] * sign;
        }
    }
    FRAC_2_PI * s.re
}

/// Wigner function of a single-mode operator at one point (renormalized).
pub fn wigner_at(rho: &DensityOperator, z: C64) -> Result<f64> {
    let r = single_mode(rho)?;
    Ok(wigner_point(r.matrix(), z))
}

/// Wigner function of a single-mode operator on a grid (renormalized).
/// Adds a warning when the grid has fewer than eight points per fringe
/// period for a cat of the state's mean photon number.
pub fn wigner_numeric(rho: &DensityOperator, grid: PhaseGrid) -> Result<WignerField> {
    let r = single_mode(rho)?;
    let m = r.matrix().clone();
    let mut field = WignerField::from_fn(grid, |z| wigner_point(&m, z));
    let mean_n: f64 = (0..m.nrows()).map(|n| n as f64 * m[(n, n)].re).sum();
    let ppf = grid.points_per_fringe(mean_n.max(0.0).sqrt());
    if ppf < MIN_POINTS_PER_FRINGE {
        let msg = format!("grid resolves only {ppf:.1} points per interference fringe");
        warn!("{msg}");
        field.warnings.push(msg);
    }
    Ok(field)
}

/// Location and value of the most negative point, refined by a quadratic
/// fit along each axis around the grid minimum.
pub fn min_wigner(rho: &DensityOperator, grid: PhaseGrid) -> Result<(C64, f64)> {
    let r = single_mode(rho)?;
    let field = wigner_numeric(&r, grid)?;
    let ((i, j), w0) = field.grid_min();
    let g = &field.grid;
    let v = |a: usize, b: usize| field.values[(a, b)];
    let vertex = |lo: f64, mid: f64, hi: f64, h: f64| {
        let curv = lo - 2.0 * mid + hi;
        if curv > 0.0 {
            0.5 * h * (lo - hi) / curv
        } else {
            0.0
        }
    };
    let mut z = g.point(i, j);
    if i > 0 && i + 1 < g.n_re {
        z.re += vertex(v(i - 1, j), w0, v(i + 1, j), g.re_step());
    }
    if j > 0 && j + 1 < g.n_im {
        z.im += vertex(v(i, j - 1), w0, v(i, j + 1), g.im_step());
    }
    let w = wigner_point(r.matrix(), z);
    if w < w0 {
        Ok((z, w))
    } else {
        Ok((g.point(i, j), w0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::FockState;
    use crate::optics::{css_state, displacement_op, squeezed_single_photon, CssSpec, SqueezeSpec};
    use approx::assert_abs_diff_eq;

    fn rho_of(s: &FockState) -> DensityOperator {
        s.to_density()
    }

    #[test]
    fn laguerre_elements_match_padded_exponential() {
        for beta in [C64::new(0.3, 0.0), C64::new(-0.7, 0.9), C64::new(1.5, 0.4)] {
            let a = displacement_elements(beta, 20);
            let b = displacement_op(beta, 20);
            // compare the well-converged upper-left block
            for m in 0..12 {
                for n in 0..12 {
                    assert_abs_diff_eq!((a[(m, n)] - b.matrix()[(m, n)]).norm(), 0.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn vacuum_and_single_photon() {
        let vac = rho_of(&FockState::basis(10, &[0]).unwrap());
        let one = rho_of(&FockState::basis(10, &[1]).unwrap());
        assert_abs_diff_eq!(wigner_at(&vac, C64::default()).unwrap(), FRAC_2_PI, epsilon = 1e-12);
        assert_abs_diff_eq!(wigner_at(&one, C64::default()).unwrap(), -FRAC_2_PI, epsilon = 1e-12);
        let z = C64::new(0.4, -0.3);
        assert_abs_diff_eq!(wigner_at(&vac, z).unwrap(), FRAC_2_PI * (-2.0 * z.norm_sqr()).exp(),
            epsilon = 1e-12);
        let (zm, wm) = min_wigner(&one, PhaseGrid::square(2.0, 21).unwrap()).unwrap();
        assert_abs_diff_eq!(wm, -FRAC_2_PI, epsilon = 1e-9);
        assert!(zm.norm() < 1e-9);
    }

    #[test]
    fn parity_identity_at_origin() {
        let s = squeezed_single_photon(SqueezeSpec { r: 0.3 }, 30).unwrap();
        let rho = rho_of(&s).scaled(0.4).add(&rho_of(&FockState::basis(30, &[2]).unwrap()).scaled(0.6))
            .unwrap();
        let want = FRAC_2_PI * (0..30).map(|n| if n % 2 == 0 { 1.0 } else { -1.0 }
            * rho.matrix()[(n, n)].re).sum::<f64>();
        assert_abs_diff_eq!(wigner_at(&rho, C64::default()).unwrap(), want, epsilon = 1e-12);
    }

    #[test]
    fn cat_formula_matches_numeric() {
        let grid = PhaseGrid::square(2.5, 41).unwrap();
        for (alpha, parity) in [(1.0, Parity::Odd), (1.0, Parity::Even), (0.5f64.sqrt(), Parity::Odd)] {
            let s = css_state(CssSpec::new(alpha, parity.phase()).unwrap(), 30).unwrap();
            let num = wigner_numeric(&rho_of(&s), grid).unwrap();
            let ana = WignerField::from_fn(grid, |z| wigner_css(z, alpha, parity).unwrap());
            assert!(num.max_abs_diff(&ana) < 1e-6);
        }
        assert_abs_diff_eq!(wigner_css(C64::default(), 1.3, Parity::Odd).unwrap(), -FRAC_2_PI,
            epsilon = 1e-15);
        assert!(wigner_css(C64::default(), 0.0, Parity::Even).is_err());
    }

    #[test]
    fn squeezed_photon_formula_matches_numeric() {
        let grid = PhaseGrid::square(2.5, 41).unwrap();
        for r in [0.0, 0.313, 0.9] {
            let s = squeezed_single_photon(SqueezeSpec { r }, 100).unwrap();
            let num = wigner_numeric(&rho_of(&s), grid).unwrap();
            let ana = WignerField::from_fn(grid, |z| wigner_sq_photon(z, r));
            assert!(num.max_abs_diff(&ana) < 1e-6, "r = {r}: {}", num.max_abs_diff(&ana));
        }
    }

    /// The alternative orientation `e^{+2r} z_r²` describes `S(−r)|1⟩`, not
    /// `S(r)|1⟩`; the numeric evaluator rejects it.
    #[test]
    fn swapped_orientation_is_rejected() {
        let r = 0.313;
        let swapped = |z: C64| wigner_sq_photon(C64::new(z.im, z.re), r);
        let s = squeezed_single_photon(SqueezeSpec { r }, 40).unwrap();
        let z = C64::new(0.5, 0.0);
        let w = wigner_at(&rho_of(&s), z).unwrap();
        assert_abs_diff_eq!(w, wigner_sq_photon(z, r), epsilon = 1e-9);
        assert!((w - swapped(z)).abs() > 1e-2);
    }

    #[test]
    fn characteristic_function_matches_trace() {
        let eta_set = [C64::new(0.3, 0.0), C64::new(0.0, 0.3), C64::new(0.2, 0.25)];
        for r in [0.0, 0.164, 0.5] {
            let s = squeezed_single_photon(SqueezeSpec { r }, 40).unwrap();
            let rho = rho_of(&s);
            for &eta in &eta_set {
                let d = displacement_op(eta, 40);
                let chi = (rho.matrix() * d.matrix()).trace();
                assert_abs_diff_eq!(chi.re, char_fn_sq_photon(eta, r), epsilon = 1e-8);
                assert_abs_diff_eq!(chi.im, 0.0, epsilon = 1e-8);
            }
        }
        assert_eq!(char_fn_sq_photon(C64::default(), 0.7), 1.0);
        // a "+" on the second quadratic term disagrees with the trace
        let r: f64 = 0.164;
        let eta = C64::new(0.2, 0.25);
        let q_r = (-2.0 * r).exp() * eta.re * eta.re;
        let q_i = (2.0 * r).exp() * eta.im * eta.im;
        let plus = (-0.5 * (q_r + q_i)).exp() * (1.0 - q_r + q_i);
        assert!((plus - char_fn_sq_photon(eta, r)).abs() > 1e-2);
    }

    #[test]
    fn normalization_and_bound() {
        let s = css_state(CssSpec::odd(1.0), 30).unwrap();
        let grid = PhaseGrid::square(5.0, 161).unwrap();
        let f = wigner_numeric(&rho_of(&s), grid).unwrap();
        assert_abs_diff_eq!(f.integral(), 1.0, epsilon = 1e-3);
        assert!(f.values.amax() <= FRAC_2_PI + 1e-6);
    }

    #[test]
    fn coarse_grid_warns() {
        let s = css_state(CssSpec::even(2.0), 30).unwrap();
        let coarse = PhaseGrid::square(4.0, 11).unwrap();
        assert!(!wigner_numeric(&rho_of(&s), coarse).unwrap().warnings.is_empty());
        let fine = PhaseGrid::square(4.0, 161).unwrap();
        assert!(wigner_numeric(&rho_of(&s), fine).unwrap().warnings.is_empty());
    }

    #[test]
    fn csv_layout() {
        let grid = PhaseGrid::square(1.0, 2).unwrap();
        let f = WignerField::from_fn(grid, |z| z.re);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "z_re,z_im,w");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "-1.0000000000000000e0,-1.0000000000000000e0,-1.0000000000000000e0");
    }

    #[test]
    fn grid_validation() {
        assert!(PhaseGrid::new((1.0, 0.0), (0.0, 1.0), 5, 5).is_err());
        assert!(PhaseGrid::new((0.0, 1.0), (0.0, 1.0), 1, 5).is_err());
        assert_eq!(PhaseGrid::default().n_re, 81);
    }
}
