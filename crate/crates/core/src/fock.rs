//! States and operators on a truncated multimode Fock space.
//!
//! Every mode is cut at the same number of levels `dim`, so a `num_modes`
//! register has `dim.pow(num_modes)` basis states. Multi-indices
//! `(n_0, …, n_{m-1})` are flattened row-major with mode 0 slowest, i.e.
//! `index = Σ_k n_k · dim^(m-1-k)`. The ordering is part of the JSON format
//! and must not change.
//!
//! Density operators may be sub-normalized: conditional states produced by a
//! measurement keep the acceptance probability as their trace (`weight`).
//! Metrics such as fidelity and purity renormalize internally.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Default number of Fock levels per mode.
pub const DEFAULT_DIM: usize = 30;

/// Tolerance on `⟨ψ|ψ⟩ = 1` for states flagged normalized.
pub const NORM_TOL: f64 = 1e-12;
/// Entrywise Hermiticity tolerance for density operators.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Smallest eigenvalue tolerated before a density operator counts as non-PSD.
pub const PSD_TOL: f64 = 1e-9;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn checked_len(num_modes: usize, dim: usize) -> Result<usize> {
    if num_modes == 0 || dim == 0 {
        return Err(Error::InvalidParameter(format!(
            "need num_modes ≥ 1 and dim ≥ 1 (got {num_modes}, {dim})"
        )));
    }
    dim.checked_pow(num_modes as u32)
        .ok_or_else(|| Error::InvalidParameter("register too large".into()))
}

/// Row-major strides of a `num_modes` register.
fn strides(num_modes: usize, dim: usize) -> Vec<usize> {
    let mut s = vec![1; num_modes];
    for k in (0..num_modes.saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dim;
    }
    s
}

/// Flat offsets of every multi-index over `modes` (first listed mode slowest).
fn offsets(modes: &[usize], strides: &[usize], dim: usize) -> Vec<usize> {
    let mut out = vec![0usize];
    for &m in modes {
        let mut next = Vec::with_capacity(out.len() * dim);
        for &o in &out {
            for n in 0..dim {
                next.push(o + n * strides[m]);
            }
        }
        out = next;
    }
    out
}

fn check_modes(modes: &[usize], num_modes: usize) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        if m >= num_modes {
            return Err(Error::ModeOutOfRange { index: m, num_modes });
        }
        if modes[..i].contains(&m) {
            return Err(Error::InvalidParameter(format!("mode {m} listed twice")));
        }
    }
    Ok(())
}

/// Population of basis states where some mode sits in one of its top two
/// levels. Used as the truncation-leakage estimate throughout the crate.
fn edge_population(num_modes: usize, dim: usize, diag: impl Fn(usize) -> f64) -> f64 {
    let edge = dim.saturating_sub(2);
    let len = dim.pow(num_modes as u32);
    let st = strides(num_modes, dim);
    (0..len)
        .filter(|&i| st.iter().any(|&s| (i / s) % dim >= edge))
        .map(diag)
        .sum()
}

/// A pure state (ket) over a truncated multimode Fock basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct FockState {
    num_modes: usize,
    dim: usize,
    amplitudes: DVector<C64>,
}

impl FockState {
    pub fn new(num_modes: usize, dim: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let len = checked_len(num_modes, dim)?;
        if amplitudes.len() != len {
            return Err(Error::BadLength { expected: len, got: amplitudes.len() });
        }
        Ok(Self { num_modes, dim, amplitudes: DVector::from_vec(amplitudes) })
    }

    pub fn single_mode(amplitudes: Vec<C64>) -> Self {
        let dim = amplitudes.len();
        Self { num_modes: 1, dim, amplitudes: DVector::from_vec(amplitudes) }
    }

    pub(crate) fn from_dvector(num_modes: usize, dim: usize, amplitudes: DVector<C64>) -> Self {
        debug_assert_eq!(amplitudes.len(), dim.pow(num_modes as u32));
        Self { num_modes, dim, amplitudes }
    }

    /// Product Fock state `|n_0, …, n_{m-1}⟩`.
    pub fn basis(dim: usize, occupations: &[usize]) -> Result<Self> {
        let len = checked_len(occupations.len(), dim)?;
        if let Some(&n) = occupations.iter().find(|&&n| n >= dim) {
            return Err(Error::InvalidParameter(format!("level {n} ≥ dim {dim}")));
        }
        let st = strides(occupations.len(), dim);
        let idx: usize = occupations.iter().zip(&st).map(|(n, s)| n * s).sum();
        let mut amps = DVector::zeros(len);
        amps[idx] = c(1.0);
        Ok(Self { num_modes: occupations.len(), dim, amplitudes: amps })
    }

    pub fn vacuum(num_modes: usize, dim: usize) -> Result<Self> {
        Self::basis(dim, &vec![0; num_modes])
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> DVector<C64> {
        self.amplitudes
    }

    /// Flat index of a multi-index.
    pub fn index_of(&self, occupations: &[usize]) -> usize {
        let st = strides(self.num_modes, self.dim);
        occupations.iter().zip(&st).map(|(n, s)| n * s).sum()
    }

    pub fn amplitude(&self, occupations: &[usize]) -> C64 {
        self.amplitudes[self.index_of(occupations)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= NORM_TOL
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr().sqrt();
        if n < 1e-150 {
            return Err(Error::ZeroVector);
        }
        Ok(Self { amplitudes: self.amplitudes.unscale(n), ..self.clone() })
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { amplitudes: self.amplitudes.scale(1.0) * factor, ..self.clone() }
    }

    fn same_space(&self, other: &FockState) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(self.dim, other.dim));
        }
        if self.num_modes != other.num_modes {
            return Err(Error::ModeMismatch { expected: self.num_modes, got: other.num_modes });
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &FockState) -> Result<C64> {
        self.same_space(other)?;
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> DensityOperator {
        let m = &self.amplitudes * self.amplitudes.adjoint();
        DensityOperator::from_parts(self.num_modes, self.dim, m)
    }

    /// Population in the top two levels of any mode.
    pub fn truncation_leakage(&self) -> f64 {
        edge_population(self.num_modes, self.dim, |i| self.amplitudes[i].norm_sqr())
    }

    /// Applies `op` to `target_modes` (op's first mode ↔ first listed target)
    /// with the identity elsewhere.
    pub fn apply(&self, op: &ModeOperator, target_modes: &[usize]) -> Result<FockState> {
        let plan = ApplyPlan::new(op, self.num_modes, self.dim, target_modes)?;
        let mut out = DVector::zeros(self.amplitudes.len());
        plan.apply_into(op.matrix(), self.amplitudes.as_slice(), out.as_mut_slice());
        Ok(Self { amplitudes: out, ..self.clone() })
    }
}

/// Shared gather/scatter plan for embedding an operator on a mode subset.
struct ApplyPlan {
    base: Vec<usize>,
    sub: Vec<usize>,
}

impl ApplyPlan {
    fn new(op: &ModeOperator, num_modes: usize, dim: usize, targets: &[usize]) -> Result<Self> {
        if op.dim() != dim {
            return Err(Error::DimMismatch(op.dim(), dim));
        }
        if op.arity() != targets.len() {
            return Err(Error::InvalidParameter(format!(
                "operator arity {} but {} target modes",
                op.arity(),
                targets.len()
            )));
        }
        check_modes(targets, num_modes)?;
        let st = strides(num_modes, dim);
        let rest: Vec<usize> = (0..num_modes).filter(|m| !targets.contains(m)).collect();
        Ok(Self { base: offsets(&rest, &st, dim), sub: offsets(targets, &st, dim) })
    }

    fn apply_into(&self, m: &DMatrix<C64>, input: &[C64], out: &mut [C64]) {
        let k = self.sub.len();
        let mut buf = DVector::<C64>::zeros(k);
        for &b in &self.base {
            for (j, &o) in self.sub.iter().enumerate() {
                buf[j] = input[b + o];
            }
            let res = m * &buf;
            for (i, &o) in self.sub.iter().enumerate() {
                out[b + o] = res[i];
            }
        }
    }
}

/// A (possibly sub-normalized) density operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct DensityOperator {
    num_modes: usize,
    dim: usize,
    matrix: DMatrix<C64>,
    weight: f64,
}

impl DensityOperator {
    /// Validates shape and Hermiticity; the weight is the trace.
    pub fn new(num_modes: usize, dim: usize, matrix: DMatrix<C64>) -> Result<Self> {
        let len = checked_len(num_modes, dim)?;
        if matrix.nrows() != len || matrix.ncols() != len {
            return Err(Error::BadLength { expected: len, got: matrix.nrows() });
        }
        let dev = hermitian_deviation(&matrix);
        if dev > HERMITIAN_TOL {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::from_parts(num_modes, dim, matrix))
    }

    pub(crate) fn from_parts(num_modes: usize, dim: usize, matrix: DMatrix<C64>) -> Self {
        let weight = matrix.trace().re;
        Self { num_modes, dim, matrix, weight }
    }

    /// Convex (or sub-convex) combination `Σ w_k |ψ_k⟩⟨ψ_k|`.
    pub fn mixture(terms: &[(f64, &FockState)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or(Error::ZeroWeight)?;
        let mut m = DMatrix::zeros(first.amplitudes.len(), first.amplitudes.len());
        for (w, s) in terms {
            first.same_space(s)?;
            if *w < 0.0 {
                return Err(Error::InvalidParameter(format!("negative mixture weight {w}")));
            }
            m += (&s.amplitudes * s.amplitudes.adjoint()) * c(*w);
        }
        Ok(Self::from_parts(first.num_modes, first.dim, m))
    }

    pub fn num_modes(&self) -> usize {
        self.num_modes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Trace of the (sub-normalized) operator.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn normalized(&self) -> Result<Self> {
        if self.weight <= 0.0 {
            return Err(Error::ZeroWeight);
        }
        Ok(Self::from_parts(self.num_modes, self.dim, self.matrix.unscale(self.weight)))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_parts(self.num_modes, self.dim, self.matrix.scale(factor))
    }

    /// Sum of two operators on the same space.
    pub fn add(&self, other: &DensityOperator) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(self.dim, other.dim));
        }
        if self.num_modes != other.num_modes {
            return Err(Error::ModeMismatch { expected: self.num_modes, got: other.num_modes });
        }
        Ok(Self::from_parts(self.num_modes, self.dim, &self.matrix + &other.matrix))
    }

    /// Expectation `⟨ψ|ρ|ψ⟩` without renormalization.
    pub fn expectation(&self, psi: &FockState) -> Result<f64> {
        if psi.dim != self.dim {
            return Err(Error::DimMismatch(psi.dim, self.dim));
        }
        if psi.num_modes != self.num_modes {
            return Err(Error::ModeMismatch { expected: self.num_modes, got: psi.num_modes });
        }
        Ok(psi.amplitudes.dotc(&(&self.matrix * &psi.amplitudes)).re)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.hermitized());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    pub fn is_psd(&self) -> bool {
        self.min_eigenvalue() >= -PSD_TOL
    }

    /// Spectral decomposition as `(weight, normalized ket)` pairs. Eigenvalues
    /// at or below `rel_cutoff · weight` are dropped.
    pub fn ensemble(&self, rel_cutoff: f64) -> Vec<(f64, FockState)> {
        let eig = SymmetricEigen::new(self.hermitized());
        let cut = rel_cutoff * self.weight.abs();
        let mut out: Vec<(f64, FockState)> = eig
            .eigenvalues
            .iter()
            .enumerate()
            .filter(|(_, &l)| l > cut)
            .map(|(k, &l)| {
                let v = eig.eigenvectors.column(k).into_owned();
                (l, FockState::from_dvector(self.num_modes, self.dim, v))
            })
            .collect();
        out.sort_by(|a, b| b.0.total_cmp(&a.0));
        out
    }

    fn hermitized(&self) -> DMatrix<C64> {
        (&self.matrix + self.matrix.adjoint()) * c(0.5)
    }

    pub fn truncation_leakage(&self) -> f64 {
        let w = if self.weight > 0.0 { self.weight } else { 1.0 };
        edge_population(self.num_modes, self.dim, |i| self.matrix[(i, i)].re) / w
    }

    /// `U ρ U†` with `U` embedded on `target_modes`.
    pub fn apply(&self, op: &ModeOperator, target_modes: &[usize]) -> Result<DensityOperator> {
        let plan = ApplyPlan::new(op, self.num_modes, self.dim, target_modes)?;
        let n = self.matrix.nrows();
        let left = |m: &DMatrix<C64>| {
            let mut out = DMatrix::zeros(n, n);
            for j in 0..n {
                let col: Vec<C64> = m.column(j).iter().copied().collect();
                let mut res = vec![C64::default(); n];
                plan.apply_into(op.matrix(), &col, &mut res);
                out.set_column(j, &DVector::from_vec(res));
            }
            out
        };
        let half = left(&self.matrix);
        let full = left(&half.adjoint()).adjoint();
        Ok(Self::from_parts(self.num_modes, self.dim, full))
    }

    /// `Σ_k K_k ρ K_k†` for single-mode Kraus operators on `mode`.
    pub(crate) fn apply_kraus(&self, kraus: &[DMatrix<C64>], mode: usize) -> Result<DensityOperator> {
        let mut acc = DMatrix::zeros(self.matrix.nrows(), self.matrix.ncols());
        for k in kraus {
            let op = ModeOperator::unchecked(1, self.dim, k.clone());
            acc += self.apply(&op, &[mode])?.matrix;
        }
        Ok(Self::from_parts(self.num_modes, self.dim, acc))
    }
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// Matrix on one or two modes in the Fock basis, together with a bound on
/// how far truncation pushed it from unitarity.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    arity: usize,
    dim: usize,
    matrix: DMatrix<C64>,
    leakage: f64,
}

impl ModeOperator {
    pub fn new(arity: usize, dim: usize, matrix: DMatrix<C64>) -> Result<Self> {
        if !(1..=2).contains(&arity) {
            return Err(Error::InvalidParameter(format!("arity {arity} not in {{1, 2}}")));
        }
        let len = checked_len(arity, dim)?;
        if matrix.nrows() != len || matrix.ncols() != len {
            return Err(Error::BadLength { expected: len, got: matrix.nrows() });
        }
        Ok(Self::unchecked(arity, dim, matrix))
    }

    pub(crate) fn unchecked(arity: usize, dim: usize, matrix: DMatrix<C64>) -> Self {
        let leakage = column_norm_deficit(&matrix);
        Self { arity, dim, matrix, leakage }
    }

    pub fn identity(arity: usize, dim: usize) -> Result<Self> {
        let len = checked_len(arity, dim)?;
        Self::new(arity, dim, DMatrix::identity(len, len))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    /// Largest column-norm deficit `|1 − ‖U e_j‖²|`.
    ///
    /// When the matrix is the crop of a unitary on a larger space this also
    /// bounds `‖U†U − I‖_max`; for non-unitary operators (ladder operators,
    /// POVM elements) it is just a diagnostic.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn adjoint(&self) -> Self {
        Self::unchecked(self.arity, self.dim, self.matrix.adjoint())
    }

    /// `‖U†U − I‖_max`, computed explicitly.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.matrix.adjoint() * &self.matrix;
        let n = p.nrows();
        (p - DMatrix::<C64>::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermitian_deviation(&self.matrix) <= tol
    }
}

fn column_norm_deficit(m: &DMatrix<C64>) -> f64 {
    m.column_iter().map(|col| (1.0 - col.norm_squared()).abs()).fold(0.0, f64::max)
}

/// Kronecker product of states; mode ordering is the concatenation.
pub trait Tensor: Sized {
    fn tensor_pair(&self, other: &Self) -> Result<Self>;
}

impl Tensor for FockState {
    fn tensor_pair(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(self.dim, other.dim));
        }
        let amps = self.amplitudes.kronecker(&other.amplitudes);
        Ok(Self::from_dvector(self.num_modes + other.num_modes, self.dim, amps))
    }
}

impl Tensor for DensityOperator {
    fn tensor_pair(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(self.dim, other.dim));
        }
        let m = self.matrix.kronecker(&other.matrix);
        Ok(Self::from_parts(self.num_modes + other.num_modes, self.dim, m))
    }
}

pub fn tensor<S: Tensor + Clone>(parts: &[S]) -> Result<S> {
    let (first, rest) = parts.split_first().ok_or(Error::ZeroWeight)?;
    rest.iter().try_fold(first.clone(), |acc, s| acc.tensor_pair(s))
}

/// Reduced operator on `keep` (listed order becomes the new mode order).
pub fn partial_trace(rho: &DensityOperator, keep: &[usize]) -> Result<DensityOperator> {
    if keep.is_empty() {
        return Err(Error::EmptyKeep);
    }
    check_modes(keep, rho.num_modes)?;
    let st = strides(rho.num_modes, rho.dim);
    let traced: Vec<usize> = (0..rho.num_modes).filter(|m| !keep.contains(m)).collect();
    let base = offsets(&traced, &st, rho.dim);
    let sub = offsets(keep, &st, rho.dim);
    let n = sub.len();
    let out = DMatrix::from_fn(n, n, |i, j| {
        base.iter().map(|&b| rho.matrix[(b + sub[i], b + sub[j])]).sum::<C64>()
    });
    Ok(DensityOperator::from_parts(keep.len(), rho.dim, out))
}

/// Borrowed pure or mixed state.
#[derive(Clone, Copy, Debug)]
pub enum StateRef<'a> {
    Pure(&'a FockState),
    Mixed(&'a DensityOperator),
}

impl<'a> From<&'a FockState> for StateRef<'a> {
    fn from(s: &'a FockState) -> Self {
        StateRef::Pure(s)
    }
}

impl<'a> From<&'a DensityOperator> for StateRef<'a> {
    fn from(s: &'a DensityOperator) -> Self {
        StateRef::Mixed(s)
    }
}

impl StateRef<'_> {
    pub fn dim(&self) -> usize {
        match self {
            StateRef::Pure(s) => s.dim,
            StateRef::Mixed(r) => r.dim,
        }
    }

    pub fn num_modes(&self) -> usize {
        match self {
            StateRef::Pure(s) => s.num_modes,
            StateRef::Mixed(r) => r.num_modes,
        }
    }

    pub fn to_density(&self) -> DensityOperator {
        match self {
            StateRef::Pure(s) => s.to_density(),
            StateRef::Mixed(r) => (*r).clone(),
        }
    }

    /// Pure states become a single-element ensemble carrying their norm.
    pub fn ensemble(&self, rel_cutoff: f64) -> Vec<(f64, FockState)> {
        match self {
            StateRef::Pure(s) => {
                let n = s.norm_sqr();
                match s.normalized() {
                    Ok(u) => vec![(n, u)],
                    Err(_) => Vec::new(),
                }
            }
            StateRef::Mixed(r) => r.ensemble(rel_cutoff),
        }
    }
}

/// Fidelity of a (possibly sub-normalized) state with a pure target:
/// `|⟨t|ψ⟩|²/⟨ψ|ψ⟩` or `⟨t|ρ|t⟩/Tr ρ`.
pub fn fidelity_pure<'a>(target: &FockState, state: impl Into<StateRef<'a>>) -> Result<f64> {
    match state.into() {
        StateRef::Pure(s) => {
            let n = s.norm_sqr();
            if n <= 0.0 {
                return Err(Error::ZeroVector);
            }
            Ok(target.inner(s)?.norm_sqr() / n)
        }
        StateRef::Mixed(r) => {
            if r.weight <= 0.0 {
                return Err(Error::ZeroWeight);
            }
            Ok(r.expectation(target)? / r.weight)
        }
    }
}

/// `Tr ρ²` of the normalized operator.
pub fn purity(rho: &DensityOperator) -> Result<f64> {
    if rho.weight <= 0.0 {
        return Err(Error::ZeroWeight);
    }
    // Tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
    Ok(rho.matrix.norm_squared() / (rho.weight * rho.weight))
}

/// JSON shape shared by kets and density operators: real and imaginary
/// parts flattened row-major.
#[derive(Serialize, Deserialize)]
struct StateRepr {
    num_modes: usize,
    dim: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl From<FockState> for StateRepr {
    fn from(s: FockState) -> Self {
        StateRepr {
            num_modes: s.num_modes,
            dim: s.dim,
            re: s.amplitudes.iter().map(|z| z.re).collect(),
            im: s.amplitudes.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<StateRepr> for FockState {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        if r.re.len() != r.im.len() {
            return Err(Error::BadLength { expected: r.re.len(), got: r.im.len() });
        }
        let amps = r.re.iter().zip(&r.im).map(|(&a, &b)| C64::new(a, b)).collect();
        FockState::new(r.num_modes, r.dim, amps)
    }
}

impl From<DensityOperator> for StateRepr {
    fn from(d: DensityOperator) -> Self {
        // nalgebra stores column-major; emit row-major
        let t = d.matrix.transpose();
        StateRepr {
            num_modes: d.num_modes,
            dim: d.dim,
            re: t.iter().map(|z| z.re).collect(),
            im: t.iter().map(|z| z.im).collect(),
        }
    }
}

impl TryFrom<StateRepr> for DensityOperator {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        let len = checked_len(r.num_modes, r.dim)?;
        if r.re.len() != len * len || r.im.len() != len * len {
            return Err(Error::BadLength { expected: len * len, got: r.re.len() });
        }
        let vals: Vec<C64> = r.re.iter().zip(&r.im).map(|(&a, &b)| C64::new(a, b)).collect();
        DensityOperator::new(r.num_modes, r.dim, DMatrix::from_row_slice(len, len, &vals))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ket(v: &[f64]) -> FockState {
        FockState::single_mode(v.iter().map(|&x| c(x)).collect())
    }

    #[test]
    fn tensor_of_basis_states() {
        let v = tensor(&[FockState::basis(4, &[0]).unwrap(), FockState::basis(4, &[0]).unwrap()])
            .unwrap();
        assert_eq!(v.amplitude(&[0, 0]), c(1.0));
        let w = tensor(&[FockState::basis(4, &[1]).unwrap(), FockState::basis(4, &[0]).unwrap()])
            .unwrap();
        assert_eq!(w.amplitude(&[1, 0]), c(1.0));
        assert_eq!(w.index_of(&[1, 0]), 4);
    }

    #[test]
    fn tensor_rejects_dim_mismatch() {
        let a = FockState::vacuum(1, 3).unwrap();
        let b = FockState::vacuum(1, 4).unwrap();
        assert!(matches!(tensor(&[a, b]), Err(Error::DimMismatch(3, 4))));
    }

    #[test]
    fn partial_trace_product_and_bell() {
        let rho = FockState::vacuum(2, 3).unwrap().to_density();
        let red = partial_trace(&rho, &[0]).unwrap();
        assert_abs_diff_eq!(red.matrix()[(0, 0)].re, 1.0);
        assert_abs_diff_eq!(red.weight(), 1.0);

        let s = 0.5f64.sqrt();
        let mut amps = vec![c(0.0); 9];
        amps[0] = c(s);
        amps[4] = c(s);
        let bell = FockState::new(2, 3, amps).unwrap().to_density();
        let red = partial_trace(&bell, &[1]).unwrap();
        assert_abs_diff_eq!(red.matrix()[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.matrix()[(1, 1)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(red.matrix()[(0, 1)].norm(), 0.0);
        assert_abs_diff_eq!(purity(&red).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = FockState::vacuum(2, 3).unwrap().to_density();
        assert!(matches!(partial_trace(&rho, &[]), Err(Error::EmptyKeep)));
        assert!(matches!(partial_trace(&rho, &[2]), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn fidelity_and_purity_basics() {
        let one = FockState::basis(5, &[1]).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&one, &one).unwrap(), 1.0);
        let mixed =
            DensityOperator::mixture(&[(0.5, &FockState::basis(5, &[0]).unwrap()), (0.5, &one)])
                .unwrap();
        assert_abs_diff_eq!(purity(&mixed).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_pure(&one, &mixed).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(purity(&one.to_density()).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn sub_normalized_density_is_renormalized() {
        let one = FockState::basis(4, &[1]).unwrap();
        let rho = one.to_density().scaled(0.2);
        assert_abs_diff_eq!(rho.weight(), 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_pure(&one, &rho).unwrap(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(purity(&rho).unwrap(), 1.0, epsilon = 1e-14);
        assert!(matches!(fidelity_pure(&one, &rho.scaled(0.0)), Err(Error::ZeroWeight)));
        assert!(matches!(purity(&rho.scaled(0.0)), Err(Error::ZeroWeight)));
    }

    #[test]
    fn apply_identity_and_embedding() {
        let psi = ket(&[0.6, 0.0, 0.8]);
        let id = ModeOperator::identity(1, 3).unwrap();
        assert_eq!(psi.apply(&id, &[0]).unwrap(), psi);

        // swap levels 0↔1 on mode 1 of |1,0⟩ → |1,1⟩
        let mut x = DMatrix::zeros(3, 3);
        x[(0, 1)] = c(1.0);
        x[(1, 0)] = c(1.0);
        x[(2, 2)] = c(1.0);
        let op = ModeOperator::new(1, 3, x).unwrap();
        let s = FockState::basis(3, &[1, 0]).unwrap().apply(&op, &[1]).unwrap();
        assert_eq!(s.amplitude(&[1, 1]), c(1.0));
        assert!(matches!(s.apply(&op, &[2]), Err(Error::ModeOutOfRange { .. })));
    }

    #[test]
    fn density_apply_matches_pure_apply() {
        let psi = tensor(&[ket(&[0.6, 0.8, 0.0]), ket(&[0.0, 0.6, 0.8])]).unwrap();
        let mut m = DMatrix::zeros(9, 9);
        for i in 0..9 {
            m[((i + 4) % 9, i)] = C64::new(0.0, 1.0);
        }
        let op = ModeOperator::new(2, 3, m).unwrap();
        let a = psi.apply(&op, &[1, 0]).unwrap().to_density();
        let b = psi.to_density().apply(&op, &[1, 0]).unwrap();
        assert_abs_diff_eq!((a.matrix() - b.matrix()).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn ensemble_reconstructs_operator() {
        let a = ket(&[0.6, 0.8, 0.0]);
        let b = ket(&[0.0, 0.0, 1.0]);
        let rho = DensityOperator::mixture(&[(0.7, &a), (0.3, &b)]).unwrap();
        let ens = rho.ensemble(1e-15);
        assert_eq!(ens.len(), 2);
        let terms: Vec<(f64, &FockState)> = ens.iter().map(|(w, s)| (*w, s)).collect();
        let back = DensityOperator::mixture(&terms).unwrap();
        assert_abs_diff_eq!((back.matrix() - rho.matrix()).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 1)] = c(1.0);
        assert!(matches!(DensityOperator::new(1, 2, m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn json_shape_is_row_major() {
        let s = FockState::basis(2, &[1, 0]).unwrap();
        let j = serde_json::to_value(&s).unwrap();
        assert_eq!(j["num_modes"], 2);
        assert_eq!(j["re"][2], 1.0);
        let back: FockState = serde_json::from_value(j).unwrap();
        assert_eq!(back, s);

        let mut m = DMatrix::<C64>::zeros(2, 2);
        m[(0, 0)] = c(0.5);
        m[(1, 1)] = c(0.5);
        m[(0, 1)] = C64::new(0.1, 0.2);
        m[(1, 0)] = C64::new(0.1, -0.2);
        let rho = DensityOperator::new(1, 2, m).unwrap();
        let j = serde_json::to_value(&rho).unwrap();
        assert_eq!(j["im"][1], 0.2);
        let back: DensityOperator = serde_json::from_value(j).unwrap();
        assert_eq!(back, rho);

        let bad = serde_json::json!({"num_modes": 1, "dim": 3, "re": [1.0], "im": [0.0]});
        assert!(serde_json::from_value::<FockState>(bad).is_err());
    }

    #[test]
    fn leakage_counts_top_two_levels() {
        let s = ket(&[0.0, 0.0, 0.6, 0.8]);
        assert_abs_diff_eq!(s.truncation_leakage(), 1.0, epsilon = 1e-15);
        let t = ket(&[0.8, 0.6, 0.0, 0.0]);
        assert_abs_diff_eq!(t.truncation_leakage(), 0.0);
    }
}
