//! Named, configurable reproductions of every figure and quoted number.
//! Each run writes `<experiment>.csv` and `summary.json` into the output
//! directory; all computations are deterministic.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ca::{
    best_tree_depth, cascade_probs, expected_attempts, iterate_tree, success_prob_closed, total_prob,
    AcceptRule, DetectorModel, IndependentGeometric, NoMemory, TreeConfig, TreeSource,
};
use crate::error::{invalid, Error, Result};
use crate::fock::{fidelity_pure, C64, DEFAULT_DIM};
use crate::optics::{css_fidelity_closed, css_state, optimal_squeezing, squeezed_single_photon, CssSpec, SqueezeSpec};
use crate::purification::{alternate_arrangement, purify_sweep, SourceModel};
use crate::qnd::{delta_sweep, heisenberg_check, QndConfig};
use crate::verify::{self, all_clicks, click_resolved, fig7_states, Check};
use crate::wigner::{min_wigner, wigner_at, wigner_css, wigner_sq_photon, Parity, PhaseGrid};

/// Name, description and accepted override keys of every experiment.
pub const EXPERIMENTS: [(&str, &str, &[&str]); 10] = [
    ("fig2", "maximal fidelity of a squeezed photon with an odd cat, alpha in [0, 3]", &["alpha_max", "step"]),
    ("fig3", "Wigner functions of odd cats and matching squeezed photons", &["half_width", "points"]),
    ("fig6", "step success probabilities for odd-odd, even-even and even-odd inputs", &["alpha_max", "step"]),
    ("fig7", "Wigner section and negativity over two iterations from an even cat", &["half_width", "points"]),
    (
        "fig8",
        "best iteration count and maximal fidelity from squeezed photons",
        &["alpha_min", "alpha_max", "step", "max_depth"],
    ),
    ("fig9", "purity and fidelity of purified mixed squeezed photons", &["alpha_i", "p_max", "step"]),
    ("eq41-clicks", "click-resolved output of one step on squeezed photons", &["max_count"]),
    ("cascade-probs", "stage and whole-tree success probabilities of ideal-cat cascades", &["simulate"]),
    ("qnd-check", "QND window post-selection sweep and quadrature transformation checks", &["r", "heisenberg_dim"]),
    ("attempts", "expected attempts of amplification trees under memory models", &["alpha_i", "max_stages"]),
];

fn default_dim() -> usize {
    DEFAULT_DIM
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// JSON shape: `{experiment, dim, overrides: {key: number}, output_dir}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default)]
    pub overrides: BTreeMap<String, f64>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            dim: DEFAULT_DIM,
            overrides: BTreeMap::new(),
            output_dir: default_output_dir(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (_, _, keys) = EXPERIMENTS
            .iter()
            .find(|(n, _, _)| *n == self.experiment)
            .ok_or_else(|| Error::UnknownExperiment(self.experiment.clone()))?;
        verify::check_dim(self.dim)?;
        if let Some(k) = self.overrides.keys().find(|k| !keys.contains(&k.as_str())) {
            return invalid(format!("unknown override `{k}` for {}; accepted: {}", self.experiment, keys.join(", ")));
        }
        if let Some((k, v)) = self.overrides.iter().find(|(_, v)| !v.is_finite()) {
            return invalid(format!("override {k} = {v} is not finite"));
        }
        Ok(())
    }
}

/// Override lookup with defaults.
struct Params<'a> {
    map: &'a BTreeMap<String, f64>,
}

impl<'a> Params<'a> {
    fn new(map: &'a BTreeMap<String, f64>) -> Self {
        Self { map }
    }

    fn get(&self, key: &'static str, default: f64) -> f64 {
        self.map.get(key).copied().unwrap_or(default)
    }

    fn count(&self, key: &'static str, default: usize) -> Result<usize> {
        let v = self.get(key, default as f64);
        if v < 0.0 || v.fract() != 0.0 {
            return invalid(format!("override {key} must be a non-negative integer (got {v})"));
        }
        Ok(v as usize)
    }
}

/// Numeric rows with named columns and one anchor string per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<(Vec<f64>, &'static str)>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self { columns: columns.to_vec(), rows: Vec::new() }
    }

    fn push(&mut self, values: Vec<f64>, anchor: &'static str) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((values, anchor));
    }

    /// CSV with a header row, 17 significant digits and a trailing
    /// `anchor` column. Fails on non-finite values.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = self.columns.join(",");
        out.push_str(",anchor\n");
        for (values, anchor) in &self.rows {
            for v in values {
                if !v.is_finite() {
                    return invalid(format!("non-finite value in row anchored `{anchor}`"));
                }
                out.push_str(&format!("{v:.16e},"));
            }
            out.push_str(anchor);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Files written by a run and the checks it reproduced.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub files: Vec<PathBuf>,
    pub summary: Vec<Check>,
}

impl RunReport {
    pub fn pass(&self) -> bool {
        self.summary.iter().all(|c| c.pass)
    }
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory followed by a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("output");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

/// Computes the experiment without touching the filesystem.
pub fn compute(cfg: &ExperimentConfig) -> Result<(Table, Vec<Check>)> {
    cfg.validate()?;
    let p = Params::new(&cfg.overrides);
    match cfg.experiment.as_str() {
        "fig2" => fig2(&p, cfg.dim),
        "fig3" => fig3(&p, cfg.dim),
        "fig6" => fig6(&p),
        "fig7" => fig7(&p, cfg.dim),
        "fig8" => fig8(&p, cfg.dim),
        "fig9" => fig9(&p, cfg.dim),
        "eq41-clicks" => eq41_clicks(&p, cfg.dim),
        "cascade-probs" => cascade(&p, cfg.dim),
        "qnd-check" => qnd_check(&p, cfg.dim),
        "attempts" => attempts(&p),
        other => Err(Error::UnknownExperiment(other.to_owned())),
    }
}

/// Runs the experiment and writes its CSV and `summary.json`.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    let (table, summary) = compute(cfg)?;
    let csv = table.to_csv()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let csv_path = cfg.output_dir.join(format!("{}.csv", cfg.experiment));
    write_atomic(&csv_path, csv.as_bytes())?;
    let json_path = cfg.output_dir.join("summary.json");
    write_atomic(&json_path, serde_json::to_string_pretty(&summary)?.as_bytes())?;
    Ok(RunReport { files: vec![csv_path, json_path], summary })
}

fn grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || hi < lo {
        return invalid(format!("bad grid [{lo}, {hi}] step {step}"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    // round away accumulated binary noise so grid values print cleanly
    Ok((0..=n).map(|k| ((lo + k as f64 * step) * 1e12).round() / 1e12).collect())
}

fn fig2(p: &Params, dim: usize) -> Result<(Table, Vec<Check>)> {
    let anchor = "fig2: maximal fidelity of a squeezed photon with an odd cat";
    let alphas = grid(0.0, p.get("alpha_max", 3.0), p.get("step", 0.05))?;
    let mut t = Table::new(&["alpha", "r_opt", "fidelity_closed", "fidelity_matrix"]);
    let rows: Vec<Vec<f64>> = alphas
        .par_iter()
        .map(|&a| {
            if a == 0.0 {
                // the odd cat tends to |1⟩ and the optimal squeezing to zero
                return Ok(vec![0.0, 0.0, 1.0, 1.0]);
            }
            let r = optimal_squeezing(a)?;
            let closed = css_fidelity_closed(r, a)?;
            let matrix = fidelity_pure(
                &css_state(CssSpec::odd(a), dim)?,
                &squeezed_single_photon(SqueezeSpec::new(r)?, dim)?,
            )?;
            Ok(vec![a, r, closed, matrix])
        })
        .collect::<Result<_>>()?;
    for row in rows {
        t.push(row, anchor);
    }
    Ok((t, verify::small_cat_fidelities(dim)?))
}

fn fig3(p: &Params, _dim: usize) -> Result<(Table, Vec<Check>)> {
    let anchor = "fig3: odd-cat and squeezed-photon Wigner functions";
    let g = PhaseGrid::square(p.get("half_width", 4.0), p.count("points", 81)?)?;
    let mut t = Table::new(&["alpha", "r", "z_re", "z_im", "w_cat", "w_squeezed"]);
    let mut summary = Vec::new();
    for alpha in [FRAC_1_SQRT_2, 1.0, 2.0] {
        let r = optimal_squeezing(alpha)?;
        let mut min_cat = f64::INFINITY;
        let mut min_sq = f64::INFINITY;
        for j in 0..g.n_im {
            for i in 0..g.n_re {
                let z = g.point(i, j);
                let wc = wigner_css(z, alpha, Parity::Odd)?;
                let ws = wigner_sq_photon(z, r);
                min_cat = min_cat.min(wc);
                min_sq = min_sq.min(ws);
                t.push(vec![alpha, r, z.re, z.im, wc, ws], anchor);
            }
        }
        let tag = format!("alpha={alpha:.4}");
        summary.push(Check::at_most(format!("fig3 odd cat is negative somewhere {tag}"), anchor, 0.0, min_cat));
        summary.push(Check::at_most(format!("fig3 squeezed photon is negative somewhere {tag}"), anchor, 0.0, min_sq));
    }
    summary.push(Check::within(
        "fig3 squeezing for alpha=2",
        anchor,
        0.853,
        optimal_squeezing(2.0)?,
        5e-3,
    ));
    Ok((t, summary))
}

fn fig6(p: &Params) -> Result<(Table, Vec<Check>)> {
    let anchor = "fig6: step success probabilities";
    let step = p.get("step", 0.01);
    let alphas: Vec<f64> = grid(step, p.get("alpha_max", 3.0), step)?;
    let mut t = Table::new(&["alpha", "p_odd_odd", "p_even_even", "p_even_odd"]);
    let mut floor = f64::INFINITY;
    for &a in &alphas {
        let oo = success_prob_closed(a, a, PI, PI)?;
        floor = floor.min(oo);
        t.push(vec![a, oo, success_prob_closed(a, a, 0.0, 0.0)?, success_prob_closed(a, a, PI, 0.0)?], anchor);
    }
    let large = success_prob_closed(6.0, 6.0, 0.0, 0.0)?;
    Ok((
        t,
        vec![
            Check::at_least("fig6 odd-odd probability floor", anchor, 0.214, floor),
            Check::within("fig6 even-even probability at alpha=6", anchor, 0.5, large, 1e-6),
        ],
    ))
}

fn fig7(p: &Params, dim: usize) -> Result<(Table, Vec<Check>)> {
    let anchor = "fig7: Wigner section along the imaginary axis";
    let half = p.get("half_width", 3.0);
    let n = p.count("points", 241)?;
    if n < 2 {
        return invalid("fig7 needs at least two section points");
    }
    let states = fig7_states(dim)?;
    let mut t = Table::new(&["iteration", "amplitude", "z_im", "w"]);
    let mut negativity = Vec::new();
    for (k, (amp, rho)) in states.iter().enumerate() {
        for j in 0..n {
            let y = -half + 2.0 * half * j as f64 / (n - 1) as f64;
            t.push(vec![k as f64, *amp, y, wigner_at(rho, C64::new(0.0, y))?], anchor);
        }
        negativity.push(-min_wigner(rho, PhaseGrid::default())?.1.min(0.0));
    }
    let summary = (1..negativity.len())
        .map(|k| Check::above(format!("fig7 |W_min| after iteration {k}"), anchor, negativity[k - 1], negativity[k]))
        .collect();
    Ok((t, summary))
}

/// One row of the iterated-amplification scan.
#[derive(Clone, Debug, PartialEq)]
pub struct Fig8Row {
    pub alpha: f64,
    pub best_n: usize,
    pub fidelity: f64,
    /// Fidelity for every depth `1..=max_depth`.
    pub by_depth: Vec<f64>,
}

/// Best depth and fidelity for each final amplitude, trees from squeezed
/// photons at `α/√2ⁿ`.
pub fn fig8_rows(alphas: &[f64], max_depth: usize, dim: usize) -> Result<Vec<Fig8Row>> {
    alphas
        .iter()
        .map(|&alpha| {
            let d = best_tree_depth(alpha, 1..=max_depth, dim)?;
            Ok(Fig8Row {
                alpha,
                best_n: d.best_n,
                fidelity: d.fidelity,
                by_depth: d.scan.into_iter().map(|(_, f)| f).collect(),
            })
        })
        .collect()
}

fn fig8(p: &Params, dim: usize) -> Result<(Table, Vec<Check>)> {
    let anchor = "fig8: maximal fidelity over iteration count";
    let alphas = grid(p.get("alpha_min", 0.5), p.get("alpha_max", 2.5), p.get("step", 0.1))?;
    let max_depth = p.count("max_depth", 6)?;
    const DEPTH_COLUMNS: [&str; 8] = ["f_n1", "f_n2", "f_n3", "f_n4", "f_n5", "f_n6", "f_n7", "f_n8"];
    if !(1..=DEPTH_COLUMNS.len()).contains(&max_depth) {
        return invalid(format!("max_depth must lie in 1..={}", DEPTH_COLUMNS.len()));
    }
    let rows = fig8_rows(&alphas, max_depth, dim)?;
    let mut cols = vec!["alpha", "best_n", "max_fidelity"];
    cols.extend_from_slice(&DEPTH_COLUMNS[..max_depth]);
    let mut t = Table::new(&cols);
    let mut summary = Vec::new();
    for row in &rows {
        let mut v = vec![row.alpha, row.best_n as f64, row.fidelity];
        v.extend_from_slice(&row.by_depth);
        t.push(v, anchor);
        if row.alpha >= 2.0 - 1e-9 {
            summary.push(Check::at_least(format!("fig8 max fidelity alpha={:.2}", row.alpha), anchor, 0.99, row.fidelity));
        }
        if (row.alpha - 2.0).abs() < 1e-9 {
            summary.push(Check::within("fig8 best iteration count alpha=2", anchor, 4.0, row.best_n as f64, 0.0));
            summary.push(Check::within("fig8 max fidelity alpha=2", anchor, 0.995, row.fidelity, 2e-3));
        }
    }
    Ok((t, summary))
}

fn fig9(p: &Params, dim: usize) -> Result<(Table, Vec<Check>)> {
    let anchor = "fig9: purification by iterated amplification";
    let alpha_i = p.get("alpha_i", 0.5);
    let ps = grid(0.0, p.get("p_max", 0.5), p.get("step", 0.05))?;
    let det = DetectorModel::ideal_threshold();
    let rows = purify_sweep(&ps, 2, alpha_i, dim, det)?;
    let alt: Vec<(f64, f64)> = ps
        .par_iter()
        .map(|&pp| {
            let a = alternate_arrangement(SourceModel::for_alpha(pp, alpha_i)?, dim, det)?;
            Ok((a.last.metrics.purity, a.last.metrics.fidelity))
        })
        .collect::<Result<_>>()?;
    let mut t = Table::new(&[
        "p",
        "purity_in",
        "purity_1",
        "purity_2",
        "fid_in",
        "fid_1",
        "fid_2",
        "purity_alternate",
        "fid_alternate",
    ]);
    let mut summary = Vec::new();
    for (r, (pa, fa)) in rows.iter().zip(&alt) {
        let (p2, f2) = (r.purity_2.unwrap_or(f64::NAN), r.fid_2.unwrap_or(f64::NAN));
        t.push(vec![r.p, r.purity_in, r.purity_1, p2, r.fid_in, r.fid_1, f2, *pa, *fa], anchor);
        let near = |x: f64| (r.p - x).abs() < 1e-9;
        if near(0.4) {
            summary.push(Check::within("fig9 p=0.40 input fidelity", anchor, 0.60, r.fid_in, 0.01));
            summary.push(Check::within("fig9 p=0.40 first-iteration fidelity", anchor, 0.89, r.fid_1, 0.01));
            summary.push(Check::within("fig9 p=0.40 second-iteration fidelity", anchor, 0.72, f2, 0.01));
        }
        if near(0.25) {
            summary.push(Check::within("fig9 p=0.25 input fidelity", anchor, 0.750, r.fid_in, 0.01));
            summary.push(Check::within("fig9 p=0.25 first-iteration fidelity", anchor, 0.941, r.fid_1, 0.01));
        }
        if near(0.05) {
            summary.push(Check::within("fig9 p=0.05 input fidelity", anchor, 0.950, r.fid_in, 0.01));
            summary.push(Check::within("fig9 p=0.05 first-iteration fidelity", anchor, 0.990, r.fid_1, 0.01));
        }
        summary.push(Check::within(format!("fig9 alternate route fidelity p={:.2}", r.p), anchor, f2, *fa, 1e-2));
    }
    Ok((t, summary))
}

fn eq41_clicks(p: &Params, dim: usize) -> Result<(Table, Vec<Check>)> {
    let anchor = "click-resolved amplification of squeezed photons";
    let max_count = p.count("max_count", 4)?.min(dim - 1);
    let all = click_resolved(dim, all_clicks(dim))?;
    let p_all = all.prob;
    let pairs: Vec<(usize, usize)> = (1..=max_count).flat_map(|k| (1..=max_count).map(move |l| (k, l))).collect();
    let fids: Vec<f64> = pairs
        .par_iter()
        .map(|&pair| Ok(click_resolved(dim, AcceptRule::counts(&[pair]))?.fidelity))
        .collect::<Result<_>>()?;
    let mut t = Table::new(&["k1", "k2", "prob", "share", "fidelity"]);
    for (&(k1, k2), f) in pairs.iter().zip(&fids) {
        let pr = all.click_table.get(&(k1, k2)).copied().unwrap_or(0.0);
        t.push(vec![k1 as f64, k2 as f64, pr, pr / p_all, *f], anchor);
    }
    Ok((t, verify::click_resolved_output(dim)?))
}

fn cascade(p: &Params, dim: usize) -> Result<(Table, Vec<Check>)> {
    let anchor = "cascade success probabilities of ideal cats";
    let simulate = p.get("simulate", 1.0) != 0.0;
    let mut t = Table::new(&["alpha_i", "stage", "amplitude", "step_prob_closed", "step_prob_simulated", "total_prob"]);
    for (alpha_i, stages) in [(1.0, 2usize), (FRAC_1_SQRT_2, 3), (0.5, 4)] {
        let closed = cascade_probs(alpha_i, PI, stages)?;
        let sim = if simulate {
            let cfg = TreeConfig {
                alpha_i,
                source: TreeSource::Css { phase: PI },
                stages,
                detector: DetectorModel::ideal_threshold(),
                accept: AcceptRule::ClickClick,
                dim,
            };
            iterate_tree(&cfg)?.stage_probs()
        } else {
            closed.clone()
        };
        for k in 0..stages {
            t.push(
                vec![
                    alpha_i,
                    (k + 1) as f64,
                    alpha_i * SQRT_2.powi(k as i32 + 1),
                    closed[k],
                    sim[k],
                    total_prob(&closed[..=k]),
                ],
                anchor,
            );
        }
    }
    Ok((t, verify::cascade_probabilities(dim)?))
}

fn qnd_check(p: &Params, dim: usize) -> Result<(Table, Vec<Check>)> {
    let anchor = "QND window post-selection";
    let r = p.get("r", 0.3);
    let h_dim = p.count("heisenberg_dim", 16)?;
    let deltas = [0.4, 0.2, 0.1, 0.05];
    let rows = delta_sweep(1, r, &deltas, dim)?;
    let kappa = QndConfig::new(r, 0.05, dim)?.kappa(1.0);
    let limit = squeezed_single_photon(SqueezeSpec::new(kappa.ln())?, dim)?;
    let mut t = Table::new(&["delta", "acceptance", "fidelity_fit", "r_fit", "fidelity_limit", "even_population"]);
    let mut limit_fids = Vec::new();
    for (row, &delta) in rows.iter().zip(&deltas) {
        let out = crate::qnd::qnd_postselect(1, &QndConfig::new(r, delta, dim)?)?;
        let f_lim = fidelity_pure(&limit, &out.state)?;
        limit_fids.push(f_lim);
        t.push(vec![row.delta, row.prob, row.fidelity, row.r_fit, f_lim, row.even_population], anchor);
    }
    let mut summary = Vec::new();
    let last = rows.last().expect("non-empty sweep");
    summary.push(Check::at_least("qnd best-fit fidelity delta=0.05", anchor, 0.999, last.fidelity));
    summary.push(Check::at_most(
        "qnd |r' - ln kappa| / ln kappa delta=0.05",
        anchor,
        0.02,
        (last.r_fit - kappa.ln()).abs() / kappa.ln(),
    ));
    for k in 1..limit_fids.len() {
        summary.push(Check::above(
            format!("qnd limit fidelity increases to delta={}", deltas[k]),
            anchor,
            limit_fids[k - 1],
            limit_fids[k],
        ));
    }
    let coherence = rows.iter().map(|r| r.parity_coherence).fold(0.0, f64::max);
    summary.push(Check::at_most("qnd max even-odd coherence", anchor, 1e-10, coherence));
    // even population scales as δ²: extrapolate the two smallest windows
    let (d1, e1, d2, e2) = (deltas[2], rows[2].even_population, deltas[3], rows[3].even_population);
    let intercept = (e2 * d1 * d1 - e1 * d2 * d2) / (d1 * d1 - d2 * d2);
    summary.push(Check::at_most("qnd extrapolated even population at delta=0", anchor, 1e-6, intercept.abs()));
    for hr in [r, 0.5] {
        let rep = heisenberg_check(hr, h_dim, 4 * h_dim)?;
        summary.push(Check::at_most(
            format!("qnd Heisenberg relative error r={hr}"),
            "QND quadrature transformation",
            1e-4,
            rep.max(),
        ));
    }
    Ok((t, summary))
}

fn attempts(p: &Params) -> Result<(Table, Vec<Check>)> {
    let anchor = "expected attempts of ideal-cat trees";
    let alpha_i = p.get("alpha_i", 0.5);
    let max_stages = p.count("max_stages", 4)?;
    if max_stages == 0 {
        return invalid("max_stages must be positive");
    }
    let mut t = Table::new(&["alpha_i", "stages", "total_prob", "independent_geometric", "no_memory"]);
    let mut default_cascade = None;
    for stages in 1..=max_stages {
        let probs = cascade_probs(alpha_i, PI, stages)?;
        let geo = expected_attempts(&probs, &IndependentGeometric)?;
        t.push(vec![alpha_i, stages as f64, total_prob(&probs), geo, expected_attempts(&probs, &NoMemory)?], anchor);
        if stages == 4 && alpha_i == 0.5 {
            default_cascade = Some(geo);
        }
    }
    let mut summary = Vec::new();
    if let Some(geo) = default_cascade {
        summary.push(Check::within("attempts 16-to-1 cascade from alpha=1/2", anchor, 138.0, geo, 1.0));
    }
    Ok((t, summary))
}
