//! Plot-data presets. Every preset writes comma-separated files into an
//! output directory; nothing is rendered.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::ensembles::ModelParams;
use crate::error::{Error, Result};
use crate::oracles::{gap_strong, gap_weak, ratio_reference, Density, MpConvolution, RatioKind, SemicircleConvolution, SemicircleLaw};
use crate::stats::{self, Histogram};

use super::sweep::{write_atomic, RealizationRecord, SweepResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Eigenvalue scatter and spectral summaries.
    Fig1,
    /// Marginal densities with oracle overlays.
    Fig2,
    /// Mean gap against `g_eff` with the weak and strong predictions.
    Fig3,
    /// Steady-state eigenvalue variance.
    Fig4a,
    /// Densities of the effective Hamiltonian levels.
    Fig4bc,
    /// Spacing-ratio histograms with reference laws.
    Fig4d,
    /// Moment statistic of the ratios.
    Fig4e,
}

impl Preset {
    pub const ALL: [Preset; 7] =
        [Preset::Fig1, Preset::Fig2, Preset::Fig3, Preset::Fig4a, Preset::Fig4bc, Preset::Fig4d, Preset::Fig4e];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4a => "fig4a",
            Preset::Fig4bc => "fig4bc",
            Preset::Fig4d => "fig4d",
            Preset::Fig4e => "fig4e",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown preset `{s}` (fig1, fig2, fig3, fig4a, fig4bc, fig4d, fig4e)")))
    }
}

fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(f).unwrap_or_default()
}

struct Table {
    header: String,
    lines: Vec<String>,
}

impl Table {
    fn new(cols: &[&str]) -> Self {
        Table { header: cols.join(","), lines: Vec::new() }
    }
    fn push(&mut self, cols: Vec<String>) {
        self.lines.push(cols.join(","));
    }
    fn render(&self) -> String {
        let mut s = self.header.clone();
        s.push('\n');
        for l in &self.lines {
            s.push_str(l);
            s.push('\n');
        }
        s
    }
}

/// Build every table of `preset` before writing any, so a failure leaves
/// no partial output. Returns the written paths.
pub fn report(result: &SweepResult, records: &[RealizationRecord], preset: Preset, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if result.rows.is_empty() || records.is_empty() {
        return Err(Error::Missing("the sweep has no results".into()));
    }
    let tables: Vec<(String, Table)> = match preset {
        Preset::Fig1 => fig1(result, records)?,
        Preset::Fig2 => fig2(result, records)?,
        Preset::Fig3 => vec![("fig3.csv".into(), fig3(result)?)],
        Preset::Fig4a => vec![("fig4a.csv".into(), fig4a(result)?)],
        Preset::Fig4bc => vec![("fig4bc.csv".into(), fig4bc(records)?)],
        Preset::Fig4d => vec![("fig4d.csv".into(), fig4d(records)?)],
        Preset::Fig4e => vec![("fig4e.csv".into(), fig4e(result)?)],
    };
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    for (name, t) in tables {
        let p = out_dir.join(name);
        write_atomic(&p, t.render().as_bytes())?;
        paths.push(p);
    }
    Ok(paths)
}

fn missing(what: &str) -> Error {
    Error::Missing(format!("{what} not recorded in this sweep"))
}

fn fig1(result: &SweepResult, records: &[RealizationRecord]) -> Result<Vec<(String, Table)>> {
    let mut scatter = Table::new(&["n", "g_eff", "realization", "re", "im"]);
    for rec in records {
        if let Some(ev) = &rec.eigenvalues {
            for z in ev {
                scatter.push(vec![rec.n.to_string(), f(rec.g_eff), rec.realization.to_string(), f(z[0]), f(z[1])]);
            }
        }
    }
    if scatter.lines.is_empty() {
        return Err(missing("eigenvalues (set store_eigenvalues)"));
    }
    let mut summary = Table::new(&["n", "g_eff", "r_mean", "x_mean", "y_mean", "gap_mean"]);
    for row in &result.rows {
        summary.push(vec![
            row.n.to_string(),
            f(row.g_eff),
            opt(row.r.map(|e| e.mean)),
            opt(row.x.map(|e| e.mean)),
            opt(row.y.map(|e| e.mean)),
            opt(row.gap.map(|e| e.mean)),
        ]);
    }
    Ok(vec![("fig1_scatter.csv".into(), scatter), ("fig1_summary.csv".into(), summary)])
}

fn group_by_point(records: &[RealizationRecord]) -> BTreeMap<(usize, usize), Vec<&RealizationRecord>> {
    let mut m: BTreeMap<(usize, usize), Vec<&RealizationRecord>> = BTreeMap::new();
    for r in records {
        m.entry((r.n, r.point)).or_default().push(r);
    }
    m
}

fn auto_hist(values: &[f64], lo: f64, hi: f64) -> Histogram {
    let bins = stats::freedman_diaconis_bins(values, 10, 200);
    Histogram::uniform(values, lo, hi, bins, 1.0 / values.len() as f64)
}

fn fig2(result: &SweepResult, records: &[RealizationRecord]) -> Result<Vec<(String, Table)>> {
    let mut t = Table::new(&["n", "g_eff", "axis", "center", "density", "oracle_semicircle", "oracle_mp"]);
    for ((n, _), recs) in group_by_point(records) {
        let mut im = Vec::new();
        let mut re = Vec::new();
        for r in &recs {
            if let Some(ev) = &r.eigenvalues {
                // drop the zero mode
                for z in ev.iter().skip(1) {
                    re.push(z[0]);
                    im.push(z[1]);
                }
            }
        }
        if im.is_empty() {
            continue;
        }
        let g_eff = recs[0].g_eff;
        let conv = SemicircleConvolution { base: SemicircleLaw::for_hamiltonian(n, result.beta) };
        let e2 = 2.0 * conv.base.e_star;
        let h = auto_hist(&im, -e2, e2);
        for (c, d) in h.centers().iter().zip(&h.density) {
            t.push(vec![n.to_string(), f(g_eff), "imag".into(), f(*c), f(*d), f(conv.density(*c)?), String::new()]);
        }
        let params = ModelParams::new(n, result.beta, result.r, recs[0].g)?;
        let unit = params.beta_n() * params.g * params.g;
        let mp = MpConvolution::new(result.r as f64)?;
        let lo = re.iter().cloned().fold(f64::INFINITY, f64::min);
        let h = auto_hist(&re, lo, 0.0);
        for (c, d) in h.centers().iter().zip(&h.density) {
            t.push(vec![n.to_string(), f(g_eff), "real".into(), f(*c), f(*d), String::new(), f(mp.density(c / unit)? / unit)]);
        }
    }
    if t.lines.is_empty() {
        return Err(missing("eigenvalues (set store_eigenvalues)"));
    }
    Ok(vec![("fig2.csv".into(), t)])
}

fn fig3(result: &SweepResult) -> Result<Table> {
    let mut t = Table::new(&["g_eff", "n", "mean_gap", "stderr", "oracle_weak", "oracle_strong"]);
    for row in &result.rows {
        let gap = row.gap.ok_or_else(|| missing("gap"))?;
        let p = ModelParams::new(row.n, result.beta, result.r, row.g)?;
        t.push(vec![f(row.g_eff), row.n.to_string(), f(gap.mean), f(gap.stderr), f(gap_weak(&p)?), f(gap_strong(&p)?)]);
    }
    Ok(t)
}

fn fig4a(result: &SweepResult) -> Result<Table> {
    let mut t = Table::new(&["g_eff", "n", "variance", "stderr", "n2_variance", "purity"]);
    for row in &result.rows {
        let v = row.variance.ok_or_else(|| missing("steady state"))?;
        let n2 = (row.n * row.n) as f64;
        t.push(vec![f(row.g_eff), row.n.to_string(), f(v.mean), f(v.stderr), f(n2 * v.mean), opt(row.purity.map(|e| e.mean))]);
    }
    Ok(t)
}

fn fig4bc(records: &[RealizationRecord]) -> Result<Table> {
    let mut t = Table::new(&["n", "g_eff", "center", "density", "gaussian"]);
    for ((n, _), recs) in group_by_point(records) {
        let eps: Vec<f64> = recs.iter().filter_map(|r| r.steady.as_ref()).flat_map(|s| s.epsilons.iter().cloned()).collect();
        if eps.len() < 2 {
            continue;
        }
        let (m, s) = stats::mean_std(&eps);
        let lo = eps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = eps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let h = auto_hist(&eps, lo, hi);
        for (c, d) in h.centers().iter().zip(&h.density) {
            let gauss = (-(c - m).powi(2) / (2.0 * s * s)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
            t.push(vec![n.to_string(), f(recs[0].g_eff), f(*c), f(*d), f(gauss)]);
        }
    }
    if t.lines.is_empty() {
        return Err(missing("steady state"));
    }
    Ok(t)
}

fn fig4d(records: &[RealizationRecord]) -> Result<Table> {
    let poisson = ratio_reference(RatioKind::Poisson)?;
    let gue = ratio_reference(RatioKind::GueSurmise)?;
    let goe = ratio_reference(RatioKind::GoeSurmise)?;
    let mut t = Table::new(&["n", "g_eff", "center", "density", "poisson", "gue_surmise", "goe_surmise"]);
    for ((n, _), recs) in group_by_point(records) {
        let ratios: Vec<f64> = recs.iter().filter_map(|r| r.steady.as_ref()).flat_map(|s| s.ratios.iter().cloned()).collect();
        if ratios.is_empty() {
            continue;
        }
        let h = Histogram::uniform(&ratios, 0.0, 10.0, 50, 1.0 / ratios.len() as f64);
        for (c, d) in h.centers().iter().zip(&h.density) {
            t.push(vec![n.to_string(), f(recs[0].g_eff), f(*c), f(*d), f(poisson.pdf(*c)), f(gue.pdf(*c)), f(goe.pdf(*c))]);
        }
    }
    if t.lines.is_empty() {
        return Err(missing("spacing ratios"));
    }
    Ok(t)
}

fn fig4e(result: &SweepResult) -> Result<Table> {
    let target = 1.0 / crate::oracles::gue_relative_variance_closed_form().sqrt();
    let mut t = Table::new(&["g_eff", "n", "statistic", "stderr", "gue_target", "poisson_target"]);
    for row in &result.rows {
        let s = row.ratio_statistic.ok_or_else(|| missing("spacing ratios"))?;
        t.push(vec![f(row.g_eff), row.n.to_string(), f(s.mean), f(s.stderr), f(target), f(0.0)]);
    }
    Ok(t)
}

/// Rows of one observable as collapse curves keyed by `N`.
pub fn curves_from(result: &SweepResult, pick: fn(&super::sweep::SummaryRow) -> Option<f64>) -> Vec<super::analysis::Curve> {
    let mut by_n: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for row in &result.rows {
        if let Some(q) = pick(row) {
            by_n.entry(row.n).or_default().push((row.g_eff, q));
        }
    }
    by_n.into_iter()
        .map(|(n, mut points)| {
            points.sort_by(|a, b| a.0.total_cmp(&b.0));
            super::analysis::Curve { n, points }
        })
        .collect()
}
