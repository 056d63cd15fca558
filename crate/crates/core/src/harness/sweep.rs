//! Seeded ensemble sweeps with crash-safe incremental persistence.
//!
//! Completed realizations are appended to `journal.jsonl` as they finish.
//! When every task is done the canonical, sorted `records.jsonl`,
//! `failures.jsonl` and `summary.csv` are written atomically and the
//! journal is removed. A rerun or resume skips every key already present.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ensembles::{Beta, ModelParams, Realization};
use crate::error::{Error, ErrorClass, Result};
use crate::liouvillian::build_liouvillian;
use crate::spectra::{diagonalize, summarize_params, SpectralSummary};
use crate::stats;
use crate::steadystate::{
    effective_hamiltonian, extract_steady_state, purity_and_variance, solve_steady_state, spacing_ratios,
    SteadyState, DEFAULT_P_MIN,
};

use super::config::{Observable, SweepConfig};

pub const JOURNAL: &str = "journal.jsonl";
pub const RECORDS: &str = "records.jsonl";
pub const FAILURES: &str = "failures.jsonl";
pub const SUMMARY: &str = "summary.csv";
pub const MANIFEST: &str = "config.toml";
pub const WORKERS_ENV: &str = "RANDLINDBLAD_WORKERS";

pub fn version_tag() -> String {
    format!("randlindblad {}", env!("CARGO_PKG_VERSION"))
}

/// Seed shared by every grid point and realization of one `(N, beta, r)`
/// family, so that different couplings reuse the same underlying draws.
pub fn family_seed(master: u64, n: usize, beta: Beta, r: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(b"randlindblad/family/v1");
    h.update(master.to_le_bytes());
    h.update((n as u64).to_le_bytes());
    h.update([beta.index()]);
    h.update((r as u64).to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Steady-state observables of one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyRecord {
    pub purity: f64,
    pub variance: f64,
    pub min_eigenvalue: f64,
    pub p: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub discarded: usize,
    pub ratios: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub n: usize,
    pub beta: Beta,
    pub r: usize,
    /// Grid index.
    pub point: usize,
    pub realization: u64,
    pub seed: u64,
    pub g: f64,
    pub g_eff: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<SpectralSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady: Option<SteadyRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub n: usize,
    pub point: usize,
    pub realization: u64,
    pub seed: u64,
    pub g: f64,
    pub class: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
enum JournalEntry {
    Ok(RealizationRecord),
    Failed(FailureRecord),
}

type Key = (usize, usize, u64);

impl JournalEntry {
    fn key(&self) -> Key {
        match self {
            JournalEntry::Ok(r) => (r.n, r.point, r.realization),
            JournalEntry::Failed(f) => (f.n, f.point, f.realization),
        }
    }
}

/// Options of a single realization run.
#[derive(Debug, Clone, Copy)]
pub struct RealizationOptions {
    pub spectrum: bool,
    pub steady: bool,
    pub store_eigenvalues: bool,
}

/// Steady-state analysis shared by the sweep and the command line.
pub fn steady_record(ss: &SteadyState) -> Result<SteadyRecord> {
    let (purity, variance) = purity_and_variance(ss);
    let eff = effective_hamiltonian(ss, DEFAULT_P_MIN)?;
    let ratios = spacing_ratios(&eff)?;
    Ok(SteadyRecord {
        purity,
        variance,
        min_eigenvalue: ss.min_eigenvalue,
        p: ss.eigenvalues.clone(),
        epsilons: eff.epsilons,
        discarded: eff.discarded_count,
        ratios: ratios.ratios,
    })
}

/// Sample, build, diagonalize and analyze one realization.
pub fn run_realization(params: &ModelParams, point: usize, opts: RealizationOptions) -> Result<RealizationRecord> {
    let real = Realization::sample(params)?;
    let l = build_liouvillian(&real.hamiltonian, &real.jumps)?;
    let mut rec = RealizationRecord {
        n: params.n,
        beta: params.beta,
        r: params.r,
        point,
        realization: params.realization,
        seed: params.seed,
        g: params.g,
        g_eff: params.geff(),
        summary: None,
        steady: None,
        eigenvalues: None,
    };
    let spectrum = if opts.spectrum { Some(diagonalize(&l)?) } else { None };
    if let Some(s) = &spectrum {
        rec.summary = Some(summarize_params(s, params));
        if opts.store_eigenvalues {
            rec.eigenvalues = Some(s.eigenvalues.iter().map(|z| [z.re, z.im]).collect());
        }
    }
    if opts.steady {
        let ss = match &spectrum {
            Some(s) => extract_steady_state(&l, s)?,
            None => solve_steady_state(&l)?,
        };
        rec.steady = Some(steady_record(&ss)?);
    }
    Ok(rec)
}

/// Mean and standard error over realizations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn of(xs: &[f64]) -> Option<Self> {
        if xs.is_empty() {
            None
        } else {
            Some(Estimate { mean: stats::mean(xs), stderr: stats::std_error(xs) })
        }
    }
}

/// Aggregates of one `(N, grid point)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: usize,
    pub point: usize,
    pub g: f64,
    pub g_eff: f64,
    pub realizations: usize,
    pub failures: usize,
    pub gap: Option<Estimate>,
    pub x: Option<Estimate>,
    pub y: Option<Estimate>,
    pub r: Option<Estimate>,
    pub variance: Option<Estimate>,
    pub purity: Option<Estimate>,
    /// `<r> / sigma_r` over the pooled ratios, jackknife error over
    /// realizations.
    pub ratio_statistic: Option<Estimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SummaryRow>,
    pub seed: u64,
    pub version: String,
    pub beta: Beta,
    pub r: usize,
}

impl SweepResult {
    pub fn row(&self, n: usize, point: usize) -> Option<&SummaryRow> {
        self.rows.iter().find(|row| row.n == n && row.point == point)
    }

    pub fn sizes(&self) -> Vec<usize> {
        let s: BTreeSet<usize> = self.rows.iter().map(|r| r.n).collect();
        s.into_iter().collect()
    }
}

fn pooled_statistic(sets: &[&Vec<f64>]) -> Option<f64> {
    let all: Vec<f64> = sets.iter().flat_map(|s| s.iter().cloned()).collect();
    if all.len() < 2 {
        return None;
    }
    let m = stats::mean(&all);
    let v = all.iter().map(|x| (x - m).powi(2)).sum::<f64>() / all.len() as f64;
    Some(m / v.sqrt())
}

fn ratio_estimate(sets: &[&Vec<f64>]) -> Option<Estimate> {
    let full = pooled_statistic(sets)?;
    let k = sets.len();
    if k < 2 {
        return Some(Estimate { mean: full, stderr: 0.0 });
    }
    let loo: Vec<f64> = (0..k)
        .filter_map(|i| {
            let rest: Vec<&Vec<f64>> = sets.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, s)| *s).collect();
            pooled_statistic(&rest)
        })
        .collect();
    let mean_loo = stats::mean(&loo);
    let var = (k - 1) as f64 / k as f64 * loo.iter().map(|x| (x - mean_loo).powi(2)).sum::<f64>();
    Some(Estimate { mean: full, stderr: var.sqrt() })
}

/// Table of means and errors keyed by `(N, point)`.
pub fn aggregate(records: &[RealizationRecord], failures: &[FailureRecord], seed: u64, beta: Beta, r: usize) -> SweepResult {
    let mut groups: BTreeMap<(usize, usize), Vec<&RealizationRecord>> = BTreeMap::new();
    for rec in records {
        groups.entry((rec.n, rec.point)).or_default().push(rec);
    }
    let mut rows = Vec::new();
    for ((n, point), mut recs) in groups {
        // fixed summation order whatever order the records arrived in
        recs.sort_by_key(|r| r.realization);
        let pick = |f: fn(&SpectralSummary) -> f64| -> Option<Estimate> {
            let v: Vec<f64> = recs.iter().filter_map(|r| r.summary.as_ref().map(f)).collect();
            Estimate::of(&v)
        };
        let pick_ss = |f: fn(&SteadyRecord) -> f64| -> Option<Estimate> {
            let v: Vec<f64> = recs.iter().filter_map(|r| r.steady.as_ref().map(f)).collect();
            Estimate::of(&v)
        };
        let ratio_sets: Vec<&Vec<f64>> = recs.iter().filter_map(|r| r.steady.as_ref().map(|s| &s.ratios)).collect();
        rows.push(SummaryRow {
            n,
            point,
            g: recs[0].g,
            g_eff: recs[0].g_eff,
            realizations: recs.len(),
            failures: failures.iter().filter(|f| f.n == n && f.point == point).count(),
            gap: pick(|s| s.gap),
            x: pick(|s| s.x),
            y: pick(|s| s.y),
            r: pick(|s| s.r),
            variance: pick_ss(|s| s.variance),
            purity: pick_ss(|s| s.purity),
            ratio_statistic: ratio_estimate(&ratio_sets),
        });
    }
    SweepResult { rows, seed, version: version_tag(), beta, r }
}

fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn est_cols(e: &Option<Estimate>) -> [String; 2] {
    match e {
        Some(e) => [fmt17(e.mean), fmt17(e.stderr)],
        None => [String::new(), String::new()],
    }
}

pub fn summary_csv(result: &SweepResult) -> String {
    let mut s = String::from(
        "n,point,g,g_eff,realizations,failures,gap_mean,gap_stderr,x_mean,x_stderr,y_mean,y_stderr,\
         r_mean,r_stderr,variance_mean,variance_stderr,purity_mean,purity_stderr,ratio_stat_mean,ratio_stat_stderr\n",
    );
    for row in &result.rows {
        let mut cols = vec![
            row.n.to_string(),
            row.point.to_string(),
            fmt17(row.g),
            fmt17(row.g_eff),
            row.realizations.to_string(),
            row.failures.to_string(),
        ];
        for e in [&row.gap, &row.x, &row.y, &row.r, &row.variance, &row.purity, &row.ratio_statistic] {
            cols.extend(est_cols(e));
        }
        s.push_str(&cols.join(","));
        s.push('\n');
    }
    s
}

/// Write `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn read_entries(path: &Path, out: &mut Vec<JournalEntry>) -> Result<()> {
    if !path.exists() {
        return Ok(());
    }
    let reader = BufReader::new(File::open(path)?);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // a torn final line from an interrupted run is dropped and redone
        match serde_json::from_str::<JournalEntry>(&line) {
            Ok(e) => out.push(e),
            Err(e) => log::warn!("skipping unreadable journal line in {}: {e}", path.display()),
        }
    }
    Ok(())
}

fn read_canonical(dir: &Path, out: &mut Vec<JournalEntry>) -> Result<()> {
    for (name, ok) in [(RECORDS, true), (FAILURES, false)] {
        let path = dir.join(name);
        if !path.exists() {
            continue;
        }
        for line in BufReader::new(File::open(&path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(if ok {
                JournalEntry::Ok(serde_json::from_str(&line)?)
            } else {
                JournalEntry::Failed(serde_json::from_str(&line)?)
            });
        }
    }
    Ok(())
}

/// Records and failures of a finished sweep directory.
pub fn load_records(dir: &Path) -> Result<(Vec<RealizationRecord>, Vec<FailureRecord>)> {
    let mut entries = Vec::new();
    read_canonical(dir, &mut entries)?;
    read_entries(&dir.join(JOURNAL), &mut entries)?;
    Ok(split(entries))
}

fn split(entries: Vec<JournalEntry>) -> (Vec<RealizationRecord>, Vec<FailureRecord>) {
    let mut by_key: BTreeMap<Key, JournalEntry> = BTreeMap::new();
    for e in entries {
        by_key.insert(e.key(), e);
    }
    let mut recs = Vec::new();
    let mut fails = Vec::new();
    for (_, e) in by_key {
        match e {
            JournalEntry::Ok(r) => recs.push(r),
            JournalEntry::Failed(f) => fails.push(f),
        }
    }
    (recs, fails)
}

/// Results of a finished sweep directory.
pub fn load_result(dir: &Path) -> Result<SweepResult> {
    let cfg = SweepConfig::load(&dir.join(MANIFEST))?;
    let (recs, fails) = load_records(dir)?;
    if recs.is_empty() {
        return Err(Error::Missing(format!("no records in {}", dir.display())));
    }
    Ok(aggregate(&recs, &fails, cfg.seed, cfg.beta, cfg.r))
}

pub fn worker_count(config: &SweepConfig) -> usize {
    if let Some(n) = std::env::var(WORKERS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        if n > 0 {
            return n;
        }
    }
    if config.workers > 0 {
        config.workers
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub result: SweepResult,
    pub output: PathBuf,
    /// Realizations computed in this invocation.
    pub computed: usize,
    /// Realizations found already done on disk.
    pub skipped: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, Copy)]
struct Task {
    n: usize,
    point: usize,
    value: f64,
    realization: u64,
}

/// Run (or resume) a sweep and write its canonical output files.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    config.validate()?;
    let dir = config.output.clone();
    fs::create_dir_all(&dir)?;
    let manifest = config.to_toml_string()?;
    let manifest_path = dir.join(MANIFEST);
    if manifest_path.exists() {
        let existing = SweepConfig::load(&manifest_path)?;
        if !existing.same_sweep(config)? {
            return Err(Error::Config(format!("{} holds a sweep with a different configuration", dir.display())));
        }
    } else {
        write_atomic(&manifest_path, manifest.as_bytes())?;
    }

    let mut done_entries = Vec::new();
    read_canonical(&dir, &mut done_entries)?;
    read_entries(&dir.join(JOURNAL), &mut done_entries)?;
    let done: BTreeSet<Key> = done_entries.iter().map(|e| e.key()).collect();

    let grid = config.grid.values()?;
    let mut tasks = Vec::new();
    for &n in &config.n_list {
        for (point, &value) in grid.iter().enumerate() {
            for k in 0..config.realizations as u64 {
                if !done.contains(&(n, point, k)) {
                    tasks.push(Task { n, point, value, realization: k });
                }
            }
        }
    }
    let skipped = done.len();
    let computed = tasks.len();
    let opts = RealizationOptions {
        spectrum: config.records(Observable::Spectrum),
        steady: config.records(Observable::Steady),
        store_eigenvalues: config.store_eigenvalues,
    };

    let journal_path = dir.join(JOURNAL);
    let (tx, rx) = mpsc::channel::<JournalEntry>();
    let writer = {
        let path = journal_path.clone();
        std::thread::spawn(move || -> Result<Vec<JournalEntry>> {
            let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
            let mut got = Vec::new();
            for entry in rx {
                let mut line = serde_json::to_string(&entry)?;
                line.push('\n');
                file.write_all(line.as_bytes())?;
                file.flush()?;
                got.push(entry);
            }
            file.sync_all()?;
            Ok(got)
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count(config))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        tasks.par_iter().for_each_with(tx, |tx, t| {
            let entry = run_task(config, t, opts);
            if let JournalEntry::Failed(f) = &entry {
                log::warn!("N={} point={} realization={} failed: {}", f.n, f.point, f.realization, f.message);
            }
            // the writer only disappears on an I/O error, reported below
            let _ = tx.send(entry);
        });
    });
    let new_entries = writer.join().map_err(|_| Error::Io(std::io::Error::other("journal writer panicked")))??;

    done_entries.extend(new_entries);
    let (records, failures) = split(done_entries);
    let mut rec_lines = String::new();
    for r in &records {
        rec_lines.push_str(&serde_json::to_string(r)?);
        rec_lines.push('\n');
    }
    let mut fail_lines = String::new();
    for f in &failures {
        fail_lines.push_str(&serde_json::to_string(f)?);
        fail_lines.push('\n');
    }
    let result = aggregate(&records, &failures, config.seed, config.beta, config.r);
    write_atomic(&dir.join(RECORDS), rec_lines.as_bytes())?;
    write_atomic(&dir.join(FAILURES), fail_lines.as_bytes())?;
    write_atomic(&dir.join(SUMMARY), summary_csv(&result).as_bytes())?;
    if journal_path.exists() {
        fs::remove_file(&journal_path)?;
    }
    Ok(SweepOutcome { failed: failures.len(), result, output: dir, computed, skipped })
}

fn run_task(config: &SweepConfig, t: &Task, opts: RealizationOptions) -> JournalEntry {
    let seed = family_seed(config.seed, t.n, config.beta, config.r);
    let params = match config.params(t.n, t.value) {
        Ok(p) => p.with_seed(seed, t.realization),
        Err(e) => return failure(t, seed, f64::NAN, &e),
    };
    match run_realization(&params, t.point, opts) {
        Ok(rec) => JournalEntry::Ok(rec),
        Err(e) => failure(t, seed, params.g, &e),
    }
}

fn failure(t: &Task, seed: u64, g: f64, e: &Error) -> JournalEntry {
    let class = match e.class() {
        ErrorClass::Usage => "usage",
        ErrorClass::Numerical => "numerical",
        ErrorClass::Io => "io",
    };
    JournalEntry::Failed(FailureRecord {
        n: t.n,
        point: t.point,
        realization: t.realization,
        seed,
        g,
        class: class.into(),
        message: e.to_string(),
    })
}
