use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use randlindblad::ensembles::{Beta, ModelParams, Realization};
use randlindblad::error::{Error, ErrorClass, Result};
use randlindblad::harness::{
    self, curves_from, load_records, load_result, optimize_exponents, run_sweep, steady_record, GridParameter, GridSpec,
    Observable, Preset, Spacing, SweepConfig,
};
use randlindblad::liouvillian::{build_liouvillian, write_dump};
use randlindblad::oracles::{
    chi2_entry_law, mp_convolution_density, ratio_reference, semicircle_self_convolution, Density, MarchenkoPasturLaw,
    MpConvolution, RatioKind, SemicircleLaw,
};
use randlindblad::spectra::{diagonalize, summarize_params};
use randlindblad::steadystate::solve_steady_state;

#[derive(Parser)]
#[command(name = "randlindblad", version, about = "Spectra and steady states of random Lindblad generators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample one instance and dump its superoperator
    Build {
        #[command(flatten)]
        instance: Instance,
        /// Binary dump file
        #[arg(long)]
        out: PathBuf,
    },
    /// Diagonalize one instance; print the summary, optionally dump eigenvalues
    Spectrum {
        #[command(flatten)]
        instance: Instance,
        /// JSON file receiving eigenvalues and summary
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady-state report of one instance
    Steady {
        #[command(flatten)]
        instance: Instance,
    },
    /// Run or resume an ensemble sweep
    Sweep(SweepArgs),
    /// Tabulate a reference law as CSV
    Oracle(OracleArgs),
    /// Fit collapse exponents on a finished sweep
    Collapse {
        dir: PathBuf,
        #[arg(long, value_enum, default_value = "x")]
        observable: CollapseObservable,
        #[arg(long, default_value_t = 0.5)]
        nu: f64,
        #[arg(long, default_value_t = 0.0)]
        kappa: f64,
        /// Keep only rows with g_eff in [min, max]
        #[arg(long, num_args = 2, value_names = ["MIN", "MAX"])]
        window: Option<Vec<f64>>,
    },
    /// Write plot data for a preset
    Report {
        dir: PathBuf,
        #[arg(long)]
        preset: String,
        /// Output directory (defaults to <dir>/report)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Instance {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    beta: u8,
    #[arg(long, default_value_t = 1)]
    r: usize,
    /// Bare coupling g
    #[arg(long, conflicts_with = "geff", required_unless_present = "geff")]
    g: Option<f64>,
    /// Effective coupling (2 r beta N)^(1/4) g
    #[arg(long)]
    geff: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    realization: u64,
}

impl Instance {
    fn params(&self) -> Result<ModelParams> {
        let beta = Beta::try_from(self.beta)?;
        let p = match (self.g, self.geff) {
            (Some(g), _) => ModelParams::new(self.n, beta, self.r, g)?,
            (None, Some(ge)) => ModelParams::from_geff(self.n, beta, self.r, ge)?,
            (None, None) => return Err(Error::InvalidParams("one of --g, --geff is required".into())),
        };
        Ok(p.with_seed(self.seed, self.realization))
    }
}

#[derive(Args)]
struct SweepArgs {
    /// TOML configuration; flags below override nothing when it is given
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long, default_value_t = 2)]
    beta: u8,
    #[arg(long, default_value_t = 2)]
    r: usize,
    #[arg(long)]
    geff_min: Option<f64>,
    #[arg(long)]
    geff_max: Option<f64>,
    #[arg(long, default_value_t = 1)]
    geff_points: usize,
    #[arg(long, default_value_t = 10)]
    realizations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip the full diagonalization; steady state only
    #[arg(long)]
    steady_only: bool,
    #[arg(long)]
    store_eigenvalues: bool,
}

impl SweepArgs {
    fn config(&self) -> Result<SweepConfig> {
        if let Some(path) = &self.config {
            return SweepConfig::load(path);
        }
        let need = |what: &str| Error::InvalidParams(format!("--{what} is required without --config"));
        let min = self.geff_min.ok_or_else(|| need("geff-min"))?;
        let max = self.geff_max.unwrap_or(min);
        let cfg = SweepConfig {
            n_list: self.n_list.clone().ok_or_else(|| need("n-list"))?,
            beta: Beta::try_from(self.beta)?,
            r: self.r,
            grid: GridSpec {
                parameter: GridParameter::Geff,
                min: Some(min),
                max: Some(max),
                points: Some(self.geff_points),
                spacing: Spacing::Log,
                values: None,
            },
            realizations: self.realizations,
            seed: self.seed,
            observables: if self.steady_only {
                vec![Observable::Steady]
            } else {
                vec![Observable::Spectrum, Observable::Steady]
            },
            store_eigenvalues: self.store_eigenvalues,
            workers: 0,
            output: self.out.clone().ok_or_else(|| need("out"))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Law {
    Semicircle,
    SemicircleConvolution,
    Mp,
    MpConvolution,
    Chi2,
    RatioPoisson,
    RatioGue,
    RatioGoe,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(value_enum)]
    law: Law,
    #[arg(long, allow_negative_numbers = true)]
    min: f64,
    #[arg(long, allow_negative_numbers = true)]
    max: f64,
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Semicircle endpoint; defaults to sqrt(2 beta N)
    #[arg(long)]
    e_star: Option<f64>,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    beta: u8,
    /// Channel count (Marchenko-Pastur laws)
    #[arg(long, default_value_t = 1.0)]
    r: f64,
    /// Degrees of freedom (chi-square law)
    #[arg(long, default_value_t = 2.0)]
    k: f64,
    /// Scale parameter g (chi-square law)
    #[arg(long, default_value_t = 1.0)]
    g: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CollapseObservable {
    X,
    Gap,
    Variance,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn oracle(args: &OracleArgs) -> Result<()> {
    if args.points < 2 || !(args.max > args.min) {
        return Err(Error::InvalidParams("need --max > --min and at least 2 points".into()));
    }
    let grid: Vec<f64> = (0..args.points)
        .map(|i| args.min + (args.max - args.min) * i as f64 / (args.points - 1) as f64)
        .collect();
    let e_star = match args.e_star {
        Some(e) => e,
        None => SemicircleLaw::for_hamiltonian(args.n, Beta::try_from(args.beta)?).e_star,
    };
    let eval: Box<dyn Fn(f64) -> Result<f64>> = match args.law {
        Law::Semicircle => {
            let w = SemicircleLaw::new(e_star)?;
            Box::new(move |x| Ok(w.pdf(x)))
        }
        Law::SemicircleConvolution => {
            let c = semicircle_self_convolution(e_star)?;
            Box::new(move |x| c.density(x))
        }
        Law::Mp => {
            let m = MarchenkoPasturLaw::new(args.r)?;
            Box::new(move |x| Ok(m.pdf(x)))
        }
        Law::MpConvolution => {
            let c = if args.r == 1.0 { mp_convolution_density() } else { MpConvolution::new(args.r)? };
            Box::new(move |x| c.density(x))
        }
        Law::Chi2 => {
            let l = chi2_entry_law(args.k, args.g)?;
            Box::new(move |x| Ok(l.pdf(x)))
        }
        Law::RatioPoisson | Law::RatioGue | Law::RatioGoe => {
            let kind = match args.law {
                Law::RatioPoisson => RatioKind::Poisson,
                Law::RatioGue => RatioKind::GueSurmise,
                _ => RatioKind::GoeSurmise,
            };
            let l = ratio_reference(kind)?;
            Box::new(move |x| Ok(l.pdf(x)))
        }
    };
    let table: Vec<(f64, f64)> = grid.iter().map(|&x| Ok((x, eval(x)?))).collect::<Result<_>>()?;
    let mut out = output(&args.out)?;
    randlindblad::oracles::write_table(&table, &mut out)?;
    out.flush()?;
    Ok(())
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build { instance, out } => {
            let p = instance.params()?;
            let real = Realization::sample(&p)?;
            let l = build_liouvillian(&real.hamiltonian, &real.jumps)?.with_params(p);
            let mut w = BufWriter::new(File::create(&out)?);
            write_dump(&l, &mut w)?;
            w.flush()?;
            print_json(&json!({ "n": p.n, "dimension": p.n * p.n, "norm": l.frobenius_norm(), "out": out }))
        }
        Command::Spectrum { instance, out } => {
            let p = instance.params()?;
            let real = Realization::sample(&p)?;
            let l = build_liouvillian(&real.hamiltonian, &real.jumps)?;
            let s = diagonalize(&l)?;
            let summary = summarize_params(&s, &p);
            if let Some(path) = out {
                let ev: Vec<[f64; 2]> = s.eigenvalues.iter().map(|z| [z.re, z.im]).collect();
                let mut w = BufWriter::new(File::create(path)?);
                serde_json::to_writer(&mut w, &json!({ "params": p, "summary": summary, "eigenvalues": ev }))?;
                w.flush()?;
            }
            print_json(&json!({ "params": p, "summary": summary, "max_residual": s.max_residual }))
        }
        Command::Steady { instance } => {
            let p = instance.params()?;
            let real = Realization::sample(&p)?;
            let l = build_liouvillian(&real.hamiltonian, &real.jumps)?;
            let ss = solve_steady_state(&l)?;
            let rec = steady_record(&ss)?;
            print_json(&json!({ "params": p, "residual": ss.residual, "steady": rec }))
        }
        Command::Sweep(args) => {
            let cfg = args.config()?;
            let outcome = run_sweep(&cfg)?;
            print_json(&json!({
                "output": outcome.output,
                "computed": outcome.computed,
                "skipped": outcome.skipped,
                "failed": outcome.failed,
                "rows": outcome.result.rows.len(),
            }))
        }
        Command::Oracle(args) => oracle(&args),
        Command::Collapse { dir, observable, nu, kappa, window } => {
            let result = load_result(&dir)?;
            let pick: fn(&harness::SummaryRow) -> Option<f64> = match observable {
                CollapseObservable::X => |r| r.x.map(|e| e.mean),
                CollapseObservable::Gap => |r| r.gap.map(|e| e.mean),
                CollapseObservable::Variance => |r| r.variance.map(|e| e.mean),
            };
            let mut curves = curves_from(&result, pick);
            if let Some(w) = &window {
                for c in curves.iter_mut() {
                    c.points.retain(|(g, _)| *g >= w[0] && *g <= w[1]);
                }
            }
            let fit = optimize_exponents(&curves, result.beta, (nu, kappa))?;
            print_json(&json!({ "fit": fit, "window": window, "sizes": result.sizes() }))
        }
        Command::Report { dir, preset, out } => {
            let preset: Preset = preset.parse()?;
            let result = load_result(&dir)?;
            let (records, _) = load_records(&dir)?;
            let out = out.unwrap_or_else(|| dir.join("report"));
            let written = harness::report(&result, &records, preset, &out)?;
            print_json(&json!({ "written": written }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.class() {
                ErrorClass::Usage => 1,
                ErrorClass::Numerical => 2,
                ErrorClass::Io => 3,
            })
        }
    }
}
