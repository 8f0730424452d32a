//! Command-line surface.
//!
//! `greedy`, `anneal`, `two-stage` and `sweep` read a problem file; `fti` and
//! `rects` read a result file written by one of the others.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::anneal::{AnnealParams, CostWeights, FtTerm};
use crate::error::{Error, Result};
use crate::fault::coverage_report;
use crate::io::{
    read_result, render_ascii, render_layout, to_json, CoverageRecord, RectsRecord, ResultRecord,
    RunParameters, SweepRecord,
};
use crate::pipeline::{beta_sweep, greedy_baseline, optimize_area, optimize_two_stage};
use crate::placement::Placement;
use crate::problem::{load_problem, ProblemInstance};

/// Fault-tolerance weight used by `two-stage` when `--beta` is absent.
pub const DEFAULT_TWO_STAGE_BETA: f64 = 30.0;

/// Weights swept by `sweep` when `--betas` is absent.
pub const DEFAULT_BETAS: [f64; 6] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Greedy,
    Anneal,
    TwoStage,
    Sweep,
    Fti,
    Rects,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Greedy => "greedy",
            CommandKind::Anneal => "anneal",
            CommandKind::TwoStage => "two-stage",
            CommandKind::Sweep => "sweep",
            CommandKind::Fti => "fti",
            CommandKind::Rects => "rects",
        }
    }
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input_path: PathBuf,
    /// `None` writes to standard output.
    pub output_path: Option<PathBuf>,
    pub render_path: Option<PathBuf>,
    pub ascii: bool,
    pub params: AnnealParams,
    pub weights: CostWeights,
    pub t_ltsa: Option<f64>,
    pub betas: Vec<f64>,
    pub max_rows: Option<u32>,
    pub max_cols: Option<u32>,
}

#[derive(Debug, Parser)]
#[command(
    name = "biochip-place",
    version,
    about = "Module placement with fault-tolerance optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Largest-first greedy placement
    Greedy(Flags),
    /// Area-only simulated annealing
    Anneal(Flags),
    /// Area annealing followed by low-temperature fault-tolerance annealing
    TwoStage(Flags),
    /// Two-stage runs over a list of fault-tolerance weights
    Sweep(Flags),
    /// Coverage map of a result file
    Fti(Flags),
    /// Maximal empty rectangles for every module of a result file
    Rects(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// Problem file, or a result file for `fti` and `rects`
    #[arg(long)]
    input: PathBuf,
    /// Result file (standard output if omitted)
    #[arg(long)]
    output: Option<PathBuf>,
    /// SVG drawing of the layout
    #[arg(long)]
    render: Option<PathBuf>,
    /// Print a text grid of the layout to standard error
    #[arg(long)]
    ascii: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10_000.0)]
    t_initial: f64,
    #[arg(long, default_value_t = 0.9)]
    cooling: f64,
    /// Iterations per module per temperature
    #[arg(long, default_value_t = 400)]
    na: u32,
    /// Probability of a single-module move
    #[arg(long, default_value_t = 0.75)]
    p_single: f64,
    /// Initial window span in cells (default: t-initial rounded up)
    #[arg(long)]
    window_initial: Option<u32>,
    #[arg(long, default_value_t = 1)]
    window_min: u32,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated weights for `sweep`
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Overlap penalty weight (default: twice alpha times the largest module area)
    #[arg(long)]
    lambda: Option<f64>,
    /// Quantity weighted by beta: `index` (k / cells) or `count` (k)
    #[arg(long, default_value = "index", value_parser = ["index", "count"])]
    ft_term: String,
    /// Starting temperature of the second stage (default: t-initial / 100)
    #[arg(long)]
    t_ltsa: Option<f64>,
    #[arg(long)]
    max_rows: Option<u32>,
    #[arg(long)]
    max_cols: Option<u32>,
}

/// Parses and validates `argv` (including the program name).
pub fn parse_cli<I, T>(argv: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (command, f) = match cli.command {
        Cmd::Greedy(f) => (CommandKind::Greedy, f),
        Cmd::Anneal(f) => (CommandKind::Anneal, f),
        Cmd::TwoStage(f) => (CommandKind::TwoStage, f),
        Cmd::Sweep(f) => (CommandKind::Sweep, f),
        Cmd::Fti(f) => (CommandKind::Fti, f),
        Cmd::Rects(f) => (CommandKind::Rects, f),
    };
    let params = AnnealParams {
        t_initial: f.t_initial,
        cooling_alpha: f.cooling,
        iters_per_module: f.na,
        p_single_move: f.p_single,
        window_initial: f.window_initial,
        window_min: f.window_min,
        rng_seed: f.seed,
    };
    let beta_default = if command == CommandKind::TwoStage {
        DEFAULT_TWO_STAGE_BETA
    } else {
        0.0
    };
    let weights = CostWeights {
        alpha_area: f.alpha,
        beta_ft: f.beta.unwrap_or(beta_default),
        lambda_overlap: f.lambda,
        ft_term: if f.ft_term == "count" {
            FtTerm::Count
        } else {
            FtTerm::Index
        },
    };
    let usage = |e: Error| Cli::command().error(ErrorKind::ValueValidation, e.to_string());
    params.validate().map_err(usage)?;
    weights.validate().map_err(usage)?;
    if command == CommandKind::TwoStage && (weights.beta_ft.is_nan() || weights.beta_ft <= 0.0) {
        return Err(usage(Error::InvalidParameter {
            name: "beta",
            reason: "two-stage needs a positive value".into(),
        }));
    }
    if let Some(t) = f.t_ltsa {
        if !(t.is_finite() && t > 0.0) {
            return Err(usage(Error::InvalidParameter {
                name: "t-ltsa",
                reason: format!("must be positive, got {t}"),
            }));
        }
    }
    let betas = f.betas.unwrap_or_else(|| DEFAULT_BETAS.to_vec());
    if let Some(b) = betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
        return Err(usage(Error::InvalidParameter {
            name: "betas",
            reason: format!("every value must be positive, got {b}"),
        }));
    }
    if f.max_rows == Some(0) || f.max_cols == Some(0) {
        return Err(usage(Error::InvalidParameter {
            name: "max-rows/max-cols",
            reason: "must be at least 1".into(),
        }));
    }
    Ok(RunConfig {
        command,
        input_path: f.input,
        output_path: f.output,
        render_path: f.render,
        ascii: f.ascii,
        params,
        weights,
        t_ltsa: f.t_ltsa,
        betas,
        max_rows: f.max_rows,
        max_cols: f.max_cols,
    })
}

/// Process exit status for a failed run.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Infeasible { .. } | Error::NoFeasiblePlacement | Error::BoundsTooTight { .. } => 1,
        Error::Io(_) => 3,
        _ => 2,
    }
}

fn load_instance(cfg: &RunConfig) -> Result<Arc<ProblemInstance>> {
    let file = File::open(&cfg.input_path)?;
    let mut inst = load_problem(BufReader::new(file))?;
    if cfg.max_rows.is_some() || cfg.max_cols.is_some() {
        let rows = cfg.max_rows.unwrap_or(inst.grid.rows_max);
        let cols = cfg.max_cols.unwrap_or(inst.grid.cols_max);
        inst = inst.with_bounds(rows, cols)?;
    }
    Ok(Arc::new(inst))
}

fn run_parameters(cfg: &RunConfig) -> RunParameters {
    let (anneal, weights, t_ltsa) = match cfg.command {
        CommandKind::Greedy | CommandKind::Fti | CommandKind::Rects => (None, None, None),
        CommandKind::Anneal => (
            Some(cfg.params.clone()),
            Some(CostWeights {
                beta_ft: 0.0,
                ..cfg.weights
            }),
            None,
        ),
        CommandKind::TwoStage | CommandKind::Sweep => {
            (Some(cfg.params.clone()), Some(cfg.weights), cfg.t_ltsa)
        }
    };
    RunParameters {
        anneal,
        weights,
        t_ltsa,
    }
}

fn draw(cfg: &RunConfig, p: &Placement) -> Result<()> {
    if cfg.render_path.is_none() && !cfg.ascii {
        return Ok(());
    }
    let report = coverage_report(p)?;
    if let Some(path) = &cfg.render_path {
        render_layout(p, Some(&report), path)?;
    }
    if cfg.ascii {
        eprint!("{}", render_ascii(p, Some(&report)));
    }
    Ok(())
}

/// Executes `cfg`, writing the result document to the output path or to
/// `stdout`.
pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let text = match cfg.command {
        CommandKind::Greedy | CommandKind::Anneal | CommandKind::TwoStage => {
            let inst = load_instance(cfg)?;
            let (result, seed) = match cfg.command {
                CommandKind::Greedy => (greedy_baseline(inst)?, None),
                CommandKind::Anneal => (
                    optimize_area(inst, &cfg.params, &cfg.weights)?,
                    Some(cfg.params.rng_seed),
                ),
                _ => (
                    optimize_two_stage(inst, &cfg.params, &cfg.weights, cfg.t_ltsa)?.1,
                    Some(cfg.params.rng_seed),
                ),
            };
            log::info!(
                "{}: {}x{} = {} cells, k = {}, fti = {:.4}",
                cfg.command.name(),
                result.rows_used,
                result.cols_used,
                result.cell_count,
                result.k,
                result.fti
            );
            draw(cfg, &result.placement)?;
            let record = ResultRecord::new(cfg.command.name(), seed, run_parameters(cfg), &result);
            to_json(&record)
        }
        CommandKind::Sweep => {
            let inst = load_instance(cfg)?;
            let entries = beta_sweep(inst, &cfg.params, &cfg.weights, &cfg.betas, cfg.t_ltsa)?;
            let record = SweepRecord::new(cfg.params.rng_seed, run_parameters(cfg), &entries);
            log::info!("sweep:\n{}", record.table());
            if let Some(best) = entries.iter().max_by(|a, b| {
                a.result
                    .fti
                    .total_cmp(&b.result.fti)
                    .then(b.result.cell_count.cmp(&a.result.cell_count))
            }) {
                draw(cfg, &best.result.placement)?;
            }
            to_json(&record)
        }
        CommandKind::Fti => {
            let record: ResultRecord = read_result(&cfg.input_path)?;
            let p = record.placement()?;
            let report = coverage_report(&p)?;
            draw(cfg, &p)?;
            to_json(&CoverageRecord::new(&report))
        }
        CommandKind::Rects => {
            let record: ResultRecord = read_result(&cfg.input_path)?;
            let p = record.placement()?;
            draw(cfg, &p)?;
            to_json(&RectsRecord::new(&p)?)
        }
    };
    match &cfg.output_path {
        Some(path) => std::fs::write(path, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Entry point shared by the binary: parses `argv`, runs, and returns the
/// exit status.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cfg = match parse_cli(argv) {
        Ok(cfg) => cfg,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match run(&cfg, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
