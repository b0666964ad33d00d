//! The `tcbo` command line: `gen`, `solve` and `compare`.
//!
//! Exit codes are 0 on success, 2 for usage or configuration errors (bad
//! flags, unreadable models, invalid algorithm/structure combinations) and
//! 3 for structural or runtime solver errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::{load_model, save_model, DiscreteModel, SpinGlassParams};
use crate::region_graph::{build_grid_chain_decomposition, build_pair_singleton, build_star_edge, infer_grid_shape};
use crate::solvers::{run_heskes, run_mplp, run_msd, run_trw_forward, run_trws, Algorithm, SolverConfig, SolverTrace};
use crate::trace::{write_records_csv, write_trace_json, TraceDocument};
use crate::{Mode, TreeDecomposition};

/// Bound increases larger than this count as monotonicity violations in
/// `compare` verdicts.
pub const MONOTONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    File(PathBuf),
    SpinGlass(SpinGlassParams),
}

impl ModelSource {
    pub fn load(&self) -> crate::Result<DiscreteModel> {
        match self {
            ModelSource::File(path) => load_model(path),
            ModelSource::SpinGlass(p) => p.generate(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Structure {
    PairSingleton { c_pair: f64, c_singleton: f64 },
    StarEdge,
    GridChains { rows: usize, cols: usize },
    SpanningForest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Json,
}

/// Everything needed to reproduce one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub model: ModelSource,
    pub algorithm: Algorithm,
    pub structure: Structure,
    pub config: SolverConfig,
    pub output: Option<PathBuf>,
    pub format: TraceFormat,
}

impl RunSpec {
    /// Rejects algorithm/structure combinations no solver defines.
    pub fn validate(&self) -> crate::Result<()> {
        self.config.validate()?;
        let ok = match self.algorithm {
            Algorithm::Msd => matches!(self.structure, Structure::PairSingleton { .. }),
            Algorithm::Heskes => matches!(self.structure, Structure::PairSingleton { .. } | Structure::StarEdge),
            Algorithm::Mplp => self.structure == Structure::StarEdge,
            Algorithm::Trws | Algorithm::TrwForward => {
                matches!(self.structure, Structure::GridChains { .. } | Structure::SpanningForest)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("{} does not run on {:?}", self.algorithm, self.structure)))
        }
    }
}

/// Default structure of each algorithm: pair/singleton with unit counting
/// numbers for MSD; for Heskes, pair/singleton with zero singleton counting
/// numbers in max mode and star/edge in sum mode; star/edge for MPLP; grid
/// chains for the TRW solvers.
pub fn default_structure(algorithm: Algorithm, mode: Mode, grid: Option<(usize, usize)>) -> Option<Structure> {
    Some(match algorithm {
        Algorithm::Msd => Structure::PairSingleton { c_pair: 1.0, c_singleton: 1.0 },
        Algorithm::Heskes if mode == Mode::Max => Structure::PairSingleton { c_pair: 1.0, c_singleton: 0.0 },
        Algorithm::Heskes | Algorithm::Mplp => Structure::StarEdge,
        Algorithm::Trws | Algorithm::TrwForward => {
            let (rows, cols) = grid?;
            Structure::GridChains { rows, cols }
        }
    })
}

/// Builds the requested structure and runs the solver.
pub fn execute(spec: &RunSpec, model: &DiscreteModel) -> crate::Result<SolverTrace> {
    spec.validate()?;
    let config = &spec.config;
    match spec.structure {
        Structure::PairSingleton { c_pair, c_singleton } => {
            let graph = build_pair_singleton(model, c_pair, c_singleton)?;
            match spec.algorithm {
                Algorithm::Msd => run_msd(&graph, model, config),
                _ => run_heskes(&graph, model, config),
            }
        }
        Structure::StarEdge => match spec.algorithm {
            Algorithm::Mplp => run_mplp(model, config),
            _ => run_heskes(&build_star_edge(model)?, model, config),
        },
        Structure::GridChains { .. } | Structure::SpanningForest => {
            let decomp = match spec.structure {
                Structure::GridChains { rows, cols } => build_grid_chain_decomposition(model, rows, cols)?,
                _ => TreeDecomposition::spanning_forest(model)?,
            };
            match spec.algorithm {
                Algorithm::Trws => run_trws(model, &decomp, config),
                _ => run_trw_forward(model, &decomp, config),
            }
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tcbo", version, about = "Convergent message passing with monotone bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random grid spin glass to a model file.
    Gen(GenArgs),
    /// Run one solver and write its per-sweep trace.
    Solve(SolveArgs),
    /// Run several solvers on one model and compare their bounds.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long)]
    rows: usize,
    #[arg(long)]
    cols: usize,
    /// Couplings are uniform in [-coupling, coupling).
    #[arg(long, default_value_t = 9.0)]
    coupling: f64,
    /// Fields are uniform in [-field, field).
    #[arg(long, default_value_t = 1.0)]
    field: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file in the tcbo-model format.
    model: Option<PathBuf>,
    /// Generate a spin glass of this shape instead of reading a file.
    #[arg(long, value_name = "RxC", conflicts_with = "model")]
    spin_glass: Option<String>,
    #[arg(long, default_value_t = 9.0, requires = "spin_glass")]
    coupling: f64,
    #[arg(long, default_value_t = 1.0, requires = "spin_glass")]
    field: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphChoice {
    PairSingleton,
    StarEdge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChainChoice {
    /// Horizontal and vertical grid chains.
    Grid,
    /// One spanning forest with unit edge weights.
    Single,
}

#[derive(Debug, Args)]
struct StructureArgs {
    /// Region graph for msd and heskes.
    #[arg(long, value_enum)]
    graph: Option<GraphChoice>,
    #[arg(long)]
    c_pair: Option<f64>,
    #[arg(long)]
    c_single: Option<f64>,
    /// Tree decomposition for trws and trw-forward.
    #[arg(long, value_enum)]
    chains: Option<ChainChoice>,
    /// Grid shape for `--chains grid`; inferred from the model when absent.
    #[arg(long, value_name = "RxC")]
    grid: Option<String>,
}

#[derive(Debug, Args)]
struct ConfigArgs {
    #[arg(long)]
    mode: Mode,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    bound_tol: f64,
    #[arg(long, default_value_t = 1e-6)]
    consistency_tol: f64,
    /// Seeds the spin-glass generator and the probe assignments.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    alg: Algorithm,
    #[command(flatten)]
    structure: StructureArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Trace file; the trace goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    format: TraceFormat,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    algs: Vec<Algorithm>,
    #[command(flatten)]
    structure: StructureArgs,
    #[command(flatten)]
    config: ConfigArgs,
    /// Wide CSV with one bound column per algorithm; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Solver(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Solver(e)
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(CliError::Solver(e)) => {
            eprintln!("error: {e}");
            3
        }
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), CliError> {
    let params = SpinGlassParams {
        rows: args.rows,
        cols: args.cols,
        coupling_half_width: args.coupling,
        field_half_width: args.field,
        seed: args.seed,
    };
    let model = params.generate().map_err(usage)?;
    save_model(&model, &args.out)?;
    println!("{}: {} vars, {} factors", args.out.display(), model.var_count(), model.factors().len());
    Ok(())
}

fn parse_shape(text: &str) -> Result<(usize, usize), CliError> {
    let (r, c) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| usage(format!("shape `{text}` is not of the form RxC")))?;
    let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| usage(format!("shape `{text}` is not of the form RxC")));
    Ok((parse(r)?, parse(c)?))
}

fn model_source(args: &ModelArgs, seed: u64) -> Result<ModelSource, CliError> {
    match (&args.model, &args.spin_glass) {
        (Some(path), None) => Ok(ModelSource::File(path.clone())),
        (None, Some(shape)) => {
            let (rows, cols) = parse_shape(shape)?;
            Ok(ModelSource::SpinGlass(SpinGlassParams {
                rows,
                cols,
                coupling_half_width: args.coupling,
                field_half_width: args.field,
                seed,
            }))
        }
        _ => Err(usage("give either a model file or --spin-glass RxC")),
    }
}

fn solver_config(args: &ConfigArgs) -> Result<SolverConfig, CliError> {
    let config = SolverConfig {
        mode: args.mode,
        max_iters: args.max_iters,
        bound_tol: args.bound_tol,
        consistency_tol: args.consistency_tol,
        seed: args.seed,
    };
    config.validate().map_err(usage)?;
    Ok(config)
}

/// Grid shape from `--grid`, the generator parameters, or the model itself.
fn grid_shape(args: &StructureArgs, source: &ModelSource, model: &DiscreteModel) -> Result<Option<(usize, usize)>, CliError> {
    if let Some(text) = &args.grid {
        return parse_shape(text).map(Some);
    }
    Ok(match source {
        ModelSource::SpinGlass(p) => Some((p.rows, p.cols)),
        ModelSource::File(_) => infer_grid_shape(model),
    })
}

fn resolve_structure(
    algorithm: Algorithm,
    mode: Mode,
    args: &StructureArgs,
    source: &ModelSource,
    model: &DiscreteModel,
    strict: bool,
) -> Result<Structure, CliError> {
    let trw = matches!(algorithm, Algorithm::Trws | Algorithm::TrwForward);
    if strict {
        let region_flags = args.graph.is_some() || args.c_pair.is_some() || args.c_single.is_some();
        let chain_flags = args.chains.is_some() || args.grid.is_some();
        if trw && region_flags {
            return Err(usage(format!("{algorithm} takes --chains/--grid, not region-graph flags")));
        }
        if !trw && chain_flags {
            return Err(usage(format!("{algorithm} takes region-graph flags, not --chains/--grid")));
        }
    }
    if trw {
        return match args.chains.unwrap_or(ChainChoice::Grid) {
            ChainChoice::Single => Ok(Structure::SpanningForest),
            ChainChoice::Grid => match grid_shape(args, source, model)? {
                Some((rows, cols)) => Ok(Structure::GridChains { rows, cols }),
                None => Err(Error::UnsupportedStructure("model is not a grid; use --chains single".into()).into()),
            },
        };
    }
    let default = default_structure(algorithm, mode, None).expect("region-graph algorithms have defaults");
    let structure = match args.graph {
        None if algorithm == Algorithm::Mplp => Structure::StarEdge,
        None => default,
        Some(GraphChoice::StarEdge) => Structure::StarEdge,
        Some(GraphChoice::PairSingleton) => match default {
            Structure::PairSingleton { .. } => default,
            _ => Structure::PairSingleton { c_pair: 1.0, c_singleton: 1.0 },
        },
    };
    match structure {
        Structure::PairSingleton { c_pair, c_singleton } => Ok(Structure::PairSingleton {
            c_pair: args.c_pair.unwrap_or(c_pair),
            c_singleton: args.c_single.unwrap_or(c_singleton),
        }),
        _ if strict && (args.c_pair.is_some() || args.c_single.is_some()) => {
            Err(usage("--c-pair/--c-single apply only to the pair-singleton graph"))
        }
        other => Ok(other),
    }
}

fn load(source: &ModelSource) -> Result<DiscreteModel, CliError> {
    source.load().map_err(usage)
}

fn open_output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| usage(format!("{}: {e}", p.display())))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let config = solver_config(&args.config)?;
    let source = model_source(&args.model, config.seed)?;
    let model = load(&source)?;
    let structure = resolve_structure(args.alg, config.mode, &args.structure, &source, &model, true)?;
    let spec = RunSpec {
        model: source,
        algorithm: args.alg,
        structure,
        config,
        output: args.out.clone(),
        format: args.format,
    };
    spec.validate().map_err(usage)?;
    let trace = execute(&spec, &model)?;
    let mut out = open_output(&args.out)?;
    match args.format {
        TraceFormat::Csv => write_records_csv(&trace.records, &mut out)?,
        TraceFormat::Json => write_trace_json(&TraceDocument { run: spec, trace: trace.clone() }, &mut out)?,
    }
    out.flush().map_err(Error::from)?;
    drop(out);
    let mut summary = format!(
        "{} {} bound={} sweeps={} termination={}",
        trace.algorithm,
        trace.mode,
        trace.final_bound(),
        trace.records.len() - 1,
        trace.termination
    );
    if let Some(d) = &trace.decoded {
        summary.push_str(&format!(" decoded_energy={}", d.energy));
    }
    if args.out.is_some() {
        println!("{summary}");
    } else {
        eprintln!("{summary}");
    }
    Ok(())
}

/// Summary of a multi-algorithm comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub final_bounds: Vec<f64>,
    /// Largest `|a − b| / max(|a|, |b|)` over pairs of final bounds.
    pub max_relative_gap: f64,
    /// Per algorithm, the sweeps where the bound rose by more than
    /// [`MONOTONE_TOL`].
    pub violations: Vec<Vec<usize>>,
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn compare_traces(labels: Vec<String>, traces: &[SolverTrace]) -> Comparison {
    let final_bounds: Vec<f64> = traces.iter().map(SolverTrace::final_bound).collect();
    let mut max_relative_gap: f64 = 0.0;
    for (k, &a) in final_bounds.iter().enumerate() {
        for &b in &final_bounds[k + 1..] {
            max_relative_gap = max_relative_gap.max(relative_gap(a, b));
        }
    }
    let violations = traces.iter().map(|t| t.increases(MONOTONE_TOL)).collect();
    Comparison { labels, final_bounds, max_relative_gap, violations }
}

/// Wide CSV: `sweep` then one bound column per trace, blank once a trace has
/// stopped.
pub fn write_wide_csv<W: Write>(labels: &[String], traces: &[SolverTrace], out: W) -> crate::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::InvalidInput(e.to_string());
    let mut header = vec!["sweep".to_string()];
    header.extend(labels.iter().cloned());
    w.write_record(&header).map_err(to_err)?;
    let rows = traces.iter().map(|t| t.records.len()).max().unwrap_or(0);
    for k in 0..rows {
        let mut row = vec![k.to_string()];
        row.extend(traces.iter().map(|t| t.records.get(k).map_or(String::new(), |r| r.bound.to_string())));
        w.write_record(&row).map_err(to_err)?;
    }
    w.flush()?;
    Ok(())
}

fn thread_cap() -> usize {
    std::env::var("TCBO_THREADS").ok().and_then(|v| v.parse().ok()).filter(|&n| n > 0).unwrap_or(1)
}

fn cmd_compare(args: CompareArgs) -> Result<(), CliError> {
    if args.algs.len() < 2 {
        return Err(usage("compare needs at least two algorithms"));
    }
    let config = solver_config(&args.config)?;
    let source = model_source(&args.model, config.seed)?;
    let model = load(&source)?;
    let mut specs = Vec::with_capacity(args.algs.len());
    for &algorithm in &args.algs {
        let structure = resolve_structure(algorithm, config.mode, &args.structure, &source, &model, false)?;
        let spec = RunSpec { model: source.clone(), algorithm, structure, config, output: None, format: TraceFormat::Csv };
        spec.validate().map_err(usage)?;
        specs.push(spec);
    }
    let threads = thread_cap().min(specs.len());
    let mut results: Vec<Option<crate::Result<SolverTrace>>> = (0..specs.len()).map(|_| None).collect();
    for (specs, slots) in specs.chunks(threads).zip(results.chunks_mut(threads)) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = specs.iter().map(|spec| scope.spawn(|| execute(spec, &model))).collect();
            for (slot, h) in slots.iter_mut().zip(handles) {
                *slot = Some(h.join().expect("solver thread panicked"));
            }
        });
    }
    let traces: Vec<SolverTrace> = results.into_iter().map(|r| r.expect("every slot filled")).collect::<crate::Result<_>>()?;

    let mut labels: Vec<String> = Vec::with_capacity(traces.len());
    for t in &traces {
        let base = t.algorithm.name().to_string();
        let copies = labels.iter().filter(|l| l.split('#').next() == Some(&base)).count();
        labels.push(if copies == 0 { base } else { format!("{base}#{}", copies + 1) });
    }
    let mut out = open_output(&args.out)?;
    write_wide_csv(&labels, &traces, &mut out)?;
    out.flush().map_err(Error::from)?;
    drop(out);

    let cmp = compare_traces(labels, &traces);
    let mut report: Vec<String> = Vec::new();
    for (k, label) in cmp.labels.iter().enumerate() {
        let verdict = if cmp.violations[k].is_empty() {
            "monotone".to_string()
        } else {
            let sweeps: Vec<String> = cmp.violations[k].iter().map(|s| s.to_string()).collect();
            format!("non-monotone (increases at sweeps {})", sweeps.join(", "))
        };
        report.push(format!("{label}: final bound {} after {} sweeps, {verdict}", cmp.final_bounds[k], traces[k].records.len() - 1));
    }
    report.push(format!("max relative gap: {:e}", cmp.max_relative_gap));
    for line in report {
        if args.out.is_some() {
            println!("{line}");
        } else {
            eprintln!("{line}");
        }
    }
    Ok(())
}
