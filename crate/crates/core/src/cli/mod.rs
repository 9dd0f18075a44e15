//! Command line front end.
//!
//! Exit codes: 0 success, 2 configuration or parse error, 3 runtime failure.

pub mod config;
pub mod pipeline;

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

pub use config::{DataConfig, ExperimentConfig, Sizing};
pub use pipeline::{Experiment, RunOutcome, StageError};

use crate::circuit::{circuit_step, HardCircuit, MonitorState};
use crate::error::Error;
use crate::stl::{depth_bound, horizon, parse_formula, state_complexity, Pipeline};
use crate::ternary::{enumerate_vocabulary, Trit, VocabularyKind, VocabularyTag};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "rdtlgn", version, about = "Ternary logic gate networks as causal STL monitors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PipelineArg {
    Ctq,
    Qtc,
}

impl From<PipelineArg> for Pipeline {
    fn from(p: PipelineArg) -> Self {
        match p {
            PipelineArg::Ctq => Pipeline::Ctq,
            PipelineArg::Qtc => Pipeline::Qtc,
        }
    }
}

#[derive(clap::Args, Debug)]
pub struct ConfigArgs {
    /// Experiment config (JSON). Defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate, balance, split and save the dataset.
    GenData(ConfigArgs),
    /// Print the state complexity, depth bound and horizon of a formula.
    Bound { formula: String },
    /// Print vocabulary sizes; optionally write gate id lists.
    AuditGates {
        #[arg(long)]
        exclude_constants: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the soft cell on the saved training split.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        pipeline: Option<PipelineArg>,
    },
    /// Distill a trained cell into a circuit.
    Harden {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum)]
        pipeline: Option<PipelineArg>,
    },
    /// Evaluate saved circuits and baselines on the evaluation split.
    Eval(ConfigArgs),
    /// Stream one line of predicate trits per timestep from stdin and print
    /// the verdict trits.
    Monitor {
        #[arg(long)]
        circuit: PathBuf,
    },
    /// Run every stage.
    Run(ConfigArgs),
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn classify(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::InvalidInterval { .. } | Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: classify(&e), message: e.to_string() }
    }
}

impl From<StageError> for Failure {
    fn from(e: StageError) -> Self {
        Failure { code: classify(&e.source), message: e.to_string() }
    }
}

type CliResult = std::result::Result<(), Failure>;

pub fn load_config(args: &ConfigArgs) -> std::result::Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(p) => {
            let bytes = fs::read(p).map_err(|e| Failure { code: EXIT_CONFIG, message: format!("{}: {e}", p.display()) })?;
            ExperimentConfig::from_json(&bytes)?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `{"B", "depth_bound", "horizon"}` for a formula.
pub fn bound_json(formula: &str) -> crate::Result<serde_json::Value> {
    let phi = parse_formula(formula)?;
    Ok(json!({ "B": state_complexity(&phi), "depth_bound": depth_bound(&phi), "horizon": horizon(&phi) }))
}

/// Vocabulary sizes keyed by name.
pub fn audit_gates(exclude_constants: bool) -> BTreeMap<&'static str, Vec<crate::GateId>> {
    let mut m = BTreeMap::new();
    for (name, tag) in [("NM", VocabularyTag::Nm), ("IM", VocabularyTag::Im), ("NM_AND_IM", VocabularyTag::NmAndIm)] {
        m.insert(name, enumerate_vocabulary(VocabularyKind::new(tag, exclude_constants)));
    }
    if !exclude_constants {
        m.insert("NM_AND_IM_nonconst", enumerate_vocabulary(VocabularyKind::new(VocabularyTag::NmAndIm, true)));
    }
    m
}

fn parse_trit_line(line: &str, p: usize) -> std::result::Result<Vec<Trit>, Failure> {
    let vals: Vec<Trit> = line
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<i8>().ok().and_then(Trit::from_i8))
        .collect::<Option<_>>()
        .ok_or_else(|| Failure { code: EXIT_CONFIG, message: format!("not a trit line: {line:?}") })?;
    if vals.len() != p {
        return Err(Failure { code: EXIT_CONFIG, message: format!("expected {p} trits, got {}", vals.len()) });
    }
    Ok(vals)
}

/// Streaming monitor loop: one input line in, one verdict line out.
pub fn monitor_stream(c: &HardCircuit, input: impl BufRead, mut output: impl Write) -> CliResult {
    let io = |e: std::io::Error| Failure { code: EXIT_RUNTIME, message: e.to_string() };
    let mut st = MonitorState::bottom(c.config().state);
    for line in input.lines() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        let p = parse_trit_line(&line, c.config().predicates)?;
        let (next, y) = circuit_step(c, &p, &st)?;
        st = next;
        let text: Vec<String> = y.iter().map(|t| t.to_string()).collect();
        writeln!(output, "{}", text.join(" ")).map_err(io)?;
    }
    output.flush().map_err(io)
}

fn print_json(v: &impl serde::Serialize) -> CliResult {
    let s = serde_json::to_string(v).map_err(Error::from)?;
    println!("{s}");
    Ok(())
}

fn pipelines(cfg: &ExperimentConfig, only: Option<PipelineArg>) -> Vec<Pipeline> {
    match only {
        Some(p) => vec![p.into()],
        None => cfg.pipelines.clone(),
    }
}

fn write_gate_lists(dir: &Path, lists: &BTreeMap<&str, Vec<crate::GateId>>) -> crate::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, ids) in lists {
        fs::write(dir.join(format!("gates_{}.json", name.to_lowercase())), serde_json::to_vec(ids)?)?;
    }
    Ok(())
}

pub fn execute(cli: Cli) -> CliResult {
    match cli.command {
        Command::Bound { formula } => print_json(&bound_json(&formula)?),
        Command::AuditGates { exclude_constants, out } => {
            let lists = audit_gates(exclude_constants);
            if let Some(dir) = out {
                write_gate_lists(&dir, &lists)?;
            }
            let counts: BTreeMap<_, _> = lists.iter().map(|(k, v)| (*k, v.len())).collect();
            print_json(&counts)
        }
        Command::GenData(a) => {
            let exp = Experiment::new(load_config(&a)?)?;
            exp.write_config()?;
            let (_, sel) = exp.gen_data()?;
            print_json(&sel.frequencies)
        }
        Command::Train { cfg, pipeline } => {
            let exp = Experiment::new(load_config(&cfg)?)?;
            let splits = exp.load_data()?;
            for p in pipelines(&exp.cfg, pipeline) {
                let (_, hist) = exp.train_cell(&splits, p)?;
                if let Some(last) = hist.last() {
                    log::info!("{}: final task loss {:.4}, accuracy {:.3}", p.name(), last.task_loss, last.accuracy);
                }
            }
            Ok(())
        }
        Command::Harden { cfg, pipeline } => {
            let exp = Experiment::new(load_config(&cfg)?)?;
            let splits = exp.load_data()?;
            for p in pipelines(&exp.cfg, pipeline) {
                let cell = exp.load_cell(p)?;
                let (_, report) = exp.harden(&splits, &cell, p)?;
                log::info!("{}: sweeps {:?}", p.name(), report.sweep_disagreement);
            }
            Ok(())
        }
        Command::Eval(a) => {
            let exp = Experiment::new(load_config(&a)?)?;
            let splits = exp.load_data()?;
            let mut loaded = Vec::new();
            for &p in &exp.cfg.pipelines {
                loaded.push((p, exp.load_cell(p)?, exp.load_circuit(p)?));
            }
            let trained: Vec<_> = loaded.iter().map(|(p, c, h)| (*p, c, h)).collect();
            let (reports, traces) = exp.evaluate(&splits, &trained, None)?;
            let summary = exp.write_eval(&reports, &traces, &splits.eval_labels.ctq)?;
            print!("{summary}");
            Ok(())
        }
        Command::Monitor { circuit } => {
            let bytes = fs::read(&circuit).map_err(|e| Failure { code: EXIT_CONFIG, message: format!("{}: {e}", circuit.display()) })?;
            let c = HardCircuit::from_json(&bytes)?;
            let stdin = std::io::stdin();
            monitor_stream(&c, stdin.lock(), std::io::stdout().lock())
        }
        Command::Run(a) => {
            let exp = Experiment::new(load_config(&a)?)?;
            let outcome = exp.run()?;
            print!("{}", outcome.summary);
            Ok(())
        }
    }
}

/// Parses `args`, runs the command and returns the exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
