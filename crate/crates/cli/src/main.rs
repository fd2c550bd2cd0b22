//! `ensrob`: robustness verifier for classifier ensembles.
//!
//! Exit codes: 0 NOT ROBUST, 1 ROBUST, 2 UNKNOWN, 3 input error.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use ensrob_core::attacks::{attack_count_bound, WitnessFile};
use ensrob_core::emitters::{emit_lp, emit_smtlib};
use ensrob_core::encoder::{add_max_objective, encode_base, IntervalBounds};
use ensrob_core::nnmodel::{load_dataset, load_ensemble};
use ensrob_core::oracle::check_certificate;
use ensrob_core::pipeline::{baseline, verify, BaselineKind, Verdict};
use ensrob_core::{Ensemble, LabelledDataset, SolveMode, SolverBackend, VerificationSpec, DEFAULT_MARGIN};

use config::{resolve_command, Config, SOLVER_CMD_ENV};

const EXIT_NOT_ROBUST: u8 = 0;
const EXIT_ROBUST: u8 = 1;
const EXIT_UNKNOWN: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(name = "ensrob", version, about = "Verify classifier ensembles against randomized L1-bounded attacks")]
struct Cli {
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,

    /// TOML file with `lp_command` / `smt_command` templates.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether some randomized attack reaches value alpha.
    Verify(VerifyArgs),
    /// Uniform or best-deterministic baseline from per-classifier attacks.
    Baseline(BaselineArgs),
    /// Write the encoding as an LP or SMT-LIB2 file.
    Emit(EmitArgs),
    /// Re-check a witness file by forward passes.
    Check(CheckArgs),
    /// Print the attack-count bound (points + 1)^classifiers.
    Bound(BoundArgs),
}

#[derive(Args)]
struct Inputs {
    /// Ensemble JSON file.
    ensemble: PathBuf,
    /// Dataset JSON file.
    dataset: PathBuf,
    /// Required lead of the true label's score over every other score.
    #[arg(long, default_value_t = DEFAULT_MARGIN)]
    margin: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum BackendArg {
    Internal,
    Lp,
    Smt,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "internal")]
    backend: BackendArg,
    /// Command template for external backends; overrides the config file.
    #[arg(long)]
    solver_cmd: Option<String>,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time_budget: Option<f64>,
    /// Keep the temporary model and solution files.
    #[arg(long)]
    keep_artifacts: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Feasibility,
    Maximize,
}

impl From<ModeArg> for SolveMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Feasibility => SolveMode::Feasibility,
            ModeArg::Maximize => SolveMode::Maximize,
        }
    }
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Number of attacks; defaults to the ensemble size.
    #[arg(long)]
    attacks: Option<usize>,
    #[arg(long, value_enum, default_value = "feasibility")]
    mode: ModeArg,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    query: QueryArgs,
    #[command(flatten)]
    backend: BackendArgs,
    /// Witness JSON written on NOT ROBUST.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Uniform,
    Bda,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    kind: KindArg,
    /// Also solve the maximising encoding with this many attacks.
    #[arg(long)]
    max_milp: Option<usize>,
    #[command(flatten)]
    backend: BackendArgs,
    /// Baseline attack written as a witness file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Lp,
    Smt2,
}

#[derive(Args)]
struct EmitArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, value_enum, default_value = "lp")]
    format: FormatArg,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    inputs: Inputs,
    /// Witness JSON file.
    witness: PathBuf,
    /// Threshold to check against; defaults to the value claimed by the witness.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(required_unless_present = "points_flag")]
    points: Option<usize>,
    #[arg(required_unless_present = "classifiers_flag")]
    classifiers: Option<usize>,
    #[arg(long = "points", id = "points_flag", conflicts_with = "points")]
    points_flag: Option<usize>,
    #[arg(long = "classifiers", id = "classifiers_flag", conflicts_with = "classifiers")]
    classifiers_flag: Option<usize>,
}

/// Failure category that decides the exit code.
enum Failure {
    Input(anyhow::Error),
    Unknown(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<ensrob_core::Error> for Failure {
    fn from(e: ensrob_core::Error) -> Self {
        match e {
            ensrob_core::Error::Solver(_) => Failure::Unknown(e.into()),
            _ => Failure::Input(e.into()),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let result = run(&cli);
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT)
        }
        Err(Failure::Unknown(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_UNKNOWN)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::Verify(a) => cmd_verify(cli, a),
        Command::Baseline(a) => cmd_baseline(cli, a),
        Command::Emit(a) => cmd_emit(a),
        Command::Check(a) => cmd_check(cli, a),
        Command::Bound(a) => cmd_bound(cli, a),
    }
}

fn load_inputs(inputs: &Inputs) -> Result<(Ensemble, LabelledDataset), Failure> {
    let ensemble = load_ensemble(&inputs.ensemble)?;
    let data = load_dataset(&inputs.dataset)?;
    data.validate_for(&ensemble)?;
    Ok((ensemble, data))
}

fn query_spec(q: &QueryArgs, margin: f64, ensemble: &Ensemble) -> Result<VerificationSpec, Failure> {
    let n = q.attacks.unwrap_or(ensemble.len());
    Ok(VerificationSpec::new(q.epsilon, q.alpha, n, margin)?)
}

fn time_budget(secs: Option<f64>) -> anyhow::Result<Option<Duration>> {
    match secs {
        None => Ok(None),
        Some(s) if s.is_finite() && s > 0.0 => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => bail!("time budget must be a positive number of seconds, got {s}"),
    }
}

fn make_backend(cli: &Cli, args: &BackendArgs) -> anyhow::Result<SolverBackend> {
    let budget = time_budget(args.time_budget)?;
    let mut backend = match args.backend {
        BackendArg::Internal => SolverBackend::internal(budget),
        ext => {
            let config = Config::load(cli.config.as_deref())?;
            let configured = match ext {
                BackendArg::Lp => config.lp_command.as_deref(),
                _ => config.smt_command.as_deref(),
            };
            let cmd = resolve_command(std::env::var(SOLVER_CMD_ENV).ok(), args.solver_cmd.as_deref(), configured)
                .ok_or_else(|| anyhow!("no solver command: set --solver-cmd, the config file or {SOLVER_CMD_ENV}"))?;
            match ext {
                BackendArg::Lp => SolverBackend::external_lp(cmd, budget)?,
                _ => SolverBackend::external_smt(cmd, budget)?,
            }
        }
    };
    backend.keep_artifacts = args.keep_artifacts;
    Ok(backend)
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json value serializes"));
}

fn fmt_row(row: &[f64]) -> String {
    let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
    format!("[{}]", cells.join(", "))
}

fn print_attack_table(w: &WitnessFile) {
    println!("Probabilities & attacks:");
    for (j, (a, p)) in w.attacks.iter().zip(&w.probs).enumerate() {
        println!("  attack {j}  p = {p}");
        for (i, row) in a.perturbations.iter().enumerate() {
            println!("    point {i}: {}", fmt_row(row));
        }
    }
}

fn cmd_verify(cli: &Cli, a: &VerifyArgs) -> CmdResult {
    let (ensemble, data) = load_inputs(&a.inputs)?;
    let spec = query_spec(&a.query, a.inputs.margin, &ensemble)?;
    let backend = make_backend(cli, &a.backend)?;
    let out = verify(&ensemble, &data, &spec, a.query.mode.into(), &backend)?;

    let witness = match &out.verdict {
        Verdict::NotRobust(w) => Some(WitnessFile::new(&w.attack, w.report.value, spec.epsilon)),
        _ => None,
    };
    if let (Some(w), Some(path)) = (&witness, &a.out) {
        w.save(path)?;
    }
    let code = match out.verdict {
        Verdict::NotRobust(_) => EXIT_NOT_ROBUST,
        Verdict::Robust => EXIT_ROBUST,
        Verdict::Unknown(_) => EXIT_UNKNOWN,
    };
    if cli.json {
        let mut doc = json!({
            "verdict": out.verdict.label(),
            "epsilon": spec.epsilon,
            "alpha": spec.alpha,
            "attacks": spec.num_attacks,
            "margin": spec.margin,
            "system": out.system,
            "attempts": out.attempts,
            "stats": {
                "nodes": out.stats.nodes,
                "lp_iterations": out.stats.lp_iterations,
                "incumbents": out.stats.incumbents,
                "elapsed_ms": out.stats.elapsed.as_secs_f64() * 1e3,
            },
        });
        match &out.verdict {
            Verdict::NotRobust(wv) => {
                doc["witness"] = serde_json::to_value(witness.as_ref()).expect("witness serializes");
                doc["report"] = serde_json::to_value(&wv.report).expect("report serializes");
                doc["exact_boundary"] = json!(wv.exact_boundary);
                doc["objective"] = json!(out.objective);
            }
            Verdict::Unknown(reason) => doc["reason"] = json!(reason),
            Verdict::Robust => {}
        }
        print_json(&doc);
        return Ok(code);
    }
    println!("{:<12}{}", "verdict", out.verdict.label());
    println!("{:<12}{}", "epsilon", spec.epsilon);
    println!("{:<12}{}", "alpha", spec.alpha);
    println!("{:<12}{}", "attacks", spec.num_attacks);
    println!(
        "{:<12}{} vars, {} constraints, {} binaries",
        "system", out.system.variables, out.system.constraints, out.system.binaries
    );
    println!("{:<12}{} nodes, {} LP iterations", "search", out.stats.nodes, out.stats.lp_iterations);
    match &out.verdict {
        Verdict::NotRobust(wv) => {
            println!("{:<12}{}", "value", wv.report.value);
            if let Some(obj) = out.objective {
                println!("{:<12}{}", "objective", obj);
            }
            if wv.exact_boundary {
                println!("note: the witness value equals alpha");
            }
            print_attack_table(witness.as_ref().expect("witness exists"));
        }
        Verdict::Unknown(reason) => println!("{:<12}{}", "reason", reason),
        Verdict::Robust => {}
    }
    Ok(code)
}

fn cmd_baseline(cli: &Cli, a: &BaselineArgs) -> CmdResult {
    let (ensemble, data) = load_inputs(&a.inputs)?;
    if !(a.epsilon.is_finite() && a.epsilon > 0.0) {
        return Err(anyhow!("epsilon must be > 0, got {}", a.epsilon).into());
    }
    if !(a.inputs.margin.is_finite() && a.inputs.margin >= 0.0) {
        return Err(anyhow!("margin must be >= 0, got {}", a.inputs.margin).into());
    }
    if a.max_milp == Some(0) {
        return Err(anyhow!("--max-milp needs at least one attack").into());
    }
    let backend = make_backend(cli, &a.backend)?;
    let kind = match a.kind {
        KindArg::Uniform => BaselineKind::Uniform,
        KindArg::Bda => BaselineKind::Bda,
    };
    let report = baseline(&ensemble, &data, a.epsilon, a.inputs.margin, kind, a.max_milp, &backend)?;
    let witness = WitnessFile::new(&report.attack, report.value, a.epsilon);
    if let Some(path) = &a.out {
        witness.save(path)?;
    }
    if cli.json {
        let mut doc = json!({
            "kind": report.kind,
            "epsilon": a.epsilon,
            "value": report.value,
            "attack": witness,
        });
        if let Some(mm) = &report.max_milp {
            doc["max_milp"] = json!({ "objective": mm.objective, "value": mm.value });
        }
        print_json(&doc);
        return Ok(0);
    }
    let label = match kind {
        BaselineKind::Uniform => "uniform",
        BaselineKind::Bda => "bda",
    };
    println!("{:<12}{}", "baseline", label);
    println!("{:<12}{}", label, report.value);
    if let Some(mm) = &report.max_milp {
        println!("{:<12}{} (objective {})", "max-milp", mm.value, mm.objective);
    }
    print_attack_table(&witness);
    Ok(0)
}

fn cmd_emit(a: &EmitArgs) -> CmdResult {
    let (ensemble, data) = load_inputs(&a.inputs)?;
    let spec = query_spec(&a.query, a.inputs.margin, &ensemble)?;
    let mut cs = encode_base(&ensemble, &data, &spec, &IntervalBounds)?;
    if SolveMode::from(a.query.mode) == SolveMode::Maximize {
        add_max_objective(&mut cs);
    }
    let text = match a.format {
        FormatArg::Lp => emit_lp(&cs),
        FormatArg::Smt2 => emit_smtlib(&cs),
    };
    match &a.out {
        Some(path) => write_text(path, &text)?,
        None => print!("{text}"),
    }
    Ok(0)
}

fn write_text(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn cmd_check(cli: &Cli, a: &CheckArgs) -> CmdResult {
    let (ensemble, data) = load_inputs(&a.inputs)?;
    let w = WitnessFile::load(&a.witness)?;
    let alpha = a.alpha.unwrap_or(w.value);
    if !(0.0..=1.0).contains(&alpha) {
        return Err(anyhow!("alpha must lie in [0, 1], got {alpha}").into());
    }
    // Struct literal: a claimed value of 0 is a legitimate threshold here.
    let spec = VerificationSpec {
        epsilon: w.epsilon,
        alpha,
        num_attacks: w.attacks.len(),
        margin: a.inputs.margin,
    };
    let report = check_certificate(&ensemble, &data, &w.randomized_attack(), &spec)?;
    if cli.json {
        println!("{}", report.to_json());
    } else {
        println!("{:<16}{}", "pass", report.pass);
        println!("{:<16}{}", "value", report.value);
        println!("{:<16}{}", "alpha", report.alpha);
        println!("{:<16}{}", "epsilon", report.epsilon);
        println!("{:<16}{}", "max l1", report.max_l1);
        println!("{:<16}{}", "epsilon ok", report.epsilon_ok);
        println!("{:<16}{}", "distribution ok", report.distribution_ok);
    }
    Ok(if report.pass { 0 } else { 1 })
}

fn cmd_bound(cli: &Cli, a: &BoundArgs) -> CmdResult {
    let points = a.points.or(a.points_flag).expect("clap enforces points");
    let classifiers = a.classifiers.or(a.classifiers_flag).expect("clap enforces classifiers");
    let bound = attack_count_bound(points, classifiers)?;
    if cli.json {
        // u128 exceeds the JSON number range, so it is written as a string.
        print_json(&json!({ "points": points, "classifiers": classifiers, "bound": bound.to_string() }));
    } else {
        println!("{bound}");
    }
    Ok(0)
}
