//! `eulab`: batch experiments over enumerated environments.
//!
//! Exit codes: 0 success, 1 config error, 2 empty support, 3 incomplete scan.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eu_core::engine::{convergence_report, divergence_scan, EUInterval};
use eu_core::hypothesis::build_posterior;
use eu_core::minilang::{decode, ProgramIndex};
use eu_core::num::format_rational;
use eu_core::par::with_threads;
use eu_core::witness::{bb_rows, theta_outputs};

use config::{Config, ConfigError};

#[derive(Parser, Debug)]
#[command(name = "eulab", version, about = "Expected-utility experiments over enumerated environments")]
struct Cli {
    /// Flat key=value config file.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Config override, applied after the file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads; 0 uses the default pool. Output does not depend on it.
    #[arg(long, default_value_t = 0, global = true)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the program with the given index as assembly.
    Disasm { index: ProgramIndex },
    /// Classify the enumerated programs against the history (CSV).
    Posterior,
    /// Certified expected-utility intervals over a schedule (JSON + CSV).
    Exputil,
    /// Search for expected-utility terms of magnitude at least one (JSON).
    Diverge,
    /// Budgeted busy-beaver lower bounds B_T(0..=n) (CSV).
    Bb {
        /// Overrides the `n` config key.
        n: Option<u64>,
        /// Overrides the `budget` config key.
        budget: Option<u64>,
    },
}

enum Failure {
    Config(String),
    EmptySupport(String),
    Incomplete(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.0)
    }
}

impl From<eu_core::Error> for Failure {
    fn from(e: eu_core::Error) -> Self {
        match e {
            eu_core::Error::EmptySupport => Failure::EmptySupport(e.to_string()),
            other => Failure::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Config(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Config(format!("csv: {e}"))
    }
}

type Outcome = Result<(), Failure>;

fn sink(path: Option<PathBuf>) -> std::io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(std::io::BufWriter::new(std::fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: serde::Serialize>(path: Option<PathBuf>, value: &T) -> Outcome {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Config(format!("json: {e}")))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn opt_rational(r: &Option<eu_core::Rational>) -> String {
    r.as_ref().map(format_rational).unwrap_or_default()
}

fn posterior(cfg: &Config) -> Outcome {
    let alphabets = cfg.alphabets()?;
    let h = cfg.history()?;
    let table = build_posterior(&h, cfg.cutoff()?, cfg.budget()?, cfg.prior()?.as_ref(), &alphabets)?;
    let mut w = csv::Writer::from_writer(sink(cfg.path("out"))?);
    w.write_record(["index", "classification", "rho_num", "rho_den", "post_lower", "post_upper"])?;
    for row in table.rows() {
        w.write_record([
            row.index.to_string(),
            row.classification.to_string(),
            row.rho.numer().to_string(),
            row.rho.denom().to_string(),
            opt_rational(&row.post_lower),
            opt_rational(&row.post_upper),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn interval_record(iv: &EUInterval) -> Vec<String> {
    vec![
        iv.cutoff.to_string(),
        iv.horizon.to_string(),
        iv.budget.to_string(),
        iv.lower.to_string(),
        iv.upper.to_string(),
        iv.horizon_gap.to_string(),
        iv.truncation_gap.to_string(),
        iv.mass_gap.to_string(),
        iv.truncated.to_string(),
    ]
}

fn exputil(cfg: &Config) -> Outcome {
    let spec = cfg.utility()?;
    if !spec.is_bounded() {
        return Err(Failure::Config(format!(
            "utility {} is unbounded, so the expected utility need not exist; use `eulab diverge`",
            spec.name()
        )));
    }
    let report = convergence_report(
        &cfg.policy()?,
        &cfg.history()?,
        &spec,
        &cfg.schedule()?,
        cfg.prior()?.as_ref(),
        &cfg.alphabets()?,
    )?;
    write_json(cfg.path("out"), &report)?;
    if let Some(path) = cfg.path("schedule_out") {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "cutoff",
            "horizon",
            "budget",
            "lower",
            "upper",
            "horizon_gap",
            "truncation_gap",
            "mass_gap",
            "truncated",
        ])?;
        for iv in &report.intervals {
            w.write_record(interval_record(iv))?;
        }
        w.flush()?;
    }
    Ok(())
}

fn diverge(cfg: &Config) -> Outcome {
    let spec = cfg.utility()?;
    let report = divergence_scan(
        &cfg.policy()?,
        &cfg.history()?,
        &spec,
        cfg.direction()?,
        cfg.target()?,
        &cfg.scan_stages()?,
        cfg.prior()?.as_ref(),
        &cfg.alphabets()?,
    )?;
    write_json(cfg.path("out"), &report)?;
    if let Some(path) = cfg.path("witness_out") {
        let mut w = sink(Some(path))?;
        for r in &report.records {
            serde_json::to_writer(&mut w, r).map_err(|e| Failure::Config(format!("json: {e}")))?;
            writeln!(w)?;
        }
        w.flush()?;
    }
    if report.complete {
        Ok(())
    } else {
        let counts: Vec<String> = report
            .stages
            .iter()
            .map(|s| format!("{}/{}", s.verified_above, s.verified_below))
            .collect();
        Err(Failure::Incomplete(format!(
            "scan incomplete: wanted {} verified terms per direction, stages found (above/below) {}",
            report.target,
            counts.join(" ")
        )))
    }
}

fn bb(cfg: &Config, n: Option<u64>, budget: Option<u64>) -> Outcome {
    let n = match n {
        Some(n) => n,
        None => cfg.n()?,
    };
    let budget = match budget {
        Some(b) => eu_core::minilang::StepBudget::new(b)?,
        None => cfg.budget()?,
    };
    let outputs = theta_outputs(n + 1, budget);
    let mut w = csv::Writer::from_writer(sink(cfg.path("out"))?);
    w.write_record(["n", "value", "argmax"])?;
    for row in bb_rows(&outputs) {
        w.write_record([
            row.n.to_string(),
            row.value.map(|v| v.to_string()).unwrap_or_default(),
            row.argmax.map(|k| k.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn dispatch(cli: &Cli) -> Outcome {
    if let Command::Disasm { index } = &cli.command {
        print!("{}", decode(index).source_text());
        return Ok(());
    }
    let cfg = Config::load(cli.config.as_deref(), &cli.overrides)?;
    match &cli.command {
        Command::Disasm { .. } => unreachable!(),
        Command::Posterior => posterior(&cfg),
        Command::Exputil => exputil(&cfg),
        Command::Diverge => diverge(&cfg),
        Command::Bb { n, budget } => bb(&cfg, *n, *budget),
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors, which here means empty support.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match with_threads(cli.threads, || dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Config(m) => (1, m),
                Failure::EmptySupport(m) => (2, m),
                Failure::Incomplete(m) => (3, m),
            };
            eprintln!("eulab: {msg}");
            ExitCode::from(code)
        }
    }
}
