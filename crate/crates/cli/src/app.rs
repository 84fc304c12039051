//! Argument parsing and dispatch.

use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use vallab::Exp;

use crate::commands::{
    cmd_as, cmd_defect, cmd_qf, cmd_series, cmd_stabilize, AsArgs, DefectArgs, Outcome, QfArgs,
    StabilizeArgs,
};
use crate::config::{Format, RunConfig};
use crate::error::CliResult;
use crate::experiment::cmd_experiment_paper;

#[derive(Parser, Debug)]
#[command(name = "vallab", version, about = "Valuation computations over Hahn series in characteristic p")]
pub struct Cli {
    #[arg(long, global = true)]
    pub p: Option<u32>,
    #[arg(long, global = true)]
    pub q: Option<u32>,
    /// Degree of the coefficient field over F_p.
    #[arg(long, global = true)]
    pub m: Option<u32>,
    #[arg(long, global = true)]
    pub depth: Option<u32>,
    #[arg(long, global = true)]
    pub prec: Option<Exp>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<u32>,
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    Paper,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a series expression and its valuation.
    Series { expr: String },
    /// Certify the truncation index at which `v(f(w_{0l}))` stabilizes.
    Stabilize(StabilizeArgs),
    /// Expand a quasi-finite element.
    Qf(QfArgs),
    /// Run the Artin–Schreier reduction loop.
    As(AsArgs),
    /// Ramification, inertia and defect of an extension.
    Defect(DefectArgs),
    /// Run a fixed experiment and emit one JSON report.
    Experiment {
        #[arg(value_enum)]
        which: Experiment,
    },
}

impl Cli {
    /// `base` with every flag given on the command line applied on top.
    pub fn overlay(&self, mut base: RunConfig) -> RunConfig {
        if let Some(p) = self.p {
            base.p = p;
        }
        if let Some(q) = self.q {
            base.q = q;
        }
        if let Some(m) = self.m {
            base.m = m;
        }
        if let Some(d) = self.depth {
            base.depth = d;
        }
        if let Some(prec) = &self.prec {
            base.prec = Some(prec.clone());
        }
        if let Some(s) = self.seed {
            base.seed = s;
        }
        if let Some(n) = self.max_iter {
            base.max_iter = n;
        }
        if self.json {
            base.output.format = Format::Json;
        }
        if let Some(path) = &self.output {
            base.output.path = Some(path.clone());
        }
        base
    }
}

pub fn execute(cli: &Cli) -> CliResult<(Outcome, RunConfig)> {
    let cfg = cli.overlay(RunConfig::from_env()?);
    cfg.validate()?;
    let outcome = match &cli.command {
        Command::Series { expr } => cmd_series(&cfg, expr)?,
        Command::Stabilize(a) => cmd_stabilize(&cfg, a)?,
        Command::Qf(a) => cmd_qf(&cfg, a)?,
        Command::As(a) => cmd_as(&cfg, a)?,
        Command::Defect(a) => cmd_defect(&cfg, a)?,
        Command::Experiment { which: Experiment::Paper } => cmd_experiment_paper(&cfg)?,
    };
    Ok((outcome, cfg))
}

fn emit(outcome: &Outcome, cfg: &RunConfig, force_json: bool) -> CliResult<()> {
    let body = if force_json || cfg.json() {
        serde_json::to_string_pretty(&outcome.json)?
    } else {
        outcome.text.clone()
    };
    match &cfg.output.path {
        Some(path) => std::fs::write(path, format!("{body}\n"))?,
        None => writeln!(std::io::stdout().lock(), "{body}")?,
    }
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let force_json = matches!(cli.command, Command::Experiment { .. });
    let result = execute(&cli).and_then(|(outcome, cfg)| {
        emit(&outcome, &cfg, force_json)?;
        Ok(outcome.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
