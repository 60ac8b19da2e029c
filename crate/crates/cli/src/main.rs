//! `flowrank` command-line front end.

mod commands;
mod diag;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use flowrank::{Method, TableFormat, DEFAULT_TIE_TOLERANCE};

use crate::diag::Failure;

#[derive(Parser, Debug)]
#[command(name = "flowrank", version, about = "Rank entities from bilateral flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Score and rank one flow matrix.
    Rank(RankArgs),
    /// Check size invariance and bridge independence on seeded instances.
    CheckAxioms(AxiomArgs),
    /// Show how merging entities moves the remaining ones.
    MergeImpact(MergeArgs),
    /// Rank every year of a panel.
    Panel(PanelArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Ranking method.
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Scores closer than this to a group's top score are tied.
    #[arg(long = "tie-tol", default_value_t = DEFAULT_TIE_TOLERANCE)]
    tie_tol: f64,
    /// Write the result here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct InputArgs {
    /// Long (`from,to,amount[,year]`) or wide flow CSV.
    #[arg(long)]
    input: PathBuf,
    /// Year to use from a multi-year input.
    #[arg(long)]
    year: Option<i32>,
    /// Skip self-flows in long input instead of rejecting them.
    #[arg(long)]
    drop_self_flows: bool,
}

#[derive(Args, Debug)]
struct RankArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct AxiomArgs {
    /// Optional instance; each entity in it is also cloned and checked.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    year: Option<i32>,
    #[arg(long)]
    drop_self_flows: bool,
    #[arg(long, default_value_t = flowrank::axioms::SuiteConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MergeArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Merge spec: `group_code,member_code` lines.
    #[arg(long)]
    merge: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct PanelArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Net,
    Ratio,
    Ls,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<Method> {
        match self {
            MethodArg::Net => vec![Method::Net],
            MethodArg::Ratio => vec![Method::Ratio],
            MethodArg::Ls => vec![Method::LeastSquares],
            MethodArg::All => Method::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Text,
}

impl From<FormatArg> for TableFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => TableFormat::Csv,
            FormatArg::Text => TableFormat::Text,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("usage|{first}");
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Rank(a) => commands::rank(a),
        Command::CheckAxioms(a) => commands::check_axioms(a),
        Command::MergeImpact(a) => commands::merge_impact(a),
        Command::Panel(a) => commands::panel(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            ExitCode::from(f.exit)
        }
    }
}

fn check_tolerance(tol: f64) -> Result<f64, Failure> {
    if tol.is_finite() && tol >= 0.0 {
        Ok(tol)
    } else {
        Err(Failure::usage(format!("--tie-tol must be a finite number >= 0, got {tol}")))
    }
}
