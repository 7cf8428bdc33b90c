//! `foldkit`: every check and construction of foldkit-core as a subcommand.
//! Exit status 0 when all checks pass, 1 on a geometric failure, 2 on bad
//! input. Reports are JSON; without `--json` a one-line summary is printed.

mod commands;
mod input;
mod render;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use input::InputError;

#[derive(Parser, Debug)]
#[command(name = "foldkit", version, about = "Toric folded-symplectic geometry checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Override the primary tolerance of the command.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Number of random samples (seeds, check points).
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Seed of the ChaCha8 sampler.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Print the full JSON report instead of the summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Write the report (or the SVG for `template render`) to this file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate expressions and their Jacobian.
    #[command(subcommand)]
    Expr(ExprCmd),
    #[command(subcommand)]
    Fold(FoldCmd),
    #[command(subcommand)]
    Morse(MorseCmd),
    #[command(subcommand)]
    Form(FormCmd),
    #[command(subcommand)]
    Moment(MomentCmd),
    #[command(subcommand)]
    Reduce(ReduceCmd),
    #[command(subcommand)]
    Lattice(LatticeCmd),
    #[command(subcommand)]
    Template(TemplateCmd),
    #[command(subcommand)]
    Cohom(CohomCmd),
    #[command(subcommand)]
    Classify(ClassifyCmd),
    #[command(subcommand)]
    Model(ModelCmd),
    #[command(subcommand)]
    Cut(CutCmd),
}

#[derive(Subcommand, Debug)]
pub enum ExprCmd {
    Eval {
        /// Expression components.
        #[arg(required = true)]
        exprs: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        vars: Vec<String>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        at: Vec<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum FoldCmd {
    /// Certify that a square map has fold singularities.
    Check {
        #[arg(long)]
        map: PathBuf,
        /// Domain file; overrides the map's own domain.
        #[arg(long)]
        domain: Option<PathBuf>,
    },
    /// Factor the map through the fold normal form near a fold point.
    Factor {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        at: Option<Vec<f64>>,
        #[arg(long, default_value_t = 9)]
        nodes: usize,
        #[arg(long, default_value_t = 0.25)]
        half_width: f64,
    },
}

#[derive(Subcommand, Debug)]
pub enum MorseCmd {
    /// χ-Morse test of a section against a connection slope.
    Check {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum FormCmd {
    /// Check that a closed 2-form is folded-symplectic.
    Verify {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        domain: Option<PathBuf>,
    },
    /// Solve σ(X, ·) = β at a point.
    Solve {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        beta: PathBuf,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        at: Vec<f64>,
    },
}

#[derive(Subcommand, Debug)]
pub enum MomentCmd {
    /// Check invariance and the moment-map identity on samples.
    Verify {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        action: PathBuf,
        #[arg(long)]
        moment: PathBuf,
        #[arg(long)]
        domain: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum ReduceCmd {
    /// Classify the zero level of a moment map.
    Classify {
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        action: PathBuf,
        #[arg(long)]
        moment: PathBuf,
        #[arg(long)]
        seeds: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum LatticeCmd {
    /// Unimodularity of integer rows, with a completion to a basis.
    Check {
        #[arg(long)]
        matrix: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum TemplateCmd {
    Validate {
        #[arg(long)]
        template: PathBuf,
    },
    /// SVG picture of a 2-dimensional template.
    Render {
        #[arg(long)]
        template: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum CohomCmd {
    /// H² of a simplicial complex with ℤ^k coefficients.
    H2 {
        #[arg(long)]
        complex: PathBuf,
        #[arg(long, default_value_t = 1)]
        rank: usize,
        /// Also report the real rank.
        #[arg(long)]
        real: bool,
    },
}

#[derive(Subcommand, Debug)]
pub enum ClassifyCmd {
    /// First Chern class of a Čech cocycle.
    C1 {
        #[arg(long)]
        cocycle: PathBuf,
    },
    /// Periods of the horizontal class.
    Chor {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        form: PathBuf,
        #[arg(long)]
        cycles: PathBuf,
    },
    /// Decide whether two bundle forms are isomorphic.
    Compare { a: PathBuf, b: PathBuf },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    Canonical,
    Cotangent,
    Coupling,
}

#[derive(Subcommand, Debug)]
pub enum ModelCmd {
    Build {
        #[arg(long, value_enum)]
        kind: ModelKind,
        /// Bundle chart (canonical).
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Closed base form added to the canonical form, or the base form for coupling.
        #[arg(long)]
        form: Option<PathBuf>,
        /// Dimension parameter of the cotangent model.
        #[arg(long)]
        n: Option<usize>,
        /// Fiber angle names (coupling).
        #[arg(long, value_delimiter = ',', default_value = "theta")]
        fiber: Vec<String>,
        /// Moment coordinate names (coupling).
        #[arg(long, value_delimiter = ',', default_value = "eta")]
        moment_vars: Vec<String>,
        /// Connection one-forms over base and fiber (coupling).
        #[arg(long)]
        connection: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
pub enum CutCmd {
    /// Level sets and chart transitions of the local cut.
    Check {
        #[arg(long)]
        template: PathBuf,
        #[arg(long)]
        points: PathBuf,
    },
}

/// What a command produced: the JSON report, whether every check passed,
/// a summary line, and optionally a non-JSON artifact.
pub struct Outcome {
    pub report: serde_json::Value,
    pub passed: bool,
    pub summary: String,
    pub artifact: Option<String>,
}

fn emit(global: &Global, o: &Outcome) -> Result<(), InputError> {
    let text = match &o.artifact {
        Some(a) => a.clone(),
        None => serde_json::to_string_pretty(&o.report).map_err(InputError::from("report"))? + "\n",
    };
    match &global.out {
        Some(path) => {
            fs::write(path, &text).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
            if global.json && o.artifact.is_none() {
                print!("{text}");
            } else {
                println!("{}", o.summary);
            }
        }
        None if global.json || o.artifact.is_some() => print!("{text}"),
        None => println!("{}", o.summary),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = commands::run(&cli.command, &cli.global).and_then(|o| emit(&cli.global, &o).map(|_| o.passed));
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("input error: {e}");
            if cli.global.json {
                println!("{}", serde_json::json!({ "status": "input_error", "error": e.to_string() }));
            }
            ExitCode::from(2)
        }
    }
}
