//! `choquet`: solve and certify transport problems from JSON inputs.

mod commands;
mod input;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use report::{RunReport, Table};

#[derive(Parser)]
#[command(name = "choquet", version, about = "Optimal and martingale transport with certificates")]
pub struct Cli {
    #[command(subcommand)]
    group: Group,
    #[command(flatten)]
    global: Global,
}

#[derive(Args, Clone)]
pub struct Global {
    /// Tolerance for tightness checks.
    #[arg(long, global = true, default_value_t = 1e-7)]
    pub tol: f64,
    /// Seed for sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of sampled inequalities.
    #[arg(long, global = true, default_value_t = 10_000)]
    pub samples: usize,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Group {
    /// Two- and multi-marginal optimal transport.
    #[command(subcommand)]
    Ot(OtCmd),
    /// Convex order, martingale couplings and fan decompositions.
    #[command(subcommand)]
    Order(OrderCmd),
    /// Martingale optimal transport.
    #[command(subcommand)]
    Mot(MotCmd),
    /// Simplex inequalities and gamma certificates.
    #[command(subcommand)]
    Class(ClassCmd),
    /// Martingale triangle inequality for a cost.
    #[command(subcommand)]
    Mti(MtiCmd),
    /// Uniform convexity certificates.
    #[command(subcommand)]
    Ucvx(ModulusCmd),
    /// Uniform smoothness certificates.
    #[command(subcommand)]
    Usmooth(ModulusCmd),
}

#[derive(Args)]
pub struct PairArgs {
    #[arg(long)]
    pub mu: String,
    #[arg(long)]
    pub nu: String,
    #[arg(long)]
    pub cost: String,
}

#[derive(Args)]
pub struct MeasuresArgs {
    #[arg(long)]
    pub mu: String,
    #[arg(long)]
    pub nu: String,
}

#[derive(Subcommand)]
pub enum OtCmd {
    /// Optimal coupling, optimal potentials and the duality gap.
    Solve(PairArgs),
    /// Optimal potentials only.
    Dual(PairArgs),
    /// Single-potential dual for a metric cost.
    Kr(PairArgs),
    /// Multimarginal primal and dual with normalized potentials.
    Multi {
        /// Marginal measure; repeat once per marginal.
        #[arg(long = "measure", required = true)]
        measures: Vec<String>,
        /// `{"kind":"pairwise_sum","cost":...}`, `{"kind":"tensor",...}`, or a plain pairwise cost.
        #[arg(long)]
        cost: String,
    },
}

#[derive(Subcommand)]
pub enum OrderCmd {
    /// Martingale coupling or a convex function separating the measures.
    Check(MeasuresArgs),
    /// Martingale coupling with per-source barycenter residuals.
    Couple(MeasuresArgs),
    /// Decomposition of a martingale coupling into fans.
    Decompose {
        #[command(flatten)]
        pair: MeasuresArgs,
        /// Cost whose integral is reported for the decomposition.
        #[arg(long)]
        cost: Option<String>,
    },
}

#[derive(Subcommand)]
pub enum MotCmd {
    /// Optimal martingale coupling.
    Solve(PairArgs),
    /// Dual with potentials `u`, `v` and gamma field.
    Dual(PairArgs),
    /// Single-potential dual on the joint support.
    DualSym {
        #[command(flatten)]
        pair: PairArgs,
        /// Additional points carrying the potential.
        #[arg(long)]
        extra: Option<String>,
    },
}

#[derive(Args)]
pub struct SampleSet {
    /// Finite point set.
    #[arg(long, conflicts_with = "grid")]
    pub points: Option<String>,
    /// Box grid `{"lower":[..],"upper":[..],"counts":[..]}` or with `"step"` instead of counts.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Subcommand)]
pub enum ClassCmd {
    /// Samples the simplex inequality for a pair of functions.
    Check {
        #[arg(long)]
        f1: String,
        /// Defaults to `f1`.
        #[arg(long)]
        f2: Option<String>,
        #[arg(long)]
        cost: String,
        #[arg(long)]
        domain: String,
    },
    /// Per-point gamma certificates on a sample set.
    Certify {
        #[arg(long)]
        f1: String,
        #[arg(long)]
        f2: Option<String>,
        #[arg(long)]
        cost: String,
        #[command(flatten)]
        set: SampleSet,
    },
    /// Extends samples of a certified function to new points.
    Extend {
        #[arg(long)]
        g: String,
        #[arg(long)]
        cost: String,
        #[command(flatten)]
        set: SampleSet,
        #[arg(long)]
        targets: String,
        /// Gamma field `{"points":[..],"values":[[..]..]}`; certified from the samples when omitted.
        #[arg(long)]
        gamma: Option<String>,
        #[arg(long)]
        lower: Option<String>,
    },
    /// Builds a B-class supremum from atoms `[{"y":[..],"a":[..],"b":..}]`.
    Generate {
        #[arg(long)]
        atoms: String,
        #[arg(long)]
        cost: String,
        /// Points at which to tabulate the result.
        #[arg(long)]
        points: Option<String>,
    },
}

#[derive(Subcommand)]
pub enum MtiCmd {
    /// Samples the martingale triangle inequality.
    Check {
        #[arg(long)]
        cost: String,
        #[arg(long)]
        domain: String,
    },
    /// Finite-difference second-order test on a grid.
    Hessian {
        #[arg(long)]
        cost: String,
        #[arg(long)]
        grid: String,
        /// Central-difference step.
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
    },
}

#[derive(Subcommand)]
pub enum ModulusCmd {
    Certify {
        #[arg(long)]
        f: String,
        /// Modulus such as `{"kind":"power","p":2}`.
        #[arg(long)]
        sigma: String,
        #[arg(long)]
        grid: String,
    },
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Infeasible(String),
    Numerical(String),
}

impl From<choquet::Error> for CliError {
    fn from(e: choquet::Error) -> Self {
        use choquet::Error as E;
        match e {
            E::NumericalBreakdown(_) => CliError::Numerical(e.to_string()),
            E::NotInConvexOrder | E::InfeasibleInput { .. } => CliError::Infeasible(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// What a command hands back for reporting.
pub struct Outcome {
    pub results: Value,
    /// The result is a negative certificate (separating function, counterexample, witness).
    pub negative: bool,
    pub table: Option<Table>,
}

fn command_name(g: &Group) -> &'static str {
    match g {
        Group::Ot(OtCmd::Solve(_)) => "ot solve",
        Group::Ot(OtCmd::Dual(_)) => "ot dual",
        Group::Ot(OtCmd::Kr(_)) => "ot kr",
        Group::Ot(OtCmd::Multi { .. }) => "ot multi",
        Group::Order(OrderCmd::Check(_)) => "order check",
        Group::Order(OrderCmd::Couple(_)) => "order couple",
        Group::Order(OrderCmd::Decompose { .. }) => "order decompose",
        Group::Mot(MotCmd::Solve(_)) => "mot solve",
        Group::Mot(MotCmd::Dual(_)) => "mot dual",
        Group::Mot(MotCmd::DualSym { .. }) => "mot dual-sym",
        Group::Class(ClassCmd::Check { .. }) => "class check",
        Group::Class(ClassCmd::Certify { .. }) => "class certify",
        Group::Class(ClassCmd::Extend { .. }) => "class extend",
        Group::Class(ClassCmd::Generate { .. }) => "class generate",
        Group::Mti(MtiCmd::Check { .. }) => "mti check",
        Group::Mti(MtiCmd::Hessian { .. }) => "mti hessian",
        Group::Ucvx(_) => "ucvx certify",
        Group::Usmooth(_) => "usmooth certify",
    }
}

fn dispatch(group: &Group, g: &Global, inputs: &mut Map<String, Value>) -> Result<Outcome, CliError> {
    use commands::*;
    let i = inputs;
    match group {
        Group::Ot(OtCmd::Solve(a)) => ot_solve(a, g, i),
        Group::Ot(OtCmd::Dual(a)) => ot_dual(a, i),
        Group::Ot(OtCmd::Kr(a)) => ot_kr(a, g, i),
        Group::Ot(OtCmd::Multi { measures, cost }) => ot_multi(measures, cost, i),
        Group::Order(OrderCmd::Check(a)) => order_check(a, i),
        Group::Order(OrderCmd::Couple(a)) => order_couple(a, i),
        Group::Order(OrderCmd::Decompose { pair, cost }) => order_decompose(pair, cost.as_deref(), i),
        Group::Mot(MotCmd::Solve(a)) => mot_solve(a, i),
        Group::Mot(MotCmd::Dual(a)) => mot_dual_cmd(a, i),
        Group::Mot(MotCmd::DualSym { pair, extra }) => mot_dual_sym(pair, extra.as_deref(), i),
        Group::Class(ClassCmd::Check { f1, f2, cost, domain }) => {
            class_check(f1, f2.as_deref(), cost, domain, g, i)
        }
        Group::Class(ClassCmd::Certify { f1, f2, cost, set }) => class_certify(f1, f2.as_deref(), cost, set, i),
        Group::Class(ClassCmd::Extend { g: gf, cost, set, targets, gamma, lower }) => {
            class_extend(gf, cost, set, targets, gamma.as_deref(), lower.as_deref(), i)
        }
        Group::Class(ClassCmd::Generate { atoms, cost, points }) => class_generate(atoms, cost, points.as_deref(), i),
        Group::Mti(MtiCmd::Check { cost, domain }) => mti_check_cmd(cost, domain, g, i),
        Group::Mti(MtiCmd::Hessian { cost, grid, h }) => mti_hessian(cost, grid, *h, i),
        Group::Ucvx(ModulusCmd::Certify { f, sigma, grid }) => modulus_certify(f, sigma, grid, false, i),
        Group::Usmooth(ModulusCmd::Certify { f, sigma, grid }) => modulus_certify(f, sigma, grid, true, i),
    }
}

pub fn run(cli: Cli) -> ExitCode {
    let g = &cli.global;
    let command = command_name(&cli.group).to_string();
    let start = Instant::now();
    let mut inputs = Map::new();
    let outcome = dispatch(&cli.group, g, &mut inputs);
    let timing_ms = start.elapsed().as_secs_f64() * 1e3;
    let (outcome, code) = match outcome {
        Ok(o) => {
            let code = if o.negative { 2 } else { 0 };
            (o, code)
        }
        Err(CliError::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(3);
        }
        Err(CliError::Infeasible(msg)) => {
            eprintln!("error: {msg}");
            let results = serde_json::json!({ "error": msg });
            let o = Outcome { results, negative: true, table: None };
            (o, 2)
        }
    };
    let text = match g.format {
        Format::Json => {
            let rep = RunReport { command, inputs, results: outcome.results, timing_ms, seed: g.seed };
            report::render_json(&rep.to_value())
        }
        Format::Csv => match outcome.table {
            Some(t) => match t.render() {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            },
            None => {
                eprintln!("error: --format csv is only available for grid-sampled outputs (class certify, class extend, ucvx certify, usmooth certify)");
                return ExitCode::from(1);
            }
        },
    };
    if let Err(e) = report::emit(&text, g.out.as_deref()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    run(Cli::parse())
}
