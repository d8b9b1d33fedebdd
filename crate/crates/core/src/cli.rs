//! Command-line front end. Parsing lives here so it can be driven from tests;
//! `src/bin/logpot.rs` only wires up logging and the process exit code.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::diagnostics::{
    gradient_identity_residual, l2_mass, orthogonality_defect, sqrt_density, truncation_sweep,
};
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::grid::{DiscreteMeasure, Samples};
use crate::hilbert::{hilbert_with, tricomi_defect, Method};
use crate::potential::{estimate_constant_with, variational_residuals_with};
use crate::solver::{
    assemble_energy, solve_equilibrium, uniqueness_probe, ResultFile, SolverOptions, StepPolicy,
    DEFAULT_SUPPORT_THRESHOLD,
};

/// Tolerances used by `verify`.
pub mod tolerance {
    /// Allowed `|Σ w_i Δ − 1|` in a stored result.
    pub const MASS: f64 = 1e-6;
    pub const EQ_RESIDUAL: f64 = 2e-2;
    pub const INEQ_VIOLATION: f64 = 1e-3;
    /// Interior pointwise product-identity defect.
    pub const TRICOMI_POINTWISE: f64 = 1e-2;
    /// `|∫ f f̃|` relative to `∫ f²`.
    pub const ORTHOGONALITY: f64 = 1e-2;
    pub const GRADIENT_IDENTITY: f64 = 5e-2;
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Usage = 1,
    NotConverged = 2,
    VerificationFailed = 3,
}

impl Status {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "logpot",
    version,
    about = "Equilibrium measures in external fields on the real line"
)]
pub struct Cli {
    /// Seed for anything randomized (the uniqueness probe).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the equilibrium measure on a truncated domain.
    Solve(SolveArgs),
    /// Apply the discrete Hilbert transform to a CSV column.
    Hilbert(HilbertArgs),
    /// Re-check a stored result.
    Verify(VerifyArgs),
    /// Track the L² mass of √h⁺ as the domain grows.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Relative KKT residual at which to stop.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
    /// Relative weight below which a cell is not support.
    #[arg(long, default_value_t = DEFAULT_SUPPORT_THRESHOLD)]
    pub support_threshold: f64,
}

impl SolverArgs {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            max_iters: self.max_iters,
            kkt_tol: self.tol,
            step_policy: StepPolicy::default(),
            support_threshold: self.support_threshold,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Field spec: cauchy-log, arctan, quadratic[:t=..], poly:c0,c1,...
    #[arg(long, value_parser = parse_field)]
    pub field: Field,
    /// Domain as lo:hi.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_domain)]
    pub domain: (f64, f64),
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Also solve from a random start and record the L¹ gap.
    #[arg(long)]
    pub probe: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct HilbertArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "spectral", value_parser = Method::from_str)]
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Kkt,
    Tricomi,
    Orthogonality,
    GradientIdentity,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub result: PathBuf,
    /// Field to check against; defaults to the one stored in the result.
    #[arg(long, value_parser = parse_field)]
    pub field: Option<Field>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "kkt,tricomi,orthogonality,gradient-identity"
    )]
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[arg(long, value_parser = parse_field)]
    pub field: Field,
    /// Half-widths L, comma separated.
    #[arg(long = "Ls", value_delimiter = ',', num_args = 1.., required = true)]
    pub ls: Vec<f64>,
    #[arg(long, default_value_t = 0.02)]
    pub spacing: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

fn parse_field(s: &str) -> std::result::Result<Field, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_domain(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: f64 = a
        .trim()
        .parse()
        .map_err(|_| format!("bad lower bound `{a}`"))?;
    let hi: f64 = b
        .trim()
        .parse()
        .map_err(|_| format!("bad upper bound `{b}`"))?;
    Ok((lo, hi))
}

/// Measured value of one `verify` check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub check: Check,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Kkt => "kkt",
            Check::Tricomi => "tricomi",
            Check::Orthogonality => "orthogonality",
            Check::GradientIdentity => "gradient-identity",
        }
    }
}

pub fn run(cli: &Cli) -> Result<Status> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, cli.seed),
        Command::Hilbert(a) => cmd_hilbert(a),
        Command::Verify(a) => {
            let outcomes = verify_checks(a)?;
            for o in &outcomes {
                println!(
                    "{:<18} {}  {}",
                    o.check.name(),
                    if o.pass { "pass" } else { "FAIL" },
                    o.detail
                );
            }
            Ok(if outcomes.iter().all(|o| o.pass) {
                Status::Ok
            } else {
                Status::VerificationFailed
            })
        }
        Command::Sweep(a) => cmd_sweep(a, cli.jobs),
    }
}

pub fn cmd_solve(a: &SolveArgs, seed: u64) -> Result<Status> {
    let opts = a.solver.options();
    let (lo, hi) = a.domain;
    let res = solve_equilibrium(&a.field, lo, hi, a.n, &opts)?;
    let mut file = res.to_file();
    if a.probe {
        let model = assemble_energy(res.measure.grid(), &a.field)?;
        file.uniqueness_gap = Some(uniqueness_probe(&model, &opts, seed)?);
    }
    file.save(&a.out)?;
    let support: Vec<String> = res
        .support
        .iter()
        .map(|s| format!("[{:.5}, {:.5}]", s.lo, s.hi))
        .collect();
    println!(
        "field {}  converged {}  iterations {}  F {:.6}  support {}",
        res.field,
        res.converged,
        res.iterations,
        res.constant,
        support.join(" ∪ ")
    );
    if let Some(gap) = file.uniqueness_gap {
        println!("uniqueness gap (L1) {gap:.3e}");
    }
    Ok(if res.converged {
        Status::Ok
    } else {
        Status::NotConverged
    })
}

pub fn cmd_hilbert(a: &HilbertArgs) -> Result<Status> {
    let f = Samples::load_csv(&a.input)?;
    hilbert_with(&f, a.method).save_csv(&a.out)?;
    info!("wrote {} samples to {}", f.len(), a.out.display());
    Ok(Status::Ok)
}

/// Runs the requested checks on a stored result.
pub fn verify_checks(a: &VerifyArgs) -> Result<Vec<CheckOutcome>> {
    let file = ResultFile::load(&a.result)?;
    let field = match &a.field {
        Some(f) => f.clone(),
        None => file.field.parse()?,
    };
    let mass = file.mass();
    let threshold = file.options.support_threshold;
    let mu = DiscreteMeasure::normalize(file.weights.clone(), file.grid)?;
    let mut result = file.into_normalized_result(mu.clone(), field.clone())?;
    result.options.support_threshold = threshold;
    let f = sqrt_density(&result);
    let mass_f = l2_mass(&f);

    let mut out = Vec::new();
    for &check in &a.checks {
        let outcome = match check {
            Check::Kkt => {
                let c = estimate_constant_with(&mu, &field, threshold);
                let (pass, detail) = match c {
                    Ok(c) => {
                        let r = variational_residuals_with(&mu, &field, c, threshold)?;
                        let pass = (mass - 1.0).abs() <= tolerance::MASS
                            && r.eq_residual_max <= tolerance::EQ_RESIDUAL
                            && r.ineq_violation_max <= tolerance::INEQ_VIOLATION;
                        (
                            pass,
                            format!(
                                "mass {mass:.9}  F {c:.6}  eq_residual {:.3e}  ineq_violation {:.3e}",
                                r.eq_residual_max, r.ineq_violation_max
                            ),
                        )
                    }
                    Err(e) => (false, e.to_string()),
                };
                CheckOutcome {
                    check,
                    pass,
                    detail,
                }
            }
            Check::Tricomi => match tricomi_defect(&f) {
                Ok(t) => {
                    let p = t.interior_max();
                    let s = t.scalar.abs();
                    CheckOutcome {
                        check,
                        pass: p <= tolerance::TRICOMI_POINTWISE
                            && s <= tolerance::ORTHOGONALITY * mass_f,
                        detail: format!("interior pointwise {p:.3e}  scalar {s:.3e}"),
                    }
                }
                Err(e) => CheckOutcome {
                    check,
                    pass: false,
                    detail: e.to_string(),
                },
            },
            Check::Orthogonality => match orthogonality_defect(&f) {
                Ok(d) => CheckOutcome {
                    check,
                    pass: d.abs() <= tolerance::ORTHOGONALITY * mass_f,
                    detail: format!("defect {:.3e}  l2_mass {mass_f:.6}", d.abs()),
                },
                Err(e) => CheckOutcome {
                    check,
                    pass: false,
                    detail: e.to_string(),
                },
            },
            Check::GradientIdentity => match gradient_identity_residual(&result, &field) {
                Ok(r) => CheckOutcome {
                    check,
                    pass: r <= tolerance::GRADIENT_IDENTITY,
                    detail: format!("residual {r:.3e}"),
                },
                Err(e) => CheckOutcome {
                    check,
                    pass: false,
                    detail: e.to_string(),
                },
            },
        };
        out.push(outcome);
    }
    Ok(out)
}

pub fn cmd_sweep(a: &SweepArgs, jobs: usize) -> Result<Status> {
    let report = truncation_sweep(&a.field, &a.ls, a.spacing, &a.solver.options(), jobs)?;
    report.save_json(&a.out)?;
    if let Some(csv) = &a.csv {
        report.save_csv(csv)?;
    }
    for r in &report.rows {
        println!(
            "L {:>8}  n {:>6}  l2_mass {:.6}  converged {}",
            r.half_width, r.n, r.l2_mass, r.converged
        );
    }
    println!("verdict {}", report.verdict);
    Ok(if report.rows.iter().all(|r| r.converged) {
        Status::Ok
    } else {
        Status::NotConverged
    })
}
