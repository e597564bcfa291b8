//! Reproduces the deflation experiments and solves user-supplied systems.
//!
//! Exit status: 0 when every requested row completed and every built-in
//! check held, 1 on errors, 2 on usage errors, 3 when the run completed but
//! a row failed or a check did not hold.

mod output;
mod subspace;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use deflatron::experiments::{figure1, table1_row, table2, Figure1Config, Table1Config, Table1Row};
use deflatron::linalg::mm::{read_matrix_file, read_vector_file, write_coordinate_file, write_vector_file, MmSymmetry};
use deflatron::linalg::{assert_spd_sample, norm2, SparseMatrix};
use deflatron::problems::{laplace_bilinear, outlier_spectrum, random_unit_solution_rhs, Frame};
use deflatron::projection::DeflatedOperator;
use deflatron::solvers::{CgConfig, CoarsePolicy, DeflatedCg, Formulation, StopRule};
use deflatron::subspaces::CoarseIndexing;

use output::{write_csv, write_json, Cell, Envelope, Format};
use subspace::SubspaceSpec;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser)]
#[command(
    name = "deflatron",
    version,
    about = "Deflated conjugate gradients and their convergence constants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Outer iteration counts on the N = 2^p - 1 grid problems.
    Table1(Table1Args),
    /// Spectral constants of one grid problem (dense).
    Table2(Table2Args),
    /// Effective condition number under perturbed eigenvector deflation.
    Figure1(Figure1Args),
    /// Solves a Matrix Market system with deflated CG.
    Solve(SolveArgs),
    /// Writes a generated matrix (and optionally a right-hand side).
    Export(ExportArgs),
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum Indexing {
    /// Grid coordinates counted from 0.
    ZeroBased,
    /// Grid coordinates counted from 1.
    OneBased,
}

impl From<Indexing> for CoarseIndexing {
    fn from(i: Indexing) -> Self {
        match i {
            Indexing::ZeroBased => CoarseIndexing::ZeroBasedEven,
            Indexing::OneBased => CoarseIndexing::OneBasedEven,
        }
    }
}

#[derive(Args)]
struct Table1Args {
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(2..=12))]
    p_min: u32,
    #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u32).range(2..=12))]
    p_max: u32,
    /// Residual target.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Stop at `‖r‖ ≤ tol ‖b‖` instead of `‖r‖ ≤ tol`.
    #[arg(long)]
    relative: bool,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Coarse solve policy: direct, fixed:<tol> or adaptive:<c>.
    #[arg(long, default_value = "adaptive:1")]
    inner: CoarsePolicy,
    /// Seed of the manufactured solution.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value = "zero-based")]
    indexing: Indexing,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct Table2Args {
    /// Grid points per side.
    #[arg(long, default_value_t = 31)]
    n_grid: usize,
    #[arg(long, value_enum, default_value = "zero-based")]
    indexing: Indexing,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct Figure1Args {
    /// Comma-separated values of ‖E₁‖_F; defaults to 0 and 10^(-8 + j/2), j = 0..=16.
    #[arg(long, value_delimiter = ',')]
    magnitudes: Option<Vec<f64>>,
    /// Seed of the eigenvector frame; the direction uses the next seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SolveArgs {
    /// Symmetric positive definite matrix in Matrix Market format.
    #[arg(long)]
    matrix: PathBuf,
    /// aggregation:<json|path>, interpolation:full_coarsening:<N>, eigen:<k> or basis_file:<path>.
    #[arg(long)]
    subspace: SubspaceSpec,
    /// Right-hand side vector file.
    #[arg(long, conflicts_with = "seed")]
    rhs: Option<PathBuf>,
    /// Seed of a manufactured unit-norm solution (used when --rhs is absent).
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Stop at `‖r‖ ≤ tol` instead of `‖r‖ ≤ tol ‖b‖`.
    #[arg(long)]
    absolute: bool,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value = "direct")]
    inner: CoarsePolicy,
    #[arg(long, value_enum, default_value = "zero-based")]
    indexing: Indexing,
    /// Where to write the solution vector.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Skip the randomized positive-definiteness check.
    #[arg(long)]
    no_spd_check: bool,
    /// JSON report file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
enum ProblemKind {
    /// The bilinear stencil on an N x N grid.
    Grid,
    /// Eigenvalues {0.01, 1 x 99} in a seeded orthogonal frame.
    Outlier,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long, value_enum, default_value = "grid")]
    problem: ProblemKind,
    #[arg(long, default_value_t = 7)]
    n_grid: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Matrix file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write b = A x_true for the manufactured solution of --seed.
    #[arg(long)]
    rhs_out: Option<PathBuf>,
}

/// Whether the run met every check.
enum Status {
    Ok,
    Failed(Vec<String>),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Command::Table1(a) = &cli.command {
        if a.p_min > a.p_max {
            Cli::command()
                .error(
                    clap::error::ErrorKind::ArgumentConflict,
                    format!("--p-min {} exceeds --p-max {}", a.p_min, a.p_max),
                )
                .exit();
        }
    }
    let result = match cli.command {
        Command::Table1(a) => cmd_table1(a),
        Command::Table2(a) => cmd_table2(a),
        Command::Figure1(a) => cmd_figure1(a),
        Command::Solve(a) => cmd_solve(a),
        Command::Export(a) => cmd_export(a),
    };
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Failed(problems)) => {
            for p in problems {
                eprintln!("deflatron: check failed: {p}");
            }
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("deflatron: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn status(problems: Vec<String>) -> Status {
    if problems.is_empty() {
        Status::Ok
    } else {
        Status::Failed(problems)
    }
}

fn provenance<C: Serialize>(command: &str, config: &C) -> Result<String> {
    Ok(format!(
        "deflatron {VERSION} {command} {}",
        serde_json::to_string(config)?
    ))
}

#[derive(Serialize)]
struct Table1Record {
    p: u32,
    #[serde(flatten)]
    row: Option<Table1Row>,
    error_message: Option<String>,
}

fn cmd_table1(args: Table1Args) -> Result<Status> {
    let cfg = Table1Config {
        tol: args.tol,
        stop_rule: if args.relative {
            StopRule::Relative
        } else {
            StopRule::Absolute
        },
        max_iter: args.max_iter,
        policy: args.inner,
        indexing: args.indexing.into(),
        seed: args.seed,
    };
    // Validate once up front so a bad tolerance is a usage problem, not six
    // failed rows.
    CgConfig::with_rule(cfg.tol, cfg.stop_rule, cfg.max_iter)?;
    let mut records = Vec::new();
    let mut problems = Vec::new();
    for p in args.p_min..=args.p_max {
        match table1_row(p, &cfg) {
            Ok(row) => {
                if !row.converged {
                    problems.push(format!("p = {p} did not converge in {} iterations", row.iterations));
                }
                records.push(Table1Record {
                    p,
                    row: Some(row),
                    error_message: None,
                });
            }
            Err(e) => {
                problems.push(format!("p = {p}: {e}"));
                records.push(Table1Record {
                    p,
                    row: None,
                    error_message: Some(e.to_string()),
                });
            }
        }
    }
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Json => write_json(
            out,
            &Envelope {
                command: "table1",
                version: VERSION,
                config: &cfg,
                results: &records,
            },
        )?,
        Format::Csv => {
            let header = [
                "p",
                "N",
                "n",
                "m",
                "iterations",
                "converged",
                "final_residual",
                "true_residual",
                "error",
                "inner_iterations",
                "status",
            ];
            let rows = records
                .iter()
                .map(|r| match &r.row {
                    Some(row) => vec![
                        Cell::Int(row.p.into()),
                        row.n_grid.into(),
                        row.n.into(),
                        row.m.into(),
                        row.iterations.into(),
                        row.converged.into(),
                        row.final_residual.into(),
                        row.true_residual.into(),
                        row.error.into(),
                        row.inner_iterations_total.into(),
                        "ok".into(),
                    ],
                    None => {
                        let mut cells = vec![Cell::Int(r.p.into()), Cell::Int((1u64 << r.p) - 1)];
                        cells.extend((0..8).map(|_| Cell::Na));
                        cells.push(Cell::Text(r.error_message.clone().unwrap_or_default()));
                        cells
                    }
                })
                .collect();
            write_csv(out, &provenance("table1", &cfg)?, &header, rows)?;
        }
    }
    Ok(status(problems))
}

#[derive(Serialize)]
struct Table2Config {
    n_grid: usize,
    indexing: Indexing,
}

fn cmd_table2(args: Table2Args) -> Result<Status> {
    let cfg = Table2Config {
        n_grid: args.n_grid,
        indexing: args.indexing,
    };
    let t = table2(args.n_grid, args.indexing.into())?;
    let problems = t.report.violations();
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Json => write_json(
            out,
            &Envelope {
                command: "table2",
                version: VERSION,
                config: &cfg,
                results: &t,
            },
        )?,
        Format::Csv => {
            let r = &t.report;
            let header = [
                "N",
                "n",
                "m",
                "lambda_min",
                "lambda_max",
                "kappa",
                "mu_ell",
                "mu_1",
                "kappa_eff",
                "K",
                "gamma",
                "xi",
                "bound",
            ];
            let row = vec![
                t.n_grid.into(),
                (t.n_grid * t.n_grid).into(),
                t.m.into(),
                r.lambda_min.into(),
                r.lambda_max.into(),
                r.kappa.into(),
                r.mu_ell.into(),
                r.mu_1.into(),
                r.kappa_eff.into(),
                r.k.into(),
                r.gamma.into(),
                r.xi.into(),
                r.bound.into(),
            ];
            write_csv(out, &provenance("table2", &cfg)?, &header, vec![row])?;
        }
    }
    Ok(status(problems))
}

fn cmd_figure1(args: Figure1Args) -> Result<Status> {
    let mut cfg = Figure1Config {
        frame_seed: args.seed,
        direction_seed: args.seed.wrapping_add(1),
        ..Figure1Config::default()
    };
    if let Some(m) = args.magnitudes {
        if let Some(bad) = m.iter().find(|&&x| !(x >= 0.0 && x.is_finite())) {
            bail!("magnitude {bad} is not a finite non-negative number");
        }
        cfg.magnitudes = m;
    }
    let sweep = figure1(&cfg)?;
    let mut problems = Vec::new();
    for r in &sweep.records {
        if let Some(e) = r.kappa_eff_estimate {
            if e < r.kappa_eff_actual {
                problems.push(format!(
                    "estimate {e} below actual {} at ‖E₁‖_F = {}",
                    r.kappa_eff_actual, r.e1_frob
                ));
            }
        }
        if r.kappa_eff_actual > sweep.kappa * (1.0 + 1e-6) {
            problems.push(format!(
                "kappa_eff {} above kappa {} at ‖E₁‖_F = {}",
                r.kappa_eff_actual, sweep.kappa, r.e1_frob
            ));
        }
    }
    let out = args.output.out.as_deref();
    match args.output.format {
        Format::Json => write_json(
            out,
            &Envelope {
                command: "figure1",
                version: VERSION,
                config: &cfg,
                results: &sweep,
            },
        )?,
        Format::Csv => {
            let header = [
                "e1_frob",
                "delta_measured",
                "delta_bound",
                "kappa_eff_actual",
                "kappa_eff_estimate",
                "kappa_opt",
                "kappa",
            ];
            let rows = sweep
                .records
                .iter()
                .map(|r| {
                    vec![
                        r.e1_frob.into(),
                        r.delta_measured.into(),
                        r.delta_bound.into(),
                        r.kappa_eff_actual.into(),
                        r.kappa_eff_estimate.into(),
                        r.kappa_opt.into(),
                        sweep.kappa.into(),
                    ]
                })
                .collect();
            write_csv(out, &provenance("figure1", &cfg)?, &header, rows)?;
        }
    }
    Ok(status(problems))
}

#[derive(Serialize)]
struct SolveConfig {
    matrix: PathBuf,
    subspace: String,
    rhs: Option<PathBuf>,
    seed: Option<u64>,
    tol: f64,
    stop_rule: StopRule,
    max_iter: usize,
    inner: CoarsePolicy,
    indexing: Indexing,
}

#[derive(Serialize)]
struct SolveSummary {
    n: usize,
    m: usize,
    provenance: deflatron::projection::Provenance,
    formulation: Formulation,
    iterations: usize,
    converged: bool,
    final_residual: f64,
    true_residual: f64,
    threshold: f64,
    inner_iterations_total: usize,
    residual_history: Vec<f64>,
    /// `‖x - x_true‖₂` when the right-hand side is manufactured.
    error: Option<f64>,
}

fn load_matrix(path: &Path) -> Result<SparseMatrix> {
    let csr = read_matrix_file(path).with_context(|| format!("cannot read matrix {}", path.display()))?;
    Ok(SparseMatrix::new(csr)?)
}

fn cmd_solve(args: SolveArgs) -> Result<Status> {
    let stop_rule = if args.absolute {
        StopRule::Absolute
    } else {
        StopRule::Relative
    };
    let cg_cfg = CgConfig::with_rule(args.tol, stop_rule, args.max_iter)?;
    let a = load_matrix(&args.matrix)?;
    if !args.no_spd_check && !assert_spd_sample(&a, 8, args.seed) {
        bail!("{} failed the positive-definiteness check", args.matrix.display());
    }
    let basis = args.subspace.build(&a, args.indexing.into())?;
    let (b, x_true) = match &args.rhs {
        Some(path) => {
            let b =
                read_vector_file(path).with_context(|| format!("cannot read right-hand side {}", path.display()))?;
            if b.len() != a.n() {
                bail!("right-hand side has length {}, matrix order is {}", b.len(), a.n());
            }
            (b, None)
        }
        None => {
            let s = random_unit_solution_rhs(&a, args.seed)?;
            (s.b, Some(s.x_true))
        }
    };
    let op = DeflatedOperator::new(&a, &basis, args.inner)?;
    let report = DeflatedCg::new(&op).solve(&b, None, &cg_cfg)?;
    if let Some(path) = &args.solution {
        let comment = format!("deflatron {VERSION} solution of {}", args.matrix.display());
        write_vector_file(path, &report.x, &[comment])
            .with_context(|| format!("cannot write solution {}", path.display()))?;
    }
    let config = SolveConfig {
        matrix: args.matrix.clone(),
        subspace: args.subspace.to_string(),
        seed: args.rhs.is_none().then_some(args.seed),
        rhs: args.rhs.clone(),
        tol: args.tol,
        stop_rule,
        max_iter: args.max_iter,
        inner: args.inner,
        indexing: args.indexing,
    };
    let error = x_true.map(|xt| norm2(&report.x.iter().zip(&xt).map(|(x, t)| x - t).collect::<Vec<_>>()));
    let summary = SolveSummary {
        n: a.n(),
        m: basis.m(),
        provenance: basis.provenance(),
        formulation: if args.inner.is_exact() {
            Formulation::Saad
        } else {
            Formulation::DeflatedSystem
        },
        iterations: report.iterations,
        converged: report.converged,
        final_residual: report.final_residual,
        true_residual: report.true_residual,
        threshold: report.threshold,
        inner_iterations_total: report.inner_iterations_total,
        residual_history: report.residual_history,
        error,
    };
    write_json(
        args.out.as_deref(),
        &Envelope {
            command: "solve",
            version: VERSION,
            config: &config,
            results: &summary,
        },
    )?;
    let mut problems = Vec::new();
    if !summary.converged {
        problems.push(format!("no convergence within {} iterations", summary.iterations));
    }
    Ok(status(problems))
}

fn cmd_export(args: ExportArgs) -> Result<Status> {
    let (matrix, label) = match args.problem {
        ProblemKind::Grid => (
            laplace_bilinear(args.n_grid)?.matrix,
            format!("bilinear stencil on a {0} x {0} grid", args.n_grid),
        ),
        ProblemKind::Outlier => (
            outlier_spectrum(Frame::RandomOrthogonal { seed: args.seed })?.matrix,
            format!("eigenvalues 0.01 and 1 (x99), frame seed {}", args.seed),
        ),
    };
    let comments = [format!("deflatron {VERSION} {label}")];
    write_coordinate_file(&args.out, matrix.as_csr(), MmSymmetry::Symmetric, &comments)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    if let Some(path) = &args.rhs_out {
        let s = random_unit_solution_rhs(&matrix, args.seed)?;
        let comments = [format!(
            "deflatron {VERSION} b = A x_true, x_true from seed {}",
            args.seed
        )];
        write_vector_file(path, &s.b, &comments).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(Status::Ok)
}
