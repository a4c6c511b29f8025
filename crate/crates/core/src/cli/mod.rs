//! Command-line front end: problem files in, field files and JSON reports out.
//!
//! Exit codes: `0` success, `2` invalid input, `3` incompatible data,
//! `4` non-convergence. Outputs are deterministic: identical inputs and seed
//! give byte-identical files. Wall-clock time goes to stderr only.

pub mod format;
pub mod problem_file;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{Map, Value};

use crate::capacity::{capacity_l2, CapacityOptions, PRODUCT_NORM};
use crate::error::Error;
use crate::field::{BoundaryValues, FaceField, ScalarField};
use crate::grid::Grid;
use crate::operators::{interior_face_norm, pairing_terms, AffineBasis, HessianOperator};
use crate::problem::{manufacture, BalanceProblem, COMPATIBILITY_RTOL};
use crate::solver_dissipation::{
    classical_dissipation, classical_dual_value, el_residual, solve_dissipation_classical,
    solve_dissipation_dual, w22_dual_objective, DissipationOptions, DualDissipationOptions,
};
use crate::solver_l2::{l2_dual_value, solve_l2, L2Options};
use crate::solver_lq::{dual_exponent, lq_dual_objective, solve_lq, LqOptions};

use format::{export_fields, json_float, parse_fields};
use problem_file::{
    parse_grid, parse_mask, parse_problem_at, problem_to_json, Objective, ProblemFile,
    SolverSettings,
};

/// Environment variable overriding every seed.
pub const SEED_ENV: &str = "FLUXOPT_SEED";

/// Relative tolerance of the Gauss identity battery.
pub const GAUSS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{0}")]
    Incompatible(String),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Incompatible(_) => 3,
            CliError::NotConverged(_) => 4,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Incompatible { .. } => CliError::Incompatible(e.to_string()),
            Error::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "fluxopt",
    version,
    about = "Optimal flux fields on structured grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem file; writes flux.csv and report.json into --out.
    Solve {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Capacity of a grid for the 2-norm pairing.
    Capacity {
        /// Grid JSON: {"dims", "spacing", "mask"} or a problem file.
        grid: PathBuf,
        /// Flux bound M; reports the admissible data norm C * M.
        #[arg(long = "M", short = 'M')]
        m: Option<f64>,
    },
    /// Re-evaluate balance and duality of a field file against a problem.
    Verify { problem: PathBuf, flux: PathBuf },
    /// Write a compatible problem with a known flux (`<stem>.flux.csv`).
    Manufacture {
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        /// Cell sizes; defaults to a unit box.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        spacing: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Case::Trig)]
        case: Case,
        #[arg(long, default_value = "l2")]
        objective: String,
        /// Exponent for `--objective lp`: a number or `inf`.
        #[arg(long)]
        exponent: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the discrete Gauss identity on random triples.
    GaussCheck {
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        spacing: Option<Vec<f64>>,
        /// JSON array of 0/1 or booleans in lattice order.
        #[arg(long)]
        mask: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Case {
    Trig,
    Polynomial,
    RandomSmooth,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
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
    let started = Instant::now();
    let result = dispatch(cli.command);
    eprintln!("wall_time: {:.3} s", started.elapsed().as_secs_f64());
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("fluxopt: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Solve { problem, out } => cmd_solve(&problem, &out),
        Command::Capacity { grid, m } => cmd_capacity(&grid, m),
        Command::Verify { problem, flux } => cmd_verify(&problem, &flux),
        Command::Manufacture {
            dims,
            spacing,
            case,
            objective,
            exponent,
            tol,
            seed,
            out,
        } => cmd_manufacture(
            &dims,
            spacing,
            case,
            &objective,
            exponent.as_deref(),
            tol,
            seed,
            &out,
        ),
        Command::GaussCheck {
            dims,
            spacing,
            mask,
            trials,
            seed,
        } => cmd_gauss_check(&dims, spacing, mask.as_deref(), trials, seed),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn to_json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s.trim().parse().map(Some).map_err(|_| {
            CliError::Invalid(format!("{SEED_ENV}: not a non-negative integer: {s:?}"))
        }),
        Err(_) => Ok(None),
    }
}

fn load_problem(path: &Path) -> Result<ProblemFile, CliError> {
    let text = read(path)?;
    let mut file = parse_problem_at(&text, path.parent())?;
    if let Some(seed) = env_seed()? {
        file.solver.seed = seed;
    }
    Ok(file)
}

fn check_compatible(problem: &BalanceProblem) -> Result<(), CliError> {
    problem
        .check_optimizable(COMPATIBILITY_RTOL)
        .map_err(CliError::from)
}

fn exponent_json(objective: Objective) -> Value {
    match objective {
        Objective::L2 => json_float(2.0),
        Objective::Lp(a) if a.is_infinite() => Value::from("inf"),
        Objective::Lp(a) => json_float(a),
        _ => Value::Null,
    }
}

fn norm_conventions(objective: Objective) -> Value {
    let flux_norm = match objective {
        Objective::L2 | Objective::Lp(_) => {
            "omega: weighted a-norm over interior faces; full_norm: weighted 2-norm over all faces"
        }
        Objective::DissipationClassical => {
            "omega: face-lattice dissipation sum of weight * (w[f] - w[g])^2"
        }
        Objective::DissipationDual => {
            "omega: weighted 2-norm of the cell Hessian, affine load removed"
        }
    };
    let mut m = Map::new();
    m.insert(
        "face_weights".into(),
        "cell volume on interior faces, half on boundary faces, zero outside".into(),
    );
    m.insert("flux_norm".into(), flux_norm.into());
    m.insert("product_norm".into(), PRODUCT_NORM.into());
    Value::Object(m)
}

fn solver_json(s: &SolverSettings) -> Value {
    let mut m = Map::new();
    m.insert("tol".into(), json_float(s.tol));
    m.insert("max_iter".into(), Value::from(s.max_iter));
    m.insert("seed".into(), Value::from(s.seed));
    Value::Object(m)
}

/// Outcome of one solve, in the shape written to disk.
struct Solved {
    cells: Vec<f64>,
    faces: Vec<f64>,
    omega: f64,
    full_norm: Option<f64>,
    report: crate::report::SolveReport,
    residual_kind: &'static str,
    diagnostics: Map<String, Value>,
}

fn solve_file(file: &ProblemFile) -> Result<Solved, CliError> {
    let p = &file.problem;
    let s = file.solver;
    let mut diagnostics = Map::new();
    let solved = match file.objective {
        Objective::L2 => {
            let sol = solve_l2(
                p,
                &L2Options {
                    tol: s.tol,
                    max_iter: s.max_iter,
                    jacobi: false,
                },
            )?;
            Solved {
                cells: sol.potential.into_vec(),
                faces: sol.w_opt.into_vec(),
                omega: sol.omega,
                full_norm: Some(sol.full_norm),
                report: sol.report,
                residual_kind: "balance",
                diagnostics,
            }
        }
        Objective::Lp(a) => {
            let opts = LqOptions {
                tol_gap: s.tol,
                max_iter: s.max_iter,
                ..Default::default()
            };
            let sol = solve_lq(p, a, &opts)?;
            Solved {
                cells: sol.psi_dual.into_vec(),
                faces: sol.w_opt.into_vec(),
                omega: sol.omega_primal,
                full_norm: None,
                report: sol.report,
                residual_kind: "balance",
                diagnostics,
            }
        }
        Objective::DissipationClassical => {
            let sol = solve_dissipation_classical(
                p,
                &DissipationOptions {
                    tol: s.tol,
                    max_iter: s.max_iter,
                },
            )?;
            let el = el_residual(p, &sol);
            diagnostics.insert(
                "el_interior_residual".into(),
                json_float(el.interior_residual),
            );
            diagnostics.insert(
                "el_boundary_tangential_traction".into(),
                json_float(el.boundary_tangential_traction),
            );
            Solved {
                cells: sol.lambda.into_vec(),
                faces: sol.w.into_vec(),
                omega: sol.dissipation,
                full_norm: None,
                report: sol.report,
                residual_kind: "balance",
                diagnostics,
            }
        }
        Objective::DissipationDual => {
            let opts = DualDissipationOptions {
                tol: s.tol,
                max_iter: s.max_iter,
                seed: Some(s.seed),
            };
            let sol = solve_dissipation_dual(p, &opts)?;
            diagnostics.insert(
                "affine_load".into(),
                Value::Array(sol.affine_load.iter().map(|&v| json_float(v)).collect()),
            );
            Solved {
                cells: sol.phi.into_vec(),
                faces: sol.w_bar.into_vec(),
                omega: sol.omega,
                full_norm: None,
                report: sol.report,
                residual_kind: "representer",
                diagnostics,
            }
        }
    };
    Ok(solved)
}

fn cmd_solve(path: &Path, out: &Path) -> Result<i32, CliError> {
    let file = load_problem(path)?;
    check_compatible(&file.problem)?;
    let solved = solve_file(&file)?;
    let grid = file.problem.grid();

    let r = &solved.report;
    let mut m = Map::new();
    m.insert("objective".into(), file.objective.name().into());
    m.insert("exponent".into(), exponent_json(file.objective));
    m.insert("omega".into(), json_float(solved.omega));
    m.insert(
        "full_norm".into(),
        solved.full_norm.map_or(Value::Null, json_float),
    );
    m.insert("dual_value".into(), json_float(r.dual_value));
    m.insert("gap".into(), json_float(r.gap));
    m.insert("relative_gap".into(), json_float(r.relative_gap()));
    m.insert(
        "compatibility_residual".into(),
        json_float(file.problem.compatibility_residual()),
    );
    m.insert("residual_kind".into(), solved.residual_kind.into());
    m.insert("balance_residual".into(), json_float(r.constraint_residual));
    m.insert("iterations".into(), Value::from(r.iterations));
    m.insert("converged".into(), Value::from(r.converged));
    m.insert("diagnostics".into(), Value::Object(solved.diagnostics));
    m.insert("solver".into(), solver_json(&file.solver));
    m.insert("norm_conventions".into(), norm_conventions(file.objective));
    let report = to_json_text(&Value::Object(m));

    std::fs::create_dir_all(out)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", out.display())))?;
    write(
        &out.join("flux.csv"),
        &export_fields(grid, Some(&solved.cells), Some(&solved.faces)),
    )?;
    write(&out.join("report.json"), &report)?;
    print!("{report}");
    if !r.converged {
        return Err(CliError::NotConverged(format!(
            "{} after {} iterations; outputs written",
            file.objective.name(),
            r.iterations
        )));
    }
    Ok(0)
}

fn cmd_capacity(path: &Path, m: Option<f64>) -> Result<i32, CliError> {
    let doc: Value = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Invalid(format!("invalid JSON: {e}")))?;
    let grid = parse_grid(&doc)?;
    if let Some(m) = m {
        if !(m > 0.0 && m.is_finite()) {
            return Err(CliError::Invalid("--M must be a positive number".into()));
        }
    }
    let seed = env_seed()?.unwrap_or(0);
    let report = capacity_l2(
        &grid,
        &CapacityOptions {
            seed,
            ..Default::default()
        },
    )?;
    let mut out = Map::new();
    out.insert("k".into(), json_float(report.k));
    out.insert("c".into(), json_float(report.c));
    out.insert("iterations".into(), Value::from(report.iterations));
    out.insert("seed".into(), Value::from(seed));
    out.insert("product_norm".into(), PRODUCT_NORM.into());
    if let Some(m) = m {
        out.insert("m".into(), json_float(m));
        out.insert("admissible_norm".into(), json_float(report.c * m));
    }
    print!("{}", to_json_text(&Value::Object(out)));
    Ok(0)
}

/// Feasibility threshold for fields produced at solver tolerance `tol`.
fn feasibility_tol(tol: f64) -> f64 {
    (10.0 * tol).max(1e-12)
}

fn cmd_verify(problem_path: &Path, flux_path: &Path) -> Result<i32, CliError> {
    let file = load_problem(problem_path)?;
    let p = &file.problem;
    let grid = p.grid();
    let (cells, faces) = parse_fields(grid, &read(flux_path)?)?;
    let threshold = feasibility_tol(file.solver.tol);
    let mut out = Map::new();
    out.insert("objective".into(), file.objective.name().into());

    let (residual, mismatch, primal, dual) = if file.objective == Objective::DissipationDual {
        let phi = cells.ok_or_else(|| CliError::Invalid("field file has no cell rows".into()))?;
        (
            representer_residual(p, &phi),
            None,
            Some(HessianOperator::new(grid).norm(&phi)),
            w22_dual_objective(p, &phi).ok(),
        )
    } else {
        let w = faces.ok_or_else(|| CliError::Invalid("field file has no face rows".into()))?;
        let mismatch = boundary_mismatch(grid, &w, p.tau());
        let (primal, dual) = match file.objective {
            Objective::L2 => (
                interior_face_norm(grid, &w, 2.0),
                cells.as_ref().map(|psi| l2_dual_value(p, psi)),
            ),
            Objective::Lp(a) => (
                interior_face_norm(grid, &w, a),
                cells
                    .as_ref()
                    .and_then(|psi| lq_dual_objective(p, psi, dual_exponent(a)).ok()),
            ),
            _ => (
                classical_dissipation(grid, &w),
                cells.as_ref().map(|lambda| classical_dual_value(p, lambda)),
            ),
        };
        (
            p.relative_balance_residual(&w),
            Some(mismatch),
            Some(primal),
            dual,
        )
    };
    let feasible = residual <= threshold && mismatch.is_none_or(|m| m <= threshold);
    out.insert("feasible".into(), Value::from(feasible));
    out.insert("balance_residual".into(), json_float(residual));
    out.insert(
        "boundary_mismatch".into(),
        mismatch.map_or(Value::Null, json_float),
    );
    out.insert("threshold".into(), json_float(threshold));
    out.insert("primal".into(), primal.map_or(Value::Null, json_float));
    out.insert("dual".into(), dual.map_or(Value::Null, json_float));
    let gap = primal.zip(dual).map(|(a, b)| a - b);
    out.insert("gap".into(), gap.map_or(Value::Null, json_float));
    print!("{}", to_json_text(&Value::Object(out)));
    Ok(0)
}

/// Largest boundary-face deviation of `w` from `tau`, relative to the
/// largest `|tau|` (absolute when `tau` vanishes).
fn boundary_mismatch(grid: &Grid, w: &FaceField, tau: &BoundaryValues) -> f64 {
    let normal = w.boundary_normal(grid);
    let worst = normal
        .iter()
        .zip(tau.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let scale = tau.max_abs();
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

/// `||H'WH phi - P F|| / ||P F||` with `P` removing the affine part.
fn representer_residual(problem: &BalanceProblem, phi: &[f64]) -> f64 {
    let grid = problem.grid();
    let basis = AffineBasis::new(grid);
    let mut load = problem.assemble_load().as_slice().to_vec();
    basis.project_out(&mut load);
    let mut lhs = HessianOperator::new(grid).normal_apply(phi);
    basis.project_out(&mut lhs);
    let diff = lhs
        .iter()
        .zip(&load)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale = load.iter().map(|b| b * b).sum::<f64>().sqrt();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

fn grid_from_args(
    dims: &[usize],
    spacing: Option<Vec<f64>>,
    mask: Option<Vec<bool>>,
) -> Result<Grid, CliError> {
    let spacing = spacing.unwrap_or_else(|| dims.iter().map(|&n| 1.0 / n.max(1) as f64).collect());
    Grid::with_mask(dims, &spacing, mask.as_deref()).map_err(|e| CliError::Invalid(e.to_string()))
}

fn parse_objective_args(name: &str, exponent: Option<&str>) -> Result<Objective, CliError> {
    let objective = match name {
        "l2" => Objective::L2,
        "dissipation-classical" => Objective::DissipationClassical,
        "dissipation-dual" => Objective::DissipationDual,
        "lp" => {
            let text = exponent
                .ok_or_else(|| CliError::Invalid("--objective lp needs --exponent".into()))?;
            let a = if text == "inf" {
                f64::INFINITY
            } else {
                text.parse::<f64>()
                    .map_err(|_| CliError::Invalid(format!("--exponent: not a number: {text:?}")))?
            };
            if a.is_nan() || a <= 1.0 {
                return Err(CliError::Invalid(format!(
                    "--exponent: unsupported exponent {a}; need a > 1"
                )));
            }
            Objective::Lp(a)
        }
        other => {
            return Err(CliError::Invalid(format!(
                "--objective: unknown objective {other:?}"
            )))
        }
    };
    if exponent.is_some() && !matches!(objective, Objective::Lp(_)) {
        return Err(CliError::Invalid(
            "--exponent is only meaningful with --objective lp".into(),
        ));
    }
    Ok(objective)
}

/// Reference potential of a manufactured case on the box spanned by `grid`.
fn reference_potential(grid: &Grid, case: Case, seed: u64) -> Vec<f64> {
    let d = grid.ndim();
    let len: Vec<f64> = (0..d)
        .map(|a| grid.dims()[a] as f64 * grid.spacing()[a])
        .collect();
    let pi = std::f64::consts::PI;
    match case {
        Case::Trig => (0..grid.n_active())
            .map(|c| {
                let x = grid.cell_center(c);
                (0..d).map(|a| (pi * x[a] / len[a]).cos()).product::<f64>()
                    + (2.0 * pi * x[0] / len[0]).sin()
            })
            .collect(),
        Case::Polynomial => (0..grid.n_active())
            .map(|c| {
                let x = grid.cell_center(c);
                let u: Vec<f64> = (0..d).map(|a| x[a] / len[a]).collect();
                let v = if d > 1 { u[1] } else { 0.0 };
                u[0] * u[0] * v - v.powi(3) / 3.0
                    + u[0].powi(3)
                    + u.iter().map(|t| t * t).sum::<f64>()
            })
            .collect(),
        Case::RandomSmooth => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let modes: Vec<(f64, [f64; 3], [f64; 3])> = (0..6)
                .map(|_| {
                    let amp = rng.gen_range(-1.0..1.0);
                    let k = [0, 1, 2].map(|_| rng.gen_range(0..4) as f64);
                    let phase = [0, 1, 2].map(|_| rng.gen_range(0.0..2.0 * pi));
                    (amp, k, phase)
                })
                .collect();
            (0..grid.n_active())
                .map(|c| {
                    let x = grid.cell_center(c);
                    modes
                        .iter()
                        .map(|(amp, k, phase)| {
                            amp * (0..d)
                                .map(|a| (pi * k[a] * x[a] / len[a] + phase[a]).cos())
                                .product::<f64>()
                        })
                        .sum()
                })
                .collect()
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_manufacture(
    dims: &[usize],
    spacing: Option<Vec<f64>>,
    case: Case,
    objective: &str,
    exponent: Option<&str>,
    tol: Option<f64>,
    seed: Option<u64>,
    out: &Path,
) -> Result<i32, CliError> {
    let grid = grid_from_args(dims, spacing, None)?;
    let objective = parse_objective_args(objective, exponent)?;
    let seed = env_seed()?.or(seed).unwrap_or(0);
    let mut solver = SolverSettings {
        seed,
        ..Default::default()
    };
    if let Some(tol) = tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Invalid("--tol must be a positive number".into()));
        }
        solver.tol = tol;
    }
    let psi = reference_potential(&grid, case, seed);
    let (problem, w_ref) = manufacture(&grid, &psi);
    let psi_ref = crate::operators::zero_mean_project(&grid, &psi);
    let file = ProblemFile {
        problem,
        objective,
        solver,
    };

    let stem = out
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("problem");
    let flux_path = out.with_file_name(format!("{stem}.flux.csv"));
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", dir.display())))?;
    }
    write(out, &to_json_text(&problem_to_json(&file)))?;
    write(
        &flux_path,
        &export_fields(&grid, Some(&psi_ref), Some(&w_ref)),
    )?;
    Ok(0)
}

fn cmd_gauss_check(
    dims: &[usize],
    spacing: Option<Vec<f64>>,
    mask: Option<&Path>,
    trials: usize,
    seed: Option<u64>,
) -> Result<i32, CliError> {
    let mask = match mask {
        Some(path) => {
            let doc: Value = serde_json::from_str(&read(path)?)
                .map_err(|e| CliError::Invalid(format!("invalid JSON: {e}")))?;
            Some(parse_mask(&doc)?)
        }
        None => None,
    };
    let grid = grid_from_args(dims, spacing, mask)?;
    let seed = env_seed()?.or(seed).unwrap_or(0);
    let worst = gauss_battery(&grid, trials, seed);
    let mut out = Map::new();
    out.insert("trials".into(), Value::from(trials));
    out.insert("seed".into(), Value::from(seed));
    out.insert("max_relative_defect".into(), json_float(worst));
    out.insert("tolerance".into(), json_float(GAUSS_TOL));
    out.insert("pass".into(), Value::from(worst <= GAUSS_TOL));
    print!("{}", to_json_text(&Value::Object(out)));
    Ok(0)
}

/// Largest relative defect of the discrete Gauss identity over `trials`
/// random triples `(psi, w, tau)`.
pub fn gauss_battery(grid: &Grid, trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let psi: Vec<f64> = (0..grid.n_active())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let w: Vec<f64> = (0..grid.n_faces())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let tau: Vec<f64> = (0..grid.boundary_faces().len())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let mut w = FaceField::from_vec(grid, w).expect("sized for grid");
        w.clear_exterior(grid);
        let psi = ScalarField::from_vec(grid, psi).expect("sized for grid");
        let [a, b, c] = pairing_terms(grid, &psi, &w, &tau);
        let scale = a.abs() + b.abs() + c.abs();
        if scale > 0.0 {
            worst = worst.max((a + b - c).abs() / scale);
        }
    }
    worst
}
