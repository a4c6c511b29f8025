//! Problem files.
//!
//! A problem file is a JSON object:
//!
//! ```text
//! {
//!   "grid":      { "dims": [nx, ny(, nz)], "spacing": [hx, hy(, hz)], "mask": [0/1 ...] },
//!   "beta":      [per active cell] | { "csv": "path" } | { "constant": v },
//!   "tau":       [per boundary face] | { "sides": { "x-": v, "x+": v, ... } },
//!   "objective": "l2" | "dissipation-classical" | "dissipation-dual"
//!                | { "kind": "lp", "a": number | "inf" },
//!   "solver":    { "tol": 1e-8, "max_iter": 50000, "seed": 0 }
//! }
//! ```
//!
//! Only `grid` is required; data default to zero and the objective to `l2`.
//! Cell arrays follow the canonical cell order and boundary arrays the
//! canonical boundary-face order of [`Grid`].

use std::path::Path;

use serde_json::{Map, Value};

use crate::field::{BoundaryValues, ScalarField};
use crate::grid::Grid;
use crate::problem::BalanceProblem;

use super::format::{json_float, parse_fields};
use super::CliError;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    L2,
    /// Flux exponent `a`, possibly infinite.
    Lp(f64),
    DissipationClassical,
    DissipationDual,
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::L2 => "l2",
            Objective::Lp(_) => "lp",
            Objective::DissipationClassical => "dissipation-classical",
            Objective::DissipationDual => "dissipation-dual",
        }
    }

    fn to_json(self) -> Value {
        match self {
            Objective::Lp(a) => {
                let mut m = Map::new();
                m.insert("kind".into(), "lp".into());
                let a = if a.is_infinite() {
                    Value::from("inf")
                } else {
                    json_float(a)
                };
                m.insert("a".into(), a);
                Value::Object(m)
            }
            other => Value::from(other.name()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub problem: BalanceProblem,
    pub objective: Objective,
    pub solver: SolverSettings,
}

fn invalid(field: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Invalid(format!("field `{field}`: {reason}"))
}

fn check_keys(obj: &Map<String, Value>, field: &str, allowed: &[&str]) -> Result<(), CliError> {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            let name = if field.is_empty() {
                key.clone()
            } else {
                format!("{field}.{key}")
            };
            return Err(invalid(&name, "unknown field"));
        }
    }
    Ok(())
}

fn number(v: &Value, field: &str) -> Result<f64, CliError> {
    let x = v
        .as_f64()
        .ok_or_else(|| invalid(field, "must be a number"))?;
    if !x.is_finite() {
        return Err(invalid(field, "must be finite"));
    }
    Ok(x)
}

fn numbers(v: &Value, field: &str) -> Result<Vec<f64>, CliError> {
    let arr = v
        .as_array()
        .ok_or_else(|| invalid(field, "must be an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{field}[{i}]")))
        .collect()
}

fn length(field: &str, expected: usize, got: usize) -> Result<(), CliError> {
    if expected != got {
        return Err(invalid(
            field,
            format!("expected {expected} values, found {got}"),
        ));
    }
    Ok(())
}

/// Parses the `grid` object (also accepted as a whole document holding a
/// `grid` key).
pub fn parse_grid(v: &Value) -> Result<Grid, CliError> {
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("grid", "must be an object"))?;
    if let Some(inner) = obj.get("grid") {
        return parse_grid(inner);
    }
    check_keys(obj, "grid", &["dims", "spacing", "mask"])?;
    let dims: Vec<usize> = obj
        .get("dims")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("grid.dims", "required array of cell counts"))?
        .iter()
        .map(|d| d.as_u64().map(|d| d as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| invalid("grid.dims", "entries must be non-negative integers"))?;
    let spacing = match obj.get("spacing") {
        Some(s) => numbers(s, "grid.spacing")?,
        None => dims.iter().map(|&n| 1.0 / n.max(1) as f64).collect(),
    };
    let mask = obj.get("mask").map(parse_mask).transpose()?;
    Grid::with_mask(&dims, &spacing, mask.as_deref()).map_err(|e| invalid("grid", e))
}

/// Mask given as an array of booleans or 0/1 numbers in lattice order.
pub fn parse_mask(v: &Value) -> Result<Vec<bool>, CliError> {
    v.as_array()
        .ok_or_else(|| invalid("grid.mask", "must be an array of booleans or 0/1"))?
        .iter()
        .map(|x| match x {
            Value::Bool(b) => Some(*b),
            Value::Number(n) if n.as_f64() == Some(0.0) => Some(false),
            Value::Number(n) if n.as_f64() == Some(1.0) => Some(true),
            _ => None,
        })
        .collect::<Option<Vec<bool>>>()
        .ok_or_else(|| invalid("grid.mask", "entries must be booleans or 0/1"))
}

fn parse_beta(
    v: Option<&Value>,
    grid: &Grid,
    base: Option<&Path>,
) -> Result<ScalarField, CliError> {
    let n = grid.n_active();
    let values = match v {
        None => vec![0.0; n],
        Some(Value::Array(_)) => numbers(v.unwrap(), "beta")?,
        Some(Value::Object(obj)) => {
            check_keys(obj, "beta", &["csv", "constant"])?;
            if let Some(c) = obj.get("constant") {
                vec![number(c, "beta.constant")?; n]
            } else if let Some(path) = obj.get("csv") {
                let path = path
                    .as_str()
                    .ok_or_else(|| invalid("beta.csv", "must be a path"))?;
                let full = base.map(|b| b.join(path)).unwrap_or_else(|| path.into());
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| invalid("beta.csv", format!("{}: {e}", full.display())))?;
                let (cells, _) = parse_fields(grid, &text)?;
                cells
                    .ok_or_else(|| invalid("beta.csv", "file has no cell rows"))?
                    .into_vec()
            } else {
                return Err(invalid("beta", "object needs `csv` or `constant`"));
            }
        }
        Some(_) => return Err(invalid("beta", "must be an array or an object")),
    };
    length("beta", n, values.len())?;
    ScalarField::from_vec(grid, values).map_err(|e| invalid("beta", e))
}

const SIDES: [&str; 6] = ["x-", "x+", "y-", "y+", "z-", "z+"];

fn parse_tau(v: Option<&Value>, grid: &Grid) -> Result<BoundaryValues, CliError> {
    let n = grid.boundary_faces().len();
    let values = match v {
        None => vec![0.0; n],
        Some(Value::Array(_)) => numbers(v.unwrap(), "tau")?,
        Some(Value::Object(obj)) => {
            check_keys(obj, "tau", &["sides"])?;
            let sides = obj
                .get("sides")
                .and_then(Value::as_object)
                .ok_or_else(|| invalid("tau.sides", "must be an object"))?;
            let allowed = &SIDES[..2 * grid.ndim()];
            check_keys(sides, "tau.sides", allowed)?;
            let mut table = [0.0; 6];
            for (k, name) in allowed.iter().enumerate() {
                if let Some(x) = sides.get(*name) {
                    table[k] = number(x, &format!("tau.sides.{name}"))?;
                }
            }
            // expanded before validation, so reports show per-face values
            BoundaryValues::from_sides(grid, |axis, sign| table[2 * axis + usize::from(sign > 0.0)])
                .into_vec()
        }
        Some(_) => return Err(invalid("tau", "must be an array or an object")),
    };
    length("tau", n, values.len())?;
    BoundaryValues::from_vec(grid, values).map_err(|e| invalid("tau", e))
}

fn parse_objective(v: Option<&Value>) -> Result<Objective, CliError> {
    let by_name = |s: &str| match s {
        "l2" => Ok(Objective::L2),
        "dissipation-classical" => Ok(Objective::DissipationClassical),
        "dissipation-dual" => Ok(Objective::DissipationDual),
        "lp" => Err(invalid(
            "objective",
            "lp needs an exponent: {\"kind\": \"lp\", \"a\": ...}",
        )),
        other => Err(invalid("objective", format!("unknown objective {other:?}"))),
    };
    match v {
        None => Ok(Objective::L2),
        Some(Value::String(s)) => by_name(s),
        Some(Value::Object(obj)) => {
            check_keys(obj, "objective", &["kind", "a"])?;
            let kind = obj
                .get("kind")
                .and_then(Value::as_str)
                .ok_or_else(|| invalid("objective.kind", "required string"))?;
            if kind != "lp" {
                if obj.contains_key("a") {
                    return Err(invalid("objective.a", "only meaningful for lp"));
                }
                return by_name(kind);
            }
            let a = match obj.get("a") {
                Some(Value::String(s)) if s == "inf" => f64::INFINITY,
                Some(x) => number(x, "objective.a")?,
                None => return Err(invalid("objective.a", "required for lp")),
            };
            if a.is_nan() || a <= 1.0 {
                return Err(invalid(
                    "objective.a",
                    format!("unsupported exponent {a}; need a > 1"),
                ));
            }
            Ok(Objective::Lp(a))
        }
        Some(_) => Err(invalid("objective", "must be a string or an object")),
    }
}

fn parse_solver(v: Option<&Value>) -> Result<SolverSettings, CliError> {
    let mut s = SolverSettings::default();
    let Some(v) = v else { return Ok(s) };
    let obj = v
        .as_object()
        .ok_or_else(|| invalid("solver", "must be an object"))?;
    check_keys(obj, "solver", &["tol", "max_iter", "seed"])?;
    if let Some(t) = obj.get("tol") {
        s.tol = number(t, "solver.tol")?;
        if s.tol <= 0.0 {
            return Err(invalid("solver.tol", "must be positive"));
        }
    }
    if let Some(m) = obj.get("max_iter") {
        s.max_iter = m
            .as_u64()
            .ok_or_else(|| invalid("solver.max_iter", "must be a non-negative integer"))?
            as usize;
    }
    if let Some(seed) = obj.get("seed") {
        s.seed = seed
            .as_u64()
            .ok_or_else(|| invalid("solver.seed", "must be a non-negative integer"))?;
    }
    Ok(s)
}

/// Parses and validates a problem file; relative CSV paths are resolved
/// against the working directory.
pub fn parse_problem(text: &str) -> Result<ProblemFile, CliError> {
    parse_problem_at(text, None)
}

/// As [`parse_problem`], resolving relative CSV paths against `base`.
pub fn parse_problem_at(text: &str, base: Option<&Path>) -> Result<ProblemFile, CliError> {
    let doc: Value =
        serde_json::from_str(text).map_err(|e| CliError::Invalid(format!("invalid JSON: {e}")))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| invalid("", "document must be an object"))?;
    check_keys(obj, "", &["grid", "beta", "tau", "objective", "solver"])?;
    let grid_value = obj.get("grid").ok_or_else(|| invalid("grid", "required"))?;
    let grid = parse_grid(grid_value)?;
    let beta = parse_beta(obj.get("beta"), &grid, base)?;
    let tau = parse_tau(obj.get("tau"), &grid)?;
    let objective = parse_objective(obj.get("objective"))?;
    let solver = parse_solver(obj.get("solver"))?;
    let problem =
        BalanceProblem::new(grid, beta, tau).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(ProblemFile {
        problem,
        objective,
        solver,
    })
}

/// The expanded JSON form of a problem file.
pub fn problem_to_json(file: &ProblemFile) -> Value {
    let grid = file.problem.grid();
    let mut g = Map::new();
    g.insert("dims".into(), Value::from(grid.dims().to_vec()));
    g.insert(
        "spacing".into(),
        Value::Array(grid.spacing().iter().map(|&h| json_float(h)).collect()),
    );
    if grid.mask().iter().any(|m| !m) {
        g.insert(
            "mask".into(),
            Value::Array(
                grid.mask()
                    .iter()
                    .map(|&m| Value::from(u8::from(m)))
                    .collect(),
            ),
        );
    }
    let floats = |v: &[f64]| Value::Array(v.iter().map(|&x| json_float(x)).collect());
    let mut solver = Map::new();
    solver.insert("tol".into(), json_float(file.solver.tol));
    solver.insert("max_iter".into(), Value::from(file.solver.max_iter));
    solver.insert("seed".into(), Value::from(file.solver.seed));
    let mut doc = Map::new();
    doc.insert("grid".into(), Value::Object(g));
    doc.insert("beta".into(), floats(file.problem.beta()));
    doc.insert("tau".into(), floats(file.problem.tau()));
    doc.insert("objective".into(), file.objective.to_json());
    doc.insert("solver".into(), Value::Object(solver));
    Value::Object(doc)
}
