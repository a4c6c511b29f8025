//! Worst-case ratio of optimal flux to data, and the capacity it implies.
//!
//! Data `c = (beta, tau)` is measured in the product norm
//! `||c|| = (||beta||_V^2 + ||tau||_A^2)^(1/2)`. The minimum 2-norm flux
//! satisfies `omega(c) <= K ||c||` with
//!
//! ```text
//! K^2 = max over zero-mean psi of (||psi||_V^2 + ||trace psi||_A^2) / ||grad psi||^2,
//! ```
//!
//! the norm of `psi -> (psi, trace psi)` on zero-mean potentials. The capacity
//! `C = 1 / K` is the largest factor such that `||c|| <= C M` guarantees a
//! flux of norm at most `M`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{BoundaryValues, ScalarField};
use crate::grid::Grid;
use crate::operators::{boundary_norm, cell_norm, remove_mean, stiffness_apply, trace};
use crate::solver_lq::NeumannSolver;

/// The product norm used for data patterns, echoed into reports.
pub const PRODUCT_NORM: &str = "(||beta||_V^2 + ||tau||_A^2)^(1/2)";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CapacityOptions {
    /// Relative change of the Rayleigh quotient between sweeps.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub k: f64,
    /// `1 / k`.
    pub c: f64,
    /// Extremal zero-mean potential, scaled to `||grad psi|| = 1`.
    pub psi_star: ScalarField,
    pub iterations: usize,
    /// Relative difference to a dense eigensolve, when one was run.
    pub oracle_gap: Option<f64>,
}

/// A data pair `(beta, tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPattern {
    pub beta: ScalarField,
    pub tau: BoundaryValues,
}

impl InputPattern {
    /// [`PRODUCT_NORM`].
    pub fn norm(&self, grid: &Grid) -> f64 {
        cell_norm(grid, &self.beta).hypot(boundary_norm(grid, &self.tau))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            beta: self.beta.scaled(factor),
            tau: self.tau.scaled(factor),
        }
    }
}

/// `M psi`: volume mass plus boundary trace mass, as per-cell coefficients.
pub fn pattern_mass_apply(grid: &Grid, psi: &[f64]) -> Vec<f64> {
    let vol = grid.cell_volume();
    let mut out: Vec<f64> = psi.iter().map(|p| vol * p).collect();
    for f in grid.boundary_faces() {
        out[f.cell] += f.area * psi[f.cell];
    }
    out
}

/// Power iteration for the largest `mu` with `M psi = mu S psi` on zero-mean
/// potentials; `K = sqrt(mu)`. Every sweep applies the mass operator and
/// solves one Neumann problem.
pub fn capacity_l2(grid: &Grid, options: &CapacityOptions) -> Result<CapacityReport> {
    let n = grid.n_active();
    if n < 2 {
        return Err(Error::ConstantPotential);
    }
    let neumann = NeumannSolver::new(grid);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    remove_mean(&mut x);

    let rayleigh = |x: &[f64]| {
        let num: f64 = pattern_mass_apply(grid, x)
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum();
        let den: f64 = stiffness_apply(grid, x)
            .iter()
            .zip(x)
            .map(|(a, b)| a * b)
            .sum();
        (num / den, den)
    };
    let (mut mu, _) = rayleigh(&x);
    let mut change = f64::INFINITY;
    for sweep in 1..=options.max_iter {
        let mut y = pattern_mass_apply(grid, &x);
        remove_mean(&mut y);
        x = neumann.solve(&y);
        let (mu_new, energy) = rayleigh(&x);
        let scale = energy.sqrt();
        x.iter_mut().for_each(|v| *v /= scale);
        change = (mu_new - mu).abs() / mu_new;
        mu = mu_new;
        if change <= options.tol {
            let k = mu.sqrt();
            return Ok(CapacityReport {
                k,
                c: 1.0 / k,
                psi_star: ScalarField::from_raw(x),
                iterations: sweep,
                oracle_gap: None,
            });
        }
    }
    Err(Error::NotConverged {
        what: "capacity power iteration",
        iterations: options.max_iter,
        change,
    })
}

/// `omega / ||c||`, the ratio `K` bounds from above.
pub fn sensitivity(c_norm: f64, omega: f64) -> Result<f64> {
    if c_norm == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(omega / c_norm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Admissibility {
    /// `c_norm <= C M`.
    pub admissible: bool,
    /// `K c_norm`, an upper bound on `omega(c)` for any data of that norm.
    pub certified_bound: f64,
}

/// Decides whether data of norm `c_norm` is guaranteed a flux of norm at
/// most `m`.
pub fn admissible(report: &CapacityReport, c_norm: f64, m: f64) -> Admissibility {
    Admissibility {
        admissible: c_norm <= report.c * m,
        certified_bound: report.k * c_norm,
    }
}

/// The data pattern aligned with the extremal potential:
/// `(psi*, trace psi*)`, with a constant shift of `beta` making it
/// compatible. The shift changes nothing on zero-mean potentials.
pub fn extremal_pattern(grid: &Grid, report: &CapacityReport) -> InputPattern {
    let psi = &report.psi_star;
    let tau = trace(grid, psi);
    let boundary: f64 = grid
        .boundary_faces()
        .iter()
        .zip(tau.iter())
        .map(|(f, t)| f.area * t)
        .sum();
    let shift = boundary / grid.total_volume();
    let beta = ScalarField::from_raw(psi.iter().map(|p| p - shift).collect());
    InputPattern { beta, tau }
}
