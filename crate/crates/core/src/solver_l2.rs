//! Minimum L2-norm flux.
//!
//! Among all fluxes balancing the data, the one of least weighted 2-norm is
//! a gradient, `w = grad phi`, where `phi` solves the weak Neumann problem
//!
//! ```text
//! <grad phi, grad psi> = F(psi)   for every potential psi.
//! ```
//!
//! The system is singular (constants), so it is solved by conjugate
//! gradients on zero-mean potentials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::field::{FaceField, ScalarField};
use crate::grid::Grid;
use crate::linalg::{projected_cg, Preconditioner};
use crate::operators::{
    divergence_free_field, face_inner, face_norm, gradient, interior_face_norm, remove_mean,
    stiffness_apply,
};
use crate::problem::{BalanceProblem, COMPATIBILITY_RTOL};
use crate::report::SolveReport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Options {
    /// Relative residual of the normal equations, in the Euclidean norm of
    /// the load vector.
    pub tol: f64,
    pub max_iter: usize,
    /// Jacobi preconditioning of the stiffness operator.
    pub jacobi: bool,
}

impl Default for L2Options {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50_000,
            jacobi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct L2Solution {
    /// Optimal flux: `grad phi` on interior faces, `tau` on boundary faces.
    pub w_opt: FaceField,
    /// Zero-mean potential `phi`.
    pub potential: ScalarField,
    /// Optimal value: weighted 2-norm of `w_opt` over the interior faces,
    /// the part of the flux the constraints leave free.
    pub omega: f64,
    /// Weighted 2-norm of `w_opt` over all faces, boundary included.
    pub full_norm: f64,
    pub report: SolveReport,
}

/// Solves the minimum-norm problem. Fails only on invalid data; a solve that
/// runs out of iterations returns with `report.converged == false`.
pub fn solve_l2(problem: &BalanceProblem, options: &L2Options) -> Result<L2Solution> {
    problem.check_optimizable(COMPATIBILITY_RTOL)?;
    let grid = problem.grid();
    let mut load = problem.assemble_load().as_slice().to_vec();
    // compatible up to rounding; drop the rounding
    remove_mean(&mut load);

    let inv_diag = options.jacobi.then(|| stiffness_inverse_diagonal(grid));
    let jacobi = |r: &[f64]| -> Vec<f64> {
        let d = inv_diag.as_deref().unwrap_or(&[]);
        r.iter().zip(d).map(|(r, d)| r * d).collect()
    };
    let precondition: Option<Preconditioner> = if options.jacobi { Some(&jacobi) } else { None };

    let mut phi = vec![0.0; grid.n_active()];
    let outcome = projected_cg(
        |x| stiffness_apply(grid, x),
        remove_mean,
        &load,
        &mut phi,
        precondition,
        options.tol,
        options.max_iter,
    );

    let mut w_opt = gradient(grid, &phi);
    w_opt.set_boundary_flux(grid, problem.tau());
    let omega = interior_face_norm(grid, &w_opt, 2.0);
    let full_norm = face_norm(grid, &w_opt, 2.0);
    let dual_value = l2_dual_value(problem, &phi);
    let report = SolveReport::new(
        omega,
        dual_value,
        problem.relative_balance_residual(&w_opt),
        outcome.iterations,
        outcome.converged,
    );
    Ok(L2Solution {
        w_opt,
        potential: ScalarField::from_raw(phi),
        omega,
        full_norm,
        report,
    })
}

/// `F(psi) / ||grad psi||`, or zero for constant `psi`.
pub fn l2_dual_value(problem: &BalanceProblem, psi: &[f64]) -> f64 {
    let grid = problem.grid();
    let denom = interior_face_norm(grid, &gradient(grid, psi), 2.0);
    if denom == 0.0 {
        0.0
    } else {
        problem.assemble_load().apply(psi) / denom
    }
}

fn stiffness_inverse_diagonal(grid: &Grid) -> Vec<f64> {
    let mut diag = vec![0.0; grid.n_active()];
    let h = grid.spacing();
    for f in grid.interior_faces() {
        let c = grid.face_area(f.axis) / h[f.axis];
        diag[f.low] += c;
        diag[f.high] += c;
    }
    // a lone cell has no interior faces
    diag.iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

/// Largest normalized correlation `|<w_opt, v>| / (||w_opt|| ||v||)` over
/// `trials` random divergence-free fields `v` with zero boundary flux.
///
/// Feasible fluxes differ from `w_opt` exactly by such fields, so `w_opt`
/// has minimal norm iff the result vanishes.
pub fn l2_orthogonality_certificate(
    grid: &Grid,
    w_opt: &FaceField,
    trials: usize,
    seed: u64,
) -> f64 {
    let w_norm = face_norm(grid, w_opt, 2.0);
    if w_norm == 0.0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let v = divergence_free_field(grid, &mut rng);
        let v_norm = face_norm(grid, &v, 2.0);
        if v_norm == 0.0 {
            continue;
        }
        worst = worst.max(face_inner(grid, w_opt, &v).abs() / (w_norm * v_norm));
    }
    worst
}
