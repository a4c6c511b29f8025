//! Minimum L^a-norm flux for `1 < a <= inf`.
//!
//! The problem
//!
//! ```text
//! minimize ||u||_a  over interior-face values u  subject to  <grad psi, u> = F(psi)  for all psi
//! ```
//!
//! is solved by a primal-dual hybrid gradient iteration. The constraint is
//! dualized with a potential `psi`, the primal step is a face-wise proximal
//! map and the dual step is preconditioned by the stiffness operator, so the
//! coupling operator has norm exactly one in the chosen metrics and the step
//! sizes do not depend on the mesh.
//!
//! Every few iterations two certificates are evaluated:
//! the primal iterate is projected onto the constraint set (an exact Neumann
//! solve), giving an upper bound `omega_primal`, and the dual potential gives
//! the lower bound `F(psi) / ||grad psi||_a'`. The run stops once the
//! relative gap between the best bounds is below the tolerance.

use crate::error::{Error, Result};
use crate::field::{FaceField, ScalarField};
use crate::grid::Grid;
use crate::linalg::BandedCholesky;
use crate::operators::{interior_vec_norm, remove_mean, stiffness_apply};
use crate::problem::{BalanceProblem, COMPATIBILITY_RTOL};
use crate::report::SolveReport;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LqOptions {
    /// Target relative duality gap.
    pub tol_gap: f64,
    pub max_iter: usize,
    /// Iterations between certificate evaluations.
    pub check_every: usize,
    /// Start from the minimum 2-norm flux and its potential. Step sizes are
    /// derived from that solution either way; a cold start begins at zero.
    pub warm_start: bool,
}

impl Default for LqOptions {
    fn default() -> Self {
        Self {
            tol_gap: 1e-6,
            max_iter: 50_000,
            check_every: 10,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LqSolution {
    /// Feasible flux attaining `omega_primal`.
    pub w_opt: FaceField,
    /// Zero-mean potential attaining `omega_dual`.
    pub psi_dual: ScalarField,
    /// Interior-face `a`-norm of `w_opt`, an upper bound on the optimum.
    pub omega_primal: f64,
    /// `F(psi_dual) / ||grad psi_dual||_a'`, a lower bound on the optimum.
    pub omega_dual: f64,
    pub exponent: f64,
    pub dual_exponent: f64,
    pub report: SolveReport,
}

/// `a / (a - 1)`, with `1` for `a = inf`.
pub fn dual_exponent(a: f64) -> f64 {
    if a.is_infinite() {
        1.0
    } else {
        a / (a - 1.0)
    }
}

/// `F(psi) / ||grad psi||_a'` with the interior-face weights: a lower bound
/// on the optimal value for every non-constant `psi`.
pub fn lq_dual_objective(problem: &BalanceProblem, psi: &[f64], a_dual: f64) -> Result<f64> {
    let grid = problem.grid();
    let denom = interior_vec_norm(grid, &interior_gradient(grid, psi), a_dual);
    if denom == 0.0 {
        return Err(Error::ConstantPotential);
    }
    Ok(problem.assemble_load().apply(psi) / denom)
}

/// Runs the primal-dual iteration. A run that exhausts `max_iter` returns the
/// best certified bounds with `report.converged == false`.
pub fn solve_lq(problem: &BalanceProblem, a: f64, options: &LqOptions) -> Result<LqSolution> {
    if a.is_nan() || a <= 1.0 {
        return Err(Error::UnsupportedExponent(a));
    }
    problem.check_optimizable(COMPATIBILITY_RTOL)?;
    let grid = problem.grid();
    let a_dual = dual_exponent(a);
    let mut load = problem.assemble_load().as_slice().to_vec();
    remove_mean(&mut load);

    let finish = |u: &[f64], psi: Vec<f64>, primal: f64, dual: f64, iterations, converged| {
        let mut w_opt = FaceField::from_interior(grid, u);
        w_opt.set_boundary_flux(grid, problem.tau());
        let report = SolveReport::new(
            primal,
            dual,
            problem.relative_balance_residual(&w_opt),
            iterations,
            converged,
        );
        LqSolution {
            w_opt,
            psi_dual: ScalarField::from_raw(psi),
            omega_primal: primal,
            omega_dual: dual,
            exponent: a,
            dual_exponent: a_dual,
            report,
        }
    };

    let n_int = grid.interior_faces().len();
    if load.iter().all(|&f| f == 0.0) || n_int == 0 {
        return Ok(finish(
            &vec![0.0; n_int],
            vec![0.0; grid.n_active()],
            0.0,
            0.0,
            0,
            true,
        ));
    }

    let neumann = NeumannSolver::new(grid);
    // the L2 optimum is feasible and a good starting point for every a
    let phi2 = neumann.solve(&load);
    let mut u = interior_gradient(grid, &phi2);
    let mut psi = phi2.clone();
    let prox = FaceProx::new(a, grid.cell_volume());
    let scale = dual_scale(&u, a, grid.cell_volume());
    psi.iter_mut().for_each(|p| *p *= scale);

    let ratio = interior_vec_norm(grid, &u, 2.0)
        / interior_vec_norm(grid, &interior_gradient(grid, &psi), 2.0);
    let product = 0.98;
    let tau = (product * ratio).sqrt();
    let sigma = (product / ratio).sqrt();
    if !options.warm_start {
        u.iter_mut().for_each(|v| *v = 0.0);
        psi.iter_mut().for_each(|v| *v = 0.0);
    }

    let mut best_primal = f64::INFINITY;
    let mut best_u = u.clone();
    let mut best_dual = f64::NEG_INFINITY;
    let mut best_psi = psi.clone();
    let mut iterations = 0;
    let check = options.check_every.max(1);

    let mut v = vec![0.0; n_int];
    loop {
        // certificates
        if iterations % check == 0 || iterations == options.max_iter {
            let feasible = neumann.project_feasible(grid, &u, &load);
            let primal = interior_vec_norm(grid, &feasible, a);
            if primal < best_primal {
                best_primal = primal;
                best_u = feasible;
            }
            if let Ok(dual) = lq_dual_objective(problem, &psi, a_dual) {
                if dual > best_dual {
                    best_dual = dual;
                    best_psi.copy_from_slice(&psi);
                }
            }
            let gap = (best_primal - best_dual) / best_primal;
            if gap <= options.tol_gap || iterations >= options.max_iter {
                let converged = gap <= options.tol_gap;
                return Ok(finish(
                    &best_u,
                    best_psi,
                    best_primal,
                    best_dual,
                    iterations,
                    converged,
                ));
            }
        }

        // primal step: u+ = prox(u + tau grad psi)
        let g = interior_gradient(grid, &psi);
        for k in 0..n_int {
            v[k] = u[k] + tau * g[k];
        }
        let u_new = prox.apply(&v, tau);
        // dual step on the extrapolated primal
        let bar: Vec<f64> = u_new.iter().zip(&u).map(|(n, o)| 2.0 * n - o).collect();
        let mut r = interior_adjoint(grid, &bar);
        r.iter_mut().zip(&load).for_each(|(r, f)| *r = f - *r);
        let step = neumann.solve(&r);
        psi.iter_mut().zip(&step).for_each(|(p, s)| *p += sigma * s);
        u = u_new;
        iterations += 1;
    }
}

/// Scale turning the L2 potential into a dual starting point for exponent `a`,
/// from the optimality condition `|u|^(a-2) u = grad psi`.
fn dual_scale(u: &[f64], a: f64, weight: f64) -> f64 {
    let m = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 1.0;
    }
    if a.is_infinite() {
        // the weighted 1-norm of grad psi is one at the optimum
        let total: f64 = u.iter().map(|v| v.abs()).sum();
        return 1.0 / (weight * total);
    }
    m.powf(a - 2.0)
}

/// Gradient on interior faces, in interior-face order.
pub(crate) fn interior_gradient(grid: &Grid, psi: &[f64]) -> Vec<f64> {
    let h = grid.spacing();
    grid.interior_faces()
        .iter()
        .map(|f| (psi[f.high] - psi[f.low]) / h[f.axis])
        .collect()
}

/// `G^T W u` for interior-face values `u`.
pub(crate) fn interior_adjoint(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_active()];
    for (f, &v) in grid.interior_faces().iter().zip(u) {
        let flux = v * grid.face_area(f.axis);
        out[f.high] += flux;
        out[f.low] -= flux;
    }
    out
}

/// Direct solver for the zero-mean Neumann problem `G^T W G x = b`.
pub(crate) struct NeumannSolver {
    chol: BandedCholesky,
}

impl NeumannSolver {
    pub(crate) fn new(grid: &Grid) -> Self {
        let band: usize = grid.dims()[1..].iter().product();
        let chol = BandedCholesky::from_operator(
            grid.n_active(),
            band,
            |x| stiffness_apply(grid, x),
            &[0],
        )
        .expect("stiffness of a connected grid is definite once one cell is pinned");
        Self { chol }
    }

    /// Zero-mean solution for a right-hand side with zero sum.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = self.chol.solve(b);
        remove_mean(&mut x);
        x
    }

    /// Closest point (weighted 2-norm) to `u` satisfying `G^T W u = load`.
    pub(crate) fn project_feasible(&self, grid: &Grid, u: &[f64], load: &[f64]) -> Vec<f64> {
        let mut r = interior_adjoint(grid, u);
        r.iter_mut().zip(load).for_each(|(r, f)| *r = f - *r);
        let x = self.solve(&r);
        let g = interior_gradient(grid, &x);
        u.iter().zip(&g).map(|(u, g)| u + g).collect()
    }
}

/// Proximal map of `t * f` in the face-weighted metric, where
/// `f(u) = sum weight |u|^a / a` for finite `a` and `f(u) = max |u|` for
/// `a = inf`. Minimizing `f` or `||u||_a` under the same constraints picks
/// the same fluxes.
struct FaceProx {
    a: f64,
    weight: f64,
}

impl FaceProx {
    fn new(a: f64, weight: f64) -> Self {
        Self { a, weight }
    }

    fn apply(&self, v: &[f64], t: f64) -> Vec<f64> {
        if self.a.is_infinite() {
            let mut p = project_l1_ball(v, t / self.weight);
            p.iter_mut().zip(v).for_each(|(p, v)| *p = v - *p);
            return p;
        }
        if self.a == 2.0 {
            return v.iter().map(|v| v / (1.0 + t)).collect();
        }
        v.iter().map(|&x| prox_power(x, self.a, t)).collect()
    }
}

/// Minimizer of `|r|^a / a + (r - x)^2 / (2 t)`: the root `r >= 0` of
/// `t r^(a-1) + r = |x|`, with the sign of `x`.
fn prox_power(x: f64, a: f64, t: f64) -> f64 {
    let target = x.abs();
    if target == 0.0 {
        return 0.0;
    }
    let g = |r: f64| t * r.powf(a - 1.0) + r - target;
    let (mut lo, mut hi) = (0.0, target);
    // both candidates are upper bounds on the root
    let mut r = (target / t).powf(1.0 / (a - 1.0)).min(target);
    for _ in 0..100 {
        let gr = g(r);
        if gr.abs() <= 4.0 * f64::EPSILON * target {
            break;
        }
        if gr > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let dg = t * (a - 1.0) * r.powf(a - 2.0) + 1.0;
        let mut next = r - gr / dg;
        if !(next >= lo && next <= hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - r).abs() <= 1e-15 * target {
            r = next;
            break;
        }
        r = next;
    }
    r.copysign(x)
}

/// Euclidean projection onto `{ y : sum |y| <= radius }`.
fn project_l1_ball(v: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return v.to_vec();
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &m) in mags.iter().enumerate() {
        cumsum += m;
        let candidate = (cumsum - radius) / (i + 1) as f64;
        if m > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    v.iter()
        .map(|&x| (x.abs() - theta).max(0.0).copysign(x))
        .collect()
}
