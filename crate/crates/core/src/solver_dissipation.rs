//! Minimum-dissipation fluxes.
//!
//! Two different problems share this module.
//!
//! The classical one minimizes `int |grad w|^2` over fluxes satisfying the
//! pointwise balance. Each component of `w` lives on its own face lattice, so
//! the dissipation is a weighted graph energy over neighbouring faces of one
//! lattice. Boundary normal components are fixed by `tau`; tangential
//! derivatives at the wall are left free, which makes zero tangential
//! traction the natural boundary condition. The optimality system
//!
//! ```text
//! -lap w - grad lambda = 0,    beta + div w = 0
//! ```
//!
//! is a symmetric saddle-point system solved by MINRES.
//!
//! The second one represents the load `F` in the Hessian inner product:
//! `<H phi, H psi> = F(psi)` for every potential, on potentials modulo
//! affine functions. Its optimal value is `||H phi|| = sup F(psi) / ||H psi||`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{FaceField, ScalarField};
use crate::grid::{FaceIndex, FaceKind, Grid};
use crate::linalg::{minres, projected_cg, BandedCholesky};
use crate::operators::{remove_mean, AffineBasis, HessianOperator};
use crate::problem::{BalanceProblem, COMPATIBILITY_RTOL};
use crate::report::SolveReport;
use crate::solver_lq::{interior_adjoint, interior_gradient};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DissipationOptions {
    /// Relative residual of the full optimality system.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for DissipationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iter: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalDissipationSolution {
    /// Feasible flux; boundary faces carry `tau` exactly.
    pub w: FaceField,
    /// Zero-mean multiplier of the balance constraint.
    pub lambda: ScalarField,
    /// `int |grad w|^2` with the face-lattice stencil.
    pub dissipation: f64,
    pub report: SolveReport,
}

/// One derivative of one flux component: `(w[to] - w[from]) / h[direction]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressEntry {
    pub component: usize,
    pub direction: usize,
    pub from: usize,
    pub to: usize,
    pub value: f64,
}

/// Residuals of the stationarity equations at a computed solution.
#[derive(Debug, Clone, PartialEq)]
pub struct ElReport {
    /// Norm of `-lap w - grad lambda` on faces whose stencil is complete,
    /// relative to the terms of the whole stationarity system.
    pub interior_residual: f64,
    /// The same on faces next to the wall, where the truncated stencil
    /// carries the tangential traction.
    pub boundary_tangential_traction: f64,
    /// Velocity gradient entries; for the quadratic dissipation the stress
    /// equals the velocity gradient.
    pub sigma: Vec<StressEntry>,
    /// Body-force density per face; zero for the quadratic dissipation.
    pub body_force: FaceField,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    from: usize,
    to: usize,
    direction: usize,
    weight: f64,
}

/// Weighted graph Laplacian over neighbouring faces of each face lattice.
///
/// Faces one step apart along their own axis are joined when the cell between
/// them is active. Faces one step apart along another axis are joined with
/// half weight for each side (low or high along their axis) on which both
/// adjacent cells are active, so wall-hugging pairs get the half-cell weight
/// of their control volumes.
struct FaceLaplacian {
    n_faces: usize,
    edges: Vec<Edge>,
    /// Sum of relative edge weights at each face; `2 * ndim` when complete.
    coverage: Vec<f64>,
}

impl FaceLaplacian {
    fn new(grid: &Grid) -> Self {
        let d = grid.ndim();
        let h = grid.spacing();
        let vol = grid.cell_volume();
        let mut edges = Vec::new();
        let mut coverage = vec![0.0; grid.n_faces()];
        let cell_at = |coords: [usize; 3], axis: usize, low: bool| {
            let mut c = coords;
            if low {
                c[axis] = c[axis].checked_sub(1)?;
            }
            grid.cell_id_at(c)
        };
        for id in grid.relevant_faces() {
            let FaceIndex { axis, coords } = grid.face_index(id);
            for direction in 0..d {
                let mut next = coords;
                next[direction] += 1;
                let Some(to) = grid.face_id(FaceIndex { axis, coords: next }) else {
                    continue;
                };
                if grid.face_kind(to) == FaceKind::Exterior {
                    continue;
                }
                let share = if direction == axis {
                    if cell_at(coords, axis, false).is_some() {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    let mut s = 0.0;
                    for low in [true, false] {
                        if cell_at(coords, axis, low).is_some()
                            && cell_at(next, axis, low).is_some()
                        {
                            s += 0.5;
                        }
                    }
                    s
                };
                if share == 0.0 {
                    continue;
                }
                coverage[id] += share;
                coverage[to] += share;
                edges.push(Edge {
                    from: id,
                    to,
                    direction,
                    weight: share * vol / (h[direction] * h[direction]),
                });
            }
        }
        Self {
            n_faces: grid.n_faces(),
            edges,
            coverage,
        }
    }

    /// `L w`, the gradient of `energy / 2`.
    fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_faces];
        for e in &self.edges {
            let flux = e.weight * (w[e.from] - w[e.to]);
            out[e.from] += flux;
            out[e.to] -= flux;
        }
        out
    }

    /// `sum weight * (w[to] - w[from])^2`.
    fn energy(&self, w: &[f64]) -> f64 {
        self.edges
            .iter()
            .map(|e| e.weight * (w[e.to] - w[e.from]).powi(2))
            .sum()
    }
}

/// Pieces of the classical optimality system, in interior-face coordinates.
struct ClassicalSystem<'a> {
    grid: &'a Grid,
    laplacian: FaceLaplacian,
    /// Boundary part of the flux, zero on interior faces.
    w_boundary: FaceField,
    load: Vec<f64>,
}

impl<'a> ClassicalSystem<'a> {
    fn new(problem: &'a BalanceProblem) -> Self {
        let grid = problem.grid();
        let mut w_boundary = FaceField::zeros(grid);
        w_boundary.set_boundary_flux(grid, problem.tau());
        let mut load = problem.assemble_load().as_slice().to_vec();
        remove_mean(&mut load);
        Self {
            grid,
            laplacian: FaceLaplacian::new(grid),
            w_boundary,
            load,
        }
    }

    fn n_free(&self) -> usize {
        self.grid.interior_faces().len()
    }

    /// `L_ff u` restricted to interior faces.
    fn free_laplacian(&self, u: &[f64]) -> Vec<f64> {
        let full = self
            .laplacian
            .apply(&FaceField::from_interior(self.grid, u));
        self.restrict(&full)
    }

    fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.grid
            .interior_faces()
            .iter()
            .map(|f| full[f.id])
            .collect()
    }

    /// `L_fb w_b`: coupling of interior faces to the fixed boundary values.
    fn boundary_coupling(&self) -> Vec<f64> {
        self.restrict(&self.laplacian.apply(&self.w_boundary))
    }

    fn assemble(&self, u: &[f64]) -> FaceField {
        let mut w = FaceField::from_interior(self.grid, u);
        for f in self.grid.boundary_faces() {
            w[f.id] = self.w_boundary[f.id];
        }
        w
    }

    /// Stationarity rows `(L_ff u + L_fb w_b) / vol - grad lambda`, and the
    /// norms of the two terms.
    fn stationarity(&self, u: &[f64], lambda: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let vol = self.grid.cell_volume();
        let lap = self.free_laplacian(u);
        let coupling = self.boundary_coupling();
        let lap: Vec<f64> = lap
            .iter()
            .zip(&coupling)
            .map(|(a, b)| (a + b) / vol)
            .collect();
        let grad = interior_gradient(self.grid, lambda);
        let rows = lap.iter().zip(&grad).map(|(a, b)| a - b).collect();
        (rows, lap, grad)
    }

    /// Lagrangian dual of `min E(w) / 2` at `lambda`, times two. Needs one
    /// solve with `L_ff`.
    fn dual_dissipation(&self, lambda: &[f64], tol: f64, max_iter: usize) -> f64 {
        let mut rhs = interior_adjoint_transpose(self.grid, lambda);
        let coupling = self.boundary_coupling();
        rhs.iter_mut().zip(&coupling).for_each(|(r, g)| *r -= g);
        let diag = self.free_diagonal();
        let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
        let jacobi = |r: &[f64]| -> Vec<f64> { r.iter().zip(&inv).map(|(r, d)| r * d).collect() };
        let mut y = vec![0.0; self.n_free()];
        projected_cg(
            |x| self.free_laplacian(x),
            |_| {},
            &rhs,
            &mut y,
            Some(&jacobi),
            tol,
            max_iter,
        );
        let quad: f64 = y.iter().zip(&rhs).map(|(a, b)| a * b).sum();
        let fixed = self.laplacian.energy(&self.w_boundary);
        let linear: f64 = lambda.iter().zip(&self.load).map(|(a, b)| a * b).sum();
        2.0 * linear + fixed - quad
    }

    fn free_diagonal(&self) -> Vec<f64> {
        let mut diag = vec![0.0; self.laplacian.n_faces];
        for e in &self.laplacian.edges {
            diag[e.from] += e.weight;
            diag[e.to] += e.weight;
        }
        self.restrict(&diag)
    }
}

/// `A^T lambda = W grad lambda` on interior faces.
fn interior_adjoint_transpose(grid: &Grid, lambda: &[f64]) -> Vec<f64> {
    let vol = grid.cell_volume();
    interior_gradient(grid, lambda)
        .iter()
        .map(|g| vol * g)
        .collect()
}

/// Minimizes the dissipation subject to the balance constraints.
pub fn solve_dissipation_classical(
    problem: &BalanceProblem,
    options: &DissipationOptions,
) -> Result<ClassicalDissipationSolution> {
    problem.check_optimizable(COMPATIBILITY_RTOL)?;
    let grid = problem.grid();
    let sys = ClassicalSystem::new(problem);
    let vol = grid.cell_volume();
    let (m, n) = (sys.n_free(), grid.n_active());

    // rows scaled by 1/vol:  [ L/vol  -grad ] [u]   [ -L_fb w_b / vol ]
    //                        [ -div'   0   ] [l] = [ -F / vol        ]
    let apply = |x: &[f64]| -> Vec<f64> {
        let (u, lambda) = x.split_at(m);
        let (mut top, _, _) = sys.stationarity(u, lambda);
        let coupling = sys.boundary_coupling();
        top.iter_mut()
            .zip(&coupling)
            .for_each(|(t, c)| *t -= c / vol);
        let bottom = interior_adjoint(grid, u);
        top.extend(bottom.iter().map(|b| -b / vol));
        top
    };
    let mut rhs: Vec<f64> = sys.boundary_coupling().iter().map(|c| -c / vol).collect();
    rhs.extend(sys.load.iter().map(|f| -f / vol));
    let mut inv_diag: Vec<f64> = sys.free_diagonal().iter().map(|d| vol / d).collect();
    inv_diag.extend(std::iter::repeat_n(1.0, n));

    let mut x = vec![0.0; m + n];
    let outcome = minres(
        apply,
        &rhs,
        &mut x,
        Some(&inv_diag),
        options.tol,
        options.max_iter,
    );
    let (u, lambda) = x.split_at(m);
    let mut lambda = lambda.to_vec();
    remove_mean(&mut lambda);

    let w = sys.assemble(u);
    let dissipation = sys.laplacian.energy(&w);
    let dual = sys.dual_dissipation(&lambda, 1e-13, options.max_iter);
    let report = SolveReport::new(
        dissipation,
        dual,
        problem.relative_balance_residual(&w),
        outcome.iterations,
        outcome.converged,
    );
    Ok(ClassicalDissipationSolution {
        w,
        lambda: ScalarField::from_raw(lambda),
        dissipation,
        report,
    })
}

/// Dissipation of an arbitrary flux with the face-lattice stencil.
pub fn classical_dissipation(grid: &Grid, w: &[f64]) -> f64 {
    FaceLaplacian::new(grid).energy(w)
}

/// Lagrangian lower bound on the minimal dissipation at multiplier `lambda`.
pub fn classical_dual_value(problem: &BalanceProblem, lambda: &[f64]) -> f64 {
    let mut lambda = lambda.to_vec();
    remove_mean(&mut lambda);
    ClassicalSystem::new(problem).dual_dissipation(&lambda, 1e-13, 50_000)
}

/// Evaluates the stationarity equations at `solution`.
pub fn el_residual(problem: &BalanceProblem, solution: &ClassicalDissipationSolution) -> ElReport {
    let grid = problem.grid();
    let sys = ClassicalSystem::new(problem);
    let u = solution.w.interior_values(grid);
    let (rows, _, grad) = sys.stationarity(&u, &solution.lambda);
    let complete = 2.0 * grid.ndim() as f64;
    let norm = |v: &[f64], keep: &dyn Fn(usize) -> bool| -> f64 {
        v.iter()
            .enumerate()
            .filter(|&(k, _)| keep(k))
            .map(|(_, x)| x * x)
            .sum::<f64>()
            .sqrt()
    };
    let faces = grid.interior_faces();
    let is_complete = |k: usize| sys.laplacian.coverage[faces[k].id] >= complete;
    let is_wall = |k: usize| !is_complete(k);
    // One scale for both groups: the pieces of the full system before they
    // cancel. Term norms of a single group can vanish at the exact solution
    // (uniform flow has zero Laplacian and zero pressure gradient).
    let vol = grid.cell_volume();
    let all = |_: usize| true;
    let free: Vec<f64> = sys.free_laplacian(&u).iter().map(|v| v / vol).collect();
    let coupling: Vec<f64> = sys.boundary_coupling().iter().map(|v| v / vol).collect();
    let scale = norm(&free, &all) + norm(&coupling, &all) + norm(&grad, &all);
    let relative = |keep: &dyn Fn(usize) -> bool| {
        if scale == 0.0 {
            0.0
        } else {
            norm(&rows, keep) / scale
        }
    };
    let h = grid.spacing();
    let sigma = sys
        .laplacian
        .edges
        .iter()
        .map(|e| StressEntry {
            component: grid.face_axis(e.from),
            direction: e.direction,
            from: e.from,
            to: e.to,
            value: (solution.w[e.to] - solution.w[e.from]) / h[e.direction],
        })
        .collect();
    ElReport {
        interior_residual: relative(&is_complete),
        boundary_tangential_traction: relative(&is_wall),
        sigma,
        body_force: FaceField::zeros(grid),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualDissipationOptions {
    /// Relative residual of the Hessian normal equations.
    pub tol: f64,
    pub max_iter: usize,
    /// Seed of a random initial iterate; `None` starts from zero.
    pub seed: Option<u64>,
}

impl Default for DualDissipationOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 50_000,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualDissipationSolution {
    /// Representer generator, orthogonal to the affine functions.
    pub phi: ScalarField,
    /// `grad phi`.
    pub w_bar: FaceField,
    /// `||H phi||`.
    pub omega: f64,
    /// Components of the load along an orthonormal affine basis (constant
    /// first). They are invisible to the quotient problem and are dropped.
    pub affine_load: Vec<f64>,
    pub report: SolveReport,
}

/// Load with its affine action removed, and the removed components.
fn quotient_load(problem: &BalanceProblem, basis: &AffineBasis) -> (Vec<f64>, Vec<f64>) {
    let mut load = problem.assemble_load().as_slice().to_vec();
    let components = basis.components(&load);
    basis.project_out(&mut load);
    (load, components)
}

/// Cells whose values fix an affine function: greedily keeps cells whose
/// `(1, x)` rows are independent of those already kept.
fn affine_pins(grid: &Grid) -> Vec<usize> {
    let d = grid.ndim();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut pins = Vec::new();
    for c in 0..grid.n_active() {
        let x = grid.cell_center(c);
        let mut v: Vec<f64> = std::iter::once(1.0).chain(x[..d].iter().copied()).collect();
        for _ in 0..2 {
            for q in &rows {
                let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= dot * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            rows.push(v);
            pins.push(c);
            if pins.len() == d + 1 {
                break;
            }
        }
    }
    pins
}

/// Solves `H^T W H phi = F` on potentials orthogonal to the affine functions.
///
/// A banded Cholesky factor of the operator (affine part pinned) serves as
/// preconditioner for projected conjugate gradients; if the mask is too thin
/// for the Hessian kernel to be exactly affine, Jacobi is used instead.
pub fn solve_dissipation_dual(
    problem: &BalanceProblem,
    options: &DualDissipationOptions,
) -> Result<DualDissipationSolution> {
    problem.check_optimizable(COMPATIBILITY_RTOL)?;
    let grid = problem.grid();
    let basis = AffineBasis::new(grid);
    let hess = HessianOperator::new(grid);
    let (load, affine_load) = quotient_load(problem, &basis);
    let n = grid.n_active();

    let band = 2 * grid.dims()[1..].iter().product::<usize>();
    let chol = BandedCholesky::from_operator(n, band, |x| hess.normal_apply(x), &affine_pins(grid));
    let diag: Vec<f64> = {
        let mut e = vec![0.0; n];
        (0..n)
            .map(|i| {
                e[i] = 1.0;
                let v = hess.normal_apply(&e)[i];
                e[i] = 0.0;
                if v > 0.0 {
                    1.0 / v
                } else {
                    1.0
                }
            })
            .collect()
    };
    let precondition = |r: &[f64]| -> Vec<f64> {
        match &chol {
            Some(c) => c.solve(r),
            None => r.iter().zip(&diag).map(|(r, d)| r * d).collect(),
        }
    };

    let mut phi = vec![0.0; n];
    if let Some(seed) = options.seed {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        phi.iter_mut().for_each(|p| *p = rng.gen_range(-1.0..1.0));
    }
    let outcome = projected_cg(
        |x| hess.normal_apply(x),
        |v| basis.project_out(v),
        &load,
        &mut phi,
        Some(&precondition),
        options.tol,
        options.max_iter,
    );

    let omega = hess.norm(&phi);
    let dual_value = if omega > 0.0 {
        load.iter().zip(&phi).map(|(f, p)| f * p).sum::<f64>() / omega
    } else {
        0.0
    };
    let w_bar = crate::operators::gradient(grid, &phi);
    let report = SolveReport::new(
        omega,
        dual_value,
        outcome.relative_residual,
        outcome.iterations,
        outcome.converged,
    );
    Ok(DualDissipationSolution {
        phi: ScalarField::from_raw(phi),
        w_bar,
        omega,
        affine_load,
        report,
    })
}

/// `F(psi) / ||H psi||` on the affine quotient: a lower bound on the optimum
/// of [`solve_dissipation_dual`], attained at `psi` proportional to `phi`.
pub fn w22_dual_objective(problem: &BalanceProblem, psi: &[f64]) -> Result<f64> {
    let grid = problem.grid();
    let basis = AffineBasis::new(grid);
    let mut q = psi.to_vec();
    basis.project_out(&mut q);
    let size = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rest = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rest <= 1e-12 * size || rest == 0.0 {
        return Err(Error::AffinePotential);
    }
    let denom = HessianOperator::new(grid).norm(&q);
    if denom == 0.0 {
        return Err(Error::AffinePotential);
    }
    Ok(problem.assemble_load().apply(&q) / denom)
}
