//! Dense reference computations and problem generators for the integration
//! suites. Everything here is deliberately naive: explicit matrices built by
//! probing the public operators, solved with nalgebra.
#![allow(dead_code)]

use fluxopt::capacity::pattern_mass_apply;
use fluxopt::operators::{divergence, stiffness_apply};
use fluxopt::{
    classical_dissipation, BalanceProblem, BoundaryValues, FaceField, Grid, ScalarField,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn rel_err(x: &[f64], reference: &[f64]) -> f64 {
    let diff: f64 = x
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = reference.iter().map(|b| b * b).sum::<f64>().sqrt();
    if norm == 0.0 {
        diff
    } else {
        diff / norm
    }
}

/// Matrix of a linear map, column by column.
pub fn dense(rows: usize, cols: usize, apply: impl Fn(&[f64]) -> Vec<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    let mut e = vec![0.0; cols];
    for j in 0..cols {
        e[j] = 1.0;
        let col = apply(&e);
        for i in 0..rows {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

/// L-shaped mask: the box minus its upper corner block (upper half along
/// the first two axes).
pub fn l_shape(dims: &[usize], spacing: &[f64]) -> Grid {
    let n: usize = dims.iter().product();
    let d = dims.len();
    let mask: Vec<bool> = (0..n)
        .map(|lin| {
            // last axis fastest
            let mut rest = lin;
            let mut c = [0usize; 3];
            for a in (0..d).rev() {
                c[a] = rest % dims[a];
                rest /= dims[a];
            }
            !(c[0] >= dims[0] / 2 && c[1] >= dims[1] / 2)
        })
        .collect();
    Grid::with_mask(dims, spacing, Some(&mask)).expect("L-shape is a valid mask")
}

/// Random data made compatible by a constant shift of `beta`.
pub fn random_compatible(grid: &Grid, seed: u64) -> BalanceProblem {
    let mut r = rng(seed);
    let tau: Vec<f64> = (0..grid.boundary_faces().len())
        .map(|_| r.gen_range(-1.0..1.0))
        .collect();
    let mut beta: Vec<f64> = (0..grid.n_active())
        .map(|_| r.gen_range(-1.0..1.0))
        .collect();
    let boundary: f64 = grid
        .boundary_faces()
        .iter()
        .zip(&tau)
        .map(|(f, t)| f.area * t)
        .sum();
    let interior: f64 = beta.iter().sum::<f64>() * grid.cell_volume();
    let shift = (boundary + interior) / grid.total_volume();
    beta.iter_mut().for_each(|b| *b -= shift);
    BalanceProblem::new(
        grid.clone(),
        ScalarField::from_vec(grid, beta).unwrap(),
        BoundaryValues::from_vec(grid, tau).unwrap(),
    )
    .unwrap()
}

/// Smooth random potential: a few low cosine modes with random phases.
pub fn smooth_potential(grid: &Grid, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let d = grid.ndim();
    let len: Vec<f64> = (0..d)
        .map(|a| grid.dims()[a] as f64 * grid.spacing()[a])
        .collect();
    let pi = std::f64::consts::PI;
    let modes: Vec<(f64, Vec<f64>, Vec<f64>)> = (0..5)
        .map(|_| {
            let amp = r.gen_range(-1.0..1.0);
            let k = (0..d).map(|_| r.gen_range(0..4) as f64).collect();
            let phase = (0..d).map(|_| r.gen_range(0.0..2.0 * pi)).collect();
            (amp, k, phase)
        })
        .collect();
    (0..grid.n_active())
        .map(|c| {
            let x = grid.cell_center(c);
            modes
                .iter()
                .map(|(amp, k, ph)| {
                    amp * (0..d)
                        .map(|a| (pi * k[a] * x[a] / len[a] + ph[a]).cos())
                        .product::<f64>()
                })
                .sum()
        })
        .collect()
}

/// Interior-face unknowns `u` -> cell divergence, and the constant part
/// `div(0, tau)`.
fn constraint(problem: &BalanceProblem) -> (DMatrix<f64>, DVector<f64>) {
    let grid = problem.grid();
    let interior = grid.interior_faces();
    let zero_tau = vec![0.0; grid.boundary_faces().len()];
    let c = dense(grid.n_active(), interior.len(), |u| {
        let mut w = vec![0.0; grid.n_faces()];
        for (f, v) in interior.iter().zip(u) {
            w[f.id] = *v;
        }
        divergence(grid, &w, &zero_tau).into_vec()
    });
    let w0 = vec![0.0; grid.n_faces()];
    let d = divergence(grid, &w0, problem.tau());
    // balance: beta + C u + d = 0
    let rhs = DVector::from_iterator(
        grid.n_active(),
        problem.beta().iter().zip(d.iter()).map(|(b, d)| -b - d),
    );
    (c, rhs)
}

/// Minimizes `u' Q u + 2 g' u` subject to the balance rows (one dropped, the
/// rows sum to zero on compatible data). Returns the interior-face values.
fn constrained_quadratic(
    problem: &BalanceProblem,
    q: &DMatrix<f64>,
    g: &DVector<f64>,
) -> DVector<f64> {
    let (c, rhs) = constraint(problem);
    let m = q.nrows();
    let k = c.nrows() - 1;
    let mut kkt = DMatrix::zeros(m + k, m + k);
    kkt.view_mut((0, 0), (m, m)).copy_from(&(q * 2.0));
    let ck = c.rows(0, k);
    kkt.view_mut((m, 0), (k, m)).copy_from(&ck);
    kkt.view_mut((0, m), (m, k)).copy_from(&ck.transpose());
    let mut b = DVector::zeros(m + k);
    b.rows_mut(0, m).copy_from(&(g * -2.0));
    b.rows_mut(m, k).copy_from(&rhs.rows(0, k));
    let x = kkt.lu().solve(&b).expect("KKT matrix is nonsingular");
    x.rows(0, m).into_owned()
}

fn embed(grid: &Grid, problem: &BalanceProblem, u: &DVector<f64>) -> FaceField {
    let mut w = FaceField::zeros(grid);
    w.set_boundary_flux(grid, problem.tau());
    for (f, v) in grid.interior_faces().iter().zip(u.iter()) {
        w[f.id] = *v;
    }
    w
}

/// Minimum interior-face 2-norm of a balancing flux, densely.
pub fn dense_l2_omega(problem: &BalanceProblem) -> f64 {
    let grid = problem.grid();
    let m = grid.interior_faces().len();
    let q = DMatrix::identity(m, m) * grid.cell_volume();
    let u = constrained_quadratic(problem, &q, &DVector::zeros(m));
    (grid.cell_volume() * u.norm_squared()).sqrt()
}

/// Minimal face-lattice dissipation of a balancing flux, densely. The
/// quadratic form is recovered from the public energy by polarization.
pub fn dense_dissipation(problem: &BalanceProblem) -> (f64, FaceField) {
    let grid = problem.grid();
    let n = grid.n_faces();
    let energy = |w: &[f64]| classical_dissipation(grid, w);
    let mut l = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let diag: Vec<f64> = (0..n)
        .map(|i| {
            e[i] = 1.0;
            let v = energy(&e);
            e[i] = 0.0;
            v
        })
        .collect();
    for i in 0..n {
        l[(i, i)] = diag[i];
        for j in 0..i {
            e[i] = 1.0;
            e[j] = 1.0;
            let v = (energy(&e) - diag[i] - diag[j]) / 2.0;
            e[i] = 0.0;
            e[j] = 0.0;
            l[(i, j)] = v;
            l[(j, i)] = v;
        }
    }
    let ids: Vec<usize> = grid.interior_faces().iter().map(|f| f.id).collect();
    let mut wb = FaceField::zeros(grid);
    wb.set_boundary_flux(grid, problem.tau());
    let wb = DVector::from_column_slice(&wb);
    let lw = &l * wb;
    let q = DMatrix::from_fn(ids.len(), ids.len(), |i, j| l[(ids[i], ids[j])]);
    let g = DVector::from_iterator(ids.len(), ids.iter().map(|&i| lw[i]));
    let u = constrained_quadratic(problem, &q, &g);
    let w = embed(grid, problem, &u);
    (energy(&w), w)
}

/// Largest generalized eigenvalue of (mass, stiffness) on zero-mean
/// potentials, square-rooted.
pub fn dense_capacity_k(grid: &Grid) -> f64 {
    let n = grid.n_active();
    let s = dense(n, n, |x| stiffness_apply(grid, x));
    let m = dense(n, n, |x| pattern_mass_apply(grid, x));
    let p = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - 1.0 / n as f64);
    let eig = p.symmetric_eigen();
    let cols: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > 0.5).collect();
    let q = DMatrix::from_fn(n, cols.len(), |r, c| eig.eigenvectors[(r, cols[c])]);
    let sr = q.transpose() * s * &q;
    let mr = q.transpose() * m * &q;
    let li = sr
        .cholesky()
        .expect("stiffness is definite on zero-mean")
        .l()
        .try_inverse()
        .unwrap();
    let sym = &li * mr * li.transpose();
    sym.symmetric_eigen().eigenvalues.max().sqrt()
}
