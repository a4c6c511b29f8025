//! Discrete differential operators on the staggered grid.
//!
//! The gradient, divergence and trace are built so that summation by parts
//! holds exactly:
//!
//! ```text
//! <psi, div(w, tau)>_cells + <grad psi, w>_faces = <trace psi, tau>_boundary
//! ```
//!
//! with cell pairings weighted by volume, face pairings by
//! [`Grid::face_weights`] and boundary pairings by face area. Every other
//! module relies on this identity; [`pairing_residual`] measures its defect.

use rand::Rng;

use crate::field::{BoundaryValues, FaceField, ScalarField};
use crate::grid::Grid;

/// Interior face value `(psi_high - psi_low) / h`; zero on boundary and
/// exterior faces.
pub fn gradient(grid: &Grid, psi: &[f64]) -> FaceField {
    let mut w = FaceField::zeros(grid);
    let h = grid.spacing();
    for f in grid.interior_faces() {
        w[f.id] = (psi[f.high] - psi[f.low]) / h[f.axis];
    }
    w
}

/// Per-cell net outward flux divided by volume. Interior faces read `w`;
/// boundary faces read the outward normal flux from `tau` (positive is
/// outflow) and ignore whatever `w` holds there.
pub fn divergence(grid: &Grid, w: &[f64], tau: &[f64]) -> ScalarField {
    let mut div = vec![0.0; grid.n_active()];
    for f in grid.interior_faces() {
        let flux = w[f.id] * grid.face_area(f.axis);
        div[f.low] += flux;
        div[f.high] -= flux;
    }
    for (b, &t) in grid.boundary_faces().iter().zip(tau) {
        div[b.cell] += t * b.area;
    }
    let inv = 1.0 / grid.cell_volume();
    div.iter_mut().for_each(|d| *d *= inv);
    ScalarField::from_raw(div)
}

/// Owner-cell value on every boundary face.
pub fn trace(grid: &Grid, psi: &[f64]) -> BoundaryValues {
    BoundaryValues::from_raw(grid.boundary_faces().iter().map(|b| psi[b.cell]).collect())
}

/// `psi -> (psi, trace psi)`.
pub fn delta_map(grid: &Grid, psi: &[f64]) -> (ScalarField, BoundaryValues) {
    (ScalarField::from_raw(psi.to_vec()), trace(grid, psi))
}

/// `sum(f * volume)` over active cells.
pub fn integrate_cells(grid: &Grid, f: &[f64]) -> f64 {
    grid.cell_volume() * f.iter().sum::<f64>()
}

/// `sum(g * area)` over boundary faces.
pub fn integrate_boundary(grid: &Grid, g: &[f64]) -> f64 {
    grid.boundary_faces()
        .iter()
        .zip(g)
        .map(|(b, v)| b.area * v)
        .sum()
}

/// Volume-weighted cell pairing.
pub fn cell_inner(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.cell_volume() * dot(a, b)
}

/// Face pairing weighted by [`Grid::face_weights`].
pub fn face_inner(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.face_weights()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(w, (x, y))| w * x * y)
        .sum()
}

/// Area-weighted boundary pairing.
pub fn boundary_inner(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    grid.boundary_faces()
        .iter()
        .zip(a.iter().zip(b))
        .map(|(f, (x, y))| f.area * x * y)
        .sum()
}

pub fn cell_norm(grid: &Grid, a: &[f64]) -> f64 {
    cell_inner(grid, a, a).sqrt()
}

pub fn boundary_norm(grid: &Grid, a: &[f64]) -> f64 {
    boundary_inner(grid, a, a).sqrt()
}

/// Weighted `a`-norm over every face with positive weight,
/// `(sum weight * |w|^a)^(1/a)`, or the max modulus for `a = inf`.
pub fn face_norm(grid: &Grid, w: &[f64], a: f64) -> f64 {
    weighted_norm(
        grid.face_weights().iter().copied().zip(w.iter().copied()),
        a,
    )
}

/// Weighted `a`-norm restricted to interior faces: the part of a flux the
/// balance constraints leave free.
pub fn interior_face_norm(grid: &Grid, w: &[f64], a: f64) -> f64 {
    let weight = grid.cell_volume();
    weighted_norm(grid.interior_faces().iter().map(|f| (weight, w[f.id])), a)
}

/// Weighted norm of interior-face values given in interior-face order.
pub(crate) fn interior_vec_norm(grid: &Grid, u: &[f64], a: f64) -> f64 {
    let weight = grid.cell_volume();
    weighted_norm(u.iter().map(|&v| (weight, v)), a)
}

fn weighted_norm(items: impl Iterator<Item = (f64, f64)>, a: f64) -> f64 {
    if a.is_infinite() {
        return items
            .filter(|&(w, _)| w > 0.0)
            .fold(0.0, |m, (_, v)| m.max(v.abs()));
    }
    if a == 2.0 {
        return items.map(|(w, v)| w * v * v).sum::<f64>().sqrt();
    }
    // scale by the max modulus so large exponents do not overflow
    let items: Vec<_> = items.filter(|&(w, _)| w > 0.0).collect();
    let m = items.iter().fold(0.0f64, |m, &(_, v)| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    let s: f64 = items.iter().map(|&(w, v)| w * (v.abs() / m).powf(a)).sum();
    m * s.powf(1.0 / a)
}

/// `G^T W u`: the adjoint of [`gradient`] under the weighted face pairing and
/// the plain (unweighted) cell sum. Equals `-volume * div(u, 0)`.
pub fn gradient_adjoint(grid: &Grid, u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_active()];
    for f in grid.interior_faces() {
        let flux = u[f.id] * grid.face_area(f.axis);
        out[f.high] += flux;
        out[f.low] -= flux;
    }
    out
}

/// Stiffness operator `G^T W G psi` (the weak negative Laplacian with natural
/// boundary conditions). Its kernel is the constants.
pub fn stiffness_apply(grid: &Grid, psi: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_active()];
    let h = grid.spacing();
    for f in grid.interior_faces() {
        let coef = grid.face_area(f.axis) / h[f.axis];
        let flux = coef * (psi[f.high] - psi[f.low]);
        out[f.high] += flux;
        out[f.low] -= flux;
    }
    out
}

/// Removes the volume-weighted mean.
pub fn zero_mean_project(_grid: &Grid, psi: &[f64]) -> ScalarField {
    let mut out = psi.to_vec();
    remove_mean(&mut out);
    ScalarField::from_raw(out)
}

/// In-place mean removal (volumes are uniform, so the weighted mean is the
/// plain mean).
pub(crate) fn remove_mean(v: &mut [f64]) {
    if v.is_empty() {
        return;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Orthonormal basis (volume-weighted) of the affine functions restricted to
/// the active cells.
#[derive(Debug, Clone)]
pub struct AffineBasis {
    vectors: Vec<Vec<f64>>,
}

impl AffineBasis {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n_active();
        let centers: Vec<[f64; 3]> = (0..n).map(|c| grid.cell_center(c)).collect();
        let mut candidates = vec![vec![1.0; n]];
        for axis in 0..grid.ndim() {
            let mean = centers.iter().map(|x| x[axis]).sum::<f64>() / n as f64;
            candidates.push(centers.iter().map(|x| x[axis] - mean).collect());
        }
        // modified Gram-Schmidt, applied twice; drop dependent directions
        // (e.g. y on a grid one cell tall)
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        for mut v in candidates {
            let norm0 = dot(&v, &v).sqrt();
            for _ in 0..2 {
                for q in &vectors {
                    let c = dot(&v, q);
                    axpy(-c, q, &mut v);
                }
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-10 * norm0 && norm > 0.0 {
                v.iter_mut().for_each(|x| *x /= norm);
                vectors.push(v);
            }
        }
        AffineBasis { vectors }
    }

    /// Dimension of the affine space on the active set.
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Removes the affine component (Euclidean projection, which is the
    /// volume-weighted one for uniform volumes).
    pub fn project_out(&self, v: &mut [f64]) {
        for q in &self.vectors {
            let c = dot(v, q);
            axpy(-c, q, v);
        }
    }

    /// Coefficients of `v` along the orthonormal affine basis.
    pub fn components(&self, v: &[f64]) -> Vec<f64> {
        self.vectors.iter().map(|q| dot(v, q)).collect()
    }
}

/// Removes the best volume-weighted least-squares affine fit.
pub fn affine_project(grid: &Grid, psi: &[f64]) -> ScalarField {
    let mut out = psi.to_vec();
    AffineBasis::new(grid).project_out(&mut out);
    ScalarField::from_raw(out)
}

/// Per-cell symmetric matrix of second differences.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianField {
    ndim: usize,
    values: Vec<[[f64; 3]; 3]>,
}

impl HessianField {
    pub fn ndim(&self) -> usize {
        self.ndim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Entry `(i, j)` at an active cell.
    pub fn get(&self, cell: usize, i: usize, j: usize) -> f64 {
        self.values[cell][i][j]
    }

    pub fn cell(&self, cell: usize) -> &[[f64; 3]; 3] {
        &self.values[cell]
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|m| m.iter().flatten())
            .fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// One `(i, j)` entry of the Hessian at one cell as a sparse stencil.
#[derive(Debug, Clone)]
struct HessianRow {
    cell: usize,
    i: usize,
    j: usize,
    taps: Vec<(usize, f64)>,
}

/// Sparse second-difference operator.
///
/// Diagonal entries use the central three-point difference, falling back to a
/// forward or backward three-point difference at cells missing a neighbour,
/// and vanish when no three collinear active cells exist. Off-diagonal
/// entries average the one-sided cross differences over every quadrant whose
/// four cells are active; with all four quadrants available this is the
/// centred cross difference. Affine functions are annihilated by every tap.
#[derive(Debug, Clone)]
pub struct HessianOperator {
    ndim: usize,
    n_cells: usize,
    volume: f64,
    rows: Vec<HessianRow>,
}

impl HessianOperator {
    pub fn new(grid: &Grid) -> Self {
        let d = grid.ndim();
        let h = grid.spacing();
        let mut rows = Vec::new();
        let unit = |axis: usize, s: isize| {
            let mut o = [0isize; 3];
            o[axis] = s;
            o
        };
        for c in 0..grid.n_active() {
            for i in 0..d {
                let nb = |s: isize| grid.neighbor(c, unit(i, s));
                let inv = 1.0 / (h[i] * h[i]);
                let taps = match (nb(-1), nb(1)) {
                    (Some(m), Some(p)) => vec![(m, inv), (c, -2.0 * inv), (p, inv)],
                    _ => match (nb(1), nb(2), nb(-1), nb(-2)) {
                        (Some(p1), Some(p2), _, _) => vec![(c, inv), (p1, -2.0 * inv), (p2, inv)],
                        (_, _, Some(m1), Some(m2)) => vec![(c, inv), (m1, -2.0 * inv), (m2, inv)],
                        _ => Vec::new(),
                    },
                };
                rows.push(HessianRow {
                    cell: c,
                    i,
                    j: i,
                    taps,
                });

                for j in (i + 1)..d {
                    let mut taps: Vec<(usize, f64)> = Vec::new();
                    let mut quadrants = 0usize;
                    for si in [-1isize, 1] {
                        for sj in [-1isize, 1] {
                            let mut diag = [0isize; 3];
                            diag[i] = si;
                            diag[j] = sj;
                            let (Some(a), Some(b), Some(ab)) = (
                                grid.neighbor(c, unit(i, si)),
                                grid.neighbor(c, unit(j, sj)),
                                grid.neighbor(c, diag),
                            ) else {
                                continue;
                            };
                            let s = (si * sj) as f64 / (h[i] * h[j]);
                            taps.extend([(ab, s), (a, -s), (b, -s), (c, s)]);
                            quadrants += 1;
                        }
                    }
                    if quadrants > 0 {
                        let q = quadrants as f64;
                        taps.iter_mut().for_each(|t| t.1 /= q);
                    }
                    rows.push(HessianRow {
                        cell: c,
                        i,
                        j,
                        taps,
                    });
                }
            }
        }
        HessianOperator {
            ndim: d,
            n_cells: grid.n_active(),
            volume: grid.cell_volume(),
            rows,
        }
    }

    pub fn apply(&self, psi: &[f64]) -> HessianField {
        let mut values = vec![[[0.0; 3]; 3]; self.n_cells];
        for row in &self.rows {
            let v: f64 = row.taps.iter().map(|&(c, w)| w * psi[c]).sum();
            values[row.cell][row.i][row.j] = v;
            values[row.cell][row.j][row.i] = v;
        }
        HessianField {
            ndim: self.ndim,
            values,
        }
    }

    /// `<H a, H b>`: volume-weighted Frobenius pairing.
    pub fn inner(&self, a: &HessianField, b: &HessianField) -> f64 {
        let d = self.ndim;
        let mut s = 0.0;
        for (ma, mb) in a.values.iter().zip(&b.values) {
            for i in 0..d {
                for j in 0..d {
                    s += ma[i][j] * mb[i][j];
                }
            }
        }
        self.volume * s
    }

    /// `||H psi||` in the volume-weighted Frobenius norm.
    pub fn norm(&self, psi: &[f64]) -> f64 {
        let hp = self.apply(psi);
        self.inner(&hp, &hp).sqrt()
    }

    /// `H^T W H psi`, the gradient of `psi -> <H psi, H psi> / 2`.
    pub fn normal_apply(&self, psi: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_cells];
        for row in &self.rows {
            let v: f64 = row.taps.iter().map(|&(c, w)| w * psi[c]).sum();
            let mult = if row.i == row.j { 1.0 } else { 2.0 };
            let s = self.volume * mult * v;
            for &(c, w) in &row.taps {
                out[c] += s * w;
            }
        }
        out
    }
}

/// Second differences of `psi`; see [`HessianOperator`] for the stencils.
pub fn hessian(grid: &Grid, psi: &[f64]) -> HessianField {
    HessianOperator::new(grid).apply(psi)
}

/// The three terms of the discrete Gauss identity:
/// `[<psi, div(w, tau)>, <grad psi, w>, <trace psi, tau>]`.
pub fn pairing_terms(grid: &Grid, psi: &[f64], w: &[f64], tau: &[f64]) -> [f64; 3] {
    let div = divergence(grid, w, tau);
    let grad = gradient(grid, psi);
    let tr = trace(grid, psi);
    [
        cell_inner(grid, psi, &div),
        face_inner(grid, &grad, w),
        boundary_inner(grid, &tr, tau),
    ]
}

/// `|<psi, div(w, tau)> + <grad psi, w> - <trace psi, tau>|`.
pub fn pairing_residual(grid: &Grid, psi: &[f64], w: &[f64], tau: &[f64]) -> f64 {
    let [a, b, c] = pairing_terms(grid, psi, w, tau);
    (a + b - c).abs()
}

/// Random face field with zero divergence in every active cell and zero
/// normal component on every boundary face.
///
/// Built as the discrete curl of a random stream function on nodes (2D) or
/// vector potential on edges (3D), supported on nodes/edges whose surrounding
/// cells are all active. The discrete divergence of a discrete curl vanishes
/// identically.
pub fn divergence_free_field<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> FaceField {
    let dims = grid.dims();
    let h = grid.spacing();
    let mut w = FaceField::zeros(grid);
    if grid.ndim() == 2 {
        let (n0, n1) = (dims[0], dims[1]);
        let node = |i: usize, j: usize| i * (n1 + 1) + j;
        let mut s = vec![0.0; (n0 + 1) * (n1 + 1)];
        for i in 1..n0 {
            for j in 1..n1 {
                let all_active = [(i - 1, j - 1), (i - 1, j), (i, j - 1), (i, j)]
                    .iter()
                    .all(|&(a, b)| grid.cell_id_at([a, b, 0]).is_some());
                if all_active {
                    s[node(i, j)] = rng.gen_range(-1.0..1.0);
                }
            }
        }
        for id in 0..grid.n_faces() {
            let f = grid.face_index(id);
            let [i, j, _] = f.coords;
            w[id] = if f.axis == 0 {
                (s[node(i, j + 1)] - s[node(i, j)]) / h[1]
            } else {
                -(s[node(i + 1, j)] - s[node(i, j)]) / h[0]
            };
        }
    } else {
        let n = [dims[0], dims[1], dims[2]];
        // edge lattice for axis e: n[e] along e, n + 1 elsewhere
        let edge_dims = |e: usize| {
            let mut d = [n[0] + 1, n[1] + 1, n[2] + 1];
            d[e] = n[e];
            d
        };
        let edge_index = |e: usize, p: [usize; 3]| {
            let d = edge_dims(e);
            (p[0] * d[1] + p[1]) * d[2] + p[2]
        };
        let mut potential: Vec<Vec<f64>> = Vec::with_capacity(3);
        for e in 0..3 {
            let d = edge_dims(e);
            let (a, b) = ((e + 1) % 3, (e + 2) % 3);
            let mut v = vec![0.0; d[0] * d[1] * d[2]];
            for p0 in 0..d[0] {
                for p1 in 0..d[1] {
                    for p2 in 0..d[2] {
                        let p = [p0, p1, p2];
                        if p[a] == 0 || p[a] == n[a] || p[b] == 0 || p[b] == n[b] {
                            continue;
                        }
                        let all_active =
                            [(0, 0), (1, 0), (0, 1), (1, 1)].iter().all(|&(da, db)| {
                                let mut c = p;
                                c[a] -= da;
                                c[b] -= db;
                                grid.cell_id_at(c).is_some()
                            });
                        if all_active {
                            v[edge_index(e, p)] = rng.gen_range(-1.0..1.0);
                        }
                    }
                }
            }
            potential.push(v);
        }
        for id in 0..grid.n_faces() {
            let f = grid.face_index(id);
            let k = f.axis;
            let (a, b) = ((k + 1) % 3, (k + 2) % 3);
            let p = f.coords;
            let mut pa = p;
            pa[a] += 1;
            let mut pb = p;
            pb[b] += 1;
            let db = (potential[b][edge_index(b, pa)] - potential[b][edge_index(b, p)]) / h[a];
            let da = (potential[a][edge_index(a, pb)] - potential[a][edge_index(a, p)]) / h[b];
            w[id] = db - da;
        }
    }
    w
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}
