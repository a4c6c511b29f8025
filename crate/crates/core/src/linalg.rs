//! Matrix-free Krylov solvers.

use crate::operators::{axpy, dot};

/// Outcome of an iterative solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrylovOutcome {
    pub iterations: usize,
    /// `||b - A x|| / ||b||`, recomputed from scratch at exit.
    pub relative_residual: f64,
    pub converged: bool,
}

/// Linear map applied to residuals in preconditioned iterations.
pub type Preconditioner<'a> = &'a dyn Fn(&[f64]) -> Vec<f64>;

/// Conjugate gradients for a symmetric positive semi-definite operator whose
/// kernel is removed by `project` (an orthogonal projector onto its
/// complement). Right-hand side, iterate and search directions are
/// re-projected every step, so the iteration stays in the quotient.
///
/// `precondition`, when given, must be symmetric positive definite on the
/// complement of the kernel.
pub fn projected_cg(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    project: impl Fn(&mut [f64]),
    b: &[f64],
    x: &mut [f64],
    precondition: Option<Preconditioner>,
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let mut rhs = b.to_vec();
    project(&mut rhs);
    project(x);
    let b_norm = dot(&rhs, &rhs).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let residual_of = |x: &[f64]| {
        let ax = apply(x);
        let mut r: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        project(&mut r);
        r
    };
    let precondition = |r: &[f64]| {
        let mut z = match precondition {
            Some(m) => m(r),
            None => r.to_vec(),
        };
        project(&mut z);
        z
    };

    let mut r = residual_of(x);
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut iterations = 0;
    let threshold = tol * b_norm;
    while iterations < max_iter {
        if dot(&r, &r).sqrt() <= threshold {
            break;
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        iterations += 1;
        if iterations % 50 == 0 {
            project(x);
            r = residual_of(x);
        } else {
            axpy(-alpha, &ap, &mut r);
        }
        z = precondition(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        project(&mut p);
    }
    project(x);
    let r = residual_of(x);
    let relative_residual = dot(&r, &r).sqrt() / b_norm;
    KrylovOutcome {
        iterations,
        relative_residual,
        converged: relative_residual <= tol,
    }
}

/// MINRES for a symmetric (possibly indefinite, possibly singular but
/// consistent) operator, with an optional symmetric positive definite
/// diagonal preconditioner given by its inverse.
///
/// The recurrence follows Paige and Saunders. Convergence is judged on the
/// true residual `||b - A x|| / ||b||`; when the recurrence's estimate has
/// converged but the true residual has not, the iteration restarts from the
/// current iterate.
pub fn minres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    inv_diag: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
) -> KrylovOutcome {
    let n = b.len();
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return KrylovOutcome {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let minv = |r: &[f64]| -> Vec<f64> {
        match inv_diag {
            Some(d) => r.iter().zip(d).map(|(r, d)| r * d).collect(),
            None => r.to_vec(),
        }
    };
    let true_residual = |x: &[f64]| {
        let ax = apply(x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        dot(&r, &r).sqrt() / b_norm
    };

    let mut iterations = 0;
    let mut inner_tol = tol;
    let mut rel = true_residual(x);
    for _restart in 0..20 {
        if rel <= tol || iterations >= max_iter {
            break;
        }
        let ax = apply(x);
        let mut r1: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let mut y = minv(&r1);
        let beta1 = dot(&r1, &y).max(0.0).sqrt();
        if beta1 == 0.0 {
            break;
        }
        let mut oldb = 0.0;
        let mut beta = beta1;
        let mut dbar = 0.0;
        let mut epsln = 0.0;
        let mut phibar = beta1;
        let mut cs = -1.0;
        let mut sn = 0.0;
        let mut w = vec![0.0; n];
        let mut w2 = vec![0.0; n];
        let mut r2 = r1.clone();
        // beta1 measures the current residual, so rescale the target to be
        // relative to ||b||
        let target = beta1 * inner_tol / rel;
        let mut first = true;
        while iterations < max_iter {
            let s = 1.0 / beta;
            let v: Vec<f64> = y.iter().map(|yi| s * yi).collect();
            y = apply(&v);
            if !first {
                axpy(-beta / oldb, &r1, &mut y);
            }
            first = false;
            let alfa = dot(&v, &y);
            axpy(-alfa / beta, &r2, &mut y);
            r1 = std::mem::replace(&mut r2, y.clone());
            y = minv(&r2);
            oldb = beta;
            beta = dot(&r2, &y).max(0.0).sqrt();
            let oldeps = epsln;
            let delta = cs * dbar + sn * alfa;
            let gbar = sn * dbar - cs * alfa;
            epsln = sn * beta;
            dbar = -cs * beta;
            let gamma = gbar.hypot(beta).max(f64::EPSILON);
            cs = gbar / gamma;
            sn = beta / gamma;
            let phi = cs * phibar;
            phibar *= sn;
            let w1 = std::mem::replace(&mut w2, std::mem::take(&mut w));
            w = v
                .iter()
                .zip(w1.iter().zip(&w2))
                .map(|(vi, (a, b))| (vi - oldeps * a - delta * b) / gamma)
                .collect();
            axpy(phi, &w, x);
            iterations += 1;
            if phibar <= target || beta == 0.0 {
                break;
            }
        }
        let new_rel = true_residual(x);
        if new_rel > tol && new_rel >= 0.5 * rel {
            // recurrence estimate drifted from the true residual
            inner_tol *= 0.1;
        }
        rel = new_rel;
    }
    KrylovOutcome {
        iterations,
        relative_residual: rel,
        converged: rel <= tol,
    }
}

/// Cholesky factor of a symmetric positive definite band matrix, stored as
/// the lower band row by row.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    band: usize,
    pinned: Vec<usize>,
    // row i holds L[i][i - band ..= i], left-padded with zeros
    lower: Vec<f64>,
}

impl BandedCholesky {
    /// Assembles the band of a symmetric operator with half-bandwidth `band`
    /// by probing it with `2 * band + 1` combined unit vectors, replaces the
    /// rows and columns listed in `pinned` by identity rows, and factors.
    /// Returns `None` if the pinned matrix is not positive definite.
    pub fn from_operator(
        n: usize,
        band: usize,
        apply: impl Fn(&[f64]) -> Vec<f64>,
        pinned: &[usize],
    ) -> Option<Self> {
        let band = band.min(n.saturating_sub(1));
        let width = band + 1;
        let mut a = vec![0.0; n * width];
        let stride = 2 * band + 1;
        for color in 0..stride.min(n) {
            let probe: Vec<f64> = (0..n)
                .map(|j| if j % stride == color { 1.0 } else { 0.0 })
                .collect();
            let out = apply(&probe);
            for (i, &v) in out.iter().enumerate() {
                // the only probed column within the band of row i
                let lo = i.saturating_sub(band);
                let j = lo + (color + stride - lo % stride) % stride;
                if j <= i {
                    a[i * width + (j + band - i)] = v;
                }
            }
        }
        let mut is_pinned = vec![false; n];
        for &p in pinned {
            is_pinned[p] = true;
        }
        for i in 0..n {
            for j in i.saturating_sub(band)..=i {
                if is_pinned[i] || is_pinned[j] {
                    a[i * width + (j + band - i)] = if i == j { 1.0 } else { 0.0 };
                }
            }
        }
        // in-place factorization
        for i in 0..n {
            for j in i.saturating_sub(band)..=i {
                let lo = i.saturating_sub(band).max(j.saturating_sub(band));
                let mut s = a[i * width + (j + band - i)];
                for k in lo..j {
                    s -= a[i * width + (k + band - i)] * a[j * width + (k + band - j)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    a[i * width + band] = s.sqrt();
                } else {
                    a[i * width + (j + band - i)] = s / a[j * width + band];
                }
            }
        }
        Some(Self {
            n,
            band,
            pinned: pinned.to_vec(),
            lower: a,
        })
    }

    /// Solves the pinned system: pinned entries of `x` are zero and the
    /// remaining rows of `A x = b` hold. For a consistent singular `A` whose
    /// kernel is fixed by the pins, this is a solution of the full system.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (n, band, width) = (self.n, self.band, self.band + 1);
        let l = &self.lower;
        let mut y = b.to_vec();
        for &p in &self.pinned {
            y[p] = 0.0;
        }
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(band)..i {
                s -= l[i * width + (k + band - i)] * y[k];
            }
            y[i] = s / l[i * width + band];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..(i + width).min(n) {
                s -= l[k * width + (i + band - k)] * y[k];
            }
            y[i] = s / l[i * width + band];
        }
        y
    }
}
