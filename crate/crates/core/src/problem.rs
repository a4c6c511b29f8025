//! Balance data, solvability and residuals.
//!
//! A flux `w` balances the data `(beta, tau, s)` when
//!
//! ```text
//! beta + div w = s   in the region,     w . nu = tau   on its boundary,
//! ```
//!
//! with `tau > 0` meaning outflow. On the grid the boundary condition is
//! carried by `tau` itself (see [`divergence`]), so only the cell residual
//! remains. Tested against every potential `psi`, the same condition reads
//! `F(psi) = <grad psi, w>` with the load functional
//! `F(psi) = sum beta psi dV + sum tau psi dA` (for `s = 0`).

use crate::error::{Error, Result};
use crate::field::{BoundaryValues, FaceField, ScalarField};
use crate::grid::Grid;
use crate::operators::{
    cell_norm, divergence, face_inner, gradient, integrate_boundary, integrate_cells,
    zero_mean_project,
};

/// Default relative tolerance of the compatibility check.
pub const COMPATIBILITY_RTOL: f64 = 1e-10;

/// Density rate, boundary flux and source on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceProblem {
    grid: Grid,
    beta: ScalarField,
    tau: BoundaryValues,
    source: ScalarField,
}

/// Per-cell coefficients of the load functional:
/// `F_c = beta_c * volume + sum(tau_f * area_f)` over the boundary faces of `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    coefficients: Vec<f64>,
}

impl LoadVector {
    /// `F(psi) = sum F_c psi_c`.
    pub fn apply(&self, psi: &[f64]) -> f64 {
        self.coefficients.iter().zip(psi).map(|(f, p)| f * p).sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coefficients
    }
}

impl BalanceProblem {
    /// Problem without a source term.
    pub fn new(grid: Grid, beta: ScalarField, tau: BoundaryValues) -> Result<Self> {
        let source = ScalarField::zeros(&grid);
        Self::with_source(grid, beta, tau, source)
    }

    pub fn with_source(
        grid: Grid,
        beta: ScalarField,
        tau: BoundaryValues,
        source: ScalarField,
    ) -> Result<Self> {
        // re-validate: fields may have been built for another grid
        let beta = ScalarField::from_vec(&grid, beta.into_vec())?;
        let tau = BoundaryValues::from_vec(&grid, tau.into_vec())?;
        let source = ScalarField::from_vec(&grid, source.into_vec())?;
        Ok(Self {
            grid,
            beta,
            tau,
            source,
        })
    }

    /// All-zero data on `grid`.
    pub fn zero(grid: Grid) -> Self {
        let beta = ScalarField::zeros(&grid);
        let tau = BoundaryValues::zeros(&grid);
        let source = ScalarField::zeros(&grid);
        Self {
            grid,
            beta,
            tau,
            source,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn beta(&self) -> &ScalarField {
        &self.beta
    }

    pub fn tau(&self) -> &BoundaryValues {
        &self.tau
    }

    pub fn source(&self) -> &ScalarField {
        &self.source
    }

    /// Same problem with every datum multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            beta: self.beta.scaled(factor),
            tau: self.tau.scaled(factor),
            source: self.source.scaled(factor),
        }
    }

    /// `int beta dV + int tau dA - int s dV`; zero exactly when some flux can
    /// balance the data.
    pub fn compatibility_residual(&self) -> f64 {
        integrate_cells(&self.grid, &self.beta) + integrate_boundary(&self.grid, &self.tau)
            - integrate_cells(&self.grid, &self.source)
    }

    /// `int |beta| dV + int |tau| dA + int |s| dV`, the scale the residual is
    /// judged against.
    pub fn compatibility_scale(&self) -> f64 {
        let abs = |v: &[f64]| v.iter().map(|x| x.abs()).collect::<Vec<_>>();
        integrate_cells(&self.grid, &abs(&self.beta))
            + integrate_boundary(&self.grid, &abs(&self.tau))
            + integrate_cells(&self.grid, &abs(&self.source))
    }

    /// Fails with [`Error::Incompatible`] when the compatibility residual
    /// exceeds `rtol` times [`compatibility_scale`](Self::compatibility_scale).
    pub fn check_compatible(&self, rtol: f64) -> Result<()> {
        let residual = self.compatibility_residual();
        let tolerance = rtol * self.compatibility_scale();
        if residual.abs() > tolerance {
            return Err(Error::Incompatible {
                residual,
                tolerance,
            });
        }
        Ok(())
    }

    /// Preconditions shared by the optimization solvers: zero source and
    /// compatible data.
    pub fn check_optimizable(&self, rtol: f64) -> Result<()> {
        if self.source.iter().any(|&s| s != 0.0) {
            return Err(Error::NonzeroSource);
        }
        self.check_compatible(rtol)
    }

    /// Load functional coefficients. Point masses are encoded by the caller
    /// as `mass / volume` in `beta` or `mass / area` in `tau`.
    pub fn assemble_load(&self) -> LoadVector {
        let vol = self.grid.cell_volume();
        let mut coefficients: Vec<f64> = self.beta.iter().map(|b| b * vol).collect();
        for (f, t) in self.grid.boundary_faces().iter().zip(self.tau.iter()) {
            coefficients[f.cell] += t * f.area;
        }
        LoadVector { coefficients }
    }

    /// Cell residual `beta + div(w, tau) - s` and its volume-weighted 2-norm.
    pub fn balance_residual(&self, w: &FaceField) -> (ScalarField, f64) {
        let div = divergence(&self.grid, w, &self.tau);
        let r: Vec<f64> = self
            .beta
            .iter()
            .zip(div.iter())
            .zip(self.source.iter())
            .map(|((b, d), s)| b + d - s)
            .collect();
        let norm = cell_norm(&self.grid, &r);
        (ScalarField::from_raw(r), norm)
    }

    /// Balance residual norm divided by the size of the terms that make it up:
    /// `||beta - s + div(0, tau)|| + ||div(w, 0)||`. Zero when both vanish.
    pub fn relative_balance_residual(&self, w: &FaceField) -> f64 {
        let (_, norm) = self.balance_residual(w);
        let zero_faces = FaceField::zeros(&self.grid);
        let data = divergence(&self.grid, &zero_faces, &self.tau);
        let data: Vec<f64> = data
            .iter()
            .zip(self.beta.iter().zip(self.source.iter()))
            .map(|(d, (b, s))| d + b - s)
            .collect();
        let zero_tau = vec![0.0; self.grid.boundary_faces().len()];
        let flux = divergence(&self.grid, w, &zero_tau);
        let scale = cell_norm(&self.grid, &data) + cell_norm(&self.grid, &flux);
        if scale == 0.0 {
            0.0
        } else {
            norm / scale
        }
    }

    /// `F(psi) - <grad psi, w>`, which equals `<psi, beta + div(w, tau)>`.
    pub fn weak_balance_residual(&self, w: &FaceField, psi: &[f64]) -> f64 {
        let load = self.assemble_load().apply(psi);
        let grad = gradient(&self.grid, psi);
        load - face_inner(&self.grid, &grad, w)
    }
}

/// Compatible problem with a known balancing flux.
///
/// The potential is made zero-mean, `w_ref = grad psi_ref`, `tau = 0` and
/// `beta = -div(w_ref, 0)`, so `w_ref` balances the data exactly.
pub fn manufacture(grid: &Grid, psi_ref: &[f64]) -> (BalanceProblem, FaceField) {
    let psi = zero_mean_project(grid, psi_ref);
    let w = gradient(grid, &psi);
    let tau = BoundaryValues::zeros(grid);
    let div = divergence(grid, &w, &tau);
    let beta = ScalarField::from_raw(div.iter().map(|d| -d).collect());
    let problem = BalanceProblem {
        grid: grid.clone(),
        beta,
        tau,
        source: ScalarField::zeros(grid),
    };
    (problem, w)
}
