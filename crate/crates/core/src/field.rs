//! Grid-attached value tables.

use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::grid::{FaceKind, Grid};

macro_rules! field_type {
    ($(#[$doc:meta])* $name:ident, $what:literal, $len:expr) => {
        $(#[$doc])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name {
            values: Vec<f64>,
        }

        impl $name {
            /// All-zero field sized for `grid`.
            pub fn zeros(grid: &Grid) -> Self {
                Self {
                    values: vec![0.0; $len(grid)],
                }
            }

            /// Wraps `values`, checking length and finiteness.
            pub fn from_vec(grid: &Grid, values: Vec<f64>) -> Result<Self> {
                let expected = $len(grid);
                if values.len() != expected {
                    return Err(Error::LengthMismatch {
                        what: $what,
                        expected,
                        got: values.len(),
                    });
                }
                if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite { what: $what, index });
                }
                Ok(Self { values })
            }

            #[allow(dead_code)]
            pub(crate) fn from_raw(values: Vec<f64>) -> Self {
                Self { values }
            }

            pub fn into_vec(self) -> Vec<f64> {
                self.values
            }

            pub fn scaled(&self, factor: f64) -> Self {
                Self {
                    values: self.values.iter().map(|v| v * factor).collect(),
                }
            }

            /// Largest absolute entry.
            pub fn max_abs(&self) -> f64 {
                self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
            }
        }

        impl Deref for $name {
            type Target = [f64];

            fn deref(&self) -> &[f64] {
                &self.values
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.values
            }
        }
    };
}

field_type!(
    /// One value per active cell (potentials, density rates, multipliers).
    ScalarField,
    "scalar field",
    |g: &Grid| g.n_active()
);

field_type!(
    /// Normal component of a vector field, one value per face of every axis
    /// lattice. Exterior faces carry zero.
    FaceField,
    "face field",
    |g: &Grid| g.n_faces()
);

field_type!(
    /// One value per boundary face, in boundary-face order (traces,
    /// boundary flux densities).
    BoundaryValues,
    "boundary values",
    |g: &Grid| g.boundary_faces().len()
);

impl ScalarField {
    /// Samples `f` at active cell centres.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        Self::from_raw(
            (0..grid.n_active())
                .map(|c| f(grid.cell_center(c)))
                .collect(),
        )
    }

    /// Constant field.
    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::from_raw(vec![value; grid.n_active()])
    }
}

impl BoundaryValues {
    /// Constant boundary data.
    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self::from_raw(vec![value; grid.boundary_faces().len()])
    }

    /// Per-side constants: `side(axis, sign)` gives the value on every
    /// boundary face with that outward normal.
    pub fn from_sides(grid: &Grid, side: impl Fn(usize, f64) -> f64) -> Self {
        Self::from_raw(
            grid.boundary_faces()
                .iter()
                .map(|f| side(f.index.axis, f.sign))
                .collect(),
        )
    }
}

impl FaceField {
    /// Sets every exterior face to zero.
    pub fn clear_exterior(&mut self, grid: &Grid) {
        for (id, v) in self.values.iter_mut().enumerate() {
            if grid.face_kind(id) == FaceKind::Exterior {
                *v = 0.0;
            }
        }
    }

    /// Flux whose boundary normal components equal `tau`: each boundary face
    /// gets `sign * tau` (the axis component whose outward projection is
    /// `tau`). Interior faces are left untouched.
    pub fn set_boundary_flux(&mut self, grid: &Grid, tau: &BoundaryValues) {
        for (f, &t) in grid.boundary_faces().iter().zip(tau.iter()) {
            self.values[f.id] = f.sign * t;
        }
    }

    /// Outward normal components `sign * w` on the boundary faces.
    pub fn boundary_normal(&self, grid: &Grid) -> BoundaryValues {
        BoundaryValues::from_raw(
            grid.boundary_faces()
                .iter()
                .map(|f| f.sign * self.values[f.id])
                .collect(),
        )
    }

    /// Values on interior faces, in interior-face order.
    pub fn interior_values(&self, grid: &Grid) -> Vec<f64> {
        grid.interior_faces()
            .iter()
            .map(|f| self.values[f.id])
            .collect()
    }

    /// Face field holding `values` on the interior faces and zero elsewhere.
    pub fn from_interior(grid: &Grid, values: &[f64]) -> Self {
        let mut w = Self::zeros(grid);
        for (f, &v) in grid.interior_faces().iter().zip(values) {
            w.values[f.id] = v;
        }
        w
    }
}
