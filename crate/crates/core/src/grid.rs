//! Masked, axis-aligned structured grids.
//!
//! A [`Grid`] is a box of `dims[0] x dims[1] (x dims[2])` cells with uniform
//! per-axis spacing and a per-cell activity mask. The union of active cells is
//! the region on which every field lives.
//!
//! Layout is staggered: scalars sit at active cell centres, and the normal
//! component of a vector field sits on cell faces. Faces normal to axis `k`
//! form their own lattice with `dims[k] + 1` entries along `k`.
//!
//! Every lattice (cells and each face lattice) is enumerated lexicographically
//! with the last axis fastest. Face `f` on axis `k` separates cell `f - e_k`
//! (its *low* side) from cell `f` (its *high* side).

use std::collections::VecDeque;

use crate::error::{Error, Result};

/// Marker for a lattice cell that is not part of the region.
const INACTIVE: usize = usize::MAX;

/// Position of a face in the face lattice of one axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FaceIndex {
    /// Coordinate direction the face is normal to.
    pub axis: usize,
    /// Lattice coordinates; unused trailing axes are zero.
    pub coords: [usize; 3],
}

/// How a face relates to the active region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Both neighbouring cells are active. Values are active-cell ids.
    Interior { low: usize, high: usize },
    /// Exactly one neighbour is active; `slot` indexes the boundary face set.
    Boundary { slot: usize },
    /// No active neighbour; fields carry zero here.
    Exterior,
}

/// A face shared by two active cells.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorFace {
    /// Global face id (offset into a [`FaceField`](crate::FaceField)).
    pub id: usize,
    pub axis: usize,
    /// Active-cell id on the low side.
    pub low: usize,
    /// Active-cell id on the high side.
    pub high: usize,
}

/// A face on the boundary of the active region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub index: FaceIndex,
    /// Global face id.
    pub id: usize,
    /// Active-cell id of the owner (the active side).
    pub cell: usize,
    /// Outward normal orientation along `index.axis`: `+1` if the owner is on
    /// the low side, `-1` otherwise.
    pub sign: f64,
    pub area: f64,
}

/// The ordered boundary of the active region.
///
/// Ordering is ascending axis, then lexicographic face coordinates with the
/// last axis fastest. Problem files list boundary data in this order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFaceSet {
    faces: Vec<BoundaryFace>,
}

impl BoundaryFaceSet {
    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, BoundaryFace> {
        self.faces.iter()
    }

    pub fn as_slice(&self) -> &[BoundaryFace] {
        &self.faces
    }

    /// `sum(sign * area * e_axis)` over all faces; zero for a closed surface.
    pub fn signed_area_sum(&self) -> [f64; 3] {
        let mut sum = [0.0; 3];
        for f in &self.faces {
            sum[f.index.axis] += f.sign * f.area;
        }
        sum
    }

    pub fn total_area(&self) -> f64 {
        self.faces.iter().map(|f| f.area).sum()
    }
}

impl<'a> IntoIterator for &'a BoundaryFaceSet {
    type Item = &'a BoundaryFace;
    type IntoIter = std::slice::Iter<'a, BoundaryFace>;

    fn into_iter(self) -> Self::IntoIter {
        self.faces.iter()
    }
}

/// The discrete region.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    ndim: usize,
    dims: [usize; 3],
    spacing: [f64; 3],
    mask: Vec<bool>,
    /// Lattice index of each active cell, ascending.
    active: Vec<usize>,
    /// Active id of each lattice cell, or `INACTIVE`.
    cell_ids: Vec<usize>,
    /// Start of each axis' face lattice in the global face numbering.
    face_offsets: [usize; 4],
    face_kinds: Vec<FaceKind>,
    interior: Vec<InteriorFace>,
    boundary: BoundaryFaceSet,
    face_weights: Vec<f64>,
    cell_volume: f64,
    face_area: [f64; 3],
}

impl Grid {
    /// Builds a grid over every cell of the box.
    pub fn new(dims: &[usize], spacing: &[f64]) -> Result<Self> {
        Self::with_mask(dims, spacing, None)
    }

    /// Builds a grid, optionally restricted by a per-cell mask given in
    /// canonical cell order.
    pub fn with_mask(dims: &[usize], spacing: &[f64], mask: Option<&[bool]>) -> Result<Self> {
        let ndim = dims.len();
        if !(2..=3).contains(&ndim) {
            return Err(Error::BadDimension(ndim));
        }
        if spacing.len() != ndim {
            return Err(Error::LengthMismatch {
                what: "spacing",
                expected: ndim,
                got: spacing.len(),
            });
        }
        let mut d = [1usize; 3];
        let mut h = [1.0f64; 3];
        for axis in 0..ndim {
            if dims[axis] == 0 {
                return Err(Error::EmptyAxis { axis });
            }
            if !(spacing[axis].is_finite() && spacing[axis] > 0.0) {
                return Err(Error::NonPositiveSpacing {
                    axis,
                    value: spacing[axis],
                });
            }
            d[axis] = dims[axis];
            h[axis] = spacing[axis];
        }
        let n_cells = d[0] * d[1] * d[2];
        let mask = match mask {
            Some(m) if m.len() != n_cells => {
                return Err(Error::MaskMismatch {
                    expected: n_cells,
                    got: m.len(),
                })
            }
            Some(m) => m.to_vec(),
            None => vec![true; n_cells],
        };

        let mut cell_ids = vec![INACTIVE; n_cells];
        let mut active = Vec::new();
        for (lattice, &on) in mask.iter().enumerate() {
            if on {
                cell_ids[lattice] = active.len();
                active.push(lattice);
            }
        }
        if active.is_empty() {
            return Err(Error::EmptyActiveSet);
        }

        let cell_volume: f64 = h[..ndim].iter().product();
        let mut face_area = [0.0; 3];
        for (axis, area) in face_area.iter_mut().enumerate().take(ndim) {
            *area = cell_volume / h[axis];
        }

        let mut grid = Grid {
            ndim,
            dims: d,
            spacing: h,
            mask,
            active,
            cell_ids,
            face_offsets: [0; 4],
            face_kinds: Vec::new(),
            interior: Vec::new(),
            boundary: BoundaryFaceSet { faces: Vec::new() },
            face_weights: Vec::new(),
            cell_volume,
            face_area,
        };
        grid.classify_faces();

        let components = grid.count_components();
        if components > 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(grid)
    }

    fn classify_faces(&mut self) {
        let mut offset = 0;
        for axis in 0..3 {
            self.face_offsets[axis] = offset;
            if axis < self.ndim {
                offset += self.face_lattice_len(axis);
            }
        }
        self.face_offsets[3] = offset;

        let mut kinds = Vec::with_capacity(offset);
        let mut weights = Vec::with_capacity(offset);
        let half = 0.5 * self.cell_volume;
        for axis in 0..self.ndim {
            let fdims = self.face_dims(axis);
            for local in 0..self.face_lattice_len(axis) {
                let coords = unravel(local, &fdims);
                let id = self.face_offsets[axis] + local;
                let low = (coords[axis] > 0)
                    .then(|| {
                        let mut c = coords;
                        c[axis] -= 1;
                        self.cell_id_at(c)
                    })
                    .flatten();
                let high = (coords[axis] < self.dims[axis])
                    .then(|| self.cell_id_at(coords))
                    .flatten();
                let kind = match (low, high) {
                    (Some(low), Some(high)) => {
                        self.interior.push(InteriorFace {
                            id,
                            axis,
                            low,
                            high,
                        });
                        weights.push(self.cell_volume);
                        FaceKind::Interior { low, high }
                    }
                    (Some(cell), None) | (None, Some(cell)) => {
                        let sign = if low.is_some() { 1.0 } else { -1.0 };
                        let slot = self.boundary.faces.len();
                        self.boundary.faces.push(BoundaryFace {
                            index: FaceIndex { axis, coords },
                            id,
                            cell,
                            sign,
                            area: self.face_area[axis],
                        });
                        weights.push(half);
                        FaceKind::Boundary { slot }
                    }
                    (None, None) => {
                        weights.push(0.0);
                        FaceKind::Exterior
                    }
                };
                kinds.push(kind);
            }
        }
        self.face_kinds = kinds;
        self.face_weights = weights;
    }

    fn count_components(&self) -> usize {
        let n = self.active.len();
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for f in &self.interior {
            adjacency[f.low].push(f.high);
            adjacency[f.high].push(f.low);
        }
        let mut seen = vec![false; n];
        let mut components = 0;
        let mut queue = VecDeque::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            seen[start] = true;
            queue.push_back(start);
            while let Some(c) = queue.pop_front() {
                for &nb in &adjacency[c] {
                    if !seen[nb] {
                        seen[nb] = true;
                        queue.push_back(nb);
                    }
                }
            }
        }
        components
    }

    pub fn ndim(&self) -> usize {
        self.ndim
    }

    /// Cell counts per axis (length `ndim`).
    pub fn dims(&self) -> &[usize] {
        &self.dims[..self.ndim]
    }

    /// Cell widths per axis (length `ndim`).
    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.ndim]
    }

    /// The activity mask in canonical cell order.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn n_lattice_cells(&self) -> usize {
        self.mask.len()
    }

    pub fn n_active(&self) -> usize {
        self.active.len()
    }

    /// Total number of faces across all axis lattices.
    pub fn n_faces(&self) -> usize {
        self.face_offsets[3]
    }

    pub fn n_faces_on_axis(&self, axis: usize) -> usize {
        if axis < self.ndim {
            self.face_lattice_len(axis)
        } else {
            0
        }
    }

    /// Global id of the first face normal to `axis`.
    pub fn face_offset(&self, axis: usize) -> usize {
        self.face_offsets[axis]
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_volume
    }

    /// Area of a face normal to `axis`.
    pub fn face_area(&self, axis: usize) -> f64 {
        self.face_area[axis]
    }

    /// Measure of the region.
    pub fn total_volume(&self) -> f64 {
        self.cell_volume * self.active.len() as f64
    }

    /// Cell-volume and face-area tables: one volume per active cell and one
    /// area per face (zero on exterior faces).
    pub fn measures(&self) -> (Vec<f64>, Vec<f64>) {
        let volumes = vec![self.cell_volume; self.active.len()];
        let areas = (0..self.n_faces())
            .map(|id| match self.face_kinds[id] {
                FaceKind::Exterior => 0.0,
                _ => self.face_area[self.face_axis(id)],
            })
            .collect();
        (volumes, areas)
    }

    /// Quadrature weight of each face: half a cell volume from each adjacent
    /// active cell.
    pub fn face_weights(&self) -> &[f64] {
        &self.face_weights
    }

    pub fn face_kind(&self, id: usize) -> FaceKind {
        self.face_kinds[id]
    }

    pub fn interior_faces(&self) -> &[InteriorFace] {
        &self.interior
    }

    pub fn boundary_faces(&self) -> &BoundaryFaceSet {
        &self.boundary
    }

    pub fn face_axis(&self, id: usize) -> usize {
        (0..self.ndim)
            .rev()
            .find(|&a| id >= self.face_offsets[a])
            .expect("face id in range")
    }

    /// Lattice position of a global face id.
    pub fn face_index(&self, id: usize) -> FaceIndex {
        let axis = self.face_axis(id);
        let coords = unravel(id - self.face_offsets[axis], &self.face_dims(axis));
        FaceIndex { axis, coords }
    }

    /// Global id of a face lattice position, if it exists.
    pub fn face_id(&self, index: FaceIndex) -> Option<usize> {
        if index.axis >= self.ndim {
            return None;
        }
        let fdims = self.face_dims(index.axis);
        let local = ravel(index.coords, &fdims)?;
        Some(self.face_offsets[index.axis] + local)
    }

    /// Lattice coordinates of an active cell.
    pub fn cell_coords(&self, cell: usize) -> [usize; 3] {
        unravel(self.active[cell], &self.dims)
    }

    /// Active id of the cell at lattice coordinates, if active.
    pub fn cell_id_at(&self, coords: [usize; 3]) -> Option<usize> {
        let lattice = ravel(coords, &self.dims)?;
        let id = self.cell_ids[lattice];
        (id != INACTIVE).then_some(id)
    }

    /// Active neighbour of `cell` displaced by `offset` along each axis.
    pub fn neighbor(&self, cell: usize, offset: [isize; 3]) -> Option<usize> {
        let c = self.cell_coords(cell);
        let mut n = [0usize; 3];
        for axis in 0..3 {
            let v = c[axis] as isize + offset[axis];
            if v < 0 {
                return None;
            }
            n[axis] = v as usize;
        }
        self.cell_id_at(n)
    }

    /// Centre of an active cell.
    pub fn cell_center(&self, cell: usize) -> [f64; 3] {
        let c = self.cell_coords(cell);
        let mut x = [0.0; 3];
        for axis in 0..self.ndim {
            x[axis] = (c[axis] as f64 + 0.5) * self.spacing[axis];
        }
        x
    }

    /// Centre of a face.
    pub fn face_center(&self, id: usize) -> [f64; 3] {
        let FaceIndex { axis, coords } = self.face_index(id);
        let mut x = [0.0; 3];
        for k in 0..self.ndim {
            let offset = if k == axis { 0.0 } else { 0.5 };
            x[k] = (coords[k] as f64 + offset) * self.spacing[k];
        }
        x
    }

    /// Lattice extent of the faces normal to `axis`.
    pub fn face_dims(&self, axis: usize) -> [usize; 3] {
        let mut fd = self.dims;
        fd[axis] += 1;
        fd
    }

    fn face_lattice_len(&self, axis: usize) -> usize {
        self.face_dims(axis).iter().product()
    }

    /// Faces adjacent to at least one active cell, in global id order.
    pub fn relevant_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_faces()).filter(|&id| self.face_kinds[id] != FaceKind::Exterior)
    }
}

/// Index of `coords` in a lattice with last axis fastest.
fn ravel(coords: [usize; 3], dims: &[usize; 3]) -> Option<usize> {
    if (0..3).any(|a| coords[a] >= dims[a]) {
        return None;
    }
    Some((coords[0] * dims[1] + coords[1]) * dims[2] + coords[2])
}

fn unravel(mut index: usize, dims: &[usize; 3]) -> [usize; 3] {
    let mut c = [0; 3];
    for axis in (0..3).rev() {
        c[axis] = index % dims[axis];
        index /= dims[axis];
    }
    c
}
