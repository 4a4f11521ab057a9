//! One-dimensional meshes covering Ω = (omega_lo, omega_hi) and a truncated
//! exterior collar of radius R on each side.
//!
//! Cells are stored in ascending coordinate order: left collar, interior,
//! right collar. Consecutive cells share their endpoints.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

static NEXT_MESH_ID: AtomicU64 = AtomicU64::new(1);

/// Identity token binding grid functions and weights to the mesh they were built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MeshId(pub u64);

impl MeshId {
    pub(crate) fn fresh() -> Self {
        MeshId(NEXT_MESH_ID.fetch_add(1, Ordering::Relaxed))
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn midpoint_split(&self) -> (Interval, Interval) {
        let c = self.center();
        (Interval::new(self.lo, c), Interval::new(c, self.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellTag {
    Interior,
    Exterior,
}

impl CellTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellTag::Interior => "INTERIOR",
            CellTag::Exterior => "EXTERIOR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Grading {
    Uniform,
    /// Consecutive widths scale by `ratio` when stepping toward the boundary of Ω,
    /// from either side.
    Geometric(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainMesh {
    id: MeshId,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub collar_radius: f64,
    cells: Vec<Interval>,
    tags: Vec<CellTag>,
    n_left: usize,
    n_interior: usize,
}

impl DomainMesh {
    pub fn id(&self) -> MeshId {
        self.id
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    pub fn n_exterior(&self) -> usize {
        self.cells.len() - self.n_interior
    }

    pub fn cell(&self, k: usize) -> Interval {
        self.cells[k]
    }

    pub fn cells(&self) -> &[Interval] {
        &self.cells
    }

    pub fn tag(&self, k: usize) -> CellTag {
        self.tags[k]
    }

    pub fn is_interior(&self, k: usize) -> bool {
        self.tags[k] == CellTag::Interior
    }

    pub fn cell_measure(&self, k: usize) -> f64 {
        self.cells[k].len()
    }

    pub fn cell_center(&self, k: usize) -> f64 {
        self.cells[k].center()
    }

    /// Index range of interior cells; they are contiguous.
    pub fn interior_range(&self) -> std::ops::Range<usize> {
        self.n_left..self.n_left + self.n_interior
    }

    pub fn interior_cells(&self) -> &[Interval] {
        &self.cells[self.interior_range()]
    }

    pub fn exterior_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_left).chain(self.n_left + self.n_interior..self.cells.len())
    }

    /// Outermost collar cell on the left (index 0) and on the right (last index).
    pub fn outermost(&self) -> (usize, usize) {
        (0, self.cells.len() - 1)
    }

    pub fn measures(&self) -> Vec<f64> {
        self.cells.iter().map(Interval::len).collect()
    }

    pub fn omega_measure(&self) -> f64 {
        self.omega_hi - self.omega_lo
    }

    /// Checks the structural invariants: nonempty cells tiling
    /// `[omega_lo - R, omega_hi + R]` without gaps, interior cells tiling Ω.
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() || self.n_interior == 0 {
            return Err(Error::param("mesh", "mesh has no interior cells"));
        }
        let lo = self.omega_lo - self.collar_radius;
        let hi = self.omega_hi + self.collar_radius;
        if self.cells[0].lo != lo || self.cells[self.cells.len() - 1].hi != hi {
            return Err(Error::param("mesh", "cells do not cover the collar"));
        }
        for (k, c) in self.cells.iter().enumerate() {
            if !(c.len() > 0.0) || !c.lo.is_finite() || !c.hi.is_finite() {
                return Err(Error::param("mesh", format!("cell {k} has nonpositive measure")));
            }
            if k > 0 && self.cells[k - 1].hi != c.lo {
                return Err(Error::param("mesh", format!("gap or overlap before cell {k}")));
            }
        }
        let ir = self.interior_range();
        if self.cells[ir.start].lo != self.omega_lo || self.cells[ir.end - 1].hi != self.omega_hi {
            return Err(Error::param("mesh", "interior cells do not tile omega"));
        }
        for k in 0..self.cells.len() {
            let expect = if ir.contains(&k) {
                CellTag::Interior
            } else {
                CellTag::Exterior
            };
            if self.tags[k] != expect {
                return Err(Error::param("mesh", format!("cell {k} mis-tagged")));
            }
        }
        Ok(())
    }

    /// Rebuilds a mesh from explicit cell boundaries (used by the text reader).
    pub fn from_cells(
        omega_lo: f64,
        omega_hi: f64,
        collar_radius: f64,
        cells: Vec<Interval>,
        tags: Vec<CellTag>,
    ) -> Result<Self> {
        if cells.len() != tags.len() {
            return Err(Error::param("cells", "cell and tag counts differ"));
        }
        let n_left = tags.iter().take_while(|t| **t == CellTag::Exterior).count();
        let n_interior = tags.iter().filter(|t| **t == CellTag::Interior).count();
        let mesh = DomainMesh {
            id: MeshId::fresh(),
            omega_lo,
            omega_hi,
            collar_radius,
            cells,
            tags,
            n_left,
            n_interior,
        };
        mesh.validate()?;
        Ok(mesh)
    }
}

/// Splits `[a, b]` into cells with widths proportional to `weights`; the
/// endpoints are reproduced exactly.
fn partition(a: f64, b: f64, weights: &[f64]) -> Vec<Interval> {
    let total: f64 = weights.iter().sum();
    let len = b - a;
    let mut out = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    let mut left = a;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        let right = if i + 1 == weights.len() {
            b
        } else {
            a + len * (acc / total)
        };
        out.push(Interval::new(left, right));
        left = right;
    }
    out
}

/// Relative widths of the interior cells: `ratio^floor(|k - (n-1)/2|)`.
pub(crate) fn interior_width_weights(n: usize, grading: Grading) -> Vec<f64> {
    match grading {
        Grading::Uniform => vec![1.0; n],
        Grading::Geometric(r) => {
            let c = (n as f64 - 1.0) / 2.0;
            (0..n)
                .map(|k| r.powi((k as f64 - c).abs().floor() as i32))
                .collect()
        }
    }
}

/// Relative widths of one collar side, listed from the boundary of Ω outward.
pub(crate) fn exterior_width_weights(n: usize, grading: Grading) -> Vec<f64> {
    match grading {
        Grading::Uniform => vec![1.0; n],
        Grading::Geometric(r) => (0..n).map(|j| r.powi((n - 1 - j) as i32)).collect(),
    }
}

pub fn build_mesh(
    omega_lo: f64,
    omega_hi: f64,
    n_interior: usize,
    n_exterior_per_side: usize,
    collar_radius: f64,
    grading: Grading,
) -> Result<DomainMesh> {
    if !(omega_lo.is_finite() && omega_hi.is_finite()) || omega_lo >= omega_hi {
        return Err(Error::param(
            "omega_lo",
            format!("need omega_lo < omega_hi, got ({omega_lo}, {omega_hi})"),
        ));
    }
    if n_interior < 1 {
        return Err(Error::param("n_interior", "must be at least 1"));
    }
    if n_exterior_per_side < 1 {
        return Err(Error::param("n_exterior_per_side", "must be at least 1"));
    }
    if !(collar_radius > 0.0) || !collar_radius.is_finite() {
        return Err(Error::param(
            "collar_radius",
            format!("must be positive and finite, got {collar_radius}"),
        ));
    }
    if let Grading::Geometric(r) = grading {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::param("ratio", format!("must be positive, got {r}")));
        }
    }

    let ext = exterior_width_weights(n_exterior_per_side, grading);
    let mut left_weights = ext.clone();
    left_weights.reverse();
    let left = partition(omega_lo - collar_radius, omega_lo, &left_weights);
    let interior = partition(
        omega_lo,
        omega_hi,
        &interior_width_weights(n_interior, grading),
    );
    let right = partition(omega_hi, omega_hi + collar_radius, &ext);

    let mut cells = Vec::with_capacity(left.len() + interior.len() + right.len());
    let mut tags = Vec::with_capacity(cells.capacity());
    for c in left {
        cells.push(c);
        tags.push(CellTag::Exterior);
    }
    for c in interior {
        cells.push(c);
        tags.push(CellTag::Interior);
    }
    for c in right {
        cells.push(c);
        tags.push(CellTag::Exterior);
    }
    let mesh = DomainMesh {
        id: MeshId::fresh(),
        omega_lo,
        omega_hi,
        collar_radius,
        cells,
        tags,
        n_left: n_exterior_per_side,
        n_interior,
    };
    mesh.validate().map_err(|_| {
        Error::param(
            "mesh",
            "degenerate partition (cell widths underflow for this grading ratio)",
        )
    })?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_widths() {
        let m = build_mesh(0.0, 1.0, 4, 2, 1.0, Grading::Uniform).unwrap();
        assert_eq!(m.n_cells(), 8);
        for k in m.interior_range() {
            assert!((m.cell_measure(k) - 0.25).abs() < 1e-15);
        }
        for k in m.exterior_indices() {
            assert!((m.cell_measure(k) - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn minimal_partition() {
        let m = build_mesh(0.0, 1.0, 1, 1, 0.5, Grading::Uniform).unwrap();
        let cells: Vec<_> = m.cells().iter().map(|c| (c.lo, c.hi)).collect();
        assert_eq!(cells, vec![(-0.5, 0.0), (0.0, 1.0), (1.0, 1.5)]);
        assert_eq!(m.tag(0), CellTag::Exterior);
        assert_eq!(m.tag(1), CellTag::Interior);
        assert_eq!(m.tag(2), CellTag::Exterior);
    }

    #[test]
    fn geometric_widths_halve_toward_boundary() {
        let m = build_mesh(0.0, 2.0, 8, 4, 2.0, Grading::Geometric(0.5)).unwrap();
        // Independent recomputation: each half of Ω holds 4 cells whose widths
        // form a geometric series w, w/2, w/4, w/8 (center to boundary) summing to 1.
        let w0 = 1.0 / (1.0 + 0.5 + 0.25 + 0.125);
        let half = [w0 / 8.0, w0 / 4.0, w0 / 2.0, w0];
        let expected: Vec<f64> = half.iter().chain(half.iter().rev()).copied().collect();
        let got: Vec<f64> = m.interior_range().map(|k| m.cell_measure(k)).collect();
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-14, "{got:?} vs {expected:?}");
        }
        // collar cells shrink toward the boundary as well
        let left: Vec<f64> = (0..4).map(|k| m.cell_measure(k)).collect();
        assert!(left.windows(2).all(|w| w[1] < w[0]));
        let right: Vec<f64> = (12..16).map(|k| m.cell_measure(k)).collect();
        assert!(right.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn rejects_bad_parameters() {
        let e = build_mesh(1.0, 0.0, 4, 2, 1.0, Grading::Uniform).unwrap_err();
        assert!(matches!(e, Error::Parameter { field: "omega_lo", .. }));
        let e = build_mesh(0.0, 1.0, 0, 2, 1.0, Grading::Uniform).unwrap_err();
        assert!(matches!(e, Error::Parameter { field: "n_interior", .. }));
        let e = build_mesh(0.0, 1.0, 3, 0, 1.0, Grading::Uniform).unwrap_err();
        assert!(matches!(e, Error::Parameter { field: "n_exterior_per_side", .. }));
        let e = build_mesh(0.0, 1.0, 3, 2, 0.0, Grading::Uniform).unwrap_err();
        assert!(matches!(e, Error::Parameter { field: "collar_radius", .. }));
        let e = build_mesh(0.0, 1.0, 3, 2, 1.0, Grading::Geometric(-1.0)).unwrap_err();
        assert!(matches!(e, Error::Parameter { field: "ratio", .. }));
    }

    #[test]
    fn odd_geometric_has_single_center_cell() {
        let m = build_mesh(-1.0, 1.0, 5, 3, 0.5, Grading::Geometric(2.0)).unwrap();
        m.validate().unwrap();
        let w: Vec<f64> = m.interior_range().map(|k| m.cell_measure(k)).collect();
        assert!((w[0] - w[4]).abs() < 1e-15 && (w[1] - w[3]).abs() < 1e-15);
        assert!(w[2] < w[1] && w[1] < w[0]);
    }
}
