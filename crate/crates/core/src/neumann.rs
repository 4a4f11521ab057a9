//! Nonlocal Neumann condition on the collar.
//!
//! Exterior cells interact only with interior cells (and, for the outermost
//! cells, with the interior through the folded tail weights), so the discrete
//! condition `Σ_{j∈Ω} w_kj J_p(u_k − u_j) = 0` is one independent, strictly
//! monotone scalar equation per exterior cell.

use rayon::prelude::*;

use crate::energy::{abs_pow, j_p, GridFunction};
use crate::error::{Error, Result};
use crate::kernel::KernelWeights;
use crate::mesh::DomainMesh;

const BRACKET_REL_TOL: f64 = 1e-13;
const NEWTON_POLISH_STEPS: usize = 2;

fn interior_extent(mesh: &DomainMesh, u: &[f64]) -> Result<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in mesh.interior_range() {
        let v = u[k];
        if !v.is_finite() {
            return Err(Error::Input(format!("interior value at cell {k} is not finite")));
        }
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok((lo, hi))
}

fn flux(row: &[f64], interior: std::ops::Range<usize>, u: &[f64], t: f64, p: f64) -> f64 {
    interior.map(|j| row[j] * j_p(t - u[j], p)).sum()
}

fn flux_slope(row: &[f64], interior: std::ops::Range<usize>, u: &[f64], t: f64, p: f64) -> f64 {
    if p == 2.0 {
        return interior.map(|j| row[j]).sum();
    }
    interior
        .map(|j| row[j] * (p - 1.0) * (t - u[j]).abs().powf(p - 2.0))
        .sum()
}

/// Solves the Neumann equation for exterior cell `k` given interior data.
fn solve_cell(
    row: &[f64],
    interior: std::ops::Range<usize>,
    u: &[f64],
    (lo, hi): (f64, f64),
    p: f64,
) -> f64 {
    let spread = hi - lo;
    if spread == 0.0 {
        return lo;
    }
    let width_tol = BRACKET_REL_TOL * (1.0 + spread);
    let iterations = (spread / width_tol).log2().ceil().max(0.0) as usize + 1;
    let (mut a, mut b) = (lo, hi);
    for _ in 0..iterations {
        let mid = a + 0.5 * (b - a);
        let f = flux(row, interior.clone(), u, mid, p);
        if f > 0.0 {
            b = mid;
        } else if f < 0.0 {
            a = mid;
        } else {
            a = mid;
            b = mid;
            break;
        }
    }
    let mut t = a + 0.5 * (b - a);
    if p >= 2.0 {
        let mut f = flux(row, interior.clone(), u, t, p);
        for _ in 0..NEWTON_POLISH_STEPS {
            let slope = flux_slope(row, interior.clone(), u, t, p);
            if !(slope > 0.0) || f == 0.0 {
                break;
            }
            let cand = t - f / slope;
            if !(cand >= lo && cand <= hi) {
                break;
            }
            let fc = flux(row, interior.clone(), u, cand, p);
            if fc.abs() >= f.abs() {
                break;
            }
            t = cand;
            f = fc;
        }
    }
    t
}

pub(crate) fn extend_raw(mesh: &DomainMesh, w: &KernelWeights, u: &mut [f64], p: f64) -> Result<()> {
    let extent = interior_extent(mesh, u)?;
    let ext: Vec<usize> = mesh.exterior_indices().collect();
    let frozen: &[f64] = u;
    let solved: Vec<Result<f64>> = ext
        .par_iter()
        .map(|&k| {
            let row = w.row(k);
            let total: f64 = mesh.interior_range().map(|j| row[j]).sum();
            if !(total > 0.0) {
                return Err(Error::Connectivity { cell: k });
            }
            Ok(solve_cell(row, mesh.interior_range(), frozen, extent, p))
        })
        .collect();
    for (k, v) in ext.into_iter().zip(solved) {
        u[k] = v?;
    }
    Ok(())
}

/// Completes interior data to the collar by enforcing the discrete Neumann
/// condition cell by cell (bisection on `[min_Ω u, max_Ω u]`, Newton polish
/// for `p ≥ 2`). Interior values are copied unchanged.
pub fn exterior_extend(
    u: &GridFunction,
    mesh: &DomainMesh,
    w: &KernelWeights,
    p: f64,
) -> Result<GridFunction> {
    u.check_mesh(mesh)?;
    w.check_mesh(mesh)?;
    let mut values = u.values.clone();
    extend_raw(mesh, w, &mut values, p)?;
    Ok(u.with_values(values))
}

/// Scale-free Neumann defect:
/// `max_k |Σ_{j∈Ω} w_kj J_p(u_k − u_j)| / (Σ_{j∈Ω} w_kj (1 + spread)^(p−1))`.
pub fn neumann_residual(
    u: &GridFunction,
    mesh: &DomainMesh,
    w: &KernelWeights,
    p: f64,
) -> Result<f64> {
    u.check_mesh(mesh)?;
    w.check_mesh(mesh)?;
    let (lo, hi) = interior_extent(mesh, &u.values)?;
    let scale = abs_pow(1.0 + (hi - lo), p - 1.0);
    let mut worst: f64 = 0.0;
    for k in mesh.exterior_indices() {
        let row = w.row(k);
        let total: f64 = mesh.interior_range().map(|j| row[j]).sum();
        if !(total > 0.0) {
            return Err(Error::Connectivity { cell: k });
        }
        let r = flux(row, mesh.interior_range(), &u.values, u.values[k], p).abs();
        worst = worst.max(r / (total * scale));
    }
    Ok(worst)
}
