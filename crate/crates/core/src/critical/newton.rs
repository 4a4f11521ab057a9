use nalgebra::{DMatrix, DVector};

use super::Reduced;
use crate::energy::local_curvature;
use crate::error::Result;

/// Reduced Hessian: the full Hessian with the (diagonal) collar block
/// eliminated by a Schur complement.
fn reduced_hessian(red: &Reduced, full: &[f64]) -> DMatrix<f64> {
    let cfg = red.cfg;
    let mesh = &cfg.mesh;
    let p = cfg.p;
    let n = full.len();
    let ni = red.dim();
    let off = mesh.interior_range().start;
    let curv = |t: f64| {
        if p == 2.0 {
            1.0
        } else {
            (p - 1.0) * t.abs().max(1e-12).powf(p - 2.0)
        }
    };
    let mut h = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let row = cfg.weights.row(i);
        for j in i + 1..n {
            let w = row[j];
            if w != 0.0 {
                let c = w * curv(full[i] - full[j]);
                h[(i, i)] += c;
                h[(j, j)] += c;
                h[(i, j)] -= c;
                h[(j, i)] -= c;
            }
        }
    }
    for k in mesh.interior_range() {
        h[(k, k)] +=
            mesh.cell_measure(k) * local_curvature(red.kind, full[k], mesh.cell_center(k), cfg);
    }
    let mut out = h.view((off, off), (ni, ni)).into_owned();
    for k in mesh.exterior_indices() {
        let hkk = h[(k, k)];
        if !(hkk > 0.0) {
            continue;
        }
        let col: Vec<f64> = (0..ni).map(|r| h[(off + r, k)]).collect();
        for r in 0..ni {
            if col[r] == 0.0 {
                continue;
            }
            let f = col[r] / hkk;
            for c in 0..ni {
                out[(r, c)] -= f * col[c];
            }
        }
    }
    out
}

/// Damped Newton on the reduced gradient. Returns the final full vector and
/// its gradient norm, or `None` when no step reduced the gradient.
pub(crate) fn polish(
    red: &Reduced,
    start: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Option<(Vec<f64>, f64, usize)>> {
    let mut full = start.to_vec();
    let (_, mut g) = red.value_grad(&full);
    let mut gn = red.grad_norm(&g);
    let mut improved = false;
    let mut steps = 0;
    while steps < max_iter && gn > tol {
        let hess = reduced_hessian(red, &full);
        let rhs = DVector::from_iterator(g.len(), g.iter().map(|v| -v));
        let Some(delta) = hess.lu().solve(&rhs) else {
            break;
        };
        if delta.iter().any(|v| !v.is_finite()) {
            break;
        }
        let x = red.interior(&full).to_vec();
        let mut t = 1.0;
        let mut next = None;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(delta.iter()).map(|(x, d)| x + t * d).collect();
            let trial_full = red.lift(&trial)?;
            let (v, tg) = red.value_grad(&trial_full);
            let tn = red.grad_norm(&tg);
            if v.is_finite() && tn < gn {
                next = Some((trial_full, tg, tn));
                break;
            }
            t *= 0.5;
        }
        let Some((nf, ng, nn)) = next else {
            break;
        };
        full = nf;
        g = ng;
        gn = nn;
        improved = true;
        steps += 1;
    }
    Ok(improved.then_some((full, gn, steps)))
}
