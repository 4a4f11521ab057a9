use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::newton::polish;
use super::{CriticalPointReport, GeometryCheck, Reduced, SolverOptions};
use crate::energy::{GridFunction, Kind, ProblemConfig};
use crate::error::{Error, Result};
use crate::spectrum::condensed_operator;

const RING_LEVELS: i32 = 16;
const NEWTON_RETRY_SWEEPS: usize = 20;
const STAGNATION_SWEEPS: usize = 200;
/// Largest node displacement as a fraction of the distance to the nearer
/// neighbour; keeps the discrete path from jumping across the ridge.
const MAX_MOVE: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RingSample {
    pub radius: f64,
    pub min_energy: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Riesz map of the p = 2 energy inner product `½[u]² + ‖u‖²` on interior
/// values; used to precondition node descent and to measure path length.
struct Metric {
    chol: Cholesky<f64, Dyn>,
    mat: DMatrix<f64>,
}

impl Metric {
    fn new(cfg: &ProblemConfig) -> Result<Self> {
        let (a_red, mass) = condensed_operator(&cfg.mesh, &cfg.weights)?;
        let mut mat = a_red * 0.5;
        for (k, m) in mass.iter().enumerate() {
            mat[(k, k)] += m;
        }
        let chol = Cholesky::new(mat.clone())
            .ok_or_else(|| Error::LinearAlgebra("path metric is not positive definite".into()))?;
        Ok(Metric { chol, mat })
    }

    fn solve(&self, g: &[f64]) -> Vec<f64> {
        self.chol.solve(&DVector::from_column_slice(g)).iter().copied().collect()
    }

    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let pb = &self.mat * DVector::from_column_slice(b);
        dot(a, pb.as_slice())
    }
}

struct Node {
    x: Vec<f64>,
    full: Vec<f64>,
    energy: f64,
    step: f64,
}

fn path_max(nodes: &[Node]) -> (usize, f64) {
    nodes
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, n)| {
            if n.energy > bv {
                (i, n.energy)
            } else {
                (bi, bv)
            }
        })
}

fn check_geometry(
    red: &Reduced,
    e_full: &[f64],
    kind: Kind,
    opts: &SolverOptions,
) -> Result<GeometryCheck> {
    let cfg = red.cfg;
    let e_int = red.interior(e_full).to_vec();
    let endpoint_energy = red.value(e_full);
    if !(endpoint_energy <= 0.0) {
        return Err(Error::Geometry(format!(
            "endpoint energy {endpoint_energy} is not <= 0; enlarge the endpoint"
        )));
    }
    let signed_part_nonzero = match kind {
        Kind::EPlus => e_int.iter().any(|&v| v > 0.0),
        _ => e_int.iter().any(|&v| v < 0.0),
    };
    if !signed_part_nonzero {
        return Err(Error::Geometry(format!(
            "endpoint has no {} part on the interior",
            if kind == Kind::EPlus { "positive" } else { "negative" }
        )));
    }
    let norm = |full: &[f64]| -> Result<f64> {
        let g = red.grid(full.to_vec());
        crate::energy::norm_x(&cfg.weights, &g, &cfg.mesh, cfg.p)
    };
    let endpoint_norm = norm(e_full)?;

    let mesh = &cfg.mesh;
    let (lo, len) = (mesh.omega_lo, mesh.omega_hi - mesh.omega_lo);
    let centers: Vec<f64> = mesh.interior_range().map(|k| mesh.cell_center(k)).collect();
    let ni = centers.len();
    let mut dirs: Vec<Vec<f64>> = vec![vec![1.0; ni], vec![-1.0; ni], e_int.clone()];
    dirs.push(e_int.iter().map(|v| -v).collect());
    for k in 1..=4 {
        let c: Vec<f64> = centers
            .iter()
            .map(|x| (k as f64 * std::f64::consts::PI * (x - lo) / len).cos())
            .collect();
        dirs.push(c.iter().map(|v| -v).collect());
        dirs.push(c);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.sphere_samples {
        dirs.push((0..ni).map(|_| rng.random_range(-1.0..=1.0)).collect());
    }
    let mut units = Vec::with_capacity(dirs.len());
    for d in &dirs {
        let full = red.lift(d)?;
        let n = norm(&full)?;
        if n > 0.0 {
            units.push(full.iter().map(|v| v / n).collect::<Vec<f64>>());
        }
    }
    let mut samples = Vec::new();
    for j in 1..=RING_LEVELS {
        let radius = endpoint_norm * 2f64.powi(-j);
        let min_energy = units
            .par_iter()
            .map(|u| {
                let scaled: Vec<f64> = u.iter().map(|v| radius * v).collect();
                red.value(&scaled)
            })
            .collect::<Vec<f64>>()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        samples.push(RingSample { radius, min_energy });
        if min_energy > 0.0 {
            return Ok(GeometryCheck {
                endpoint_energy,
                endpoint_norm,
                ring_radius: radius,
                ring_min: min_energy,
                samples,
            });
        }
    }
    let listing: Vec<String> = samples
        .iter()
        .map(|s| format!("r={:.3e}: min={:.3e}", s.radius, s.min_energy))
        .collect();
    Err(Error::Geometry(format!(
        "no sampled sphere below norm {endpoint_norm:.3e} has a positive minimum ({})",
        listing.join(", ")
    )))
}

/// One Armijo step along the negative gradient projected orthogonally to the
/// path tangent (both in the energy metric).
fn descend_node(
    red: &Reduced,
    metric: &Metric,
    node: &Node,
    prev: &[f64],
    next: &[f64],
    opts: &SolverOptions,
) -> Result<Option<Node>> {
    let (_, g) = red.value_grad(&node.full);
    let gap = |other: &[f64]| {
        let d: Vec<f64> = other.iter().zip(&node.x).map(|(a, b)| a - b).collect();
        metric.inner(&d, &d).sqrt()
    };
    let reach = MAX_MOVE * gap(prev).min(gap(next));
    let mut tau: Vec<f64> = next.iter().zip(prev).map(|(a, b)| a - b).collect();
    let tn = metric.inner(&tau, &tau).sqrt();
    let mut dir = metric.solve(&g);
    if tn > 0.0 {
        tau.iter_mut().for_each(|t| *t /= tn);
        let along = dot(&g, &tau);
        dir.iter_mut().zip(&tau).for_each(|(d, t)| *d -= along * t);
    }
    dir.iter_mut().for_each(|d| *d = -*d);
    let slope = dot(&g, &dir);
    if !(slope < 0.0) {
        return Ok(None);
    }
    let dir_len = metric.inner(&dir, &dir).sqrt();
    let mut step = (2.0 * node.step).min(1.0).min(reach / dir_len);
    for _ in 0..opts.max_backtracks {
        let x: Vec<f64> = node.x.iter().zip(&dir).map(|(x, d)| x + step * d).collect();
        let full = red.lift(&x)?;
        let delta = red.delta(&node.full, &full);
        if delta.is_finite() && delta < 0.0 && delta <= opts.armijo * step * slope {
            return Ok(Some(Node {
                x,
                full,
                energy: node.energy + delta,
                step,
            }));
        }
        step *= opts.shrink;
    }
    Ok(None)
}

/// Equal-arclength redistribution by piecewise-linear interpolation.
fn reparametrize(red: &Reduced, metric: &Metric, nodes: &[Node]) -> Result<Vec<Node>> {
    let p = nodes.len();
    let mut cum = vec![0.0; p];
    for i in 1..p {
        let d: Vec<f64> = nodes[i].x.iter().zip(&nodes[i - 1].x).map(|(a, b)| a - b).collect();
        cum[i] = cum[i - 1] + metric.inner(&d, &d).sqrt();
    }
    let total = cum[p - 1];
    let targets: Vec<f64> = (0..p).map(|i| total * i as f64 / (p - 1) as f64).collect();
    targets
        .par_iter()
        .enumerate()
        .map(|(i, &s)| {
            if i == 0 || i == p - 1 {
                let n = &nodes[i];
                return Ok(Node {
                    x: n.x.clone(),
                    full: n.full.clone(),
                    energy: n.energy,
                    step: n.step,
                });
            }
            let seg = cum.partition_point(|&c| c <= s).clamp(1, p - 1);
            let (a, b) = (&nodes[seg - 1], &nodes[seg]);
            let span = cum[seg] - cum[seg - 1];
            let t = if span > 0.0 { (s - cum[seg - 1]) / span } else { 0.0 };
            let x: Vec<f64> = a.x.iter().zip(&b.x).map(|(a, b)| a + t * (b - a)).collect();
            let full = red.lift(&x)?;
            let energy = red.value(&full);
            Ok(Node {
                x,
                full,
                energy,
                step: nodes[i].step,
            })
        })
        .collect()
}

/// Path-deformation minimax search between 0 and `e`.
///
/// Every sweep moves the non-endpoint nodes by one projected Armijo step and
/// then redistributes them by arclength (kept only when the path maximum does
/// not rise). Once the gradient at the highest node is moderate, a damped
/// Newton iteration from that node is tried; it is accepted only at positive
/// energy with `grad_norm ≤ tol`.
pub fn mountain_pass(
    e: &GridFunction,
    kind: Kind,
    cfg: &ProblemConfig,
    opts: &SolverOptions,
) -> Result<CriticalPointReport> {
    opts.validate()?;
    if kind == Kind::I {
        return Err(Error::param("kind", "mountain_pass needs E_PLUS or E_MINUS"));
    }
    let red = Reduced::new(kind, cfg, e)?;
    let e_full = red.lift(red.interior(&e.values))?;
    let geometry = check_geometry(&red, &e_full, kind, opts)?;
    let metric = Metric::new(cfg)?;

    let p = opts.path_nodes;
    let e_int = red.interior(&e_full).to_vec();
    let mut nodes = Vec::with_capacity(p);
    for i in 0..p {
        let t = i as f64 / (p - 1) as f64;
        let x: Vec<f64> = e_int.iter().map(|v| t * v).collect();
        let full = red.lift(&x)?;
        let energy = red.value(&full);
        nodes.push(Node {
            x,
            full,
            energy,
            step: 1.0,
        });
    }

    let mut trace = Vec::new();
    let mut last_newton: Option<usize> = None;
    let mut best_drop_sweep = 0;
    let mut sweeps = 0;
    loop {
        let (imax, vmax) = path_max(&nodes);
        if !vmax.is_finite() {
            return Err(super::divergence(sweeps, &nodes[imax].full));
        }
        if let Some(&prev) = trace.last() {
            assert!(
                vmax <= prev + 1e-13 * (1.0 + f64::abs(prev)),
                "path maximum rose from {prev} to {vmax}"
            );
            if vmax < prev - 1e-14 * (1.0 + f64::abs(prev)) {
                best_drop_sweep = sweeps;
            }
        }
        trace.push(vmax);
        let (_, g) = red.value_grad(&nodes[imax].full);
        let gn = red.grad_norm(&g);
        if gn <= opts.tol {
            let mut rep = red.report(nodes[imax].full.clone(), sweeps, opts.tol, trace)?;
            rep.geometry = Some(geometry);
            return Ok(rep);
        }
        let stagnant = sweeps - best_drop_sweep >= STAGNATION_SWEEPS;
        let due = last_newton.is_none_or(|s| sweeps - s >= NEWTON_RETRY_SWEEPS);
        if (gn <= opts.newton_switch || stagnant) && due {
            last_newton = Some(sweeps);
            if let Some((full, ngn, steps)) =
                polish(&red, &nodes[imax].full, opts.tol, opts.newton_max_iter)?
            {
                if ngn <= opts.tol && red.value(&full) > 0.0 {
                    let mut rep = red.report(full, sweeps + steps, opts.tol, trace)?;
                    rep.geometry = Some(geometry);
                    return Ok(rep);
                }
            }
        }
        if sweeps >= opts.max_sweeps || (stagnant && sweeps - best_drop_sweep >= 2 * STAGNATION_SWEEPS) {
            let mut rep = red.report(nodes[imax].full.clone(), sweeps, opts.tol, trace)?;
            rep.geometry = Some(geometry);
            return Ok(rep);
        }

        let moved: Vec<Result<Option<Node>>> = (1..p - 1)
            .into_par_iter()
            .map(|i| descend_node(&red, &metric, &nodes[i], &nodes[i - 1].x, &nodes[i + 1].x, opts))
            .collect();
        for (i, m) in (1..p - 1).zip(moved) {
            match m? {
                Some(n) => nodes[i] = n,
                None => nodes[i].step *= opts.shrink,
            }
        }
        let (_, descended_max) = path_max(&nodes);
        let candidate = reparametrize(&red, &metric, &nodes)?;
        if path_max(&candidate).1 <= descended_max {
            nodes = candidate;
        }
        sweeps += 1;
    }
}
