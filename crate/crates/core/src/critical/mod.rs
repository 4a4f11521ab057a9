//! Critical points of the discrete functionals.
//!
//! Every solver works on the reduced functional of the interior values: the
//! collar is always refilled by the Neumann extension, which minimizes the
//! functional over the exterior cells for fixed interior data. The interior
//! components of the full gradient are therefore the reduced gradient.

mod descent;
mod mountain;
mod newton;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::energy::{self, evaluate, norm_x, weak_residual, GridFunction, Kind, ProblemConfig};
use crate::error::{Error, Result};
use crate::neumann::{extend_raw, neumann_residual};
use crate::spectrum::eigenvalues_p2;

pub use descent::minimize;
pub use mountain::{mountain_pass, RingSample};

/// Tolerance separating signs in [`SignClass`].
pub const SIGN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignClass {
    #[serde(rename = "POSITIVE")]
    Positive,
    #[serde(rename = "NEGATIVE")]
    Negative,
    #[serde(rename = "SIGN_CHANGING")]
    SignChanging,
    #[serde(rename = "ZERO")]
    Zero,
}

impl SignClass {
    /// Classification from the extreme values over all cells. Data that is
    /// only nonnegative (or nonpositive) with values inside the tolerance band
    /// counts as `SignChanging`.
    pub fn from_extremes(min: f64, max: f64) -> Self {
        if min > SIGN_TOL {
            SignClass::Positive
        } else if max < -SIGN_TOL {
            SignClass::Negative
        } else if min >= -SIGN_TOL && max <= SIGN_TOL {
            SignClass::Zero
        } else {
            SignClass::SignChanging
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SignClass::Positive => "POSITIVE",
            SignClass::Negative => "NEGATIVE",
            SignClass::SignChanging => "SIGN_CHANGING",
            SignClass::Zero => "ZERO",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Target for `grad_norm`.
    pub tol: f64,
    pub max_iter: usize,
    /// Sufficient-decrease constant of the Armijo rule.
    pub armijo: f64,
    /// Backtracking factor in (0, 1).
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Number of stored curvature pairs in the quasi-Newton descent.
    pub memory: usize,
    /// Check `ᾱ(x) < 0` before minimizing `I`.
    pub coercive: bool,
    pub path_nodes: usize,
    pub max_sweeps: usize,
    /// Max-node gradient level below which Newton polishing is attempted.
    pub newton_switch: f64,
    pub newton_max_iter: usize,
    /// Random directions per sphere in the mountain-pass precheck.
    pub sphere_samples: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 10_000,
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
            memory: 8,
            coercive: false,
            path_nodes: 21,
            max_sweeps: 2_000,
            newton_switch: 1e-1,
            newton_max_iter: 50,
            sphere_samples: 24,
            seed: 0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: &str| Err(Error::param(field, reason));
        if !(self.tol > 0.0) {
            return bad("tol", "must be positive");
        }
        if !(self.armijo > 0.0 && self.armijo < 0.5) {
            return bad("armijo", "must lie in (0, 0.5)");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink", "must lie in (0, 1)");
        }
        if self.path_nodes < 3 {
            return bad("path_nodes", "need at least 3 nodes");
        }
        if self.max_backtracks == 0 {
            return bad("max_backtracks", "must be at least 1");
        }
        if !(self.newton_switch >= 0.0) {
            return bad("newton_switch", "must be nonnegative");
        }
        Ok(())
    }
}

/// Mountain-pass geometry evidence gathered before the path search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryCheck {
    pub endpoint_energy: f64,
    pub endpoint_norm: f64,
    pub ring_radius: f64,
    pub ring_min: f64,
    pub samples: Vec<RingSample>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalPointReport {
    #[serde(skip)]
    pub u: Option<GridFunction>,
    pub kind: Kind,
    pub energy: f64,
    pub grad_norm: f64,
    pub cerami_measure: f64,
    pub norm_x: f64,
    pub neumann_residual: f64,
    pub sign_class: SignClass,
    pub u_min: f64,
    pub u_max: f64,
    pub cone_bracket: Option<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub energy_trace: Vec<f64>,
    pub geometry: Option<GeometryCheck>,
}

impl CriticalPointReport {
    pub fn solution(&self) -> &GridFunction {
        self.u.as_ref().expect("report carries its grid function")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// `sqrt(Σ_Ω g_k² / m_k)`: the L² norm of the residual density `g_k / m_k`.
pub fn grad_norm(grad: &GridFunction, cfg: &ProblemConfig) -> Result<f64> {
    grad.check_mesh(&cfg.mesh)?;
    Ok(interior_grad_norm(&grad.values[cfg.mesh.interior_range()], &interior_mass(cfg)))
}

pub(crate) fn interior_grad_norm(g: &[f64], mass: &[f64]) -> f64 {
    g.iter().zip(mass).map(|(g, m)| g * g / m).sum::<f64>().sqrt()
}

pub(crate) fn interior_mass(cfg: &ProblemConfig) -> Vec<f64> {
    cfg.mesh.interior_range().map(|k| cfg.mesh.cell_measure(k)).collect()
}

/// Count of eigenvalues `λ_m ≤ 2λ + 1` (p = 2 only); `None` when no
/// eigenvalue lies below the threshold or the spectrum is unavailable.
pub fn cone_bracket(cfg: &ProblemConfig) -> Option<usize> {
    if cfg.p != 2.0 {
        return None;
    }
    let eig = eigenvalues_p2(&cfg.mesh, &cfg.weights, cfg.p).ok()?;
    let level = 2.0 * cfg.lambda + 1.0;
    let m = eig.iter().take_while(|&&l| l <= level).count();
    (m > 0).then_some(m)
}

/// Report for `u` as given; nothing is re-extended or modified.
pub fn classify(u: &GridFunction, kind: Kind, cfg: &ProblemConfig) -> Result<CriticalPointReport> {
    let (value, grad) = evaluate(kind, u, cfg)?;
    let gn = grad_norm(&grad, cfg)?;
    let nx = norm_x(&cfg.weights, u, &cfg.mesh, cfg.p)?;
    let nres = neumann_residual(u, &cfg.mesh, &cfg.weights, cfg.p)?;
    let (u_min, u_max) = u
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    Ok(CriticalPointReport {
        u: Some(u.clone()),
        kind,
        energy: value,
        grad_norm: gn,
        cerami_measure: (1.0 + nx) * gn,
        norm_x: nx,
        neumann_residual: nres,
        sign_class: SignClass::from_extremes(u_min, u_max),
        u_min,
        u_max,
        cone_bracket: cone_bracket(cfg),
        iterations: 0,
        converged: false,
        energy_trace: Vec::new(),
        geometry: None,
    })
}

/// Largest `|weak_residual(u, v)| / norm_X(v)` over `n_tests` random test
/// functions with entries uniform in [-1, 1] on every cell.
pub fn weak_residual_check(u: &GridFunction, cfg: &ProblemConfig, n_tests: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_tests {
        let values: Vec<f64> = (0..u.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let v = GridFunction::new(&cfg.mesh, values)?;
        let r = weak_residual(u, &v, cfg)?;
        let nv = norm_x(&cfg.weights, &v, &cfg.mesh, cfg.p)?;
        worst = worst.max(r.abs() / nv);
    }
    Ok(worst)
}

/// The reduced functional `x ↦ E(extend(x))` on interior values.
pub(crate) struct Reduced<'a> {
    pub kind: Kind,
    pub cfg: &'a ProblemConfig,
    pub mass: Vec<f64>,
    off: usize,
    template: GridFunction,
}

impl<'a> Reduced<'a> {
    pub fn new(kind: Kind, cfg: &'a ProblemConfig, template: &GridFunction) -> Result<Self> {
        // validates mesh binding and the vanishing-source requirement of E±
        evaluate(kind, template, cfg)?;
        Ok(Reduced {
            kind,
            cfg,
            mass: interior_mass(cfg),
            off: cfg.mesh.interior_range().start,
            template: template.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }

    pub fn interior<'b>(&self, full: &'b [f64]) -> &'b [f64] {
        &full[self.off..self.off + self.dim()]
    }

    pub fn lift(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut full = vec![0.0; self.cfg.mesh.n_cells()];
        full[self.off..self.off + x.len()].copy_from_slice(x);
        extend_raw(&self.cfg.mesh, &self.cfg.weights, &mut full, self.cfg.p)?;
        Ok(full)
    }

    pub fn value(&self, full: &[f64]) -> f64 {
        energy::energy_raw(self.kind, full, self.cfg)
    }

    pub fn value_grad(&self, full: &[f64]) -> (f64, Vec<f64>) {
        let (v, g) = energy::evaluate_raw(self.kind, full, self.cfg);
        (v, self.interior(&g).to_vec())
    }

    pub fn delta(&self, from: &[f64], to: &[f64]) -> f64 {
        energy::energy_delta_raw(self.kind, from, to, self.cfg)
    }

    pub fn grad_norm(&self, g: &[f64]) -> f64 {
        interior_grad_norm(g, &self.mass)
    }

    pub fn grid(&self, full: Vec<f64>) -> GridFunction {
        self.template.with_values(full)
    }

    pub fn report(
        &self,
        full: Vec<f64>,
        iterations: usize,
        tol: f64,
        energy_trace: Vec<f64>,
    ) -> Result<CriticalPointReport> {
        let u = self.grid(full);
        let mut rep = classify(&u, self.kind, self.cfg)?;
        rep.iterations = iterations;
        rep.converged = rep.grad_norm <= tol;
        rep.energy_trace = energy_trace;
        Ok(rep)
    }
}

pub(crate) fn divergence(iterations: usize, full: &[f64]) -> Error {
    Error::Divergence {
        iterations,
        last_iterate: full.to_vec(),
    }
}
