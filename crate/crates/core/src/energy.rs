//! Discrete energies on piecewise-constant grid functions.
//!
//! With pair weights `w_ij` the kernel part of every functional is
//! `(1/2p)[u]ᵖ_h` where `[u]ᵖ_h = 2 Σ_{i<j} w_ij |u_i − u_j|ᵖ`; its gradient at
//! cell k is `Σ_j w_kj J_p(u_k − u_j)`. Local terms use the midpoint rule on
//! interior cells.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{kernel_exponent, KernelWeights};
use crate::mesh::{DomainMesh, MeshId};
use crate::nonlinearity::Nonlinearity;

/// `J_p(t) = |t|^(p-2) t`.
#[inline]
pub fn j_p(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t
    } else {
        t.abs().powf(p - 1.0).copysign(t)
    }
}

/// `|t|^p`.
#[inline]
pub fn abs_pow(t: f64, p: f64) -> f64 {
    if p == 2.0 {
        t * t
    } else {
        t.abs().powf(p)
    }
}

/// `|b|^p − |a|^p` without cancellation when `|a|` and `|b|` are close.
pub fn pow_diff(a: f64, b: f64, p: f64) -> f64 {
    let (x, y) = (a.abs(), b.abs());
    if p == 2.0 {
        return (y - x) * (y + x);
    }
    if x == 0.0 || y == 0.0 {
        return y.powf(p) - x.powf(p);
    }
    x.powf(p) * (p * ((y - x) / x).ln_1p()).exp_m1()
}

/// One value per mesh cell.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    mesh_id: MeshId,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(mesh: &DomainMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_cells() {
            return Err(Error::Binding(format!(
                "grid function has {} values, mesh has {} cells",
                values.len(),
                mesh.n_cells()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("grid function holds non-finite values".into()));
        }
        Ok(GridFunction {
            mesh_id: mesh.id(),
            values,
        })
    }

    pub fn zeros(mesh: &DomainMesh) -> Self {
        GridFunction {
            mesh_id: mesh.id(),
            values: vec![0.0; mesh.n_cells()],
        }
    }

    pub fn constant(mesh: &DomainMesh, c: f64) -> Self {
        GridFunction {
            mesh_id: mesh.id(),
            values: vec![c; mesh.n_cells()],
        }
    }

    /// Samples `f` at the cell centers.
    pub fn from_fn(mesh: &DomainMesh, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            mesh_id: mesh.id(),
            values: (0..mesh.n_cells()).map(|k| f(mesh.cell_center(k))).collect(),
        }
    }

    pub fn mesh_id(&self) -> MeshId {
        self.mesh_id
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        GridFunction {
            mesh_id: self.mesh_id,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        self.map(|v| t * v)
    }

    pub fn dot(&self, other: &GridFunction) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        GridFunction {
            mesh_id: self.mesh_id,
            values,
        }
    }

    pub fn check_mesh(&self, mesh: &DomainMesh) -> Result<()> {
        if self.mesh_id != mesh.id() || self.values.len() != mesh.n_cells() {
            return Err(Error::Binding("grid function belongs to a different mesh".into()));
        }
        Ok(())
    }

    pub(crate) fn check_weights(&self, w: &KernelWeights) -> Result<()> {
        if self.mesh_id != w.mesh_id() || self.values.len() != w.n_cells() {
            return Err(Error::Binding(
                "grid function and weights belong to different meshes".into(),
            ));
        }
        Ok(())
    }

    /// CSV with columns `cell_center,cell_measure,tag,value`.
    pub fn to_csv(&self, mesh: &DomainMesh) -> Result<String> {
        self.check_mesh(mesh)?;
        let mut out = String::from("cell_center,cell_measure,tag,value\n");
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                mesh.cell_center(k),
                mesh.cell_measure(k),
                mesh.tag(k).as_str(),
                v
            );
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "E_PLUS")]
    EPlus,
    #[serde(rename = "E_MINUS")]
    EMinus,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::I => "I",
            Kind::EPlus => "E_PLUS",
            Kind::EMinus => "E_MINUS",
        }
    }
}

/// Problem data shared by every functional evaluation.
#[derive(Debug, Clone)]
pub struct ProblemConfig {
    pub p: f64,
    pub s: f64,
    pub lambda: f64,
    pub mesh: Arc<DomainMesh>,
    pub weights: Arc<KernelWeights>,
    pub nonlinearity: Nonlinearity,
}

impl ProblemConfig {
    pub fn new(
        p: f64,
        s: f64,
        lambda: f64,
        mesh: Arc<DomainMesh>,
        weights: Arc<KernelWeights>,
        nonlinearity: Nonlinearity,
    ) -> Result<Self> {
        let alpha = kernel_exponent(p, s)?;
        if !lambda.is_finite() {
            return Err(Error::param("lambda", "must be finite"));
        }
        weights.check_mesh(&mesh)?;
        if (weights.alpha - alpha).abs() > 1e-12 * alpha {
            return Err(Error::Config(format!(
                "weights were assembled for alpha = {}, but 1 + p s = {alpha}",
                weights.alpha
            )));
        }
        Ok(ProblemConfig {
            p,
            s,
            lambda,
            mesh,
            weights,
            nonlinearity,
        })
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        u.check_mesh(&self.mesh)
    }
}

/// `Σ_{i<j} w_ij |u_i − u_j|ᵖ`, i.e. half of `[u]ᵖ_h`.
fn half_seminorm(w: &KernelWeights, u: &[f64], p: f64) -> f64 {
    let n = u.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = w.row(i);
            let ui = u[i];
            let mut acc = 0.0;
            for j in i + 1..n {
                let wij = row[j];
                if wij != 0.0 {
                    acc += wij * abs_pow(ui - u[j], p);
                }
            }
            acc
        })
        .collect();
    rows.iter().sum()
}

/// Kernel part of every gradient: `Σ_j w_kj J_p(u_k − u_j)` for each cell k.
pub fn kernel_gradient(w: &KernelWeights, u: &GridFunction, p: f64) -> Result<GridFunction> {
    u.check_weights(w)?;
    Ok(u.with_values(kernel_gradient_raw(w, &u.values, p)))
}

pub(crate) fn kernel_gradient_raw(w: &KernelWeights, u: &[f64], p: f64) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .into_par_iter()
        .map(|k| {
            let row = w.row(k);
            let uk = u[k];
            let mut acc = 0.0;
            for j in 0..n {
                let wkj = row[j];
                if wkj != 0.0 {
                    acc += wkj * j_p(uk - u[j], p);
                }
            }
            acc
        })
        .collect()
}

/// `[u]ᵖ_h = 2 Σ_{i<j} w_ij |u_i − u_j|ᵖ`.
pub fn gagliardo_p(w: &KernelWeights, u: &GridFunction, p: f64) -> Result<f64> {
    u.check_weights(w)?;
    Ok(2.0 * half_seminorm(w, &u.values, p))
}

/// `Σ_{k interior} m_k |u_k|ᵖ`.
pub fn lp_interior(mesh: &DomainMesh, u: &GridFunction, p: f64) -> Result<f64> {
    u.check_mesh(mesh)?;
    Ok(mesh
        .interior_range()
        .map(|k| mesh.cell_measure(k) * abs_pow(u.values[k], p))
        .sum())
}

pub fn norm_x(w: &KernelWeights, u: &GridFunction, mesh: &DomainMesh, p: f64) -> Result<f64> {
    w.check_mesh(mesh)?;
    let semi = gagliardo_p(w, u, p)?;
    let lp = lp_interior(mesh, u, p)?;
    Ok((semi + lp).powf(1.0 / p))
}

fn require_vanishing_source(cfg: &ProblemConfig, kind: Kind) -> Result<()> {
    let nl = &cfg.nonlinearity;
    let mesh = &cfg.mesh;
    if mesh
        .interior_range()
        .any(|k| nl.g(mesh.cell_center(k), 0.0) != 0.0)
    {
        return Err(Error::Config(format!(
            "{} needs f(x, 0) = 0, but nonlinearity `{}` does not vanish at t = 0",
            kind.as_str(),
            nl.name()
        )));
    }
    Ok(())
}

/// Value and full gradient (all cells) of the chosen functional.
///
/// * `I(u) = (1/2p)[u]ᵖ − (λ/p)Σ m|u|ᵖ − Σ m G(x,u)`
/// * `E₊(u) = (1/2p)[u]ᵖ + (1/p)Σ m|u|ᵖ − ((λ+1)/p)Σ m (u⁺)ᵖ − Σ m F(x,u⁺)`
/// * `E₋` is the mirror image with `u⁻` and `F(x, −u⁻)`.
pub fn evaluate(kind: Kind, u: &GridFunction, cfg: &ProblemConfig) -> Result<(f64, GridFunction)> {
    cfg.check(u)?;
    if kind != Kind::I {
        require_vanishing_source(cfg, kind)?;
    }
    let (value, grad) = evaluate_raw(kind, &u.values, cfg);
    Ok((value, u.with_values(grad)))
}

/// Value only; skips the gradient sweep.
pub fn energy(kind: Kind, u: &GridFunction, cfg: &ProblemConfig) -> Result<f64> {
    cfg.check(u)?;
    if kind != Kind::I {
        require_vanishing_source(cfg, kind)?;
    }
    Ok(energy_raw(kind, &u.values, cfg))
}

fn local_terms(kind: Kind, t: f64, x: f64, cfg: &ProblemConfig) -> (f64, f64) {
    let p = cfg.p;
    let lam = cfg.lambda;
    let nl = &cfg.nonlinearity;
    match kind {
        Kind::I => (
            -lam / p * abs_pow(t, p) - nl.primitive(x, t),
            -lam * j_p(t, p) - nl.g(x, t),
        ),
        Kind::EPlus | Kind::EMinus => {
            // v = u⁺ for E₊ and v = −u⁻ = min(u, 0) for E₋; both enter through |v|ᵖ and F(x, v).
            let v = if kind == Kind::EPlus { t.max(0.0) } else { t.min(0.0) };
            (
                abs_pow(t, p) / p - (lam + 1.0) / p * abs_pow(v, p) - nl.primitive(x, v),
                j_p(t, p) - (lam + 1.0) * j_p(v, p) - nl.g(x, v),
            )
        }
    }
}

pub(crate) fn energy_raw(kind: Kind, u: &[f64], cfg: &ProblemConfig) -> f64 {
    let p = cfg.p;
    let mesh = &cfg.mesh;
    let kernel = half_seminorm(&cfg.weights, u, p) / p;
    let local: f64 = mesh
        .interior_range()
        .map(|k| mesh.cell_measure(k) * local_terms(kind, u[k], mesh.cell_center(k), cfg).0)
        .sum();
    kernel + local
}

fn local_delta(kind: Kind, t0: f64, t1: f64, x: f64, cfg: &ProblemConfig) -> f64 {
    let p = cfg.p;
    let lam = cfg.lambda;
    let nl = &cfg.nonlinearity;
    match kind {
        Kind::I => -lam / p * pow_diff(t0, t1, p) - nl.primitive_diff(x, t0, t1),
        Kind::EPlus | Kind::EMinus => {
            let clip = |t: f64| if kind == Kind::EPlus { t.max(0.0) } else { t.min(0.0) };
            let (v0, v1) = (clip(t0), clip(t1));
            pow_diff(t0, t1, p) / p
                - (lam + 1.0) / p * pow_diff(v0, v1, p)
                - nl.primitive_diff(x, v0, v1)
        }
    }
}

/// `energy(u1) − energy(u0)` summed term by term, so that differences far
/// below the rounding level of the energies themselves stay resolved.
pub(crate) fn energy_delta_raw(kind: Kind, u0: &[f64], u1: &[f64], cfg: &ProblemConfig) -> f64 {
    let p = cfg.p;
    let w = &cfg.weights;
    let mesh = &cfg.mesh;
    let n = u0.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = w.row(i);
            let mut acc = 0.0;
            for j in i + 1..n {
                let wij = row[j];
                if wij != 0.0 {
                    acc += wij * pow_diff(u0[i] - u0[j], u1[i] - u1[j], p);
                }
            }
            acc
        })
        .collect();
    let kernel = rows.iter().sum::<f64>() / p;
    let local: f64 = mesh
        .interior_range()
        .map(|k| mesh.cell_measure(k) * local_delta(kind, u0[k], u1[k], mesh.cell_center(k), cfg))
        .sum();
    kernel + local
}

pub(crate) fn evaluate_raw(kind: Kind, u: &[f64], cfg: &ProblemConfig) -> (f64, Vec<f64>) {
    let p = cfg.p;
    let mesh = &cfg.mesh;
    let kernel = half_seminorm(&cfg.weights, u, p) / p;
    let mut grad = kernel_gradient_raw(&cfg.weights, u, p);
    let mut local = 0.0;
    for k in mesh.interior_range() {
        let m = mesh.cell_measure(k);
        let (e, d) = local_terms(kind, u[k], mesh.cell_center(k), cfg);
        local += m * e;
        grad[k] += m * d;
    }
    (kernel + local, grad)
}

/// Second derivative of the interior local term of `kind` at value `t`.
pub(crate) fn local_curvature(kind: Kind, t: f64, x: f64, cfg: &ProblemConfig) -> f64 {
    let p = cfg.p;
    let lam = cfg.lambda;
    let nl = &cfg.nonlinearity;
    let dj = |t: f64| {
        if p == 2.0 {
            1.0
        } else {
            (p - 1.0) * t.abs().max(1e-12).powf(p - 2.0)
        }
    };
    match kind {
        Kind::I => -lam * dj(t) - nl.dg(x, t),
        Kind::EPlus | Kind::EMinus => {
            let active = if kind == Kind::EPlus { t > 0.0 } else { t < 0.0 };
            let mut c = dj(t);
            if active {
                c -= (lam + 1.0) * dj(t) + nl.dg(x, t);
            }
            c
        }
    }
}

/// `Σ_{i<j} w_ij J_p(u_i−u_j)(v_i−v_j) − λ Σ m |u|^(p−2)u v − Σ m g(x,u) v`.
///
/// Zero for every `v` exactly when `u` is a discrete weak solution.
pub fn weak_residual(u: &GridFunction, v: &GridFunction, cfg: &ProblemConfig) -> Result<f64> {
    cfg.check(u)?;
    cfg.check(v)?;
    let p = cfg.p;
    let w = &cfg.weights;
    let (uu, vv) = (&u.values, &v.values);
    let n = uu.len();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = w.row(i);
            let mut acc = 0.0;
            for j in i + 1..n {
                if row[j] != 0.0 {
                    acc += row[j] * j_p(uu[i] - uu[j], p) * (vv[i] - vv[j]);
                }
            }
            acc
        })
        .collect();
    let kernel: f64 = rows.iter().sum();
    let mesh = &cfg.mesh;
    let local: f64 = mesh
        .interior_range()
        .map(|k| {
            let x = mesh.cell_center(k);
            mesh.cell_measure(k)
                * (cfg.lambda * j_p(uu[k], p) + cfg.nonlinearity.g(x, uu[k]))
                * vv[k]
        })
        .sum();
    Ok(kernel - local)
}
