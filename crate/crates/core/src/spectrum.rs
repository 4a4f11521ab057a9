//! Eigenstructure of the discrete operator.
//!
//! For p = 2 the exterior extension is linear, so eliminating the collar
//! unknowns from the quadratic form of `[u]²_h` is a Schur complement. The
//! collar block is diagonal (no exterior–exterior coupling), which makes the
//! condensation explicit. At general p only Rayleigh quotients and cone tests
//! are offered.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::energy::{gagliardo_p, lp_interior, GridFunction};
use crate::error::{Error, Result};
use crate::kernel::KernelWeights;
use crate::mesh::DomainMesh;
use crate::neumann::exterior_extend;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda: f64,
    /// Full grid function (collar filled by the Neumann extension),
    /// normalized so that `Σ_Ω m_k φ_k² = 1` and its first significant
    /// interior entry is positive.
    pub phi: GridFunction,
}

/// Interior-condensed matrix of the quadratic form `u ↦ [u]²_h` and the
/// interior cell measures (the diagonal mass matrix).
pub fn condensed_operator(mesh: &DomainMesh, w: &KernelWeights) -> Result<(DMatrix<f64>, Vec<f64>)> {
    w.check_mesh(mesh)?;
    let n = mesh.n_cells();
    let interior = mesh.interior_range();
    let ni = interior.len();
    let off = interior.start;

    // A = 2L with L the weighted graph Laplacian of the effective weights.
    let a = |i: usize, j: usize| -> f64 {
        if i == j {
            2.0 * w.row(i).iter().sum::<f64>()
        } else {
            -2.0 * w.effective(i, j)
        }
    };
    let mut red = DMatrix::<f64>::zeros(ni, ni);
    for r in 0..ni {
        for c in 0..ni {
            red[(r, c)] = a(off + r, off + c);
        }
    }
    for k in mesh.exterior_indices() {
        let akk = a(k, k);
        if !(akk > 0.0) {
            return Err(Error::Connectivity { cell: k });
        }
        let col: Vec<f64> = (0..ni).map(|r| a(off + r, k)).collect();
        for r in 0..ni {
            if col[r] == 0.0 {
                continue;
            }
            let f = col[r] / akk;
            for c in 0..ni {
                red[(r, c)] -= f * col[c];
            }
        }
    }
    // enforce exact symmetry against rounding in the update order
    let red = (&red + red.transpose()) * 0.5;
    debug_assert_eq!(n, ni + mesh.n_exterior());
    let mass = mesh.interior_range().map(|k| mesh.cell_measure(k)).collect();
    Ok((red, mass))
}

fn similarity_eigen(mesh: &DomainMesh, w: &KernelWeights) -> Result<(SymmetricEigen<f64, nalgebra::Dyn>, Vec<f64>)> {
    let (red, mass) = condensed_operator(mesh, w)?;
    let ni = mass.len();
    let inv_sqrt: Vec<f64> = mass.iter().map(|m| 1.0 / m.sqrt()).collect();
    let scaled = DMatrix::from_fn(ni, ni, |r, c| inv_sqrt[r] * red[(r, c)] * inv_sqrt[c]);
    Ok((SymmetricEigen::new(scaled), inv_sqrt))
}

fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    idx
}

fn require_p2(p: f64) -> Result<()> {
    if p != 2.0 {
        return Err(Error::Unsupported(format!(
            "the eigensolver covers p = 2 only, got p = {p}"
        )));
    }
    Ok(())
}

/// All eigenvalues of the condensed p = 2 problem, ascending.
pub fn eigenvalues_p2(mesh: &DomainMesh, w: &KernelWeights, p: f64) -> Result<Vec<f64>> {
    require_p2(p)?;
    let (eig, _) = similarity_eigen(mesh, w)?;
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    Ok(sorted_order(&vals).into_iter().map(|i| vals[i]).collect())
}

/// The `k` smallest eigenpairs of `A_red φ = λ M φ`, ascending.
pub fn eig_p2(mesh: &DomainMesh, w: &KernelWeights, k: usize, p: f64) -> Result<Vec<EigenPair>> {
    require_p2(p)?;
    let ni = mesh.n_interior();
    if k == 0 || k > ni {
        return Err(Error::param(
            "k",
            format!("need 1 <= k <= {ni} interior cells, got {k}"),
        ));
    }
    let (eig, inv_sqrt) = similarity_eigen(mesh, w)?;
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let off = mesh.interior_range().start;
    let mut out = Vec::with_capacity(k);
    for idx in sorted_order(&vals).into_iter().take(k) {
        let col = eig.eigenvectors.column(idx);
        let mut interior: Vec<f64> = (0..ni).map(|r| inv_sqrt[r] * col[r]).collect();
        let peak = interior.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if let Some(first) = interior.iter().find(|v| v.abs() > 1e-8 * peak) {
            if *first < 0.0 {
                interior.iter_mut().for_each(|v| *v = -*v);
            }
        }
        let mut values = vec![0.0; mesh.n_cells()];
        values[off..off + ni].copy_from_slice(&interior);
        let phi = exterior_extend(&GridFunction::new(mesh, values)?, mesh, w, 2.0)?;
        out.push(EigenPair {
            lambda: vals[idx],
            phi,
        });
    }
    Ok(out)
}

/// `[u]ᵖ_h / Σ_Ω m_k |u_k|ᵖ`.
pub fn rayleigh(u: &GridFunction, w: &KernelWeights, mesh: &DomainMesh, p: f64) -> Result<f64> {
    w.check_mesh(mesh)?;
    let den = lp_interior(mesh, u, p)?;
    if !(den > 0.0) {
        return Err(Error::Domain(
            "Rayleigh quotient undefined: u vanishes on the interior".into(),
        ));
    }
    Ok(gagliardo_p(w, u, p)? / den)
}

const CONE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConeClass {
    #[serde(rename = "IN_C_MINUS")]
    InCMinus,
    #[serde(rename = "IN_C_PLUS")]
    InCPlus,
    #[serde(rename = "NEITHER")]
    Neither,
    #[serde(rename = "BOTH_ZERO")]
    BothZero,
}

/// Membership in `C⁻ = {[u]ᵖ ≤ λ_lo ‖u‖ᵖ_p}` or `C⁺ = {[u]ᵖ ≥ λ_hi ‖u‖ᵖ_p}`.
///
/// Both comparisons, and the requirement `λ_lo ≥ 0`, allow a slack of
/// `1e-10 · max(1, λ_hi)` so that computed eigenvalues (a λ₁ of −1e−14, an
/// eigenvector's own quotient) classify as their exact counterparts.
/// When `lambda_lo == lambda_hi` a nonzero u can satisfy both inequalities;
/// it is then reported as `InCMinus`.
pub fn cone_test(
    u: &GridFunction,
    lambda_lo: f64,
    lambda_hi: f64,
    w: &KernelWeights,
    mesh: &DomainMesh,
    p: f64,
) -> Result<ConeClass> {
    let slack = CONE_REL_TOL * lambda_hi.abs().max(1.0);
    if !(lambda_lo >= -slack && lambda_lo <= lambda_hi) {
        return Err(Error::param(
            "lambda_lo",
            format!("need 0 <= lambda_lo <= lambda_hi, got ({lambda_lo}, {lambda_hi})"),
        ));
    }
    w.check_mesh(mesh)?;
    if u.values.iter().all(|&v| v == 0.0) {
        return Ok(ConeClass::BothZero);
    }
    let semi = gagliardo_p(w, u, p)?;
    let lp = lp_interior(mesh, u, p)?;
    Ok(if semi <= (lambda_lo + slack) * lp {
        ConeClass::InCMinus
    } else if semi >= (lambda_hi - slack) * lp {
        ConeClass::InCPlus
    } else {
        ConeClass::Neither
    })
}
