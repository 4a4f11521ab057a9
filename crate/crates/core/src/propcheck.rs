//! Randomized verification: the pointwise inequalities behind the sign
//! arguments, growth hypotheses of the built-in nonlinearities, gradient
//! consistency, and a bundle of structural invariants used by `verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, abs_pow, j_p, kernel_gradient, GridFunction, Kind, ProblemConfig};
use crate::error::{Error, Result};
use crate::kernel::KernelWeights;
use crate::mesh::DomainMesh;
use crate::nonlinearity::{Coefficient, Nonlinearity};

/// Relative slack granted to inequalities that hold exactly in real arithmetic.
pub const SLACK: f64 = 1e-12;
const MAX_LISTED: usize = 100;
const MAX_MAGNITUDE: f64 = 1e3;

fn pos(t: f64) -> f64 {
    t.max(0.0)
}

fn neg(t: f64) -> f64 {
    (-t).max(0.0)
}

pub const INEQUALITIES: [&str; 5] = ["disug", "disug1", "disug2", "11_plus", "11_minus"];

/// `(lhs, rhs)` of each inequality `lhs ≤ rhs`, in the order of [`INEQUALITIES`].
pub fn inequality_sides(x: f64, y: f64, p: f64) -> [(f64, f64); 5] {
    let d = x - y;
    let jd = j_p(d, p);
    let (dp, dm) = (pos(x) - pos(y), neg(x) - neg(y));
    [
        (abs_pow(dm, p), jd * (neg(y) - neg(x))),
        (abs_pow(dp, p), jd * dp),
        (abs_pow(d, p), 2f64.powf(p - 1.0) * (abs_pow(dp, p) + abs_pow(dm, p))),
        (dp.abs(), d.abs()),
        (dm.abs(), d.abs()),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityCount {
    pub name: String,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `(rhs − lhs) / scale` seen.
    pub worst_slack: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Violation {
    pub inequality: String,
    pub x: f64,
    pub y: f64,
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InequalityReport {
    pub n_samples: usize,
    pub seed: u64,
    pub p_range: (f64, f64),
    pub counts: Vec<InequalityCount>,
    pub total_violations: usize,
    /// At most the first 100 violations, in sample order.
    pub violations: Vec<Violation>,
}

/// Sample `i` of the sweep; strata cycle through uniform draws and the
/// families where equality or sign boundaries occur.
fn sample(seed: u64, i: usize, (p_lo, p_hi): (f64, f64)) -> (f64, f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    let p = rng.random_range(p_lo..=p_hi);
    let magnitude = |rng: &mut ChaCha8Rng| {
        let m = 10f64.powf(rng.random_range(-6.0..=3.0)).min(MAX_MAGNITUDE);
        if rng.random_bool(0.5) { m } else { -m }
    };
    let (x, y) = match i % 6 {
        0 => (
            rng.random_range(-MAX_MAGNITUDE..=MAX_MAGNITUDE),
            rng.random_range(-MAX_MAGNITUDE..=MAX_MAGNITUDE),
        ),
        1 => (magnitude(&mut rng), magnitude(&mut rng)),
        2 => {
            let x = magnitude(&mut rng);
            (x, x)
        }
        3 => {
            let x = magnitude(&mut rng);
            (x, -x)
        }
        4 => {
            let x = magnitude(&mut rng);
            let y = -x.signum() * x.abs() * 10f64.powf(-rng.random_range(3.0..=9.0));
            if rng.random_bool(0.5) { (x, y) } else { (y, x) }
        }
        _ => {
            let x = magnitude(&mut rng);
            if rng.random_bool(0.5) { (x, 0.0) } else { (0.0, x) }
        }
    };
    (x, y, p)
}

pub fn check_pointwise_inequalities(
    n_samples: usize,
    p_range: (f64, f64),
    seed: u64,
) -> Result<InequalityReport> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "need at least one sample"));
    }
    let (lo, hi) = p_range;
    if !(lo > 1.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::param("p_range", format!("need 1 < lo <= hi < inf, got ({lo}, {hi})")));
    }
    let per_sample: Vec<[f64; 5]> = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let (x, y, p) = sample(seed, i, p_range);
            let scale = 1.0 + abs_pow(x, p) + abs_pow(y, p);
            inequality_sides(x, y, p).map(|(l, r)| (r - l) / scale)
        })
        .collect();
    let mut counts: Vec<InequalityCount> = INEQUALITIES
        .iter()
        .map(|n| InequalityCount {
            name: n.to_string(),
            checked: n_samples,
            violations: 0,
            worst_slack: f64::INFINITY,
        })
        .collect();
    let mut violations = Vec::new();
    for (i, slacks) in per_sample.iter().enumerate() {
        for (k, &s) in slacks.iter().enumerate() {
            let c = &mut counts[k];
            c.worst_slack = c.worst_slack.min(s);
            if !(s >= -SLACK) {
                c.violations += 1;
                if violations.len() < MAX_LISTED {
                    let (x, y, p) = sample(seed, i, p_range);
                    let (lhs, rhs) = inequality_sides(x, y, p)[k];
                    violations.push(Violation {
                        inequality: INEQUALITIES[k].to_string(),
                        x,
                        y,
                        p,
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    let total_violations = counts.iter().map(|c| c.violations).sum();
    Ok(InequalityReport {
        n_samples,
        seed,
        p_range,
        counts,
        total_violations,
        violations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HypothesisSet {
    #[serde(rename = "G_SET")]
    G,
    #[serde(rename = "F_SET")]
    F,
    #[serde(rename = "LINEAR_SET")]
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FAIL")]
    Fail,
    #[serde(rename = "WARN")]
    Warn,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthCheck {
    pub name: String,
    /// Limit-type hypotheses only ever warn.
    pub limit_type: bool,
    pub status: CheckStatus,
    pub evaluations: usize,
    pub worst_slack: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    pub nonlinearity: String,
    pub set: HypothesisSet,
    pub checks: Vec<GrowthCheck>,
    /// True when no hard check failed.
    pub passed: bool,
}

/// `±10^k` for `k = -6..=6`, plus 0.
pub fn default_t_grid() -> Vec<f64> {
    let mut g = vec![0.0];
    for k in -6..=6 {
        let t = 10f64.powi(k);
        g.push(t);
        g.push(-t);
    }
    g.sort_by(f64::total_cmp);
    g
}

struct Tally {
    name: &'static str,
    evaluations: usize,
    worst: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            evaluations: 0,
            worst: f64::INFINITY,
        }
    }

    /// Records `lhs ≤ rhs`.
    fn le(&mut self, lhs: f64, rhs: f64) {
        self.evaluations += 1;
        let scale = 1.0 + lhs.abs() + rhs.abs();
        self.worst = self.worst.min((rhs - lhs) / scale);
    }

    fn hard(self, detail: impl Into<String>) -> GrowthCheck {
        let ok = self.worst >= -SLACK;
        GrowthCheck {
            name: self.name.into(),
            limit_type: false,
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            evaluations: self.evaluations,
            worst_slack: self.worst,
            detail: detail.into(),
        }
    }
}

fn structural(name: &str, ok: bool, detail: String) -> GrowthCheck {
    GrowthCheck {
        name: name.into(),
        limit_type: false,
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        evaluations: 1,
        worst_slack: if ok { 0.0 } else { -1.0 },
        detail,
    }
}

/// Trend of `ratio(t)` along the grid points of largest (`toward_infinity`)
/// or smallest magnitude, compared with `target(x)`; warns unless the last
/// sampled ratios approach the target from the allowed side.
fn limit_check(
    name: &str,
    t_grid: &[f64],
    xs: &[f64],
    toward_infinity: bool,
    ratio: impl Fn(f64, f64) -> f64,
    accept: impl Fn(&[f64], f64) -> bool,
    target: impl Fn(f64) -> f64,
) -> GrowthCheck {
    let mut ts: Vec<f64> = t_grid.iter().copied().filter(|t| *t != 0.0).collect();
    ts.sort_by(|a, b| {
        let (a, b) = (a.abs(), b.abs());
        if toward_infinity { a.total_cmp(&b) } else { b.total_cmp(&a) }
    });
    let mut ok = true;
    let mut evaluations = 0;
    let mut tail = Vec::new();
    for &x in xs {
        for sign in [1.0, -1.0] {
            let seq: Vec<f64> = ts
                .iter()
                .filter(|t| t.signum() == sign)
                .map(|&t| ratio(x, t))
                .collect();
            evaluations += seq.len();
            if seq.len() >= 2 {
                ok &= accept(&seq, target(x));
                tail = seq[seq.len().saturating_sub(3)..].to_vec();
            }
        }
    }
    GrowthCheck {
        name: name.into(),
        limit_type: true,
        status: if ok { CheckStatus::Pass } else { CheckStatus::Warn },
        evaluations,
        worst_slack: 0.0,
        detail: format!("last sampled ratios {tail:?}"),
    }
}

fn coef(c: Coefficient, x: f64) -> f64 {
    c.eval(x)
}

/// The last sampled value is within tolerance of the target from below, or
/// the sequence still moves toward it.
fn approaches_from_below(seq: &[f64], target: f64) -> bool {
    let last = seq[seq.len() - 1];
    let prev = seq[seq.len() - 2];
    last <= target + 1e-6 * (1.0 + target.abs()) || (last - target).abs() < (prev - target).abs()
}

fn tends_to_zero(seq: &[f64], _target: f64) -> bool {
    let last = seq[seq.len() - 1].abs();
    last < 1e-3 || last < 0.5 * seq[seq.len() - 2].abs()
}

fn grows_without_bound(seq: &[f64], _target: f64) -> bool {
    let n = seq.len();
    seq[n - 1] > seq[n - 2] && seq[n - 1] > 1.0
}

pub fn check_growth(
    nl: &Nonlinearity,
    set: HypothesisSet,
    t_grid: &[f64],
    x_samples: &[f64],
    seed: u64,
) -> Result<GrowthReport> {
    if t_grid.is_empty() || x_samples.is_empty() {
        return Err(Error::param("t_grid", "grid and x samples must be non-empty"));
    }
    let p = nl.p;
    let missing = |what: &str| {
        Error::Config(format!(
            "nonlinearity `{}` carries no {what} metadata",
            nl.name()
        ))
    };
    let mut checks = Vec::new();
    match set {
        HypothesisSet::G => {
            let ar = nl.ar.ok_or_else(|| missing("G_SET"))?;
            checks.push(structural(
                "g_constants",
                ar.q > p && ar.mu > p && ar.mu_tilde > p && ar.a3 > 0.0 && ar.a1 >= 0.0 && ar.a2 >= 0.0 && ar.r_ar >= 0.0,
                format!("q={} mu={} mu_tilde={} a3={} against p={p}", ar.q, ar.mu, ar.mu_tilde, ar.a3),
            ));
            let (mut g1, mut g3, mut add, mut g4) =
                (Tally::new("g1"), Tally::new("g3"), Tally::new("add"), Tally::new("g4"));
            let mut g3_positive = true;
            for &x in x_samples {
                for &t in t_grid {
                    let (g, big_g) = (nl.g(x, t), nl.primitive(x, t));
                    g1.le(g.abs(), ar.a1 + ar.a2 * t.abs().powf(ar.q - 1.0));
                    if t.abs() > ar.r_ar {
                        g3.le(ar.mu * big_g, g * t);
                        g3_positive &= big_g > 0.0;
                    }
                    add.le(ar.a3 * t.abs().powf(ar.mu_tilde) - coef(ar.a4, x), big_g);
                    if ar.r_ar > 0.0 {
                        g4.le(0.0, big_g);
                    }
                }
            }
            checks.push(g1.hard("|g| <= a1 + a2|t|^(q-1)"));
            let mut c3 = g3.hard("0 < mu G <= g t for |t| > R");
            if !g3_positive {
                c3.status = CheckStatus::Fail;
                c3.detail.push_str("; G vanished or went negative beyond R");
            }
            checks.push(c3);
            checks.push(add.hard("G >= a3|t|^mu_tilde - a4(x)"));
            if ar.r_ar > 0.0 {
                checks.push(g4.hard("G >= 0"));
            }
            checks.push(limit_check(
                "g2",
                t_grid,
                x_samples,
                false,
                |x, t| nl.g(x, t) / t.abs().powf(p - 1.0),
                tends_to_zero,
                |_| 0.0,
            ));
        }
        HypothesisSet::F => {
            let sl = nl.superlinear.ok_or_else(|| missing("F_SET"))?;
            checks.push(structural(
                "f_constants",
                sl.r > p && sl.c > 0.0 && sl.theta >= 1.0,
                format!("r={} c={} theta={} against p={p}", sl.r, sl.c, sl.theta),
            ));
            let (mut f0, mut f1, mut beta) = (Tally::new("f_zero"), Tally::new("f1"), Tally::new("beta_star"));
            for &x in x_samples {
                let v = nl.g(x, 0.0).abs();
                f0.le(v, 0.0);
                beta.le(0.0, coef(sl.beta_star, x));
                for &t in t_grid {
                    f1.le(nl.g(x, t).abs(), coef(sl.a, x) + sl.c * t.abs().powf(sl.r - 1.0));
                }
            }
            checks.push(f0.hard("f(x, 0) = 0"));
            checks.push(beta.hard("beta_star >= 0"));
            checks.push(f1.hard("|f| <= a(x) + c|t|^(r-1)"));
            let t_max = t_grid.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut f3 = Tally::new("f3");
            for i in 0..10_000 {
                let x = x_samples[i % x_samples.len()];
                // log-uniform magnitudes so small and large |t| are both represented
                let mut mag = || t_max * 10f64.powf(-rng.random_range(0.0..=12.0));
                let (a, b) = (mag(), mag());
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let (t1, t2) = if i % 2 == 0 { (lo, hi) } else { (-lo, -hi) };
                f3.le(nl.sigma(x, t1), sl.theta * nl.sigma(x, t2) + coef(sl.beta_star, x));
            }
            checks.push(f3.hard("sigma(t1) <= theta sigma(t2) + beta_star on ordered pairs"));
            checks.push(limit_check(
                "f2",
                t_grid,
                x_samples,
                true,
                |x, t| nl.primitive(x, t) / t.abs().powf(p),
                grows_without_bound,
                |_| f64::INFINITY,
            ));
            checks.push(limit_check(
                "f4",
                t_grid,
                x_samples,
                false,
                |x, t| nl.g(x, t) / j_p(t, p),
                tends_to_zero,
                |_| 0.0,
            ));
        }
        HypothesisSet::Linear => {
            let lin = nl.linear.ok_or_else(|| missing("LINEAR_SET"))?;
            let mut gb = Tally::new("gbound");
            for &x in x_samples {
                for &t in t_grid {
                    gb.le(nl.g(x, t).abs(), coef(lin.a, x) + lin.b * t.abs().powf(p - 1.0));
                }
            }
            checks.push(gb.hard("|g| <= a(x) + b|t|^(p-1)"));
            checks.push(limit_check(
                "asu",
                t_grid,
                x_samples,
                true,
                |x, t| nl.g(x, t) / j_p(t, p),
                approaches_from_below,
                |x| coef(lin.alpha_bar, x),
            ));
            checks.push(limit_check(
                "lsup1",
                t_grid,
                x_samples,
                true,
                |x, t| nl.primitive(x, t) / t.abs().powf(p),
                approaches_from_below,
                |x| coef(lin.alpha_bar, x) / p,
            ));
        }
    }
    let passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
    Ok(GrowthReport {
        nonlinearity: nl.name().into(),
        set,
        checks,
        passed,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientCheck {
    pub kind: Kind,
    pub p: f64,
    pub max_rel_error: f64,
    pub compared: usize,
    /// Cells skipped because a perturbation would cross a point where `J_p`
    /// or the sign truncation is not differentiable.
    pub excluded: Vec<usize>,
}

/// Central differences of the energy against the analytic gradient on every
/// cell. Step for cell k is `h (1 + |u_k|)`; errors are relative to
/// `max(|g_k|, 1e-3 max|g|)`.
pub fn check_gradient_fd(kind: Kind, u: &GridFunction, cfg: &ProblemConfig, h: f64) -> Result<GradientCheck> {
    if !(h > 0.0) {
        return Err(Error::param("h", "finite-difference step must be positive"));
    }
    let (_, grad) = energy::evaluate(kind, u, cfg)?;
    let mesh = &cfg.mesh;
    let n = u.len();
    let gmax = grad.values.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let floor = (1e-3 * gmax).max(f64::MIN_POSITIVE);
    let results: Vec<(usize, Option<f64>)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let uk = u.values[k];
            let hk = h * (1.0 + uk.abs());
            let row = cfg.weights.row(k);
            let near_kink = |t: f64| t.abs() < 2.0 * hk;
            let kernel_kink = cfg.p < 2.0
                && (0..n).any(|j| j != k && row[j] != 0.0 && near_kink(uk - u.values[j]));
            let local_kink = mesh.is_interior(k)
                && near_kink(uk)
                && (cfg.p < 2.0 || kind != Kind::I);
            if kernel_kink || local_kink {
                return (k, None);
            }
            let mut up = u.values.clone();
            let mut dn = u.values.clone();
            up[k] += hk;
            dn[k] -= hk;
            let fd = energy::energy_delta_raw(kind, &dn, &up, cfg) / (up[k] - dn[k]);
            let g = grad.values[k];
            (k, Some((fd - g).abs() / g.abs().max(floor)))
        })
        .collect();
    let mut excluded = Vec::new();
    let mut max_rel_error: f64 = 0.0;
    let mut compared = 0;
    for (k, r) in results {
        match r {
            Some(e) => {
                compared += 1;
                max_rel_error = max_rel_error.max(e);
            }
            None => excluded.push(k),
        }
    }
    Ok(GradientCheck {
        kind,
        p: cfg.p,
        max_rel_error,
        compared,
        excluded,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub p: f64,
    pub pairs: usize,
    /// Smallest `⟨A'(u) − A'(v), u − v⟩` seen.
    pub min_pairing: f64,
}

/// Pairs of random grid functions with entries uniform in [-1, 1] tested for
/// `⟨A'(u) − A'(v), u − v⟩ ≥ 0` with `A'` the kernel gradient.
pub fn check_monotonicity(
    mesh: &DomainMesh,
    w: &KernelWeights,
    p: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<MonotonicityReport> {
    w.check_mesh(mesh)?;
    let n = mesh.n_cells();
    let pairings: Vec<Result<f64>> = (0..n_pairs)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut draw = || -> Result<GridFunction> {
                let scale = 10f64.powf(rng.random_range(-2.0..=2.0));
                GridFunction::new(mesh, (0..n).map(|_| scale * rng.random_range(-1.0..=1.0)).collect())
            };
            let (u, v) = (draw()?, draw()?);
            let gu = kernel_gradient(w, &u, p)?;
            let gv = kernel_gradient(w, &v, p)?;
            Ok((0..n)
                .map(|k| (gu.values[k] - gv.values[k]) * (u.values[k] - v.values[k]))
                .sum())
        })
        .collect();
    let mut min_pairing = f64::INFINITY;
    for r in pairings {
        min_pairing = min_pairing.min(r?);
    }
    Ok(MonotonicityReport {
        p,
        pairs: n_pairs,
        min_pairing,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn invariant(name: &str, passed: bool, detail: String) -> InvariantCheck {
    InvariantCheck {
        name: name.into(),
        passed,
        detail,
    }
}

/// Structural invariants of the assembled operator on one mesh: weight
/// symmetry, the Neumann extension's constant/equivariance/residual
/// properties, monotonicity of the kernel gradient, and (p = 2) the zero
/// first eigenvalue with constant eigenvector.
pub fn check_invariants(
    mesh: &DomainMesh,
    w: &KernelWeights,
    p: f64,
    seed: u64,
) -> Result<Vec<InvariantCheck>> {
    use crate::neumann::{exterior_extend, neumann_residual};
    w.check_mesh(mesh)?;
    let n = mesh.n_cells();
    let mut out = Vec::new();

    let mut symmetric = true;
    let mut nonnegative = true;
    for i in 0..n {
        for j in 0..n {
            symmetric &= w.effective(i, j) == w.effective(j, i);
            nonnegative &= w.effective(i, j) >= 0.0;
        }
    }
    out.push(invariant(
        "weights_symmetric_nonnegative",
        symmetric && nonnegative,
        format!("symmetric={symmetric} nonnegative={nonnegative}"),
    ));

    let c = GridFunction::constant(mesh, 1.25);
    let ext = exterior_extend(&c, mesh, w, p)?;
    let constant_ok = ext.values.iter().all(|&v| v == 1.25);
    out.push(invariant("extension_of_constant", constant_ok, String::new()));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_res: f64 = 0.0;
    let mut worst_equiv: f64 = 0.0;
    for _ in 0..20 {
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let u = GridFunction::new(mesh, values)?;
        let e = exterior_extend(&u, mesh, w, p)?;
        worst_res = worst_res.max(neumann_residual(&e, mesh, w, p)?);
        let shift = rng.random_range(-2.0..=2.0);
        let en = exterior_extend(&u.scaled(-1.0), mesh, w, p)?;
        let es = exterior_extend(&u.map(|v| v + shift), mesh, w, p)?;
        for k in mesh.exterior_indices() {
            worst_equiv = worst_equiv
                .max((en.values[k] + e.values[k]).abs())
                .max((es.values[k] - e.values[k] - shift).abs());
        }
    }
    out.push(invariant(
        "extension_residual",
        worst_res <= 1e-10,
        format!("max neumann_residual {worst_res:e}"),
    ));
    out.push(invariant(
        "extension_equivariance",
        worst_equiv <= 1e-10,
        format!("max deviation {worst_equiv:e}"),
    ));

    let mono = check_monotonicity(mesh, w, p, 200, seed)?;
    out.push(invariant(
        "kernel_gradient_monotone",
        mono.min_pairing >= -1e-12,
        format!("min pairing {:e}", mono.min_pairing),
    ));

    if p == 2.0 {
        let pairs = crate::spectrum::eig_p2(mesh, w, 1, p)?;
        let phi = &pairs[0].phi.values;
        let (lo, hi) = phi.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let variation = (hi - lo) / hi.abs().max(lo.abs());
        out.push(invariant(
            "first_eigenpair",
            pairs[0].lambda.abs() <= 1e-9 && variation <= 1e-8,
            format!("lambda_1 {:e}, relative variation {variation:e}", pairs[0].lambda),
        ));
    }
    Ok(out)
}
