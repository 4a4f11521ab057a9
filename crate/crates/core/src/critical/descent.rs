use std::collections::VecDeque;

use super::{divergence, CriticalPointReport, Reduced, SolverOptions};
use crate::energy::{GridFunction, Kind, ProblemConfig};
use crate::error::{Error, Result};
use crate::nonlinearity::Coefficient;

struct Pair {
    s: Vec<f64>,
    y: Vec<f64>,
    rho: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Two-loop recursion with the mass-scaled initial matrix `γ M⁻¹`.
fn lbfgs_direction(g: &[f64], mass: &[f64], pairs: &VecDeque<Pair>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for pr in pairs.iter().rev() {
        let a = pr.rho * dot(&pr.s, &q);
        q.iter_mut().zip(&pr.y).for_each(|(q, y)| *q -= a * y);
        alphas.push(a);
    }
    let gamma = match pairs.back() {
        Some(pr) => {
            let yy: f64 = pr.y.iter().zip(mass).map(|(y, m)| y * y / m).sum();
            dot(&pr.s, &pr.y) / yy
        }
        None => 1.0,
    };
    let mut r: Vec<f64> = q.iter().zip(mass).map(|(q, m)| gamma * q / m).collect();
    for (pr, a) in pairs.iter().zip(alphas.into_iter().rev()) {
        let b = pr.rho * dot(&pr.y, &r);
        r.iter_mut().zip(&pr.s).for_each(|(r, s)| *r += (a - b) * s);
    }
    r.iter_mut().for_each(|r| *r = -*r);
    r
}

fn check_coercive(cfg: &ProblemConfig) -> Result<()> {
    let lin = cfg.nonlinearity.linear.as_ref().ok_or_else(|| {
        Error::Config(format!(
            "coercive minimization needs linear-growth metadata, nonlinearity `{}` has none",
            cfg.nonlinearity.name()
        ))
    })?;
    let mesh = &cfg.mesh;
    for k in mesh.interior_range() {
        let x = mesh.cell_center(k);
        let ab = match lin.alpha_bar {
            Coefficient::Const(c) => c,
            Coefficient::AbsForcing(f) => f.eval(x).abs(),
        };
        if !(ab < 0.0) {
            return Err(Error::Config(format!(
                "coercive minimization needs alpha_bar(x) < 0, got {ab} at x = {x}"
            )));
        }
    }
    if cfg.lambda != 0.0 {
        return Err(Error::Config(format!(
            "coercive minimization is stated for lambda = 0, got {}",
            cfg.lambda
        )));
    }
    Ok(())
}

/// Limited-memory quasi-Newton descent with Armijo backtracking on the
/// reduced functional. Energies in the trace are accumulated from term-wise
/// differences, so each entry is strictly below its predecessor.
pub fn minimize(
    u0: &GridFunction,
    kind: Kind,
    cfg: &ProblemConfig,
    opts: &SolverOptions,
) -> Result<CriticalPointReport> {
    opts.validate()?;
    if opts.coercive && kind == Kind::I {
        check_coercive(cfg)?;
    }
    let red = Reduced::new(kind, cfg, u0)?;
    let mut x = red.interior(&u0.values).to_vec();
    let mut full = red.lift(&x)?;
    let (value, mut g) = red.value_grad(&full);
    if !value.is_finite() {
        return Err(divergence(0, &full));
    }
    let mut trace = vec![value];
    let mut pairs: VecDeque<Pair> = VecDeque::with_capacity(opts.memory);
    let mut iterations = 0;

    while iterations < opts.max_iter && red.grad_norm(&g) > opts.tol {
        let mut d = lbfgs_direction(&g, &red.mass, &pairs);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = lbfgs_direction(&g, &red.mass, &pairs);
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..opts.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(x, d)| x + step * d).collect();
            if trial.iter().any(|v| !v.is_finite()) {
                return Err(divergence(iterations, &full));
            }
            let trial_full = red.lift(&trial)?;
            let delta = red.delta(&full, &trial_full);
            if !delta.is_finite() {
                return Err(divergence(iterations, &trial_full));
            }
            if delta <= opts.armijo * step * slope && delta < 0.0 {
                accepted = Some((trial, trial_full, delta));
                break;
            }
            step *= opts.shrink;
        }
        let Some((trial, trial_full, delta)) = accepted else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        };
        let (v_new, g_new) = red.value_grad(&trial_full);
        if !v_new.is_finite() {
            return Err(divergence(iterations, &trial_full));
        }
        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if opts.memory > 0 && sy > 1e-14 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if pairs.len() == opts.memory {
                pairs.pop_front();
            }
            pairs.push_back(Pair { s, y, rho: 1.0 / sy });
        }
        let last = *trace.last().expect("trace starts non-empty");
        assert!(delta < 0.0, "accepted step must decrease the energy");
        trace.push(last + delta);
        x = trial;
        full = trial_full;
        g = g_new;
        iterations += 1;
    }
    red.report(full, iterations, opts.tol, trace)
}
