#![allow(dead_code)]

use std::sync::Arc;

use fracneum::energy::ProblemConfig;
use fracneum::kernel::{assemble_weights, KernelWeights};
use fracneum::mesh::{build_mesh, DomainMesh, Grading};
use fracneum::nonlinearity::Nonlinearity;

const MIN_ENDPOINT_DISTANCE: f64 = 1e-150;

/// Tanh-sinh quadrature on `[a, b]`. The integrand receives the abscissa and
/// its distances to `a` and `b`, each computed without cancellation so that
/// endpoint singularities can be evaluated accurately. Levels are refined
/// (step halving) until two successive estimates agree to `rel_tol`.
pub fn tanh_sinh(a: f64, b: f64, rel_tol: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = a + half;
    let t_max = 6.0;
    let estimate = |h: f64| -> f64 {
        let n = (t_max / h).ceil() as i64;
        let mut sum = 0.0;
        for k in -n..=n {
            let t = k as f64 * h;
            let u = std::f64::consts::FRAC_PI_2 * t.sinh();
            let e = (-2.0 * u.abs()).exp();
            let w = std::f64::consts::FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e));
            // 1 - tanh(u) and 1 + tanh(u) without subtraction
            let (to_a, to_b) = if u < 0.0 {
                (half * 2.0 * e / (1.0 + e), half * 2.0 / (1.0 + e))
            } else {
                (half * 2.0 / (1.0 + e), half * 2.0 * e / (1.0 + e))
            };
            if to_a.min(to_b) < MIN_ENDPOINT_DISTANCE {
                continue;
            }
            let x = if u < 0.0 { a + to_a } else { b - to_b };
            let x = if u == 0.0 { mid } else { x };
            sum += w * f(x, to_a, to_b);
        }
        half * h * sum
    };
    let mut h = 0.5;
    let mut prev = estimate(h);
    for _ in 0..8 {
        h *= 0.5;
        let cur = estimate(h);
        if (cur - prev).abs() <= rel_tol * cur.abs() {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// `∬ |x − y|^(−α)` over `[a, a + la] × [a + la + gap, a + la + gap + lb]`
/// by nested tanh-sinh; the distance `y − x` is assembled from endpoint
/// distances so touching intervals are resolved.
pub fn pair_weight_oracle(la: f64, lb: f64, gap: f64, alpha: f64) -> f64 {
    tanh_sinh(0.0, la, 1e-13, |_, _, x_to_right| {
        let delta = gap + x_to_right;
        tanh_sinh(0.0, lb, 1e-13, |_, y_to_left, _| (delta + y_to_left).powf(-alpha))
    })
}

/// `∫_I ∫_{cut}^{∞} |x − y|^(−α)` for an interval of length `len` whose near
/// end lies `near` before the cut. The half-line is mapped by `y = cut + t/(1−t)`.
pub fn tail_weight_oracle(len: f64, near: f64, alpha: f64) -> f64 {
    tanh_sinh(0.0, len, 1e-13, |_, _, x_to_cut_side| {
        let delta = near + x_to_cut_side;
        tanh_sinh(0.0, 1.0, 1e-13, |_, t, one_minus_t| {
            let s = t / one_minus_t;
            (delta + s).powf(-alpha) / (one_minus_t * one_minus_t)
        })
    })
}

pub fn uniform_setup(
    n_interior: usize,
    p: f64,
    s: f64,
    lambda: f64,
    nl: Nonlinearity,
) -> ProblemConfig {
    let mesh = Arc::new(
        build_mesh(0.0, 1.0, n_interior, (n_interior / 5).max(4), 0.5, Grading::Uniform).unwrap(),
    );
    let w = Arc::new(assemble_weights(&mesh, p, s).unwrap());
    ProblemConfig::new(p, s, lambda, mesh, w, nl).unwrap()
}

pub fn mesh_and_weights(n_interior: usize, p: f64, s: f64, grading: Grading) -> (DomainMesh, KernelWeights) {
    let mesh = build_mesh(0.0, 1.0, n_interior, (n_interior / 5).max(4), 0.5, grading).unwrap();
    let w = assemble_weights(&mesh, p, s).unwrap();
    (mesh, w)
}

/// Relative variation `(max − min) / max|·|` of a slice.
pub fn relative_variation(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
    (hi - lo) / hi.abs().max(lo.abs())
}
