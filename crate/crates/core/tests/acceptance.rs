//! Acceptance suite. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{pair_weight_oracle, relative_variation, tail_weight_oracle, uniform_setup};
use fracneum::critical::{self, classify, weak_residual_check, SignClass, SolverOptions};
use fracneum::energy::{energy, GridFunction, Kind, ProblemConfig};
use fracneum::kernel::{assemble_weights, pair_weight, tail_weight, Side};
use fracneum::mesh::{build_mesh, Grading, Interval};
use fracneum::neumann::{exterior_extend, neumann_residual};
use fracneum::nonlinearity::{Forcing, Nonlinearity};
use fracneum::propcheck::{check_gradient_fd, check_monotonicity, check_pointwise_inequalities};
use fracneum::spectrum::{condensed_operator, eig_p2, eigenvalues_p2};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn first_eigenvalue() -> Outcome {
    let mut worst_lambda: f64 = 0.0;
    let mut worst_var: f64 = 0.0;
    let mut cases = 0;
    for n in [25, 50, 100, 200, 400] {
        for s in [0.25, 0.5, 0.75] {
            for grading in [Grading::Uniform, Grading::Geometric(0.98)] {
                let mesh = build_mesh(0.0, 1.0, n, (n / 5).max(4), 0.5, grading).map_err(|e| e.to_string())?;
                let w = assemble_weights(&mesh, 2.0, s).map_err(|e| e.to_string())?;
                let pair = &eig_p2(&mesh, &w, 1, 2.0).map_err(|e| e.to_string())?[0];
                worst_lambda = worst_lambda.max(pair.lambda.abs());
                worst_var = worst_var.max(relative_variation(&pair.phi.values));
                cases += 1;
            }
        }
    }
    verdict(
        worst_lambda <= 1e-9 && worst_var <= 1e-8,
        format!("{cases} meshes (uniform and geometric 0.98), max |lambda_1| {worst_lambda:.2e}, max relative variation {worst_var:.2e}"),
    )
}

fn quadrature_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for alpha in [1.3, 1.5, 2.0, 2.5] {
        for i in 0..100 {
            let lo = rng.random_range(-2.0..2.0);
            let la = 10f64.powf(rng.random_range(-2.0..0.3));
            let lb = 10f64.powf(rng.random_range(-2.0..0.3));
            let touching = alpha < 2.0 && i % 4 == 0;
            let gap = if touching { 0.0 } else { 10f64.powf(rng.random_range(-3.0..0.3)) };
            let a = Interval::new(lo, lo + la);
            let b = Interval::new(lo + la + gap, lo + la + gap + lb);
            let exact = pair_weight(a, b, alpha).map_err(|e| e.to_string())?;
            let q = pair_weight_oracle(la, lb, gap, alpha);
            worst = worst.max((exact - q).abs() / q.abs());

            let near = 10f64.powf(rng.random_range(-3.0..0.3));
            let side = if i % 2 == 0 { Side::Right } else { Side::Left };
            let cut = match side {
                Side::Right => a.hi + near,
                Side::Left => a.lo - near,
            };
            let exact = tail_weight(a, cut, side, alpha).map_err(|e| e.to_string())?;
            let q = tail_weight_oracle(la, near, alpha);
            worst = worst.max((exact - q).abs() / q.abs());
            count += 2;
        }
    }
    verdict(worst <= 1e-10, format!("{count} weights, max relative error {worst:.2e}"))
}

fn inequality_sweep() -> Outcome {
    let rep = check_pointwise_inequalities(100_000, (1.01, 10.0), 42).map_err(|e| e.to_string())?;
    let worst = rep.counts.iter().map(|c| c.worst_slack).fold(f64::INFINITY, f64::min);
    verdict(
        rep.total_violations == 0,
        format!(
            "{} samples x {} inequalities, {} violations, worst scaled slack {worst:.2e}",
            rep.n_samples,
            rep.counts.len(),
            rep.total_violations
        ),
    )
}

fn gradient_consistency() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let cfg = uniform_setup(40, p, 0.4, 0.3, Nonlinearity::pure_power(1.0, p + 1.5, p).unwrap());
        let u = GridFunction::from_fn(&cfg.mesh, |x| 0.3 + (2.3 * x).sin() + 0.4 * (5.1 * x).cos() - 0.9 * x);
        for kind in [Kind::I, Kind::EPlus, Kind::EMinus] {
            let chk = check_gradient_fd(kind, &u, &cfg, 1e-6).map_err(|e| e.to_string())?;
            worst = worst.max(chk.max_rel_error);
            if !chk.excluded.is_empty() {
                notes.push(format!("p={p} {} excluded {:?}", kind.as_str(), chk.excluded));
            }
        }
    }
    let excluded = if notes.is_empty() { "none".to_string() } else { notes.join("; ") };
    verdict(worst < 1e-6, format!("max relative error {worst:.2e}; excluded cells: {excluded}"))
}

/// Interior Schur complement of the matrix of `u ↦ [u]²`, assembled here
/// from the effective weights as `2(D − W)`.
fn reduced_matrix(cfg: &ProblemConfig) -> DMatrix<f64> {
    let mesh = &cfg.mesh;
    let n = mesh.n_cells();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let w = cfg.weights.effective(i, j);
                l[(i, j)] -= 2.0 * w;
                l[(i, i)] += 2.0 * w;
            }
        }
    }
    let int: Vec<usize> = mesh.interior_range().collect();
    let mut a = DMatrix::<f64>::from_fn(int.len(), int.len(), |r, c| l[(int[r], int[c])]);
    for k in mesh.exterior_indices() {
        let d = l[(k, k)];
        for (r, &i) in int.iter().enumerate() {
            for (c, &j) in int.iter().enumerate() {
                a[(r, c)] -= l[(i, k)] * l[(k, j)] / d;
            }
        }
    }
    a
}

fn coercive_oracle() -> Outcome {
    let forcing = Forcing { c0: 0.3, amp: 1.0, freq: 3.0 };
    let nl = Nonlinearity::affine_decay(1.0, forcing, 2.0).map_err(|e| e.to_string())?;
    let cfg = uniform_setup(60, 2.0, 0.4, 0.0, nl);
    let mesh = cfg.mesh.clone();
    let opts = SolverOptions { coercive: true, tol: 1e-11, ..SolverOptions::default() };
    let rep = critical::minimize(&GridFunction::zeros(&mesh), Kind::I, &cfg, &opts).map_err(|e| e.to_string())?;

    let a = reduced_matrix(&cfg);
    let (own, _) = condensed_operator(&mesh, &cfg.weights).map_err(|e| e.to_string())?;
    let assembly_gap = (&a - &own).amax() / a.amax();
    let m: Vec<f64> = mesh.interior_range().map(|k| mesh.cell_measure(k)).collect();
    let mut sys = 0.5 * a;
    for (r, mk) in m.iter().enumerate() {
        sys[(r, r)] += mk;
    }
    let rhs = DVector::from_iterator(
        m.len(),
        mesh.interior_range().zip(&m).map(|(k, mk)| mk * forcing.eval(mesh.cell_center(k))),
    );
    let exact = sys.cholesky().ok_or("oracle system is not positive definite")?.solve(&rhs);
    let u = rep.solution();
    let err = mesh
        .interior_range()
        .zip(&m)
        .enumerate()
        .map(|(r, (k, mk))| mk * (u.values[k] - exact[r]).powi(2))
        .sum::<f64>()
        .sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let raw = GridFunction::new(&mesh, (0..mesh.n_cells()).map(|_| rng.random_range(-1.0..=1.0)).collect())
        .map_err(|e| e.to_string())?;
    let mut ray = exterior_extend(&raw, &mesh, &cfg.weights, 2.0).map_err(|e| e.to_string())?;
    let pairing: f64 = mesh
        .interior_range()
        .map(|k| mesh.cell_measure(k) * forcing.eval(mesh.cell_center(k)) * ray.values[k])
        .sum();
    if pairing < 0.0 {
        ray = ray.scaled(-1.0);
    }
    let norm = fracneum::energy::norm_x(&cfg.weights, &ray, &mesh, 2.0).map_err(|e| e.to_string())?;
    let mut ratios = Vec::new();
    for t in [8.0, 16.0, 32.0, 64.0, 128.0, 256.0] {
        let e = energy(Kind::I, &ray.scaled(t), &cfg).map_err(|e| e.to_string())?;
        ratios.push(e / (t * norm).powi(2));
    }
    let increasing = ratios.windows(2).all(|r| r[1] > r[0]);
    let positive = ratios.iter().all(|&r| r > 0.0);
    verdict(
        err <= 1e-8 && rep.converged && positive && increasing && assembly_gap <= 1e-12,
        format!(
            "weighted error {err:.2e} ({} iterations), assembly gap {assembly_gap:.1e}, ray quotient {:.8e} -> {:.8e} increasing {increasing}",
            rep.iterations,
            ratios[0],
            ratios[ratios.len() - 1]
        ),
    )
}

fn constant_sign_witness() -> Outcome {
    let lambda = -0.25;
    let cfg = uniform_setup(100, 2.0, 0.4, lambda, Nonlinearity::pure_power(1.0, 4.0, 2.0).unwrap());
    let mesh = cfg.mesh.clone();
    let lambda_2 = eigenvalues_p2(&mesh, &cfg.weights, 2.0).map_err(|e| e.to_string())?[1];
    if !(2.0 * lambda + 1.0 < lambda_2) {
        return Err(format!("bracket violated: 2 lambda + 1 = {} >= lambda_2 = {lambda_2}", 2.0 * lambda + 1.0));
    }
    let profile = GridFunction::from_fn(&mesh, |x| 1.0 + 0.5 * (std::f64::consts::PI * x).cos());
    let mut e = None;
    for k in 0..40 {
        let cand = profile.scaled(2f64.powi(k));
        if energy(Kind::EPlus, &cand, &cfg).map_err(|e| e.to_string())? <= 0.0 {
            e = Some(cand);
            break;
        }
    }
    let e = e.ok_or("no endpoint with nonpositive energy")?;
    let opts = SolverOptions { tol: 1e-9, ..SolverOptions::default() };
    let plus = critical::mountain_pass(&e, Kind::EPlus, &cfg, &opts).map_err(|e| e.to_string())?;
    let minus = critical::mountain_pass(&e.scaled(-1.0), Kind::EMinus, &cfg, &opts).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut parts = Vec::new();
    for (rep, want) in [(&plus, SignClass::Positive), (&minus, SignClass::Negative)] {
        let u = rep.solution();
        let rep = classify(u, rep.kind, &cfg).map_err(|e| e.to_string())?;
        let weak = weak_residual_check(u, &cfg, 50, 9).map_err(|e| e.to_string())?;
        let nres = neumann_residual(u, &mesh, &cfg.weights, 2.0).map_err(|e| e.to_string())?;
        ok &= rep.grad_norm < 1e-6 && rep.energy > 0.0 && rep.sign_class == want && nres < 1e-6 && weak <= 1e-5;
        parts.push(format!(
            "{}: energy {:.6e} grad {:.1e} sign {} neumann {:.1e} weak {:.1e}",
            rep.kind.as_str(),
            rep.energy,
            rep.grad_norm,
            rep.sign_class.as_str(),
            nres,
            weak
        ));
    }
    let odd = plus
        .solution()
        .values
        .iter()
        .zip(&minus.solution().values)
        .fold(0.0f64, |m, (a, b)| m.max((a + b).abs()));
    ok &= odd <= 1e-6;
    parts.push(format!("max |u+ + u-| {odd:.1e}"));
    verdict(ok, parts.join("; "))
}

fn neumann_extension() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut closed_err: f64 = 0.0;
    let mut structural: f64 = 0.0;
    let mut comparison_ok = true;
    let mut constant_ok = true;
    for case in 0..1000 {
        let n = rng.random_range(4..=30);
        let n_ext = rng.random_range(2..=8);
        let radius = rng.random_range(0.1..=1.5);
        let grading = if case % 2 == 0 { Grading::Uniform } else { Grading::Geometric(rng.random_range(0.6..=1.0)) };
        let p = if case % 3 == 0 { 2.0 } else { rng.random_range(1.2..=4.0) };
        let s = rng.random_range(0.1..=0.9);
        let mesh = build_mesh(0.0, 1.0, n, n_ext, radius, grading).map_err(|e| e.to_string())?;
        let w = assemble_weights(&mesh, p, s).map_err(|e| e.to_string())?;
        let nc = mesh.n_cells();
        let u = GridFunction::new(&mesh, (0..nc).map(|_| rng.random_range(-1.0..=1.0)).collect()).unwrap();
        let bump: Vec<f64> = (0..nc).map(|_| rng.random_range(0.0..=0.5)).collect();
        let v = GridFunction::new(&mesh, u.values.iter().zip(&bump).map(|(a, b)| a + b).collect()).unwrap();
        let shift = rng.random_range(-3.0..=3.0);
        let ext = |g: &GridFunction| exterior_extend(g, &mesh, &w, p).map_err(|e| e.to_string());
        let eu = ext(&u)?;
        let ev = ext(&v)?;
        let en = ext(&u.scaled(-1.0))?;
        let es = ext(&u.map(|x| x + shift))?;
        let c = rng.random_range(-2.0..=2.0);
        constant_ok &= ext(&GridFunction::constant(&mesh, c))?.values.iter().all(|&x| x == c);
        for k in mesh.exterior_indices() {
            comparison_ok &= eu.values[k] <= ev.values[k] + 1e-12;
            structural = structural
                .max((en.values[k] + eu.values[k]).abs())
                .max((es.values[k] - eu.values[k] - shift).abs());
            if p == 2.0 {
                let row = w.row(k);
                let (num, den) = mesh
                    .interior_range()
                    .fold((0.0, 0.0), |(a, b), j| (a + row[j] * u.values[j], b + row[j]));
                closed_err = closed_err.max((eu.values[k] - num / den).abs());
            }
        }
    }
    verdict(
        closed_err <= 1e-12 && structural <= 1e-10 && comparison_ok && constant_ok,
        format!(
            "1000 cases, closed-form error {closed_err:.1e}, equivariance defect {structural:.1e}, comparison {comparison_ok}, constants {constant_ok}"
        ),
    )
}

fn monotone_structure() -> Outcome {
    let mut worst = f64::INFINITY;
    for p in [1.5, 2.0, 3.0] {
        let mesh = build_mesh(0.0, 1.0, 30, 6, 0.5, Grading::Geometric(0.85)).map_err(|e| e.to_string())?;
        let w = assemble_weights(&mesh, p, 0.45).map_err(|e| e.to_string())?;
        let rep = check_monotonicity(&mesh, &w, p, 10_000, 11).map_err(|e| e.to_string())?;
        worst = worst.min(rep.min_pairing);
    }
    verdict(worst >= -1e-12, format!("3 x 10000 pairs, min pairing {worst:.3e}"))
}

fn self_convergence() -> Outcome {
    let mut values = Vec::new();
    for n in [25, 50, 100, 200] {
        let cfg = uniform_setup(n, 2.0, 0.5, 0.0, Nonlinearity::zero(2.0));
        values.push(eigenvalues_p2(&cfg.mesh, &cfg.weights, 2.0).map_err(|e| e.to_string())?[1]);
    }
    let gaps: Vec<f64> = values.windows(2).map(|v| (v[1] - v[0]).abs()).collect();
    let decreasing = gaps.windows(2).all(|g| g[1] < g[0]);
    verdict(
        decreasing,
        format!(
            "lambda_2 {}; gaps {}",
            values.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", "),
            gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("first eigenvalue", first_eigenvalue),
        ("quadrature exactness", quadrature_exactness),
        ("inequality sweep", inequality_sweep),
        ("gradient consistency", gradient_consistency),
        ("coercive oracle", coercive_oracle),
        ("constant-sign witness", constant_sign_witness),
        ("neumann extension", neumann_extension),
        ("monotone structure", monotone_structure),
        ("self-convergence", self_convergence),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {} {name}: PASS ({secs:.1}s) {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({secs:.1}s) {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
