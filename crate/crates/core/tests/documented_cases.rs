mod common;

use common::uniform_setup;
use fracneum::critical::{classify, SignClass};
use fracneum::energy::{evaluate, gagliardo_p, lp_interior, norm_x, weak_residual, GridFunction, Kind};
use fracneum::kernel::{assemble_weights, pair_weight, tail_weight, Side};
use fracneum::mesh::{build_mesh, CellTag, Grading, Interval};
use fracneum::neumann::{exterior_extend, neumann_residual};
use fracneum::nonlinearity::Nonlinearity;
use fracneum::propcheck::check_gradient_fd;
use fracneum::spectrum::{cone_test, rayleigh, ConeClass};
use fracneum::Error;

fn iv(lo: f64, hi: f64) -> Interval {
    Interval::new(lo, hi)
}

#[test]
fn uniform_partitions() {
    let m = build_mesh(0.0, 1.0, 4, 2, 1.0, Grading::Uniform).unwrap();
    assert_eq!(m.n_cells(), 8);
    for k in 0..m.n_cells() {
        let want = if m.tag(k) == CellTag::Interior { 0.25 } else { 0.5 };
        assert!((m.cell_measure(k) - want).abs() < 1e-15);
    }
    let m = build_mesh(0.0, 1.0, 1, 1, 0.5, Grading::Uniform).unwrap();
    let cells = m.cells();
    assert_eq!(cells.len(), 3);
    assert_eq!((cells[0].lo, cells[0].hi), (-0.5, 0.0));
    assert_eq!((cells[1].lo, cells[1].hi), (0.0, 1.0));
    assert_eq!((cells[2].lo, cells[2].hi), (1.0, 1.5));
}

#[test]
fn geometric_interior_widths_halve_toward_the_boundary() {
    let m = build_mesh(0.0, 2.0, 8, 4, 2.0, Grading::Geometric(0.5)).unwrap();
    // each half carries widths w, w/2, w/4, w/8 from the centre outward
    let w = 1.0 / (1.0 + 0.5 + 0.25 + 0.125);
    let half = [w / 8.0, w / 4.0, w / 2.0, w];
    let widths: Vec<f64> = m.interior_cells().iter().map(|c| c.len()).collect();
    for i in 0..4 {
        assert!((widths[i] - half[i]).abs() < 1e-14, "{widths:?}");
        assert!((widths[7 - i] - half[i]).abs() < 1e-14, "{widths:?}");
    }
}

#[test]
fn invalid_mesh_counts_name_the_field() {
    match build_mesh(0.0, 1.0, 0, 2, 1.0, Grading::Uniform) {
        Err(Error::Parameter { .. }) => {}
        other => panic!("{other:?}"),
    }
    assert!(build_mesh(0.0, 1.0, 3, 2, -1.0, Grading::Uniform).is_err());
}

#[test]
fn pair_weight_reference_values() {
    let w = pair_weight(iv(0.0, 1.0), iv(2.0, 3.0), 1.5).unwrap();
    let exact = 4.0 * (2.0 * 2f64.sqrt() - 3f64.sqrt() - 1.0);
    assert!((w - exact).abs() <= 1e-14 * exact);
    let w = pair_weight(iv(0.0, 1.0), iv(2.0, 3.0), 2.0).unwrap();
    assert!((w - (4.0f64 / 3.0).ln()).abs() <= 1e-15);
    for alpha in [1.2, 2.0, 2.9] {
        assert_eq!(pair_weight(iv(0.0, 1.0), iv(1.0, 1.0), alpha).unwrap(), 0.0);
    }
    assert!(matches!(pair_weight(iv(0.0, 1.0), iv(0.5, 2.0), 1.5), Err(Error::Domain(_))));
    assert!(matches!(pair_weight(iv(0.0, 1.0), iv(1.0, 2.0), 2.2), Err(Error::Domain(_))));
    assert!(matches!(pair_weight(iv(0.0, 1.0), iv(2.0, 3.0), 1.0), Err(Error::Parameter { .. })));
}

#[test]
fn tail_weight_reference_values() {
    let w = tail_weight(iv(0.0, 1.0), 2.0, Side::Right, 2.0).unwrap();
    assert!((w - 2f64.ln()).abs() <= 1e-15);
    let w = tail_weight(iv(0.0, 1.0), 2.0, Side::Right, 1.5).unwrap();
    assert!((w - 4.0 * (2f64.sqrt() - 1.0)).abs() <= 1e-14);
    let mut last = f64::INFINITY;
    for d in [1.0, 10.0, 100.0, 1e4, 1e8] {
        let w = tail_weight(iv(0.0, 1.0), 1.0 + d, Side::Right, 1.7).unwrap();
        assert!(w < last);
        last = w;
    }
    assert!(last < 1e-5);
    assert!(matches!(tail_weight(iv(0.0, 1.0), 1.0, Side::Right, 1.5), Err(Error::Domain(_))));
}

#[test]
fn minimal_mesh_weights_respect_the_interaction_region() {
    let m = build_mesh(0.0, 1.0, 1, 1, 0.5, Grading::Uniform).unwrap();
    let w = assemble_weights(&m, 2.0, 0.3).unwrap();
    assert_eq!(w.effective(0, 2), 0.0);
    assert!(w.pair(0, 1) > 0.0 && w.pair(1, 2) > 0.0);
    assert!(w.tail(1, Side::Left) > 0.0 && w.tail(1, Side::Right) > 0.0);
}

#[test]
fn bisected_pairs_sum_to_the_parent() {
    for alpha in [1.3, 2.0, 2.7] {
        let a = iv(0.0, 0.4);
        let b = iv(0.7, 1.3);
        let (b1, b2) = b.midpoint_split();
        let (a1, a2) = a.midpoint_split();
        let parent = pair_weight(a, b, alpha).unwrap();
        let children: f64 = [(a1, b1), (a1, b2), (a2, b1), (a2, b2)]
            .iter()
            .map(|&(x, y)| pair_weight(x, y, alpha).unwrap())
            .sum();
        assert!((parent - children).abs() <= 1e-12 * parent);
    }
}

#[test]
fn seminorm_and_norm_cases() {
    let m = build_mesh(0.0, 1.0, 1, 1, 0.5, Grading::Uniform).unwrap();
    let w = assemble_weights(&m, 3.0, 0.3).unwrap();
    // values (0, 1, 1): only the left interaction differs, counted twice
    let u = GridFunction::new(&m, vec![0.0, 1.0, 1.0]).unwrap();
    let semi = gagliardo_p(&w, &u, 3.0).unwrap();
    assert!((semi - 2.0 * w.effective(0, 1)).abs() <= 1e-15 * semi);

    let cfg = uniform_setup(12, 2.5, 0.4, 0.0, Nonlinearity::zero(2.5));
    let one = GridFunction::constant(&cfg.mesh, 1.0);
    assert!((norm_x(&cfg.weights, &one, &cfg.mesh, 2.5).unwrap() - 1.0).abs() < 1e-14);
    assert_eq!(norm_x(&cfg.weights, &GridFunction::zeros(&cfg.mesh), &cfg.mesh, 2.5).unwrap(), 0.0);
    let r = GridFunction::from_fn(&cfg.mesh, |x| (11.0 * x).sin());
    let lp = lp_interior(&cfg.mesh, &r, 2.5).unwrap().powf(1.0 / 2.5);
    assert!(norm_x(&cfg.weights, &r, &cfg.mesh, 2.5).unwrap() >= lp);
}

#[test]
fn energy_and_weak_form_cases() {
    let cfg = uniform_setup(15, 2.0, 0.4, 1.0, Nonlinearity::zero(2.0));
    let c = 1.7;
    let (value, grad) = evaluate(Kind::I, &GridFunction::constant(&cfg.mesh, c), &cfg).unwrap();
    assert!((value + c * c / 2.0).abs() < 1e-14);
    for k in cfg.mesh.interior_range() {
        // only the local term -λ m c remains
        assert!((grad.values[k] + cfg.mesh.cell_measure(k) * c).abs() < 1e-14);
    }
    let u = GridFunction::from_fn(&cfg.mesh, |x| x * x);
    assert_eq!(weak_residual(&u, &GridFunction::zeros(&cfg.mesh), &cfg).unwrap(), 0.0);
    let flat = uniform_setup(15, 2.6, 0.4, 0.0, Nonlinearity::zero(2.6));
    let v = GridFunction::from_fn(&flat.mesh, |x| (4.0 * x).cos());
    assert_eq!(weak_residual(&GridFunction::constant(&flat.mesh, -0.3), &v, &flat).unwrap(), 0.0);
}

#[test]
fn gradient_cases() {
    let cfg = uniform_setup(25, 2.7, 0.4, 0.2, Nonlinearity::pure_power(1.0, 3.5, 2.7).unwrap());
    let u = GridFunction::from_fn(&cfg.mesh, |x| 0.4 + (3.0 * x).sin());
    assert!(check_gradient_fd(Kind::I, &u, &cfg, 1e-6).unwrap().max_rel_error < 1e-6);

    let cfg = uniform_setup(25, 2.0, 0.4, 0.2, Nonlinearity::pure_power(1.0, 3.0, 2.0).unwrap());
    let u = GridFunction::from_fn(&cfg.mesh, |x| (5.0 * x).cos() + 0.2);
    assert!(check_gradient_fd(Kind::I, &u, &cfg, 1e-6).unwrap().max_rel_error < 1e-7);

    let cfg = uniform_setup(20, 1.5, 0.4, 0.2, Nonlinearity::pure_power(1.0, 3.0, 1.5).unwrap());
    let u = GridFunction::from_fn(&cfg.mesh, |x| if x < 0.5 { 0.7 } else { 0.2 + x });
    let chk = check_gradient_fd(Kind::I, &u, &cfg, 1e-6).unwrap();
    assert!(!chk.excluded.is_empty());
    assert!(chk.max_rel_error < 1e-6);
}

#[test]
fn extension_cases() {
    let m = build_mesh(0.0, 1.0, 10, 3, 0.5, Grading::Uniform).unwrap();
    let w = assemble_weights(&m, 1.7, 0.4).unwrap();
    let c = GridFunction::constant(&m, 0.8);
    assert!(exterior_extend(&c, &m, &w, 1.7).unwrap().values.iter().all(|&v| v == 0.8));
    assert_eq!(neumann_residual(&c, &m, &w, 1.7).unwrap(), 0.0);

    let u = GridFunction::from_fn(&m, |x| (6.0 * x).sin());
    let e = exterior_extend(&u, &m, &w, 1.7).unwrap();
    assert!(neumann_residual(&e, &m, &w, 1.7).unwrap() <= 1e-12);
    let k = m.exterior_indices().next().unwrap();
    let mut bumped = e.values.clone();
    bumped[k] += 1e-3;
    let bumped = GridFunction::new(&m, bumped).unwrap();
    assert!(neumann_residual(&bumped, &m, &w, 1.7).unwrap() > 0.0);
}

#[test]
fn spectral_cases() {
    let cfg = uniform_setup(16, 2.0, 0.5, 0.0, Nonlinearity::zero(2.0));
    let (m, w) = (&cfg.mesh, &cfg.weights);
    let c = GridFunction::constant(m, 2.0);
    assert_eq!(rayleigh(&c, w, m, 2.0).unwrap(), 0.0);
    assert_eq!(cone_test(&c, 0.0, 5.0, w, m, 2.0).unwrap(), ConeClass::InCMinus);
    assert!(matches!(rayleigh(&GridFunction::zeros(m), w, m, 2.0), Err(Error::Domain(_))));
    assert!(fracneum::spectrum::eig_p2(m, w, 17, 2.0).is_err());
}

#[test]
fn sign_classes_of_simple_states() {
    let cfg = uniform_setup(16, 2.0, 0.5, 0.0, Nonlinearity::zero(2.0));
    let one = classify(&GridFunction::constant(&cfg.mesh, 1.0), Kind::I, &cfg).unwrap();
    assert_eq!(one.sign_class, SignClass::Positive);
    assert_eq!(one.grad_norm, 0.0);
    let zero = classify(&GridFunction::zeros(&cfg.mesh), Kind::I, &cfg).unwrap();
    assert_eq!(zero.sign_class, SignClass::Zero);
}
