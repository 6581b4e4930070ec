use super::*;
use crate::catalog::{get_entry, list_entries};
use crate::geometry::{frame_at, parse_structure, sample_points, GeometryStructure};
use crate::tensor::{Matrix, MaxAbs};

fn entry(name: &str) -> GeometryStructure {
    get_entry(name).unwrap().structure
}

fn frame(s: &GeometryStructure, p: &[f64]) -> PointFrame<f64> {
    frame_at(s, p).unwrap()
}

fn polar_like() -> GeometryStructure {
    parse_structure(
        r#"{"name": "polar", "alpha": -1, "epsilon": 1, "dimension": 2,
            "domain": [[1, 3], [-1, 1]],
            "metric": [["1", "0"], ["0", "x1^2"]],
            "J": [["0", "-x1"], ["1/x1", "0"]]}"#,
    )
    .unwrap()
}

// Almost Hermitian structure on R^4 whose J is the standard one rotated in the
// (e2, e3) plane by the angle x1; J is not integrable.
fn rotated_hermitian() -> GeometryStructure {
    parse_structure(
        r#"{"name": "rotated", "geometry": "hermitian", "alpha": -1, "epsilon": 1, "dimension": 4,
            "domain": [[-1, 1], [-1, 1], [-1, 1], [-1, 1]],
            "metric": [["1","0","0","0"],["0","1","0","0"],["0","0","1","0"],["0","0","0","1"]],
            "J": [["0", "-cos(x1)", "-sin(x1)", "0"],
                  ["cos(x1)", "0", "0", "sin(x1)"],
                  ["sin(x1)", "0", "0", "-cos(x1)"],
                  ["0", "-sin(x1)", "cos(x1)", "0"]]}"#,
    )
    .unwrap()
}

// ∇_i J = ∂_i J + [Γ_i, J] with (Γ_i)^k_l = Γ^k_il, computed with matrix products.
fn nabla_j_by_commutator(gamma: &ConnectionCoeffs<f64>, f: &PointFrame<f64>) -> Tensor12<f64> {
    let n = f.dim();
    let mut out = Tensor12::zeros(n);
    for i in 0..n {
        let gi = Matrix::from_fn(n, |k, l| gamma.gamma(k, i, l));
        let dji = Matrix::from_fn(n, |k, j| f.dj[(k, i, j)]);
        let m = dji.add(&gi.matmul(&f.j)).sub(&f.j.matmul(&gi));
        for k in 0..n {
            for j in 0..n {
                out[(k, i, j)] = m[(k, j)];
            }
        }
    }
    out
}

#[test]
fn levi_civita_flat_is_zero() {
    let s = entry("flat_norden");
    let f = frame(&s, &[0.2, 0.1, -0.3, 0.9]);
    assert_eq!(levi_civita(&f).max_abs(), 0.0);
}

#[test]
fn levi_civita_polar_hand_values() {
    let s = polar_like();
    let f = frame(&s, &[2.0, 0.0]);
    let lc = levi_civita(&f);
    assert!((lc.gamma(0, 1, 1) + 2.0).abs() <= 1e-12);
    assert!((lc.gamma(1, 0, 1) - 0.5).abs() <= 1e-12);
    assert!((lc.gamma(1, 1, 0) - 0.5).abs() <= 1e-12);
    for (k, i, j) in [(0, 0, 0), (0, 0, 1), (0, 1, 0), (1, 0, 0), (1, 1, 1)] {
        assert_eq!(lc.gamma(k, i, j), 0.0);
    }
}

#[test]
fn levi_civita_conformal_at_origin() {
    let s = entry("hermitian_conformal_4d");
    let f = frame(&s, &[0.0; 4]);
    let lc = levi_civita(&f);
    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let expected = d(i, 0) * d(k, j) + d(j, 0) * d(k, i) - d(k, 0) * d(i, j);
                assert!((lc.gamma(k, i, j) - expected).abs() <= 1e-14, "{k}{i}{j}");
            }
        }
    }
}

#[test]
fn levi_civita_is_metric_and_torsion_free() {
    for name in list_entries() {
        let s = entry(name);
        for p in sample_points(s.chart(), 10, 4) {
            let f = frame(&s, &p);
            let lc = levi_civita(&f);
            assert!(nabla_g_defect(&lc, &f) <= 1e-10, "{name}");
            assert!(torsion(&lc).max_abs() <= 1e-10, "{name}");
        }
    }
}

#[test]
fn nabla_j_two_contraction_orders_agree() {
    let s = entry("hermitian_conformal_4d");
    let f = frame(&s, &[0.0; 4]);
    let lc = levi_civita(&f);
    let a = nabla_j(&lc, &f);
    let b = nabla_j_by_commutator(&lc, &f);
    assert!(a.max_abs() > 0.5);
    assert!(a.sub(&b).max_abs() <= 1e-14);

    let r = rotated_hermitian();
    for p in sample_points(r.chart(), 5, 2) {
        let f = frame(&r, &p);
        let g = synthetic_connection(&f, 9);
        assert!(
            nabla_j(&g, &f)
                .sub(&nabla_j_by_commutator(&g, &f))
                .max_abs()
                <= 1e-13
        );
    }
}

#[test]
fn constant_structure_with_zero_connection_is_parallel() {
    let s = entry("flat_para");
    let f = frame(&s, &[0.5, 0.5, 0.5, 0.5]);
    let zero = ConnectionCoeffs::new(f.point.clone(), Array3::zeros(4), Provenance::Synthetic);
    assert_eq!(nabla_j(&zero, &f).max_abs(), 0.0);
    assert_eq!(j_star(&zero, &f).max_abs(), 0.0);
}

#[test]
fn torsion_examples() {
    let mut c = Array3::zeros(3);
    c[(0, 0, 1)] = 1.0;
    let t = torsion(&ConnectionCoeffs::new(
        vec![0.0; 3],
        c,
        Provenance::Synthetic,
    ));
    assert_eq!(t[(0, 0, 1)], 1.0);
    assert_eq!(t[(0, 1, 0)], -1.0);
    assert_eq!(t.max_abs(), 1.0);

    let s = entry("norden_4d");
    let f = frame(&s, &[0.1, 0.2, 0.3, 0.4]);
    let t = torsion(&synthetic_connection(&f, 3));
    assert_eq!(t.lower_symmetry_defect(), 0.0);
}

#[test]
fn j_star_fixes_adapted_connections() {
    let s = entry("hermitian_conformal_4d");
    let f = frame(&s, &[0.3, -0.1, 0.2, 0.7]);
    let c0 = first_canonical(&f);
    assert!(j_star(&c0, &f).distance(&c0) <= 1e-12);
}

#[test]
fn j_star_is_involutive_on_norden() {
    let s = entry("norden_4d");
    for p in sample_points(s.chart(), 10, 1) {
        let f = frame(&s, &p);
        let g = synthetic_connection(&f, 17);
        assert!(j_star(&j_star(&g, &f), &f).distance(&g) <= 1e-10);
    }
    let r = rotated_hermitian();
    for p in sample_points(r.chart(), 10, 1) {
        let f = frame(&r, &p);
        let g = synthetic_connection(&f, 17);
        assert!(j_star(&j_star(&g, &f), &f).distance(&g) <= 1e-10);
    }
}

#[test]
fn projection_properties() {
    for name in [
        "hermitian_conformal_4d",
        "para_hermitian_4d",
        "norden_4d",
        "product_riemannian_4d",
    ] {
        let s = entry(name);
        for p in sample_points(s.chart(), 5, 8) {
            let f = frame(&s, &p);
            let g = synthetic_connection(&f, 5);
            let pg = project(&g, &f);
            assert!(nabla_j(&pg, &f).max_abs() <= 1e-9, "{name}");
            assert!(project(&pg, &f).distance(&pg) <= 1e-10, "{name}");
            assert!(pg.distance(&g.shifted(&s_tensor(&g, &f), Provenance::Combo)) <= 1e-10);
            assert!(project(&levi_civita(&f), &f).distance(&first_canonical(&f)) <= 1e-10);
        }
    }
}

#[test]
fn s_tensor_examples() {
    let s = entry("hermitian_conformal_4d");
    let f = frame(&s, &[0.0; 4]);
    let lc = levi_civita(&f);
    let st = s_tensor(&lc, &f);
    assert!(st.sub(&first_canonical(&f).difference(&lc)).max_abs() <= 1e-15);
    // metric connection: lowered S is antisymmetric in its last two slots
    assert!(metric_compatibility_defect(&st, &f) <= 1e-14);
    assert!(st.max_abs() > 0.1);

    let c0 = first_canonical(&f);
    assert!(s_tensor(&c0, &f).max_abs() <= 1e-15);
}

#[test]
fn first_canonical_is_adapted_and_metric() {
    for name in list_entries() {
        let s = entry(name);
        for p in sample_points(s.chart(), 5, 3) {
            let f = frame(&s, &p);
            let c0 = first_canonical(&f);
            assert!(nabla_g_defect(&c0, &f) <= 1e-10, "{name}");
            assert!(nabla_j(&c0, &f).max_abs() <= 1e-10, "{name}");
            if name.starts_with("flat_") {
                assert_eq!(c0.distance(&levi_civita(&f)), 0.0);
            }
        }
    }
    let s = entry("hermitian_conformal_4d");
    let f = frame(&s, &[0.0; 4]);
    assert!(first_canonical(&f).distance(&levi_civita(&f)) > 0.1);
}

#[test]
fn chern_on_flat_hermitian_is_zero() {
    let s = entry("flat_hermitian");
    let f = frame(&s, &[0.1, 0.1, 0.1, 0.1]);
    let r = solve_chern(&f);
    assert_eq!(r.status, SolveStatus::Unique);
    assert_eq!(r.kernel_dim, 0);
    assert!(r.solution.max_abs() <= 1e-15);
}

#[test]
fn chern_certificate_on_hermitian_conformal() {
    let s = entry("hermitian_conformal_4d");
    for p in sample_points(s.chart(), 20, 0) {
        let f = frame(&s, &p);
        let r = solve_chern(&f);
        assert!(r.is_unique());
        assert!(r.residual <= 1e-9);
        let c = &r.solution;
        assert!(nabla_g_defect(c, &f) <= 1e-9);
        assert!(nabla_j(c, &f).max_abs() <= 1e-9);
        assert!(torsion_type_defect(&torsion(c), &f) <= 1e-9);
    }
}

#[test]
fn chern_does_not_exist_when_alpha_epsilon_is_one() {
    for name in ["product_riemannian_4d", "norden_4d"] {
        let s = entry(name);
        for p in sample_points(s.chart(), 5, 0) {
            let r = solve_chern(&frame(&s, &p));
            assert_ne!(r.status, SolveStatus::Unique, "{name}");
            assert!(r.diagnostic.is_some());
        }
    }
}

#[test]
fn chern_exists_for_non_integrable_almost_hermitian() {
    let s = rotated_hermitian();
    for p in sample_points(s.chart(), 10, 6) {
        let f = frame(&s, &p);
        let r = solve_chern(&f);
        assert!(r.is_unique(), "{:?}", r.diagnostic);
        assert!(torsion_type_defect(&torsion(&r.solution), &f) <= 1e-9);
    }
}

#[test]
fn skew_solve_examples() {
    let s = entry("flat_hermitian");
    let r = solve_skew(&frame(&s, &[0.0; 4]));
    assert!(r.is_unique());
    assert_eq!(r.solution.max_abs(), 0.0);

    let s = entry("hermitian_conformal_4d");
    for p in sample_points(s.chart(), 10, 2) {
        let f = frame(&s, &p);
        let r = solve_skew(&f);
        assert!(r.is_unique());
        assert!(r.solution.max_abs() > 1e-3);
        assert!(r.solution.tensor().antisymmetry_defect() == 0.0);
        // independent re-check of the constraints on the induced connection
        let plus = nabla_plus_minus(&f, &r.solution, SkewSign::Plus);
        assert!(nabla_g_defect(&plus, &f) <= 1e-9);
        assert!(nabla_j(&plus, &f).max_abs() <= 1e-9);
    }
}

#[test]
fn skew_solve_is_inconsistent_for_non_integrable_structure() {
    let s = rotated_hermitian();
    for p in sample_points(s.chart(), 5, 0) {
        let r = solve_skew(&frame(&s, &p));
        assert_eq!(r.status, SolveStatus::None);
        assert!(r.residual > 1e-6);
    }
}

#[test]
fn plus_minus_construction() {
    let s = entry("hermitian_conformal_4d");
    let f = frame(&s, &[0.4, 0.3, -0.5, 0.1]);
    let lc = levi_civita(&f);
    let zero = TorsionForm::zero(4);
    assert_eq!(
        nabla_plus_minus(&f, &zero, SkewSign::Plus).distance(&lc),
        0.0
    );
    assert_eq!(
        nabla_plus_minus(&f, &zero, SkewSign::Minus).distance(&lc),
        0.0
    );

    let h = solve_skew(&f).solution;
    let plus = nabla_plus_minus(&f, &h, SkewSign::Plus);
    let minus = nabla_plus_minus(&f, &h, SkewSign::Minus);
    let mid = affine_combine(&[(0.5, &plus), (0.5, &minus)]).unwrap();
    assert!(mid.distance(&lc) <= 1e-15);
    assert!(nabla_g_defect(&minus, &f) <= 1e-10);
    // torsion of ∇⁺ lowered is H
    let lowered = lower_first(&torsion(&plus), &f.g);
    assert!(lowered.sub(h.tensor()).max_abs() <= 1e-12);
}

#[test]
fn affine_combination_rules() {
    let s = entry("hermitian_conformal_4d");
    let f = frame(&s, &[0.1, -0.2, 0.3, -0.4]);
    let a = synthetic_connection(&f, 1);
    let b = synthetic_connection(&f, 2);
    assert_eq!(affine_combine(&[(1.0, &a)]).unwrap().distance(&a), 0.0);
    assert!(matches!(
        affine_combine(&[(0.5, &a), (0.6, &b)]),
        Err(ConnectionError::WeightsNotAffine { .. })
    ));
    assert!(matches!(
        affine_combine::<f64>(&[]),
        Err(ConnectionError::EmptyCombination)
    ));
    let elsewhere = frame(&s, &[0.0; 4]);
    let c = synthetic_connection(&elsewhere, 1);
    assert!(matches!(
        affine_combine(&[(0.5, &a), (0.5, &c)]),
        Err(ConnectionError::Mismatch)
    ));

    // J* preserves barycentric combinations
    let (l1, l2) = (1.7, -0.7);
    let combo = affine_combine(&[(l1, &a), (l2, &b)]).unwrap();
    let lhs = j_star(&combo, &f);
    let rhs = affine_combine(&[(l1, &j_star(&a, &f)), (l2, &j_star(&b, &f))]).unwrap();
    assert!(lhs.distance(&rhs) <= 1e-12);
}

#[test]
fn canonical_line_and_bismut() {
    let s = entry("hermitian_conformal_4d");
    let f = frame(&s, &[0.2, 0.2, 0.2, 0.2]);
    let c0 = first_canonical(&f);
    let cc = solve_chern(&f).solution;
    assert_eq!(canonical_line(&c0, &cc, 0.0).unwrap().distance(&c0), 0.0);
    assert_eq!(canonical_line(&c0, &cc, 1.0).unwrap().distance(&cc), 0.0);
    assert_eq!(
        canonical_line(&c0, &cc, 0.5).unwrap().provenance(),
        Provenance::Line(0.5)
    );

    let b = bismut(&c0, &cc).unwrap();
    assert!(b.distance(&canonical_line(&c0, &cc, -1.0).unwrap()) <= 1e-15);
    let mid = affine_combine(&[(0.5, &b), (0.5, &cc)]).unwrap();
    assert!(mid.distance(&c0) <= 1e-15);
    let plus = nabla_plus_minus(&f, &solve_skew(&f).solution, SkewSign::Plus);
    assert!(b.distance(&plus) <= 1e-9);

    let flat = entry("flat_hermitian");
    let f = frame(&flat, &[0.0; 4]);
    let b = bismut(&first_canonical(&f), &solve_chern(&f).solution).unwrap();
    assert!(b.max_abs() <= 1e-15);
}

#[test]
fn synthetic_metric_connections_are_metric() {
    for name in list_entries() {
        let s = entry(name);
        for (i, p) in sample_points(s.chart(), 5, 12).iter().enumerate() {
            let f = frame(&s, p);
            let g = synthetic_metric_connection(&f, i as u64);
            assert!(nabla_g_defect(&g, &f) <= 1e-10, "{name}");
            assert!(nabla_g_defect(&project(&g, &f), &f) <= 1e-9, "{name}");
            assert!(
                metric_compatibility_defect(&s_tensor(&g, &f), &f) <= 1e-10,
                "{name}"
            );
        }
    }
}

#[test]
fn torsion_form_components_round_trip() {
    let h = TorsionForm::from_components(4, &[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(h.components(), vec![1.0, 2.0, 3.0, 4.0]);
    assert_eq!(h.tensor().antisymmetry_defect(), 0.0);
    assert_eq!(h.tensor()[(2, 1, 0)], -1.0);
    assert_eq!(h.tensor()[(3, 1, 2)], 4.0);
    let mut bad = h.tensor().clone();
    bad[(0, 1, 2)] = 5.0;
    assert!(matches!(
        TorsionForm::new(bad),
        Err(ConnectionError::NotSkew { .. })
    ));
}

#[test]
fn f32_frame_agrees_with_f64() {
    let s = entry("hermitian_conformal_4d");
    let p = [0.25, -0.5, 0.125, 0.75];
    let f64_frame = frame(&s, &p);
    let f32_frame: PointFrame<f32> = frame_at(&s, &p.map(|x| x as f32)).unwrap();
    let a = first_canonical(&f64_frame);
    let b = first_canonical(&f32_frame);
    for (x, y) in a.coeffs().as_slice().iter().zip(b.coeffs().as_slice()) {
        assert!((x - *y as f64).abs() <= 1e-5);
    }
    let c = project(&levi_civita(&f32_frame), &f32_frame);
    assert!(c.distance(&b) <= 1e-5);
}
