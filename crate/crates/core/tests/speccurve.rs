mod common;

use std::f64::consts::PI;

use common::{c, rng};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::Rng;
use tzlab::poly::{eval_real, real_cubic_roots, CubicRoots};
use tzlab::speccurve::*;
use tzlab::Execution;

fn one() -> Complex64 {
    c(1.0, 0.0)
}

/// Random admissible `(u, v, w)`, with `w` kept off the bounds.
fn random_admissible<R: Rng>(r: &mut R) -> (f64, f64, f64) {
    let u = r.random_range(-3.0..3.0);
    let v = u + critical_gap() + r.random_range(0.01..3.0);
    let (lo, hi) = admissible_bounds(u, v);
    let t = r.random_range(0.001..0.999);
    (u, v, lo + t * (hi - lo))
}

fn sign_changes(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> usize {
    let xs: Vec<f64> = (0..=n).map(|i| f(lo + (hi - lo) * i as f64 / n as f64)).collect();
    xs.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
}

#[test]
fn lemma_examples() {
    assert!(admissible(-2.0, 2.0, 0.0).unwrap());
    assert_eq!(admissible_bounds(-2.0, 2.0), (-15.0, 15.0));
    assert!(!admissible(0.0, 1.0, 0.0).unwrap());
    assert!(!admissible(-2.0, 2.0, 15.0).unwrap());
    assert!(!admissible(-2.0, 2.0, -15.0).unwrap());
    // b(v) = -1 exactly on the upper bound
    let b = CurveTypeII::from_critical(-2.0, 2.0, 15.0, one()).unwrap();
    assert_eq!(b.eval(2.0), -1.0);
    assert!(admissible(2.0, 2.0, 0.0).unwrap_err().is_validation());
    assert!(admissible(3.0, 2.0, 0.0).is_err());
}

#[test]
fn circle_check_examples() {
    let b = CurveTypeII::from_critical(-2.0, 2.0, 0.0, one()).unwrap();
    assert_eq!(b.b(), [0.0, -12.0, 0.0, 1.0]);
    assert!(circle_branch_check(&b, 256).unwrap());
    let cube = CurveTypeII::new(one(), [0.0, 0.0, 0.0, 1.0]).unwrap();
    assert!(!circle_branch_check(&cube, 256).unwrap());
    assert!(circle_branch_check(&b, 8).is_err());
}

#[test]
fn curve_type_ii_validation() {
    assert!(CurveTypeII::new(c(1.1, 0.0), [0.0, 0.0, 0.0, 1.0]).is_err());
    assert!(CurveTypeII::new(one(), [1.0, 0.0, 1.0, 0.0]).is_err());
    assert!(CurveTypeII::new(Complex64::from_polar(1.0, 2.0), [0.0, 0.0, 0.0, 1.0]).is_ok());
    let m = CurveTypeII::new(one(), [0.5, -3.0, 0.0, 8.0]).unwrap().monic();
    assert_eq!(m.b()[3], 1.0);
    assert!((m.b()[1] + 1.5).abs() < 1e-15);
}

#[test]
fn type_ii_sextic_for_x3_minus_12x() {
    let b = [0.0, -12.0, 0.0, 1.0];
    let m = hyperelliptic_model(&SpectralCurve::II(CurveTypeII::new(one(), b).unwrap()));
    assert!(m.distinct_roots() && m.warning().is_none());
    let expect = [-1.0, 0.0, 144.0, 0.0, -24.0, 0.0, 1.0];
    for (a, e) in m.coefficients.iter().zip(expect) {
        assert_eq!(*a, c(e, 0.0));
    }
    // six real roots from the two cubic factors
    let mut roots = Vec::new();
    for shift in [1.0, -1.0] {
        match real_cubic_roots(&[shift, -12.0, 0.0, 1.0]) {
            CubicRoots::Three(r) => roots.extend(r),
            other => panic!("{other:?}"),
        }
    }
    roots.sort_by(f64::total_cmp);
    assert!(roots.windows(2).all(|w| w[1] - w[0] > 1e-3));
    let sextic: Vec<f64> = m.coefficients.iter().map(|z| z.re).collect();
    for x in &roots {
        assert!(eval_real(&sextic, *x).abs() < 1e-8);
    }
    // independent count by sign changes
    assert_eq!(sign_changes(|x| eval_real(&sextic, x), -5.0, 5.0, 100_000), 6);
}

#[test]
fn type_i_degenerate_sextic_warns() {
    let z = c(0.0, 0.0);
    let m = hyperelliptic_type_i(&[z, z, z, one()]);
    let expect = [0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0];
    for (a, e) in m.coefficients.iter().zip(expect) {
        assert_eq!(*a, c(e, 0.0));
    }
    assert!(m.repeated_root_degree >= 2);
    assert!(m.warning().unwrap().contains("repeated roots"));
    // a palindromic curve with distinct branch points
    let t = CurveTypeI::new(c(2.0, 0.5), c(-0.3, 1.0)).unwrap();
    let tm = t.hyperelliptic_model();
    assert!(tm.distinct_roots(), "{tm:?}");
    assert!(palindromic_defect(&t.coefficients()) == 0.0);
    assert!(CurveTypeI::from_coefficients([z, z, z, one()]).is_err());
}

#[test]
fn split_examples() {
    let curve = CurveTypeII::new(one(), [0.0, -12.0, 0.0, 1.0]).unwrap();
    let (e1, e2) = elliptic_split(&curve).unwrap();
    assert_eq!(e1.cubic(), [1.0, -12.0, 0.0, 1.0]);
    assert_eq!(e2.cubic(), [-1.0, -12.0, 0.0, 1.0]);
    let disc = -(4.0 * (-12.0f64).powi(3) + 27.0);
    assert!((e1.discriminant() - disc).abs() < 1e-9 && (e2.discriminant() - disc).abs() < 1e-9);

    // b = x^3 + 1 makes b - 1 = x^3 singular
    let bad = CurveTypeII::new(one(), [1.0, 0.0, 0.0, 1.0]).unwrap();
    let err = elliptic_split(&bad).unwrap_err();
    assert!(err.to_string().contains("b(x) - 1"), "{err}");

    // inadmissible but smooth still splits
    assert!(!admissible(0.0, 1.0, 0.0).unwrap());
    assert!(elliptic_split(&CurveTypeII::from_critical(0.0, 1.0, 0.0, one()).unwrap()).is_ok());
}

#[test]
fn reflection_swaps_the_factors() {
    let mut r = rng(30);
    for _ in 0..50 {
        let (u, v, w) = random_admissible(&mut r);
        let curve = CurveTypeII::from_critical(u, v, w, one()).unwrap();
        let (e1, e2) = elliptic_split(&curve).unwrap();
        let (f1, f2) = elliptic_split(&curve.reflected()).unwrap();
        let flip = |p: [f64; 4]| [-p[0], p[1], -p[2], p[3]];
        // -b(-x) + 1 = -(b(-x) - 1)
        assert_eq!(f1.cubic(), flip(e2.cubic()));
        assert_eq!(f2.cubic(), flip(e1.cubic()));
        assert!((f1.j_invariant() - e2.j_invariant()).abs() <= 1e-9 * e2.j_invariant().abs().max(1.0));
        let d = curve.reflected().critical().unwrap();
        assert_eq!((d.u, d.v, d.w), (-v, -u, -w));
        assert_eq!(admissible(d.u, d.v, d.w).unwrap(), admissible(u, v, w).unwrap());
    }
}

#[test]
fn classical_period_ratios_by_both_routes() {
    let square = EllipticCurveModel::new([0.0, -1.0, 0.0, 1.0]).unwrap();
    let hex = EllipticCurveModel::new([-1.0, 0.0, 0.0, 1.0]).unwrap();
    let rho = Complex64::from_polar(1.0, PI / 3.0);
    for (e, expect) in [(square, c(0.0, 1.0)), (hex, rho)] {
        let q = e.periods_quadrature(1e-13).unwrap();
        let a = e.periods_agm();
        assert!((q.ratio() - expect).norm() < 1e-10, "{}", q.ratio());
        assert!((a.ratio() - expect).norm() < 1e-10, "{}", a.ratio());
        assert!(elliptic_periods(&e, 1e-10).is_ok());
    }
    assert!((square.j_invariant() - 1728.0).abs() < 1e-9);
    assert!(hex.j_invariant().abs() < 1e-9);
    assert!(EllipticCurveModel::new([0.0, 0.0, 0.0, 1.0]).is_err());
}

#[test]
fn periods_scale_under_coordinate_change() {
    let base = [0.3, -2.0, 0.5, 1.0];
    let e = EllipticCurveModel::new(base).unwrap();
    let p = elliptic_periods(&e, 1e-10).unwrap();
    for s in [0.5f64, 1.7, 3.0] {
        // x' = s^2 x, w' = s^3 w gives w'^2 = s^6 c(x' / s^2)
        let scaled: Vec<f64> = (0..4).map(|k| base[k] * s.powi(6 - 2 * k as i32)).collect();
        let f = EllipticCurveModel::new([scaled[0], scaled[1], scaled[2], scaled[3]]).unwrap();
        let q = elliptic_periods(&f, 1e-10).unwrap();
        assert!((q.omega1 * s - p.omega1).norm() < 1e-9 * p.omega1.norm());
        assert!((q.omega2 * s - p.omega2).norm() < 1e-9 * p.omega2.norm());
        assert!((q.ratio() - p.ratio()).norm() < 1e-10);
    }
}

#[test]
fn commensurability_probe_examples() {
    let square = EllipticCurveModel::new([0.0, -1.0, 0.0, 1.0]).unwrap().periods_agm();
    let hex = EllipticCurveModel::new([-1.0, 0.0, 0.0, 1.0]).unwrap().periods_agm();
    let same = commensurability_probe(&square, &square, 1e-9);
    assert_eq!(same.residual, 0.0);
    assert!(same.suggests_commensurable && same.heuristic);

    let sh = commensurability_probe(&square, &hex, 1e-9);
    let hs = commensurability_probe(&hex, &square, 1e-9);
    assert_eq!(sh.residual, hs.residual);
    assert_eq!(sh.max_denominator, 10_000);
    assert!(!sh.suggests_commensurable);
    // oracle: sqrt(3) enters the coupling, and its convergents up to 1e4 stay above 1e-9
    let sqrt3 = best_convergent(3f64.sqrt(), 10_000);
    assert!(sqrt3.residual > 1e-9);
    assert!(sh.residual > 1e-9, "{}", sh.residual);
    assert!(sh.note.contains("heuristic"));
}

#[test]
fn convergent_examples() {
    let pi = best_convergent(PI, 1000);
    assert_eq!((pi.numerator, pi.denominator), (355, 113));
    let half = best_convergent(0.5, 10);
    assert_eq!((half.numerator, half.denominator, half.residual), (1, 2, 0.0));
    let s = simultaneous_approx([0.5, 0.25, -1.0, 0.75], 100);
    assert_eq!(s.denominator, 4);
    assert_eq!(s.residual, 0.0);
}

#[test]
fn curve_json_forms() {
    let a = CurveSpec::parse(r#"{"type":"II","u":-2,"v":2,"w":0,"k":[1,0]}"#).unwrap();
    let b = CurveSpec::parse(r#"{"type":"II","b":[0,-12,0,1],"k":[0,1]}"#).unwrap();
    match (a, b) {
        (SpectralCurve::II(x), SpectralCurve::II(y)) => {
            assert_eq!(x.b(), y.b());
            assert!(x.critical().is_some() && y.critical().is_none());
            assert_eq!(y.k(), c(0.0, 1.0));
        }
        other => panic!("{other:?}"),
    }
    let t = CurveSpec::parse(r#"{"type":"I","b":[[1,2],[0.5,0],[0.5,0],[1,-2]]}"#).unwrap();
    assert!(matches!(t, SpectralCurve::I(_)));
    assert!(CurveSpec::parse(r#"{"type":"I","b":[[1,2],[0.5,0],[0.5,0],[1,2]]}"#).is_err());
    assert!(CurveSpec::parse(r#"{"type":"III","b":[0,0,0,1]}"#).is_err());
    assert!(CurveSpec::parse(r#"{"type":"II","u":0,"v":1}"#).is_err());
    let back = CurveSpec::parse(&serde_json::to_string(&CurveSpec::from_curve(&t)).unwrap()).unwrap();
    assert_eq!(back, t);
}

#[test]
fn scan_csv_matches_the_oracle_column() {
    let region = ScanBox { u: [-3.0, 1.0], v: [-1.0, 3.0], w: [-20.0, 20.0], n: 8 };
    let rows = scan(&region, 256, true, Execution::Parallel).unwrap();
    assert_eq!(rows, scan(&region, 256, true, Execution::Sequential).unwrap());
    assert!(rows.iter().all(|r| r.u < r.v));
    assert!(rows.iter().any(|r| r.admissible) && rows.iter().any(|r| !r.admissible));
    let csv = scan_to_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "u,v,w,admissible,circle_branch,split_ok,tau1_re,tau1_im,tau2_re,tau2_im");
    for (line, row) in lines.zip(&rows) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 10);
        let (u, v, w): (f64, f64, f64) = (cells[0].parse().unwrap(), cells[1].parse().unwrap(), cells[2].parse().unwrap());
        assert_eq!((u, v, w), (row.u, row.v, row.w));
        if boundary_distance(u, v, w) > 1e-9 {
            assert_eq!(cells[3], cells[4], "{line}");
        }
        if row.split_ok {
            let im: f64 = cells[7].parse().unwrap();
            assert!(im > 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lemma_agrees_with_the_circle_oracle(u in -4.0f64..4.0, gap in 0.01f64..5.0, w in -60.0f64..60.0) {
        let v = u + gap;
        prop_assume!(boundary_distance(u, v, w) > 1e-9);
        let curve = CurveTypeII::from_critical(u, v, w, one()).unwrap();
        prop_assert_eq!(admissible(u, v, w).unwrap(), circle_branch_check(&curve, 256).unwrap());
    }

    #[test]
    fn admissible_curves_cross_the_band(seed in any::<u64>()) {
        let (u, v, w) = random_admissible(&mut rng(seed));
        prop_assert!(admissible(u, v, w).unwrap());
        let curve = CurveTypeII::from_critical(u, v, w, one()).unwrap();
        prop_assert!(curve.eval(u) > 1.0);
        prop_assert!(curve.eval(v) < -1.0);
        // each of b +- 1 changes sign three times
        let lo = u - 10.0 - w.abs().cbrt();
        let hi = v + 10.0 + w.abs().cbrt();
        prop_assert_eq!(sign_changes(|x| curve.eval(x) + 1.0, lo, hi, 4000), 3);
        prop_assert_eq!(sign_changes(|x| curve.eval(x) - 1.0, lo, hi, 4000), 3);
        prop_assert!(elliptic_split(&curve).is_ok());
    }

    #[test]
    fn critical_value_gap(u in -5.0f64..5.0, v in -5.0f64..5.0, w in -50.0f64..50.0) {
        let curve = CurveTypeII::from_critical(u, v, w, one()).unwrap();
        let lhs = curve.eval(u) - curve.eval(v);
        let rhs = 0.5 * (v - u).powi(3);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs() + w.abs()));
    }

    #[test]
    fn critical_data_is_recovered_from_coefficients(u in -4.0f64..4.0, gap in 0.05f64..5.0, w in -30.0f64..30.0, scale in 0.2f64..3.0) {
        let v = u + gap;
        let b = normal_form(u, v, w);
        // b(x / scale) rescales back to b
        let scaled = [b[0], b[1] / scale, b[2] / (scale * scale), b[3] / scale.powi(3)];
        let curve = CurveTypeII::new(one(), scaled).unwrap();
        let d = curve.monic_critical_data().unwrap();
        let tol = 1e-9 * (1.0 + u.abs() + v.abs());
        prop_assert!((d.u - u).abs() < tol, "{:?}", d);
        prop_assert!((d.v - v).abs() < tol, "{:?}", d);
        prop_assert!((d.w - w).abs() < 1e-9 * (1.0 + w.abs()));
        prop_assert!(CurveTypeII::new(one(), [0.0, 1.0, 0.0, 1.0]).unwrap().monic_critical_data().is_none());
    }

    #[test]
    fn type_ii_sextic_is_a_difference_of_squares(b0 in -5.0f64..5.0, b1 in -5.0f64..5.0, b2 in -5.0f64..5.0, b3 in 0.1f64..3.0) {
        let b = [b0, b1, b2, b3];
        let m = hyperelliptic_type_ii(&b);
        let plus = [b0 + 1.0, b1, b2, b3];
        let minus = [b0 - 1.0, b1, b2, b3];
        for k in 0..7 {
            let mut acc = 0.0;
            for i in 0..4 {
                if k >= i && k - i < 4 {
                    acc += plus[i] * minus[k - i];
                }
            }
            prop_assert!((m.coefficients[k].re - acc).abs() <= 1e-12 * (1.0 + acc.abs()));
            prop_assert_eq!(m.coefficients[k].im, 0.0);
        }
    }

    #[test]
    fn type_i_coefficients_are_palindromic(a in -3.0f64..3.0, b in -3.0f64..3.0, p in -3.0f64..3.0, q in -3.0f64..3.0) {
        let t = CurveTypeI::new(c(a, b), c(p, q)).unwrap();
        let cs = t.coefficients();
        prop_assert_eq!(cs[3], cs[0].conj());
        prop_assert_eq!(cs[2], cs[1].conj());
        prop_assert_eq!(CurveTypeI::from_coefficients(cs).unwrap(), t);
        // x^3 conj(b(1/conj x)) = b(x) on the unit circle and off it
        let x = c(0.7, -0.4);
        let lhs = x.powu(3) * t.eval(x.conj().inv()).conj();
        prop_assert!((lhs - t.eval(x)).norm() < 1e-12 * (1.0 + t.eval(x).norm()));
    }
}
