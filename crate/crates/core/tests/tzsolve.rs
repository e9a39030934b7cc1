mod common;

use std::f64::consts::PI;

use common::{c, equivariant_solution, refinement_slope, rng, time_of_flight_period};
use proptest::prelude::*;
use rand::Rng;
use tzlab::tzsolve::*;
use tzlab::{Error, Execution};

fn rect() -> Lattice {
    Lattice::rectangular(2.0, 1.5).unwrap()
}

fn oblique() -> Lattice {
    Lattice::new(c(2.0, 0.3), c(0.7, 1.8)).unwrap()
}

fn smooth_field(l: Lattice, n: usize) -> ScalarField {
    let vals = (0..n * n)
        .map(|i| {
            let (s, t) = ((i / n) as f64 / n as f64, (i % n) as f64 / n as f64);
            0.1 * (2.0 * PI * s).sin() * (2.0 * PI * t).cos() + 0.05 * (2.0 * PI * (s + 2.0 * t)).cos()
        })
        .collect();
    ScalarField::new(l, n, n, vals).unwrap()
}

#[test]
fn residual_of_constants() {
    let l = oblique();
    assert_eq!(residual(&ScalarField::zeros(l, 16, 16).unwrap()).max_abs(), 0.0);
    for cst in [-0.7, 0.2, 1.3] {
        let r = residual(&ScalarField::constant(l, 16, 24, cst).unwrap());
        let expect = cst.exp() - (-2.0 * cst).exp();
        assert!(r.values().iter().all(|v| (v - expect).abs() < 1e-13 * expect.abs().max(1.0)));
    }
}

#[test]
fn spectral_and_finite_difference_residuals_agree_to_fourth_order() {
    for l in [rect(), oblique()] {
        let ns = [16, 32, 64];
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let u = if l == rect() {
                    ScalarField::from_fn(l, n, n, |z| 0.01 * (2.0 * PI * z.re / 2.0).cos()).unwrap()
                } else {
                    smooth_field(l, n)
                };
                residual(&u).max_abs_difference(&residual_fd4(&u))
            })
            .collect();
        let slope = refinement_slope(&ns, &errs);
        assert!(slope >= 3.8, "slope {slope} errors {errs:?}");
    }
}

#[test]
fn residual_is_translation_equivariant() {
    let u = smooth_field(oblique(), 32);
    for (dj, dk) in [(1, 0), (0, 5), (7, 13)] {
        let lhs = residual(&u.shifted(dj, dk));
        let rhs = residual(&u).shifted(dj, dk);
        assert!(lhs.max_abs_difference(&rhs) < 1e-12);
    }
}

#[test]
fn sequential_and_parallel_residuals_agree() {
    let u = smooth_field(oblique(), 64);
    let a = residual_with(&u, Execution::Sequential);
    let b = residual_with(&u, Execution::Parallel);
    assert!(a.max_abs_difference(&b) <= 1e-15);
}

#[test]
fn collinear_lattice_names_the_invariant() {
    let err = Lattice::new(c(1.0, 1.0), c(-2.0, -2.0)).unwrap_err();
    assert!(err.is_validation());
    assert!(err.to_string().contains("Im(omega2/omega1) > 0"));
    assert!(Lattice::new(c(0.0, 0.0), c(0.0, 1.0)).is_err());
}

#[test]
fn zero_is_a_fixed_point_on_any_lattice() {
    for l in [rect(), oblique(), common::hexagonal()] {
        let u = solve_periodic(&l, &ScalarField::zeros(l, 16, 16).unwrap(), 1e-12).unwrap();
        assert_eq!(u.max_abs(), 0.0);
    }
}

#[test]
fn small_perturbation_returns_to_zero() {
    let l = oblique();
    let mut r = rng(11);
    let u0 = ScalarField::from_fn(l, 32, 32, |_| 1e-3 * r.random_range(-1.0..1.0)).unwrap();
    let rep = solve_periodic_with(&l, &u0, &NewtonOptions::new(1e-12)).unwrap();
    assert!(residual(&rep.field).max_abs() <= 1e-12);
    assert!(rep.field.max_abs() < 1e-10);
    assert!(rep.residual_history.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn equivariant_profile_converges_to_the_ode_solution() {
    let orbit = solve_equivariant(2.0, 1e-12).unwrap();
    let t = orbit.period;
    for omega2 in [c(0.0, 1.0), c(t, 1.0), c(0.0, 0.5)] {
        let exact = orbit.to_field(omega2, 32, 32).unwrap();
        let l = *exact.lattice();
        let u0 = ScalarField::from_fn(l, 32, 32, |z| {
            // even about the maximum, so no drift along the orbit
            let (s, tt) = solve_coords(&l, z);
            orbit.value_at(z.re) + 1e-2 * (2.0 * PI * s).cos() * (2.0 * PI * tt).cos()
        })
        .unwrap();
        let u = solve_periodic(&l, &u0, 1e-11).unwrap();
        assert!(residual(&u).max_abs() <= 1e-11);
        assert!(u.max_abs_difference(&exact) < 1e-8, "{omega2}: {}", u.max_abs_difference(&exact));
    }
}

/// Lattice coordinates of `z`.
fn solve_coords(l: &Lattice, z: num_complex::Complex64) -> (f64, f64) {
    let (w1, w2) = (l.omega1(), l.omega2());
    let det = w1.re * w2.im - w1.im * w2.re;
    ((z.re * w2.im - z.im * w2.re) / det, (w1.re * z.im - w1.im * z.re) / det)
}

#[test]
fn newton_reports_non_convergence_with_history() {
    let l = rect();
    let mut r = rng(12);
    let u0 = ScalarField::from_fn(l, 16, 16, |_| 0.5 * r.random_range(-1.0..1.0)).unwrap();
    let mut opts = NewtonOptions::new(1e-12);
    opts.max_iterations = 1;
    match solve_periodic_with(&l, &u0, &opts) {
        Err(Error::Convergence { iterations, history }) => {
            assert_eq!(iterations, 1);
            assert!(!history.is_empty());
        }
        other => panic!("expected convergence error, got {other:?}"),
    }
}

#[test]
fn turning_point_examples() {
    let e = turning_points(1.5).unwrap_err();
    assert!(e.to_string().contains("degenerate orbit"));
    assert!(turning_points(1.0).is_err());

    let (um, up) = turning_points(2.0).unwrap();
    assert!(um < 0.0 && up > 0.0);
    assert!((potential(um) - 2.0).abs() < 1e-12 && (potential(up) - 2.0).abs() < 1e-12);
    // plain bisection oracle on each monotone branch
    let bisect = |mut lo: f64, mut hi: f64| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (potential(mid) - 2.0 > 0.0) == (potential(hi) - 2.0 > 0.0) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    assert!((bisect(-5.0, 0.0) - um).abs() < 1e-12);
    assert!((bisect(0.0, 5.0) - up).abs() < 1e-12);

    let h = 1e6;
    let (um, up) = turning_points(h).unwrap();
    assert!((up / h.ln() - 1.0).abs() < 0.01);
    assert!((um / (-0.5 * (2.0 * h).ln()) - 1.0).abs() < 0.01);
}

#[test]
fn small_amplitude_period_limit() {
    let t = equivariant_period(1.5 + 1e-6, 1e-10).unwrap();
    assert!((t - PI / 3f64.sqrt()).abs() < 1e-4, "{t}");
}

#[test]
fn period_matches_time_of_flight() {
    let t = equivariant_period(2.0, 1e-12).unwrap();
    let oracle = time_of_flight_period(2.0);
    assert!((t - oracle).abs() < 1e-8, "{t} vs {oracle}");
    assert!((t - 1.764_249_616_242_057).abs() < 1e-12);
}

#[test]
fn period_decreases_with_energy() {
    let hs: Vec<f64> = (0..=40).map(|i| 1.5 + 1e-3 + (10.0 - 1.5 - 1e-3) * i as f64 / 40.0).collect();
    let ts: Vec<f64> = hs.iter().map(|&h| equivariant_period(h, 1e-10).unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[1] < w[0]), "{ts:?}");
}

#[test]
fn profiles_conserve_the_first_integral() {
    for h in [1.5 + 1e-4, 2.0, 5.0, 50.0] {
        let tol = 1e-10;
        let orbit = solve_equivariant(h, tol).unwrap();
        let drift = orbit
            .profile
            .iter()
            .zip(&orbit.derivative)
            .map(|(u, du)| (first_integral(*u, *du) - h).abs())
            .fold(0.0, f64::max);
        assert!(drift <= tol * h.max(1.0), "H = {h}: drift {drift}");
        let max = orbit.profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(max, orbit.u_plus);
        let min = orbit.profile.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= orbit.u_minus - 1e-9 && min - orbit.u_minus < 1e-3);
    }
}

#[test]
fn equivariant_field_has_fourth_order_finite_difference_residual() {
    let ns = [32, 64, 128];
    let errs: Vec<f64> = ns.iter().map(|&n| residual_fd4(&equivariant_solution(n)).max_abs()).collect();
    assert!(refinement_slope(&ns, &errs) >= 3.8, "{errs:?}");
    assert!(residual(&equivariant_solution(64)).max_abs() < 1e-9);
}

#[test]
fn field_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let u = smooth_field(oblique(), 16);
    for name in ["u.csv", "u.json"] {
        let path = dir.path().join(name);
        u.write(&path).unwrap();
        assert_eq!(ScalarField::read(&path).unwrap(), u);
    }
    assert!(ScalarField::from_csv("nx,ny\n1,2\n").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn shift_equivariance(seed in any::<u64>(), dj in 0usize..16, dk in 0usize..16) {
        let mut r = rng(seed);
        let amps: Vec<f64> = (0..4).map(|_| r.random_range(-0.3..0.3)).collect();
        let u = ScalarField::from_fn(oblique(), 16, 16, |z| {
            amps[0] * (z.re).sin() + amps[1] * (0.5 * z.im).cos() + amps[2] * (z.re + z.im).sin() + amps[3]
        }).unwrap();
        let lhs = residual(&u.shifted(dj, dk));
        let rhs = residual(&u).shifted(dj, dk);
        prop_assert!(lhs.max_abs_difference(&rhs) < 1e-12);
    }

    #[test]
    fn turning_points_solve_the_energy_equation(h in 1.500001f64..1e6) {
        let (um, up) = turning_points(h).unwrap();
        prop_assert!(um < 0.0 && 0.0 < up);
        prop_assert!((potential(um) - h).abs() <= 1e-12 * h);
        prop_assert!((potential(up) - h).abs() <= 1e-12 * h);
    }

    #[test]
    fn constant_residual(cst in -2.0f64..2.0) {
        let r = residual(&ScalarField::constant(rect(), 8, 8, cst).unwrap());
        let expect = cst.exp() - (-2.0 * cst).exp();
        prop_assert!(r.values().iter().all(|v| (v - expect).abs() <= 1e-13 * expect.abs().max(1.0)));
    }
}
