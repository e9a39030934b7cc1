//! End-to-end acceptance checks. Run with
//! `cargo test -p tzlab --test acceptance -- --nocapture --test-threads=1`
//! to see one PASS/FAIL line per criterion.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::{c, equivariant_solution, hexagonal, refinement_slope, rng, time_of_flight_period};
use num_complex::Complex64;
use rand::Rng;
use tzlab::framerec::*;
use tzlab::liecore::*;
use tzlab::speccurve::*;
use tzlab::tzsolve::{self, Generator, ScalarField};
use tzlab::Execution;

fn verdict(n: usize, what: &str, failures: &[String]) {
    if failures.is_empty() {
        println!("PASS criterion {n}: {what}");
    } else {
        println!("FAIL criterion {n}: {what}: {}", failures.join("; "));
        panic!("criterion {n} failed: {}", failures.join("; "));
    }
}

fn check(failures: &mut Vec<String>, ok: bool, msg: impl FnOnce() -> String) {
    if !ok {
        failures.push(msg());
    }
}

#[test]
fn criterion_01_automorphism_algebra() {
    let start = Instant::now();
    let mut r = rng(101);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let g = random_su3(&mut r);
        for (a, k) in [(Automorphism::Sigma, 6), (Automorphism::Nu, 3), (Automorphism::Mu, 2)] {
            worst = worst.max(distance(apply_repeated(&g, a, k).matrix(), g.matrix()));
        }
        let mn = Automorphism::Mu.apply_matrix(&Automorphism::Nu.apply_matrix(g.matrix()));
        let nm = Automorphism::Nu.apply_matrix(&Automorphism::Mu.apply_matrix(g.matrix()));
        worst = worst.max(distance(&mn, &nm));
    }
    let elapsed = start.elapsed();
    let mut f = Vec::new();
    check(&mut f, worst <= 1e-10, || format!("max deviation {worst:.3e}"));
    check(&mut f, elapsed < Duration::from_secs(1), || format!("runtime {elapsed:?}"));
    verdict(1, &format!("automorphism orders and mu nu = nu mu, max deviation {worst:.2e} in {elapsed:.2?}"), &f);
}

#[test]
fn criterion_02_grading() {
    let mut r = rng(102);
    let (mut recon, mut eig) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let x = random_traceless(&mut r);
        let d = grade_decompose(&x).unwrap();
        recon = recon.max(distance(&d.sum(), &x));
        for j in 0..6 {
            let s = Automorphism::Sigma.apply_algebra(d.part(j));
            eig = eig.max(distance(&s, &(d.part(j) * grade_eigenvalue(j))));
        }
    }
    let mut f = Vec::new();
    check(&mut f, recon <= 1e-12, || format!("reconstruction {recon:.3e}"));
    check(&mut f, eig <= 1e-12, || format!("eigen relation {eig:.3e}"));
    verdict(2, &format!("grading reconstructs to {recon:.2e}, eigen relation {eig:.2e}"), &f);
}

#[test]
fn criterion_03_phi_isomorphism() {
    let mut r = rng(103);
    let worst = (0..500).map(|_| hat_g1_defect(&phi_pushforward(&random_g1(&mut r)))).fold(0.0, f64::max);
    let mut f = Vec::new();
    check(&mut f, worst <= 1e-10, || format!("relation defect {worst:.3e}"));
    verdict(3, &format!("Ad U^-1 maps g1 into hat g1, defect {worst:.2e}"), &f);
}

#[test]
fn criterion_04_tzitzeica_solver() {
    let start = Instant::now();
    let mut f = Vec::new();

    let l = hexagonal();
    let zero = tzsolve::solve_periodic(&l, &ScalarField::zeros(l, 64, 64).unwrap(), 1e-13).unwrap();
    let r0 = tzsolve::residual(&zero).max_abs();
    check(&mut f, r0 <= 1e-13, || format!("zero residual {r0:.3e}"));

    let t_small = tzsolve::equivariant_period(1.5 + 1e-6, 1e-10).unwrap();
    let limit = PI / 3f64.sqrt();
    check(&mut f, (t_small - limit).abs() <= 1e-4, || format!("small-amplitude period {t_small}"));

    let t2 = tzsolve::equivariant_period(2.0, 1e-12).unwrap();
    let tof = time_of_flight_period(2.0);
    check(&mut f, (t2 - tof).abs() <= 1e-8, || format!("period {t2} vs time of flight {tof}"));

    // nontrivial Newton solve at 64x64 from a perturbed equivariant profile
    let orbit = tzsolve::solve_equivariant(2.0, 1e-12).unwrap();
    let exact = orbit.to_field(c(0.0, 1.0), 64, 64).unwrap();
    let lt = *exact.lattice();
    let u0 = ScalarField::from_fn(lt, 64, 64, |z| {
        orbit.value_at(z.re) + 1e-2 * (2.0 * PI * z.re / t2).cos() * (2.0 * PI * z.im).cos()
    })
    .unwrap();
    let u = tzsolve::solve_periodic(&lt, &u0, 1e-11).unwrap();
    let dev = u.max_abs_difference(&exact);
    check(&mut f, dev < 1e-8, || format!("Newton solution off the orbit by {dev:.3e}"));

    let elapsed = start.elapsed();
    check(&mut f, elapsed < Duration::from_secs(10), || format!("runtime {elapsed:?}"));
    verdict(
        4,
        &format!(
            "zero residual {r0:.1e}, T(3/2+1e-6) - pi/sqrt3 = {:.1e}, |T(2) - ToF| = {:.1e}, in {elapsed:.2?}",
            t_small - limit,
            (t2 - tof).abs()
        ),
        &f,
    );
}

#[test]
fn criterion_05_flat_frame() {
    let n = 128;
    let l = hexagonal();
    let frames = integrate_frame(&ScalarField::zeros(l, n, n).unwrap(), c(1.0, 0.0), &UnitaryMatrix3::identity()).unwrap();
    let p = cyclic_permutation();
    let mut closed = 0.0f64;
    for j in 0..=n {
        for k in 0..=n {
            let z = l.point(j as f64 / n as f64, k as f64 / n as f64);
            closed = closed.max(distance(frames.frame(j, k), &(p * z - p * p * z.conj()).exp()));
        }
    }
    let mono = monodromy(&frames, Generator::Omega1);
    let mono_dist = distance(mono.matrix.matrix(), &ComplexMatrix3::identity());
    let unit = frames.max_unitarity_defect();
    let mut f = Vec::new();
    check(&mut f, closed <= 1e-9, || format!("closed form {closed:.3e}"));
    check(&mut f, mono_dist <= 1e-8, || format!("monodromy {mono_dist:.3e}"));
    check(&mut f, unit <= 1e-10, || format!("unitarity {unit:.3e}"));
    verdict(5, &format!("flat frame closed form {closed:.1e}, monodromy {mono_dist:.1e}, unitarity {unit:.1e}"), &f);
}

#[test]
fn criterion_06_geometric_invariants() {
    let u0 = equivariant_solution(64);
    let u = tzsolve::solve_periodic(u0.lattice(), &u0, 1e-12).unwrap();
    let mut f = Vec::new();
    check(&mut f, u.max_abs() > 0.1, || "solution is trivial".into());
    let frames = integrate_frame(&u, Complex64::from_polar(1.0, 0.4), &UnitaryMatrix3::identity()).unwrap();
    let s = LegendrianSurface::from_frames(&frames);
    let rep = verify_legendrian(&s, &u).unwrap();
    for e in &rep.entries {
        check(&mut f, e.pass, || format!("{} = {:.3e} > {:.0e}", e.name, e.max_deviation, e.threshold));
    }
    let spread = phase_spread(&lagrangian_phases(&s).unwrap());
    check(&mut f, spread <= 1e-8, || format!("phase spread {spread:.3e}"));
    let summary: Vec<String> = rep.entries.iter().map(|e| format!("{} {:.1e}", e.name, e.max_deviation)).collect();
    verdict(6, &format!("{}, phase spread {spread:.1e}", summary.join(", ")), &f);
}

#[test]
fn criterion_07_extended_frame_symmetries() {
    let u = equivariant_solution(32);
    let mut r = rng(107);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let zeta = random_zeta(&mut r);
        let a = ConnectionField::new(&u, zeta).unwrap();
        let a_eps = ConnectionField::new(&u, zeta * EPSILON).unwrap();
        let a_neg = ConnectionField::new(&u, -zeta).unwrap();
        let a_inv = ConnectionField::new(&u, zeta.conj().inv()).unwrap();
        for j in 0..32 {
            for k in 0..32 {
                let x = a.a(j, k);
                worst = worst
                    .max(distance(&Automorphism::Nu.apply_algebra(&x), &a_eps.a(j, k)))
                    .max(distance(&Automorphism::Mu.apply_algebra(&x), &a_neg.a(j, k)))
                    .max(distance(&(-x.adjoint()), &a_inv.b(j, k)));
            }
        }
    }
    let mut f = Vec::new();
    check(&mut f, worst <= 1e-12, || format!("max deviation {worst:.3e}"));
    verdict(7, &format!("three symmetries at 50 random zeta, max deviation {worst:.2e}"), &f);
}

#[test]
fn criterion_08_admissibility_lemma() {
    let start = Instant::now();
    let region = ScanBox { u: [-3.0, 1.0], v: [-1.0, 3.0], w: [-20.0, 20.0], n: 50 };
    let rows = scan(&region, 256, false, Execution::Parallel).unwrap();
    let elapsed = start.elapsed();
    let interior: Vec<&ScanRow> = rows.iter().filter(|r| r.boundary_distance > 1e-9).collect();
    let mismatches = interior.iter().filter(|r| r.admissible != r.circle_branch).count();
    let admissible = interior.iter().filter(|r| r.admissible).count();
    let mut f = Vec::new();
    check(&mut f, mismatches == 0, || format!("{mismatches} disagreeing cells"));
    check(&mut f, admissible > 0 && admissible < interior.len(), || "box does not straddle the boundary".into());
    check(&mut f, elapsed < Duration::from_secs(60), || format!("runtime {elapsed:?}"));
    verdict(
        8,
        &format!("{} cells ({admissible} admissible), {mismatches} disagreements, in {elapsed:.2?}", interior.len()),
        &f,
    );
}

#[test]
fn criterion_09_elliptic_splitting() {
    let mut r = rng(109);
    let mut failures = 0;
    for _ in 0..100 {
        let u = r.random_range(-3.0..3.0);
        let v = u + critical_gap() + r.random_range(0.01..3.0);
        let (lo, hi) = admissible_bounds(u, v);
        let w = lo + r.random_range(0.001..0.999) * (hi - lo);
        let curve = CurveTypeII::from_critical(u, v, w, c(1.0, 0.0)).unwrap();
        if !admissible(u, v, w).unwrap() || elliptic_split(&curve).is_err() {
            failures += 1;
        }
    }
    let mut f = Vec::new();
    check(&mut f, failures == 0, || format!("{failures} curves failed to split"));
    let square = EllipticCurveModel::new([0.0, -1.0, 0.0, 1.0]).unwrap();
    let hex = EllipticCurveModel::new([-1.0, 0.0, 0.0, 1.0]).unwrap();
    let mut devs = Vec::new();
    for (name, e, expect) in [("x^3 - x", square, c(0.0, 1.0)), ("x^3 - 1", hex, Complex64::from_polar(1.0, PI / 3.0))] {
        let q = e.periods_quadrature(1e-13).unwrap().ratio();
        let a = e.periods_agm().ratio();
        for (route, tau) in [("quadrature", q), ("agm", a)] {
            let d = (tau - expect).norm();
            devs.push(d);
            check(&mut f, d <= 1e-10, || format!("{name} by {route}: ratio {tau} off by {d:.3e}"));
        }
    }
    let worst = devs.iter().cloned().fold(0.0, f64::max);
    verdict(9, &format!("100 admissible curves split, period ratios within {worst:.1e} by both routes"), &f);
}

#[test]
fn criterion_10_convergence_orders() {
    let ns = [32, 64, 128];
    let fields: Vec<ScalarField> = ns.iter().map(|&n| equivariant_solution(n)).collect();
    let res: Vec<f64> = fields.iter().map(|u| tzsolve::residual_fd4(u).max_abs()).collect();
    let zeta = Complex64::from_polar(1.0, 0.4);
    let defect: Vec<f64> = fields.iter().map(|u| flatness_defect(u, zeta).unwrap()).collect();
    let (s1, s2) = (refinement_slope(&ns, &res), refinement_slope(&ns, &defect));
    let mut f = Vec::new();
    check(&mut f, s1 >= 3.8, || format!("residual slope {s1:.2} from {res:?}"));
    check(&mut f, s2 >= 3.8, || format!("flatness slope {s2:.2} from {defect:?}"));
    verdict(10, &format!("refinement slopes: residual {s1:.2}, flatness defect {s2:.2}"), &f);
}
