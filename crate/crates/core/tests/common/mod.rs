#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tzlab::tzsolve::{self, Lattice, ScalarField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The lattice spanned by `2 pi / sqrt 3` and `pi / sqrt 3 + i pi`, on which
/// the flat frame closes up.
pub fn hexagonal() -> Lattice {
    let r3 = 3f64.sqrt();
    Lattice::new(c(2.0 * PI / r3, 0.0), c(PI / r3, PI)).unwrap()
}

/// A `y`-independent solution at energy 2 over the lattice `(T, i)`.
pub fn equivariant_solution(n: usize) -> ScalarField {
    let orbit = tzsolve::solve_equivariant(2.0, 1e-12).unwrap();
    orbit.to_field(c(0.0, 1.0), n, n).unwrap()
}

/// Least-squares slope of `log2(err)` against `log2(n)`, sign flipped.
pub fn refinement_slope(ns: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|n| (*n as f64).log2()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.log2()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -num / den
}

/// Half-period of `u'' = 4 (e^{-2u} - e^u)` from `(u_+, 0)` to the next zero
/// of `u'`, found by RK4 with the last step refined by bisection.
pub fn time_of_flight_period(h: f64) -> f64 {
    let (_, up) = tzsolve::turning_points(h).unwrap();
    let f = |y: [f64; 2]| [y[1], 4.0 * ((-2.0 * y[0]).exp() - y[0].exp())];
    let step = |y: [f64; 2], dt: f64| {
        let k1 = f(y);
        let k2 = f([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
        let k3 = f([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
        let k4 = f([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        [
            y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    let dt = 1e-4;
    let mut y = [up, 0.0];
    let mut t = 0.0;
    // leave the turning point, then stop once u' turns non-negative
    y = step(y, dt);
    t += dt;
    loop {
        let next = step(y, dt);
        if next[1] >= 0.0 {
            let (mut lo, mut hi) = (0.0, dt);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if step(y, mid)[1] >= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return 2.0 * (t + 0.5 * (lo + hi));
        }
        y = next;
        t += dt;
    }
}
