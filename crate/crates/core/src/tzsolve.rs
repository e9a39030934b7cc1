//! The Tzitzéica equation `u_{z zbar} = e^{-2u} - e^{u}` on flat tori, and
//! its reduction to an ODE for solutions depending on `Re z` only.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::{self, gmres};
use crate::par::{self, Execution};
use crate::spectral::{self, SpectralGrid};

/// Smallest grid resolution accepted in either direction.
pub const MIN_RESOLUTION: usize = 8;
/// Default grid resolution.
pub const DEFAULT_RESOLUTION: usize = 64;
/// Value of `V(u) = e^{-2u}/2 + e^u` at its minimum `u = 0`.
pub const CRITICAL_ENERGY: f64 = 1.5;

/// A lattice `Z omega1 + Z omega2` in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[f64; 2]; 2]", into = "[[f64; 2]; 2]")]
pub struct Lattice {
    omega1: Complex64,
    omega2: Complex64,
}

impl TryFrom<[[f64; 2]; 2]> for Lattice {
    type Error = Error;
    fn try_from(v: [[f64; 2]; 2]) -> Result<Self> {
        Lattice::new(Complex64::new(v[0][0], v[0][1]), Complex64::new(v[1][0], v[1][1]))
    }
}

impl From<Lattice> for [[f64; 2]; 2] {
    fn from(l: Lattice) -> Self {
        [[l.omega1.re, l.omega1.im], [l.omega2.re, l.omega2.im]]
    }
}

impl Lattice {
    /// Requires both periods nonzero and `Im(omega2/omega1) > 0`.
    pub fn new(omega1: Complex64, omega2: Complex64) -> Result<Self> {
        if !(omega1.is_finite() && omega2.is_finite()) {
            return Err(Error::domain("lattice periods must be finite"));
        }
        if omega1.norm() == 0.0 || omega2.norm() == 0.0 {
            return Err(Error::domain("lattice periods must be nonzero"));
        }
        let ratio = omega2 / omega1;
        if !(ratio.im > 1e-12 * ratio.norm()) {
            return Err(Error::domain(format!(
                "lattice invariant Im(omega2/omega1) > 0 violated (Im = {:e})",
                ratio.im
            )));
        }
        Ok(Self { omega1, omega2 })
    }

    pub fn rectangular(a: f64, b: f64) -> Result<Self> {
        Self::new(Complex64::new(a, 0.0), Complex64::new(0.0, b))
    }

    pub fn square(side: f64) -> Result<Self> {
        Self::rectangular(side, side)
    }

    pub fn omega1(&self) -> Complex64 {
        self.omega1
    }

    pub fn omega2(&self) -> Complex64 {
        self.omega2
    }

    /// `omega1 conj(omega2) - conj(omega1) omega2`, purely imaginary.
    pub fn jacobian(&self) -> Complex64 {
        self.omega1 * self.omega2.conj() - self.omega1.conj() * self.omega2
    }

    pub fn area(&self) -> f64 {
        (self.omega1.conj() * self.omega2).im
    }

    /// The point `s omega1 + t omega2`.
    pub fn point(&self, s: f64, t: f64) -> Complex64 {
        self.omega1 * s + self.omega2 * t
    }

    /// The lattice `lambda Lambda`.
    pub fn scaled(&self, lambda: Complex64) -> Result<Self> {
        Self::new(self.omega1 * lambda, self.omega2 * lambda)
    }

    pub fn period(&self, which: Generator) -> Complex64 {
        match which {
            Generator::Omega1 => self.omega1,
            Generator::Omega2 => self.omega2,
        }
    }
}

/// One of the two lattice generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Generator {
    Omega1,
    Omega2,
}

/// Real samples of `u` at `z = (j/nx) omega1 + (k/ny) omega2`, row-major in `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FieldRecord", into = "FieldRecord")]
pub struct ScalarField {
    lattice: Lattice,
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct FieldRecord {
    nx: usize,
    ny: usize,
    omega1: [f64; 2],
    omega2: [f64; 2],
    values: Vec<f64>,
}

impl TryFrom<FieldRecord> for ScalarField {
    type Error = Error;
    fn try_from(r: FieldRecord) -> Result<Self> {
        let lattice = Lattice::try_from([r.omega1, r.omega2])?;
        ScalarField::new(lattice, r.nx, r.ny, r.values)
    }
}

impl From<ScalarField> for FieldRecord {
    fn from(f: ScalarField) -> Self {
        let [omega1, omega2] = f.lattice.into();
        FieldRecord { nx: f.nx, ny: f.ny, omega1, omega2, values: f.values }
    }
}

impl ScalarField {
    pub fn new(lattice: Lattice, nx: usize, ny: usize, values: Vec<f64>) -> Result<Self> {
        if nx < MIN_RESOLUTION || ny < MIN_RESOLUTION {
            return Err(Error::domain(format!(
                "grid resolution {nx}x{ny} below the minimum {MIN_RESOLUTION}"
            )));
        }
        if values.len() != nx * ny {
            return Err(Error::domain(format!("expected {} samples, got {}", nx * ny, values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite sample at index {i}")));
        }
        Ok(Self { lattice, nx, ny, values })
    }

    pub fn constant(lattice: Lattice, nx: usize, ny: usize, c: f64) -> Result<Self> {
        Self::new(lattice, nx, ny, vec![c; nx * ny])
    }

    pub fn zeros(lattice: Lattice, nx: usize, ny: usize) -> Result<Self> {
        Self::constant(lattice, nx, ny, 0.0)
    }

    /// Samples `f(z)` at the grid points.
    pub fn from_fn(lattice: Lattice, nx: usize, ny: usize, mut f: impl FnMut(Complex64) -> f64) -> Result<Self> {
        let values = (0..nx * ny)
            .map(|i| f(lattice.point((i / ny) as f64 / nx as f64, (i % ny) as f64 / ny as f64)))
            .collect();
        Self::new(lattice, nx, ny, values)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[(j % self.nx) * self.ny + k % self.ny]
    }

    /// Coordinate `z` of grid point `(j, k)`.
    pub fn point(&self, j: usize, k: usize) -> Complex64 {
        self.lattice.point(j as f64 / self.nx as f64, k as f64 / self.ny as f64)
    }

    /// Same samples on another lattice of matching shape.
    pub fn with_lattice(&self, lattice: Lattice) -> Self {
        Self { lattice, ..self.clone() }
    }

    /// Translation by a grid vector: the result at `(j, k)` is `self(j + dj, k + dk)`.
    pub fn shifted(&self, dj: usize, dk: usize) -> Self {
        let values = (0..self.nx * self.ny)
            .map(|i| self.get(i / self.ny + dj, i % self.ny + dk))
            .collect();
        Self { values, ..self.clone() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs_difference(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn spectral_grid(&self, exec: Execution) -> SpectralGrid {
        SpectralGrid::new(self.lattice.omega1, self.lattice.omega2, self.nx, self.ny, exec)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// CSV with a header row `nx,ny,omega1_re,omega1_im,omega2_re,omega2_im`,
    /// its values, then one row of `ny` samples per `j`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("nx,ny,omega1_re,omega1_im,omega2_re,omega2_im\n");
        let (w1, w2) = (self.lattice.omega1, self.lattice.omega2);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            self.nx,
            self.ny,
            fmt_f64(w1.re),
            fmt_f64(w1.im),
            fmt_f64(w2.re),
            fmt_f64(w2.im)
        );
        for row in self.values.chunks(self.ny) {
            let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty field file".into()))?;
        if !header.trim_start().starts_with("nx") {
            return Err(Error::Parse(format!("unexpected header {header:?}")));
        }
        let meta = lines.next().ok_or_else(|| Error::Parse("missing lattice row".into()))?;
        let meta: Vec<&str> = meta.split(',').map(str::trim).collect();
        if meta.len() != 6 {
            return Err(Error::Parse("lattice row must have 6 columns".into()));
        }
        let nx: usize = meta[0].parse().map_err(|e| Error::Parse(format!("nx: {e}")))?;
        let ny: usize = meta[1].parse().map_err(|e| Error::Parse(format!("ny: {e}")))?;
        let w = meta[2..]
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}"))))
            .collect::<Result<Vec<f64>>>()?;
        let lattice = Lattice::new(Complex64::new(w[0], w[1]), Complex64::new(w[2], w[3]))?;
        let mut values = Vec::with_capacity(nx * ny);
        for line in lines {
            for s in line.split(',') {
                let s = s.trim();
                values.push(s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")))?);
            }
        }
        Self::new(lattice, nx, ny, values)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            self.to_json()?
        } else {
            self.to_csv()
        };
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Formats with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `Delta/4 u - e^{-2u} + e^u` with the spectral Laplacian.
pub fn residual(u: &ScalarField) -> ScalarField {
    residual_with(u, Execution::default())
}

pub fn residual_with(u: &ScalarField, exec: Execution) -> ScalarField {
    let grid = u.spectral_grid(exec);
    let values = residual_on_grid(&grid, &u.values);
    ScalarField { values, ..u.clone() }
}

fn residual_on_grid(grid: &SpectralGrid, u: &[f64]) -> Vec<f64> {
    let lap = grid.laplacian(u);
    par::map_range(grid.execution(), u.len(), |i| 0.25 * lap[i] - (-2.0 * u[i]).exp() + u[i].exp())
}

/// Same residual with a fourth-order central-difference Laplacian.
pub fn residual_fd4(u: &ScalarField) -> ScalarField {
    let (nx, ny) = (u.nx, u.ny);
    let (w1, w2) = (u.lattice.omega1, u.lattice.omega2);
    let det2 = u.lattice.jacobian().norm_sqr();
    let (a, b, c) = (w2.norm_sqr(), -2.0 * (w1 * w2.conj()).re, w1.norm_sqr());
    let (hs, ht) = (1.0 / nx as f64, 1.0 / ny as f64);
    let at = |j: isize, k: isize| u.get(j.rem_euclid(nx as isize) as usize, k.rem_euclid(ny as isize) as usize);
    let second = |f: &dyn Fn(isize) -> f64, h: f64| {
        (-f(2) + 16.0 * f(1) - 30.0 * f(0) + 16.0 * f(-1) - f(-2)) / (12.0 * h * h)
    };
    let first = |f: &dyn Fn(isize) -> f64, h: f64| (f(-2) - 8.0 * f(-1) + 8.0 * f(1) - f(2)) / (12.0 * h);
    let values = par::map_range(Execution::default(), nx * ny, |i| {
        let (j, k) = ((i / ny) as isize, (i % ny) as isize);
        let uss = second(&|d| at(j + d, k), hs);
        let utt = second(&|d| at(j, k + d), ht);
        let ust = first(&|d| first(&|e| at(j + d, k + e), ht), hs);
        let lap = 4.0 * (a * uss + b * ust + c * utt) / det2;
        let v = at(j, k);
        0.25 * lap - (-2.0 * v).exp() + v.exp()
    });
    ScalarField { values, ..u.clone() }
}

/// Parameters of the Newton-Krylov solver.
#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iterations: usize,
    pub bifurcation_threshold: f64,
    pub max_halvings: usize,
    pub gmres_restart: usize,
    pub max_linear_iterations: usize,
    pub execution: Execution,
}

impl NewtonOptions {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            max_iterations: 50,
            bifurcation_threshold: 1e-8,
            max_halvings: 20,
            gmres_restart: 80,
            max_linear_iterations: 4000,
            execution: Execution::default(),
        }
    }
}

/// Converged field plus the iteration log.
#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub field: ScalarField,
    /// `max |residual|` before each iteration and after the last.
    pub residual_history: Vec<f64>,
    pub iterations: usize,
    /// Smallest upper bound on the smallest singular value of the projected
    /// Jacobian seen during the run; infinite if no linear solve was needed.
    pub sigma_min_estimate: f64,
    /// Number of translation directions projected out at the last step.
    pub projected_modes: usize,
    pub linear_iterations: usize,
}

/// Newton iteration from `u0`, reinterpreted on `lattice`.
pub fn solve_periodic(lattice: &Lattice, u0: &ScalarField, tol: f64) -> Result<ScalarField> {
    solve_periodic_with(lattice, u0, &NewtonOptions::new(tol)).map(|r| r.field)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Orthonormal basis of the translation directions `u_s`, `u_t` (those that are not negligible).
fn translation_basis(grid: &SpectralGrid, u: &[f64]) -> Vec<Vec<f64>> {
    let spec = grid.spectrum_of_real(u);
    let scale = (u.len() as f64).sqrt();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for mut v in [grid.d_s_from_spectrum(&spec), grid.d_t_from_spectrum(&spec)] {
        for q in &basis {
            let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let n = krylov::norm(&v);
        if n > 1e-9 * scale {
            v.iter_mut().for_each(|a| *a /= n);
            basis.push(v);
        }
    }
    basis
}

fn project_out(basis: &[Vec<f64>], v: &mut [f64]) {
    for q in basis {
        let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
    }
}

pub fn solve_periodic_with(lattice: &Lattice, u0: &ScalarField, opts: &NewtonOptions) -> Result<NewtonReport> {
    if !(opts.tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    let start = u0.with_lattice(*lattice);
    let grid = start.spectral_grid(opts.execution);
    let exec = opts.execution;
    let mut u = start.values.clone();
    let mut r = residual_on_grid(&grid, &u);
    let mut history = vec![max_abs(&r)];
    let mut sigma_min = f64::INFINITY;
    let mut projected = 0;
    let mut iterations = 0;
    let mut linear_iterations = 0;
    while history.last().copied().unwrap_or(0.0) > opts.tol {
        if iterations >= opts.max_iterations {
            return Err(Error::Convergence { iterations, history });
        }
        iterations += 1;
        let coeff: Vec<f64> = par::map_slice(exec, &u, |v| 2.0 * (-2.0 * v).exp() + v.exp());
        let shift = coeff.iter().sum::<f64>() / coeff.len() as f64;
        let basis = translation_basis(&grid, &u);
        projected = basis.len();
        // A = P J P + (I - P), P the projector off the translation modes
        let apply = |x: &[f64]| -> Vec<f64> {
            let mut px = x.to_vec();
            project_out(&basis, &mut px);
            let lap = grid.laplacian(&px);
            let mut y: Vec<f64> = par::map_range(exec, px.len(), |i| 0.25 * lap[i] + coeff[i] * px[i]);
            project_out(&basis, &mut y);
            y.iter_mut().zip(x.iter().zip(&px)).for_each(|(yi, (xi, pi))| *yi += xi - pi);
            y
        };
        let precond = |x: &[f64]| grid.solve_shifted_laplacian(x, shift);
        let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        project_out(&basis, &mut rhs);
        let rhs_norm = krylov::norm(&rhs);
        if rhs_norm == 0.0 {
            break;
        }
        let lin_tol = (0.01 * history.last().unwrap()).clamp(1e-13, 1e-4);
        let step = gmres(apply, precond, &rhs, lin_tol, opts.gmres_restart, opts.max_linear_iterations);
        linear_iterations += step.iterations;
        if !(step.relative_residual < 0.5) {
            return Err(Error::LinearSolver { relative_residual: step.relative_residual });
        }
        let dnorm = krylov::norm(&step.x);
        let mut sigma = rhs_norm / dnorm;
        if sigma < 1e3 * opts.bifurcation_threshold.max(1e-6) {
            // one inverse-iteration refinement of the estimate
            let probe: Vec<f64> = step.x.iter().map(|v| v / dnorm).collect();
            let w = gmres(apply, precond, &probe, 1e-10, opts.gmres_restart, opts.max_linear_iterations);
            sigma = sigma.min(1.0 / krylov::norm(&w.x));
        }
        sigma_min = sigma_min.min(sigma);
        if sigma < opts.bifurcation_threshold {
            return Err(Error::Bifurcation { sigma_min: sigma, threshold: opts.bifurcation_threshold });
        }

        let r2 = krylov::norm(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = u.iter().zip(&step.x).map(|(a, d)| a + lambda * d).collect();
            let rt = residual_on_grid(&grid, &trial);
            if krylov::norm(&rt) <= (1.0 - 1e-4 * lambda) * r2 || max_abs(&rt) <= opts.tol {
                u = trial;
                r = rt;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Convergence { iterations, history });
        }
        history.push(max_abs(&r));
    }
    let field = ScalarField { values: u, ..start };
    Ok(NewtonReport { field, residual_history: history, iterations, sigma_min_estimate: sigma_min, projected_modes: projected, linear_iterations })
}

/// `V(u) = e^{-2u}/2 + e^u`.
pub fn potential(u: f64) -> f64 {
    0.5 * (-2.0 * u).exp() + u.exp()
}

/// `V(u) - 3/2`, accurate near `u = 0`.
fn excess_potential(u: f64) -> f64 {
    0.5 * (-2.0 * u).exp_m1() + u.exp_m1()
}

fn excess_potential_derivative(u: f64) -> f64 {
    u.exp() - (-2.0 * u).exp()
}

/// The conserved quantity `u'^2/8 + V(u)` of `u'' = 4(e^{-2u} - e^u)`.
pub fn first_integral(u: f64, du: f64) -> f64 {
    du * du / 8.0 + potential(u)
}

fn check_energy(h: f64) -> Result<f64> {
    if !h.is_finite() {
        return Err(Error::domain("energy must be finite"));
    }
    if h <= CRITICAL_ENERGY {
        return Err(Error::domain(format!(
            "degenerate orbit: energy {h} must exceed the minimum 3/2 of the potential"
        )));
    }
    Ok(h - CRITICAL_ENERGY)
}

fn solve_branch(delta: f64, mut lo: f64, mut hi: f64) -> f64 {
    // g is monotone on [lo, hi] and changes sign
    let g = |u: f64| excess_potential(u) - delta;
    let increasing = g(hi) > g(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if (g(mid) > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut u = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = excess_potential_derivative(u);
        if d == 0.0 {
            break;
        }
        let next = u - g(u) / d;
        if next.is_finite() && (next - u).abs() <= (hi - lo).abs().max(1e-300) * 4.0 {
            u = next;
        }
    }
    u
}

/// The roots `u_- < 0 < u_+` of `V(u) = H`.
pub fn turning_points(h: f64) -> Result<(f64, f64)> {
    let delta = check_energy(h)?;
    let upper = h.ln() + 1.0;
    let lower = -0.5 * (2.0 * h).ln() - 1.0;
    Ok((solve_branch(delta, lower, 0.0), solve_branch(delta, 0.0, upper)))
}

/// Period of the orbit at energy `H` by the midpoint rule in `phi`,
/// `u = m + w sin(phi)`; the integrand is smooth and periodic in `phi`, so
/// the rule converges spectrally.
pub fn equivariant_period(h: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::domain("tolerance must be positive"));
    }
    check_energy(h)?;
    let (um, up) = turning_points(h)?;
    let half = 0.5 * (up - um);
    // W(a) - W(u) with d = a - u, written without cancellation
    let gap = |u: f64, d: f64| 0.5 * (-2.0 * u).exp() * (-2.0 * d).exp_m1() + u.exp() * d.exp_m1();
    let estimate = |n: usize| -> f64 {
        let dphi = PI / n as f64;
        let mut sum = 0.0;
        for i in 0..n {
            let phi = -0.5 * PI + (i as f64 + 0.5) * dphi;
            // distance to the nearer turning point, psi = pi/2 - |phi|
            let psi = 0.5 * PI - phi.abs();
            let (sh, ch) = (0.5 * psi).sin_cos();
            let dist = 2.0 * half * sh * sh;
            let g = if phi >= 0.0 { gap(up - dist, dist) } else { gap(um + dist, -dist) };
            // cos(phi) = 2 sin(psi/2) cos(psi/2)
            sum += half * 2.0 * sh * ch / (8.0 * g).sqrt();
        }
        2.0 * sum * dphi
    };
    let mut n = 32;
    let mut prev = estimate(n);
    loop {
        n *= 2;
        let cur = estimate(n);
        let diff = (cur - prev).abs();
        if diff <= 1e-14 * cur {
            return Ok(cur);
        }
        if n >= 1 << 22 {
            if diff <= tol {
                return Ok(cur);
            }
            return Err(Error::Numerical(format!("period quadrature stalled at difference {diff:e}")));
        }
        prev = cur;
    }
}

/// A closed orbit of the reduced ODE, sampled over one period starting at the maximum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquivariantOrbit {
    pub energy: f64,
    pub period: f64,
    pub u_minus: f64,
    pub u_plus: f64,
    /// `u(x_i)` at `x_i = i T / n`.
    pub profile: Vec<f64>,
    /// `u'(x_i)`.
    pub derivative: Vec<f64>,
    /// `max_i |H(x_i) - H|`, bounded by `tol * max(1, H)`.
    pub energy_drift: f64,
}

/// Default number of profile samples.
pub const DEFAULT_PROFILE_SAMPLES: usize = 256;

fn ode_rhs(y: [f64; 2]) -> [f64; 2] {
    [y[1], 4.0 * ((-2.0 * y[0]).exp() - y[0].exp())]
}

fn rk4_step(y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |a: [f64; 2], b: [f64; 2], s: f64| [a[0] + s * b[0], a[1] + s * b[1]];
    let k1 = ode_rhs(y);
    let k2 = ode_rhs(add(y, k1, 0.5 * h));
    let k3 = ode_rhs(add(y, k2, 0.5 * h));
    let k4 = ode_rhs(add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

pub fn solve_equivariant(h: f64, tol: f64) -> Result<EquivariantOrbit> {
    solve_equivariant_with(h, tol, DEFAULT_PROFILE_SAMPLES)
}

pub fn solve_equivariant_with(h: f64, tol: f64, samples: usize) -> Result<EquivariantOrbit> {
    if samples < MIN_RESOLUTION {
        return Err(Error::domain(format!("at least {MIN_RESOLUTION} profile samples required")));
    }
    let period = equivariant_period(h, tol)?;
    let (um, up) = turning_points(h)?;
    // linearized frequency bounds the step: h_step * omega <= 2e-3
    let omega = (4.0 * (2.0 * (-2.0 * um).exp() + up.exp())).sqrt();
    let sub = ((period / samples as f64) * omega / 2e-3).ceil().max(1.0) as usize;
    let dx = period / (samples * sub) as f64;
    let mut y = [up, 0.0];
    let mut profile = Vec::with_capacity(samples);
    let mut derivative = Vec::with_capacity(samples);
    let mut drift: f64 = 0.0;
    for _ in 0..samples {
        profile.push(y[0]);
        derivative.push(y[1]);
        drift = drift.max((first_integral(y[0], y[1]) - h).abs());
        for _ in 0..sub {
            y = rk4_step(y, dx);
        }
    }
    let closing = (y[0] - up).abs().max(y[1].abs() / omega);
    // absolute below H = 1, relative above
    if !(drift <= tol * h.max(1.0)) || !(closing <= tol.max(1e-9)) {
        return Err(Error::Numerical(format!(
            "profile energy drift {drift:e}, closing error {closing:e} exceed tolerance {tol:e}"
        )));
    }
    Ok(EquivariantOrbit { energy: h, period, u_minus: um, u_plus: up, profile, derivative, energy_drift: drift })
}

impl EquivariantOrbit {
    /// Trigonometric interpolant of the profile at `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        let spectrum = self.spectrum();
        spectral::interpolate_periodic(&spectrum, x / self.period)
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut spec: Vec<Complex64> = self.profile.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(spec.len()).process(&mut spec);
        spec
    }

    /// Extends `u(Re z)` to the lattice `(T, omega2)`; needs `Re omega2` to be
    /// an integer multiple of `T`.
    pub fn to_field(&self, omega2: Complex64, nx: usize, ny: usize) -> Result<ScalarField> {
        let lattice = Lattice::new(Complex64::new(self.period, 0.0), omega2)?;
        let shift = omega2.re / self.period;
        if (shift - shift.round()).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "Re(omega2) = {} is not a multiple of the period {}",
                omega2.re, self.period
            )));
        }
        let spectrum = self.spectrum();
        ScalarField::from_fn(lattice, nx, ny, |z| {
            spectral::interpolate_periodic(&spectrum, (z.re / self.period).rem_euclid(1.0))
        })
    }
}
