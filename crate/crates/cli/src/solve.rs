use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tzlab::tzsolve::{self, Lattice, NewtonOptions, ScalarField};

use crate::config::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    #[default]
    Zero,
    /// Random low Fourier modes of size `--amplitude`.
    Random,
}

#[derive(Args, Serialize, Deserialize, Default, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct SolveArgs {
    /// Lattice periods, e.g. `--lattice 6.28 0+6.28i`.
    #[arg(long, num_args = 2, value_names = ["OMEGA1", "OMEGA2"], allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Vec<ComplexArg>>,
    /// Grid points per direction (power of two, at least 16) [default: 64].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Newton tolerance on max |residual| [default: 1e-12].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<Init>,
    /// Initial guess read from a field file (overrides --init).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// [default: 0.1]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Build the y-independent solution at energy `--energy` over `(T(H), omega2)`.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub equivariant: bool,
    /// First integral H > 3/2 [default: 2].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    /// Second period for --equivariant [default: i].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega2: Option<ComplexArg>,
    /// [default: 50]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
    /// Solution file, `.csv` or `.json` [default: u.json].
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Convergence log (JSON) [default: <output>.log.json].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<PathBuf>,
    /// Equivariant profile CSV (x, u, u').
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
}

fn random_modes(l: Lattice, n: usize, amplitude: f64, seed: u64) -> Outcome<ScalarField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut modes = Vec::new();
    for p in -2i32..=2 {
        for q in -2i32..=2 {
            if (p, q) != (0, 0) {
                modes.push((p as f64, q as f64, rng.random_range(-1.0f64..1.0), rng.random_range(0.0..2.0 * PI)));
            }
        }
    }
    let norm: f64 = modes.iter().map(|m| m.2.abs()).sum();
    let (w1, w2) = (l.omega1(), l.omega2());
    let det = w1.re * w2.im - w1.im * w2.re;
    Ok(ScalarField::from_fn(l, n, n, |z| {
        let s = (z.re * w2.im - z.im * w2.re) / det;
        let t = (w1.re * z.im - w1.im * z.re) / det;
        modes.iter().map(|&(p, q, a, ph)| a * (2.0 * PI * (p * s + q * t) + ph).cos()).sum::<f64>() * amplitude / norm
    })?)
}

fn log_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".log.json");
    PathBuf::from(s)
}

pub fn run(args: &SolveArgs) -> Outcome {
    let n = check_resolution(args.n.unwrap_or(64))?;
    let tol = check_tolerance("tol", args.tol.unwrap_or(1e-12))?;
    let output = args.output.clone().unwrap_or_else(|| PathBuf::from("u.json"));
    let mut log = json!({});

    let (lattice, u0) = if args.equivariant {
        let h = args.energy.unwrap_or(2.0);
        let orbit = tzsolve::solve_equivariant(h, tol.max(1e-13))?;
        let omega2 = args.omega2.map_or(Complex64::new(0.0, 1.0), |z| z.0);
        let u = orbit.to_field(omega2, n, n)?;
        if let Some(path) = &args.profile {
            let mut csv = String::from("x,u,du\n");
            let m = orbit.profile.len();
            for (i, (u, du)) in orbit.profile.iter().zip(&orbit.derivative).enumerate() {
                let x = orbit.period * i as f64 / m as f64;
                csv.push_str(&format!("{},{},{}\n", tzsolve::fmt_f64(x), tzsolve::fmt_f64(*u), tzsolve::fmt_f64(*du)));
            }
            write_file(path, &csv)?;
        }
        log["equivariant"] = json!({
            "energy": h,
            "period": orbit.period,
            "u_minus": orbit.u_minus,
            "u_plus": orbit.u_plus,
            "energy_drift": orbit.energy_drift,
        });
        (*u.lattice(), u)
    } else {
        let lat = required(args.lattice.as_ref(), "lattice")?;
        let lattice = Lattice::new(lat[0].0, lat[1].0)?;
        let u0 = match &args.input {
            Some(path) => {
                let u = ScalarField::read(path)?;
                check_resolution(u.nx())?;
                check_resolution(u.ny())?;
                u
            }
            None => match args.init.unwrap_or_default() {
                Init::Zero => ScalarField::zeros(lattice, n, n)?,
                Init::Random => random_modes(lattice, n, args.amplitude.unwrap_or(0.1), args.seed.unwrap_or(0))?,
            },
        };
        (lattice, u0)
    };

    let mut opts = NewtonOptions::new(tol);
    if let Some(m) = args.max_iterations {
        opts.max_iterations = m;
    }
    let report = tzsolve::solve_periodic_with(&lattice, &u0, &opts);
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            if let tzlab::Error::Convergence { history, .. } = &e {
                log["newton"] = json!({ "converged": false, "residual_history": history });
                write_file(&args.log.clone().unwrap_or_else(|| log_path(&output)), &to_json(&log)?)?;
            }
            return Err(e.into());
        }
    };
    let residual = tzsolve::residual(&report.field).max_abs();
    report.field.write(&output)?;
    log["newton"] = json!({
        "converged": true,
        "iterations": report.iterations,
        "residual_history": report.residual_history,
        "linear_iterations": report.linear_iterations,
        "projected_modes": report.projected_modes,
        "sigma_min_estimate": if report.sigma_min_estimate.is_finite() { json!(report.sigma_min_estimate) } else { json!(null) },
    });
    log["residual"] = json!(residual);
    log["resolution"] = json!([report.field.nx(), report.field.ny()]);
    log["lattice"] = json!([[lattice.omega1().re, lattice.omega1().im], [lattice.omega2().re, lattice.omega2().im]]);
    log["output"] = json!(output.display().to_string());
    write_file(&args.log.clone().unwrap_or_else(|| log_path(&output)), &to_json(&log)?)?;
    print!("{}", to_json(&log)?);
    if !(residual <= tol) {
        return Err(Failure::numerical(format!("final residual {residual:e} above tolerance {tol:e}")));
    }
    Ok(())
}
