use std::path::PathBuf;

use clap::{Args, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tzlab::speccurve::*;
use tzlab::tzsolve::fmt_f64;
use tzlab::Execution;

use crate::config::*;

#[derive(Subcommand, Debug)]
pub enum CurveCommand {
    /// Admissibility verdict and hyperelliptic model.
    Check(CurveArgs),
    /// The elliptic curves w^2 = b(x) + 1 and w^2 = b(x) - 1.
    Split(CurveArgs),
    /// Period lattices of the two factors and the commensurability probe.
    Periods(CurveArgs),
    /// Admissibility against the circle oracle over a (u, v, w) box.
    Scan(ScanArgs),
}

#[derive(Args, Serialize, Deserialize, Default, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct CurveArgs {
    /// Curve spec: a JSON file or inline JSON such as `{"type":"II","b":[0,-12,0,1]}`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<String>,
    #[arg(short, long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[arg(short, long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[arg(short, long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    /// Unimodular constant of a type II curve [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<ComplexArg>,
    /// Circle samples for the branch-point oracle [default: 256].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// `periods`: a single elliptic cubic c0 c1 c2 c3 instead of a spectral curve.
    #[arg(long, num_args = 4, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cubic: Option<Vec<f64>>,
    /// Quadrature tolerance, cross-checked against the AGM [default: 1e-10].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Residual below which the probe suggests commensurability [default: 1e-9].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probe_tol: Option<f64>,
    /// `periods`: CSV of the period lattices.
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Default, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct ScanArgs {
    /// [default: -3 1]
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_range: Option<Vec<f64>>,
    /// [default: -1 3]
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_range: Option<Vec<f64>>,
    /// [default: -20 20]
    #[arg(long, num_args = 2, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_range: Option<Vec<f64>>,
    /// Grid points per axis, endpoints included [default: 20].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// [default: 256]
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Include the period ratios of both factors.
    #[arg(long)]
    #[serde(skip_serializing_if = "is_false")]
    pub periods: bool,
    /// [default: scan.csv]
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Boundary band inside which the verdict and the oracle may disagree.
const BOUNDARY_BAND: f64 = 1e-9;

/// The curve spec, parsed but not yet validated.
fn load_spec(args: &CurveArgs) -> Outcome<CurveSpec> {
    let k = args.k.map(|z| [z.0.re, z.0.im]);
    match (&args.curve, args.u, args.v, args.w) {
        (Some(_), Some(_), _, _) | (Some(_), _, Some(_), _) | (Some(_), _, _, Some(_)) => {
            Err(Failure::invalid("give either --curve or -u/-v/-w, not both"))
        }
        (Some(spec), ..) => {
            let text = if spec.trim_start().starts_with('{') {
                spec.clone()
            } else {
                std::fs::read_to_string(spec).map_err(|e| Failure::invalid(format!("cannot read {spec}: {e}")))?
            };
            let mut parsed: CurveSpec = serde_json::from_str(&text)?;
            if k.is_some() {
                parsed.k = k;
            }
            Ok(parsed)
        }
        (None, Some(u), Some(v), Some(w)) => {
            Ok(CurveSpec { kind: "II".into(), k, b: None, u: Some(u), v: Some(v), w: Some(w) })
        }
        _ => Err(Failure::invalid("missing curve: give --curve or all of -u, -v, -w")),
    }
}

fn load_curve(args: &CurveArgs) -> Outcome<SpectralCurve> {
    Ok(load_spec(args)?.to_curve()?)
}

fn type_ii(curve: SpectralCurve) -> Outcome<CurveTypeII> {
    match curve {
        SpectralCurve::II(c) => Ok(c),
        SpectralCurve::I(_) => Err(Failure::invalid("this operation needs a type II curve")),
    }
}

pub fn run(cmd: &CurveCommand, config: Option<&std::path::Path>) -> Outcome {
    match cmd {
        CurveCommand::Check(a) => check(&resolve(a, config)?),
        CurveCommand::Split(a) => split(&resolve(a, config)?),
        CurveCommand::Periods(a) => periods(&resolve(a, config)?),
        CurveCommand::Scan(a) => scan_box(&resolve(a, config)?),
    }
}

fn check(args: &CurveArgs) -> Outcome {
    let spec = load_spec(args)?;
    let curve = match (spec.to_curve(), spec.kind.as_str(), spec.b) {
        (Ok(c), ..) => c,
        // the sextic still makes sense for a non-palindromic cubic
        (Err(_), "I", Some(b)) => {
            let raw = b.map(Coefficient::value);
            let model = hyperelliptic_type_i(&raw);
            println!("admissible: n/a (no admissibility criterion for type I curves)");
            println!("palindromic: false (defect {:e})", palindromic_defect(&raw));
            println!("hyperelliptic: degree {}, {}", model.degree, model.warning().unwrap_or_else(|| "six distinct roots".into()));
            return Ok(());
        }
        (Err(e), ..) => return Err(e.into()),
    };
    let model = hyperelliptic_model(&curve);
    let mut mismatch = None;
    match curve {
        SpectralCurve::I(_) => println!("admissible: n/a (no admissibility criterion for type I curves)"),
        SpectralCurve::II(c) => {
            let samples = args.samples.unwrap_or(256);
            let circle = circle_branch_check(&c, samples)?;
            match c.monic_critical_data() {
                Some(d) => {
                    let verdict = admissible(d.u, d.v, d.w)?;
                    let dist = boundary_distance(d.u, d.v, d.w);
                    println!("admissible: {verdict}");
                    println!("circle_branch: {circle}");
                    println!("critical: u = {}, v = {}, w = {}", d.u, d.v, d.w);
                    let (lo, hi) = admissible_bounds(d.u, d.v);
                    println!("bounds: {lo} < w < {hi}, v - u = {} (needs > {})", d.v - d.u, critical_gap());
                    println!("boundary_distance: {dist:e}");
                    if verdict != circle && dist > BOUNDARY_BAND {
                        mismatch = Some((verdict, circle));
                    }
                }
                None => {
                    println!("admissible: false (b has no two distinct real critical points)");
                    println!("circle_branch: {circle}");
                    if circle {
                        mismatch = Some((false, circle));
                    }
                }
            }
        }
    }
    let degree = model.degree;
    println!("hyperelliptic: degree {degree}, {}", model.warning().unwrap_or_else(|| "six distinct roots".into()));
    match mismatch {
        Some((a, b)) => Err(Failure::numerical(format!("admissibility {a} disagrees with the circle oracle {b}"))),
        None => Ok(()),
    }
}

fn elliptic_json(e: &EllipticCurveModel) -> serde_json::Value {
    json!({ "cubic": e.cubic(), "discriminant": e.discriminant(), "j_invariant": e.j_invariant() })
}

fn split(args: &CurveArgs) -> Outcome {
    let curve = type_ii(load_curve(args)?)?;
    let (e1, e2) = elliptic_split(&curve)?;
    let admissible = curve.monic_critical_data().map(|d| admissible(d.u, d.v, d.w)).transpose()?.unwrap_or(false);
    let out = json!({ "admissible": admissible, "E1": elliptic_json(&e1), "E2": elliptic_json(&e2) });
    print!("{}", to_json(&out)?);
    Ok(())
}

fn periods_json(p: &Periods) -> serde_json::Value {
    let r = p.ratio();
    json!({ "omega1": [p.omega1.re, p.omega1.im], "omega2": [p.omega2.re, p.omega2.im], "ratio": [r.re, r.im] })
}

fn periods(args: &CurveArgs) -> Outcome {
    let tol = check_tolerance("tol", args.tol.unwrap_or(1e-10))?;
    let probe_tol = check_tolerance("probe-tol", args.probe_tol.unwrap_or(1e-9))?;
    let named: Vec<(&str, EllipticCurveModel)> = match &args.cubic {
        Some(c) => vec![("E", EllipticCurveModel::new([c[0], c[1], c[2], c[3]])?)],
        None => {
            let (e1, e2) = elliptic_split(&type_ii(load_curve(args)?)?)?;
            vec![("E1", e1), ("E2", e2)]
        }
    };
    let mut csv = String::from("curve,omega1_re,omega1_im,omega2_re,omega2_im,tau_re,tau_im\n");
    let mut out = serde_json::Map::new();
    let mut lattices = Vec::new();
    for (name, e) in &named {
        let p = elliptic_periods(e, tol)?;
        let r = p.ratio();
        csv.push_str(&format!(
            "{name},{},{},{},{},{},{}\n",
            fmt_f64(p.omega1.re),
            fmt_f64(p.omega1.im),
            fmt_f64(p.omega2.re),
            fmt_f64(p.omega2.im),
            fmt_f64(r.re),
            fmt_f64(r.im)
        ));
        out.insert(name.to_string(), periods_json(&p));
        lattices.push(p);
    }
    if let [p1, p2] = lattices[..] {
        out.insert("commensurability".into(), serde_json::to_value(commensurability_probe(&p1, &p2, probe_tol))?);
    }
    if let Some(path) = &args.output {
        write_file(path, &csv)?;
    }
    print!("{}", to_json(&out)?);
    Ok(())
}

fn range(r: &Option<Vec<f64>>, default: [f64; 2], name: &str) -> Outcome<[f64; 2]> {
    let r = r.as_ref().map_or(default, |v| [v[0], v[1]]);
    if !(r[0].is_finite() && r[1].is_finite() && r[0] <= r[1]) {
        return Err(Failure::invalid(format!("{name} must be finite with lo <= hi, got {r:?}")));
    }
    Ok(r)
}

fn scan_box(args: &ScanArgs) -> Outcome {
    let region = ScanBox {
        u: range(&args.u_range, [-3.0, 1.0], "u-range")?,
        v: range(&args.v_range, [-1.0, 3.0], "v-range")?,
        w: range(&args.w_range, [-20.0, 20.0], "w-range")?,
        n: args.n.unwrap_or(20),
    };
    let rows = scan(&region, args.samples.unwrap_or(256), args.periods, Execution::Parallel)?;
    let path = args.output.clone().unwrap_or_else(|| PathBuf::from("scan.csv"));
    write_file(&path, &scan_to_csv(&rows))?;
    let interior = rows.iter().filter(|r| r.boundary_distance > BOUNDARY_BAND).count();
    let mismatches = rows.iter().filter(|r| r.boundary_distance > BOUNDARY_BAND && r.admissible != r.circle_branch).count();
    let summary = json!({
        "rows": rows.len(),
        "admissible": rows.iter().filter(|r| r.admissible).count(),
        "interior": interior,
        "mismatches": mismatches,
        "split_failures": rows.iter().filter(|r| !r.split_ok).count(),
        "output": path.display().to_string(),
    });
    print!("{}", to_json(&summary)?);
    if mismatches > 0 {
        return Err(Failure::numerical(format!("{mismatches} cells disagree with the circle oracle")));
    }
    Ok(())
}
