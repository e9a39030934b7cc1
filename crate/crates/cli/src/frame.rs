use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tzlab::framerec::{self, FrameOptions, IntegrationOrder, LegendrianSurface};
use tzlab::liecore::UnitaryMatrix3;
use tzlab::tzsolve::{fmt_f64, Generator, ScalarField};
use tzlab::VerificationReport;

use crate::config::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Order {
    Rows,
    Columns,
}

/// Options shared by every command that integrates a frame.
#[derive(Args, Serialize, Deserialize, Default, Debug)]
#[serde(default, deny_unknown_fields)]
pub struct FrameArgs {
    /// Solution field (`.csv` or `.json`).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<PathBuf>,
    /// Spectral parameter on the unit circle [default: 1].
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ComplexArg>,
    /// Integration order over the grid [default: rows].
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<Order>,
    /// Largest admissible flatness defect [default: 1e-5].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flatness_threshold: Option<f64>,
    /// Output directory for `frame`; output file for `verify` and `export`.
    #[arg(long, short)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Cone radii (`frame`: optional OBJ; `export`: default 1).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
}

struct Integrated {
    field: ScalarField,
    frames: framerec::FrameField,
    surface: LegendrianSurface,
}

fn integrate(args: &FrameArgs) -> Outcome<Integrated> {
    let path = required(args.field.as_ref(), "field")?;
    let field = ScalarField::read(path)?;
    check_resolution(field.nx())?;
    check_resolution(field.ny())?;
    let zeta = args.zeta.map_or(Complex64::new(1.0, 0.0), |z| z.0);
    let mut opts = FrameOptions::default();
    if let Some(t) = args.flatness_threshold {
        opts.flatness_threshold = check_tolerance("flatness-threshold", t)?;
    }
    if args.order == Some(Order::Columns) {
        opts.order = IntegrationOrder::ColumnsFirst;
    }
    let frames = framerec::integrate_frame_with(&field, zeta, &UnitaryMatrix3::identity(), &opts)?;
    let surface = LegendrianSurface::from_frames(&frames);
    Ok(Integrated { field, frames, surface })
}

fn fail_unless_pass(reports: &[&VerificationReport]) -> Outcome {
    let failures: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failures())
        .map(|e| format!("{} = {:e} > {:e}", e.name, e.max_deviation, e.threshold))
        .collect();
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::numerical(format!("verification failed: {}", failures.join(", "))))
    }
}

fn surface_csv(s: &LegendrianSurface) -> String {
    let mut out = String::from("j,k,f1_re,f1_im,f2_re,f2_im,f3_re,f3_im\n");
    for j in 0..s.nx() {
        for k in 0..s.ny() {
            let p = s.point(j, k);
            out.push_str(&format!("{j},{k}"));
            for z in p.iter() {
                out.push_str(&format!(",{},{}", fmt_f64(z.re), fmt_f64(z.im)));
            }
            out.push('\n');
        }
    }
    out
}

fn mesh_output(s: &LegendrianSurface, radii: &[f64], path: &Path) -> Outcome {
    let mesh = framerec::cone_mesh(s, radii)?;
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => mesh.to_csv(),
        Some("obj") => mesh.to_obj(&framerec::default_projection())?,
        _ => return Err(Failure::invalid(format!("{}: mesh output must end in .obj or .csv", path.display()))),
    };
    write_file(path, &text)
}

pub fn run_frame(args: &FrameArgs) -> Outcome {
    let it = integrate(args)?;
    let dir = args.output.clone().unwrap_or_else(|| PathBuf::from("frame_out"));
    let legendrian = framerec::verify_legendrian(&it.surface, &it.field)?;
    let frame_checks = framerec::verify_frame(&it.frames, &it.field)?;
    let mono: Vec<_> = [("omega1", Generator::Omega1), ("omega2", Generator::Omega2)]
        .into_iter()
        .map(|(name, g)| {
            let m = framerec::monodromy(&it.frames, g);
            json!({ "generator": name, "matrix": m.matrix, "distance_to_center": m.distance_to_center })
        })
        .collect();
    write_file(&dir.join("frames.json"), &serde_json::to_string(&it.frames)?)?;
    write_file(&dir.join("surface.csv"), &surface_csv(&it.surface))?;
    write_file(&dir.join("monodromy.json"), &to_json(&mono)?)?;
    write_file(&dir.join("verification.json"), &legendrian.to_json()?)?;
    write_file(&dir.join("frame_checks.json"), &frame_checks.to_json()?)?;
    if let Some(radii) = &args.radii {
        mesh_output(&it.surface, radii, &dir.join("cone.obj"))?;
    }
    let summary = json!({
        "zeta": [it.frames.zeta().re, it.frames.zeta().im],
        "flatness_defect": it.frames.flatness_defect,
        "max_drift": it.frames.max_drift,
        "monodromy": mono.iter().map(|m| json!({ "generator": m["generator"], "distance_to_center": m["distance_to_center"] })).collect::<Vec<_>>(),
        "verification": legendrian.entries,
        "frame_checks": frame_checks.entries,
        "output": dir.display().to_string(),
    });
    print!("{}", to_json(&summary)?);
    fail_unless_pass(&[&legendrian, &frame_checks])
}

pub fn run_verify(args: &FrameArgs) -> Outcome {
    let it = integrate(args)?;
    let report = framerec::verify_legendrian(&it.surface, &it.field)?;
    let text = report.to_json()? + "\n";
    match &args.output {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    fail_unless_pass(&[&report])
}

pub fn run_export(args: &FrameArgs) -> Outcome {
    let it = integrate(args)?;
    let path = args.output.clone().unwrap_or_else(|| PathBuf::from("cone.obj"));
    let radii = args.radii.clone().unwrap_or_else(|| vec![1.0]);
    mesh_output(&it.surface, &radii, &path)?;
    println!("wrote {} ({} radii, {}x{} samples)", path.display(), radii.len(), it.surface.nx(), it.surface.ny());
    Ok(())
}
