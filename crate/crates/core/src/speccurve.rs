//! Genus-4 spectral curves of the two families
//!
//! * type I:  `lambda^3 = b(x)` style curves with `b(x) = b0 + b1 x + conj(b1) x^2 + conj(b0) x^3`,
//!   hyperelliptic model `w^2 = b(x)^2 - x^3`;
//! * type II: real cubic `b`, hyperelliptic model `w^2 = b(x)^2 - 1`,
//!
//! together with admissibility of type II curves, the splitting of the Prym
//! variety into the elliptic curves `w^2 = b(x) + 1` and `w^2 = b(x) - 1`,
//! their period lattices, and a rational-approximation probe of how the two
//! lattices are coupled.

use std::cmp::Ordering;
use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::par::{self, Execution};
use crate::poly::{self, CubicRoots, ExactComplex};
use crate::{quad, Error, Result};

/// `4^{1/3}`, the minimal gap between the critical points of an admissible `b`.
pub fn critical_gap() -> f64 {
    4f64.cbrt()
}

const UNIMODULAR_TOL: f64 = 1e-12;
const PALINDROME_TOL: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTypeI {
    pub b0: Complex64,
    pub b1: Complex64,
}

impl CurveTypeI {
    pub fn new(b0: Complex64, b1: Complex64) -> Result<Self> {
        if !(b0.re.is_finite() && b0.im.is_finite() && b1.re.is_finite() && b1.im.is_finite()) {
            return Err(Error::domain("type I coefficients must be finite"));
        }
        Ok(Self { b0, b1 })
    }

    /// Accepts ascending coefficients if they are conjugate-palindromic.
    pub fn from_coefficients(cs: [Complex64; 4]) -> Result<Self> {
        let defect = palindromic_defect(&cs);
        let scale = cs.iter().map(|z| z.norm()).fold(1.0, f64::max);
        if !(defect <= PALINDROME_TOL * scale) {
            return Err(Error::domain(format!(
                "type I cubic must satisfy c3 = conj(c0), c2 = conj(c1) (defect {defect:.3e})"
            )));
        }
        Self::new(cs[0], cs[1])
    }

    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.b0, self.b1, self.b1.conj(), self.b0.conj()]
    }

    pub fn eval(&self, x: Complex64) -> Complex64 {
        poly::eval_complex(&self.coefficients(), x)
    }

    pub fn hyperelliptic_model(&self) -> HyperellipticModel {
        hyperelliptic_type_i(&self.coefficients())
    }
}

/// `max(|c3 - conj(c0)|, |c2 - conj(c1)|)`.
pub fn palindromic_defect(cs: &[Complex64; 4]) -> f64 {
    (cs[3] - cs[0].conj()).norm().max((cs[2] - cs[1].conj()).norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticalData {
    pub u: f64,
    pub v: f64,
    pub w: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTypeII {
    k: Complex64,
    b: [f64; 4],
    critical: Option<CriticalData>,
}

/// `b(x) = x^3 - 3/2 (u + v) x^2 + 3 u v x + w`, so `b'(x) = 3 (x - u)(x - v)`.
pub fn normal_form(u: f64, v: f64, w: f64) -> [f64; 4] {
    [w, 3.0 * u * v, -1.5 * (u + v), 1.0]
}

fn check_k(k: Complex64) -> Result<()> {
    if !((k.norm() - 1.0).abs() <= UNIMODULAR_TOL) {
        return Err(Error::domain(format!("k must be unimodular, |k| = {}", k.norm())));
    }
    Ok(())
}

impl CurveTypeII {
    pub fn new(k: Complex64, b: [f64; 4]) -> Result<Self> {
        check_k(k)?;
        if b.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("b coefficients must be finite"));
        }
        if b[3] == 0.0 {
            return Err(Error::domain("b must have degree 3"));
        }
        Ok(Self { k, b, critical: None })
    }

    pub fn from_critical(u: f64, v: f64, w: f64, k: Complex64) -> Result<Self> {
        if !(u.is_finite() && v.is_finite() && w.is_finite()) {
            return Err(Error::domain("u, v, w must be finite"));
        }
        let mut curve = Self::new(k, normal_form(u, v, w))?;
        curve.critical = Some(CriticalData { u, v, w });
        Ok(curve)
    }

    pub fn k(&self) -> Complex64 {
        self.k
    }

    pub fn b(&self) -> [f64; 4] {
        self.b
    }

    pub fn critical(&self) -> Option<CriticalData> {
        self.critical
    }

    pub fn eval(&self, x: f64) -> f64 {
        poly::eval_real(&self.b, x)
    }

    /// Rescales `x` so that `b` becomes monic.
    pub fn monic(&self) -> Self {
        let s = (1.0 / self.b[3]).cbrt();
        let b = [self.b[0], self.b[1] * s, self.b[2] * s * s, 1.0];
        let critical = self.critical.map(|d| CriticalData { u: d.u / s, v: d.v / s, w: d.w });
        Self { k: self.k, b, critical }
    }

    /// Critical data `(u, v, w)` of the monic rescaling, or `None` when `b`
    /// has no two distinct real critical points.
    pub fn monic_critical_data(&self) -> Option<CriticalData> {
        let m = self.monic();
        if let Some(d) = m.critical {
            return Some(d);
        }
        // b' / 3 = x^2 - s x + p
        let (s, p) = (-2.0 * m.b[2] / 3.0, m.b[1] / 3.0);
        let disc = s * s - 4.0 * p;
        if !(disc > 0.0) {
            return None;
        }
        let q = 0.5 * (s + disc.sqrt().copysign(s));
        let (t1, t2) = if q == 0.0 { (-0.5 * disc.sqrt(), 0.5 * disc.sqrt()) } else { (q, p / q) };
        Some(CriticalData { u: t1.min(t2), v: t1.max(t2), w: m.b[0] })
    }

    /// The curve for `-b(-x)`.
    pub fn reflected(&self) -> Self {
        let b = [-self.b[0], self.b[1], -self.b[2], self.b[3]];
        let critical = self.critical.map(|d| CriticalData { u: -d.v, v: -d.u, w: -d.w });
        Self { k: self.k, b, critical }
    }

    pub fn hyperelliptic_model(&self) -> HyperellipticModel {
        hyperelliptic_type_ii(&self.b)
    }
}

/// The strict bounds on `w` from the admissibility lemma, for `u < v`.
pub fn admissible_bounds(u: f64, v: f64) -> (f64, f64) {
    (1.0 + 0.5 * u * u * (u - 3.0 * v), 0.5 * v * v * (v - 3.0 * u) - 1.0)
}

/// True iff `v - u > 4^{1/3}` and `1 + u^2 (u - 3v)/2 < w < v^2 (v - 3u)/2 - 1`.
pub fn admissible(u: f64, v: f64, w: f64) -> Result<bool> {
    if !(u.is_finite() && v.is_finite() && w.is_finite()) {
        return Err(Error::domain("u, v, w must be finite"));
    }
    if u >= v {
        return Err(Error::domain(format!("admissibility needs u < v, got u = {u}, v = {v}")));
    }
    let (lo, hi) = admissible_bounds(u, v);
    Ok(v - u > critical_gap() && lo < w && w < hi)
}

/// Distance of `(u, v, w)` to the boundary of the admissible region, measured
/// on the three defining inequalities.
pub fn boundary_distance(u: f64, v: f64, w: f64) -> f64 {
    let (lo, hi) = admissible_bounds(u, v);
    (w - lo).abs().min((hi - w).abs()).min((v - u - critical_gap()).abs())
}

/// Samples `theta_j = 2 pi j / samples` and requires `b(x) - cos(theta_j)` to
/// have three distinct real roots at each.
pub fn circle_branch_check(curve: &CurveTypeII, samples: usize) -> Result<bool> {
    if samples < 16 {
        return Err(Error::domain(format!("need at least 16 samples, got {samples}")));
    }
    let b = curve.b;
    Ok((0..samples).all(|j| {
        let theta = 2.0 * PI * j as f64 / samples as f64;
        let shifted = [b[0] - theta.cos(), b[1], b[2], b[3]];
        poly::cubic_discriminant_sign(&shifted) == Ordering::Greater
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperellipticModel {
    /// Ascending coefficients of the sextic.
    pub coefficients: Vec<Complex64>,
    /// Degree of `gcd(p, p')`, computed exactly.
    pub repeated_root_degree: usize,
    pub degree: usize,
}

impl HyperellipticModel {
    pub fn distinct_roots(&self) -> bool {
        self.degree == 6 && self.repeated_root_degree == 0
    }

    pub fn warning(&self) -> Option<String> {
        if self.degree < 6 {
            Some(format!("sextic degenerates to degree {}: branch points at infinity", self.degree))
        } else if self.repeated_root_degree > 0 {
            Some(format!(
                "repeated roots (gcd with derivative has degree {}): the curve is singular",
                self.repeated_root_degree
            ))
        } else {
            None
        }
    }
}

fn model_from_exact(p: Vec<ExactComplex>) -> HyperellipticModel {
    let mut coefficients: Vec<Complex64> = p.iter().map(poly::to_f64).collect();
    coefficients.resize(7, c(0.0, 0.0));
    let degree = p.len().saturating_sub(1);
    HyperellipticModel { coefficients, repeated_root_degree: poly::repeated_root_degree(&p), degree }
}

/// `w^2 = b(x)^2 - x^3` for raw ascending cubic coefficients.
pub fn hyperelliptic_type_i(b: &[Complex64; 4]) -> HyperellipticModel {
    let eb: Vec<ExactComplex> = b.iter().map(|z| poly::exact_complex(*z)).collect();
    let mut x3 = vec![poly::exact_complex(c(0.0, 0.0)); 3];
    x3.push(poly::exact_complex(c(1.0, 0.0)));
    model_from_exact(poly::exact_sub(&poly::exact_mul(&eb, &eb), &x3))
}

/// `w^2 = b(x)^2 - 1`.
pub fn hyperelliptic_type_ii(b: &[f64; 4]) -> HyperellipticModel {
    let eb: Vec<ExactComplex> = b.iter().map(|&x| poly::exact_complex(c(x, 0.0))).collect();
    let one = [poly::exact_complex(c(1.0, 0.0))];
    model_from_exact(poly::exact_sub(&poly::exact_mul(&eb, &eb), &one))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum SpectralCurve {
    #[serde(rename = "I")]
    I(CurveTypeI),
    #[serde(rename = "II")]
    II(CurveTypeII),
}

pub fn hyperelliptic_model(curve: &SpectralCurve) -> HyperellipticModel {
    match curve {
        SpectralCurve::I(c) => c.hyperelliptic_model(),
        SpectralCurve::II(c) => c.hyperelliptic_model(),
    }
}

/// Either a real number or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl Coefficient {
    pub fn value(self) -> Complex64 {
        match self {
            Coefficient::Real(x) => c(x, 0.0),
            Coefficient::Complex([re, im]) => c(re, im),
        }
    }
}

/// The JSON description of a curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<[Coefficient; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
}

impl CurveSpec {
    pub fn to_curve(&self) -> Result<SpectralCurve> {
        let k = self.k.map(|[re, im]| c(re, im)).unwrap_or(c(1.0, 0.0));
        match self.kind.as_str() {
            "I" => {
                let b = self.b.ok_or_else(|| Error::domain("type I curve needs b"))?;
                Ok(SpectralCurve::I(CurveTypeI::from_coefficients(b.map(Coefficient::value))?))
            }
            "II" => match (self.b, self.u, self.v, self.w) {
                (Some(b), None, None, None) => {
                    let vals = b.map(Coefficient::value);
                    if vals.iter().any(|z| z.im != 0.0) {
                        return Err(Error::domain("type II coefficients must be real"));
                    }
                    Ok(SpectralCurve::II(CurveTypeII::new(k, vals.map(|z| z.re))?))
                }
                (None, Some(u), Some(v), Some(w)) => Ok(SpectralCurve::II(CurveTypeII::from_critical(u, v, w, k)?)),
                _ => Err(Error::domain("type II curve needs either b or all of u, v, w")),
            },
            other => Err(Error::domain(format!("unknown curve type {other:?}, expected \"I\" or \"II\""))),
        }
    }

    pub fn from_curve(curve: &SpectralCurve) -> Self {
        match curve {
            SpectralCurve::I(t) => Self {
                kind: "I".into(),
                k: None,
                b: Some(t.coefficients().map(|z| Coefficient::Complex([z.re, z.im]))),
                u: None,
                v: None,
                w: None,
            },
            SpectralCurve::II(t) => {
                let k = Some([t.k.re, t.k.im]);
                match t.critical {
                    Some(d) => Self { kind: "II".into(), k, b: None, u: Some(d.u), v: Some(d.v), w: Some(d.w) },
                    None => Self { kind: "II".into(), k, b: Some(t.b.map(Coefficient::Real)), u: None, v: None, w: None },
                }
            }
        }
    }

    pub fn parse(json: &str) -> Result<SpectralCurve> {
        let spec: CurveSpec = serde_json::from_str(json)?;
        spec.to_curve()
    }
}

/// `w^2 = c(x)` with `c` a real cubic of nonzero discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticCurveModel {
    cubic: [f64; 4],
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Periods {
    pub omega1: Complex64,
    pub omega2: Complex64,
}

impl Periods {
    pub fn ratio(&self) -> Complex64 {
        self.omega2 / self.omega1
    }

    fn basis(&self) -> [[f64; 2]; 2] {
        [[self.omega1.re, self.omega2.re], [self.omega1.im, self.omega2.im]]
    }
}

fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        if (a - b).abs() <= 1e-16 * a {
            break;
        }
        let next = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = next;
    }
    0.5 * (a + b)
}

impl EllipticCurveModel {
    pub fn new(cubic: [f64; 4]) -> Result<Self> {
        if cubic.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("cubic coefficients must be finite"));
        }
        if cubic[3] == 0.0 {
            return Err(Error::domain("elliptic model needs a cubic of degree 3"));
        }
        if poly::cubic_discriminant_sign(&cubic) == Ordering::Equal {
            return Err(Error::Degenerate(format!("cubic {cubic:?} has a repeated root")));
        }
        Ok(Self { cubic })
    }

    pub fn cubic(&self) -> [f64; 4] {
        self.cubic
    }

    pub fn discriminant(&self) -> f64 {
        poly::cubic_discriminant(&self.cubic)
    }

    pub fn j_invariant(&self) -> f64 {
        let a = self.cubic[3];
        let (b, cc, d) = (self.cubic[2] / a, self.cubic[1] / a, self.cubic[0] / a);
        let p = cc - b * b / 3.0;
        let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
        1728.0 * 4.0 * p * p * p / (4.0 * p * p * p + 27.0 * q * q)
    }

    /// Same lattice, positive leading coefficient (`x -> -x` if needed).
    fn oriented(&self) -> [f64; 4] {
        let c = self.cubic;
        if c[3] > 0.0 { c } else { [c[0], -c[1], c[2], -c[3]] }
    }

    /// Periods from closed forms in the arithmetic-geometric mean.
    pub fn periods_agm(&self) -> Periods {
        let cubic = self.oriented();
        let sa = cubic[3].sqrt();
        match poly::real_cubic_roots(&cubic) {
            CubicRoots::Three([e1, e2, e3]) => Periods {
                omega1: c(2.0 * PI / (sa * agm((e3 - e1).sqrt(), (e3 - e2).sqrt())), 0.0),
                omega2: c(0.0, 2.0 * PI / (sa * agm((e3 - e1).sqrt(), (e2 - e1).sqrt()))),
            },
            CubicRoots::One(e1, root) => {
                let (d, q) = (e1 - root.re, root.im);
                let z = d.hypot(q);
                // 2z +- 2d without cancellation
                let (plus, minus) = if d >= 0.0 {
                    (2.0 * (z + d), 2.0 * q * q / (z + d))
                } else {
                    (2.0 * q * q / (z - d), 2.0 * (z - d))
                };
                let omega1 = 4.0 * PI / (sa * agm(2.0 * z.sqrt(), plus.sqrt()));
                let j = 2.0 * PI / (sa * agm(2.0 * z.sqrt(), minus.sqrt()));
                Periods { omega1: c(omega1, 0.0), omega2: c(0.5 * omega1, j) }
            }
        }
    }

    /// Periods by adaptive Gauss–Kronrod quadrature of `dx/w` along the real
    /// cycles, with substitutions removing the endpoint singularities.
    pub fn periods_quadrature(&self, tol: f64) -> Result<Periods> {
        if !(tol > 0.0) {
            return Err(Error::domain("tolerance must be positive"));
        }
        let rtol = (0.1 * tol).max(1e-15);
        let cubic = self.oriented();
        let a = cubic[3];
        let run = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
            quad::integrate(f, lo, hi, 0.0, rtol, 4000).map(|q| q.value)
        };
        match poly::real_cubic_roots(&cubic) {
            CubicRoots::Three([e1, e2, e3]) => {
                let (h, g) = (0.5 * (e2 - e1), 0.5 * (e3 - e2));
                // x = mid + h sin(phi) on [e1, e2] and on [e2, e3]
                let i1 = run(&|phi: f64| 1.0 / (a * ((e3 - e2) + h * (1.0 - phi.sin()))).sqrt(), -FRAC_PI_2, FRAC_PI_2)?;
                let i2 = run(&|phi: f64| 1.0 / (a * ((e2 - e1) + g * (1.0 + phi.sin()))).sqrt(), -FRAC_PI_2, FRAC_PI_2)?;
                Ok(Periods { omega1: c(2.0 * i1, 0.0), omega2: c(0.0, 2.0 * i2) })
            }
            CubicRoots::One(e1, root) => {
                let (d, q) = (e1 - root.re, root.im);
                let s2 = d.hypot(q);
                let s = s2.sqrt();
                // x - e1 = +-y^2, y = s tan(theta)
                let f = |sign: f64| {
                    move |theta: f64| {
                        let (sn, cs) = theta.sin_cos();
                        let c2 = cs * cs;
                        let m = d * c2 + sign * s2 * sn * sn;
                        2.0 * s / (a * (m * m + q * q * c2 * c2)).sqrt()
                    }
                };
                let i1 = run(&f(1.0), 0.0, FRAC_PI_2)?;
                let j = run(&f(-1.0), 0.0, FRAC_PI_2)?;
                Ok(Periods { omega1: c(2.0 * i1, 0.0), omega2: c(i1, j) })
            }
        }
    }
}

/// Periods by quadrature, cross-checked against the AGM closed form.
pub fn elliptic_periods(e: &EllipticCurveModel, tol: f64) -> Result<Periods> {
    let p = e.periods_quadrature(tol)?;
    let r = e.periods_agm();
    let dev = ((p.omega1 - r.omega1).norm() / r.omega1.norm()).max((p.omega2 - r.omega2).norm() / r.omega2.norm());
    if !(dev <= tol) {
        return Err(Error::Numerical(format!("quadrature and AGM periods differ by {dev:.3e} (tol {tol:.1e})")));
    }
    if !(p.ratio().im > 0.0) {
        return Err(Error::Numerical("period ratio not in the upper half plane".into()));
    }
    Ok(p)
}

/// `E1: w^2 = b(x) + 1` and `E2: w^2 = b(x) - 1`.
pub fn elliptic_split(curve: &CurveTypeII) -> Result<(EllipticCurveModel, EllipticCurveModel)> {
    let b = curve.b;
    let wrap = |cubic: [f64; 4], name: &str| {
        EllipticCurveModel::new(cubic).map_err(|e| match e {
            Error::Degenerate(_) => Error::Degenerate(format!("{name} has zero discriminant, the spectral curve is singular")),
            other => other,
        })
    };
    Ok((wrap([b[0] + 1.0, b[1], b[2], b[3]], "b(x) + 1")?, wrap([b[0] - 1.0, b[1], b[2], b[3]], "b(x) - 1")?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalApprox {
    pub value: f64,
    pub numerator: i64,
    pub denominator: u64,
    pub residual: f64,
}

/// Last continued-fraction convergent of `x` with denominator `<= max_den`.
pub fn best_convergent(x: f64, max_den: u64) -> RationalApprox {
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e18 {
            break;
        }
        let ai = a as i128;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 > max_den as i128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = r - a;
        if frac == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    if q1 == 0 {
        (p1, q1) = (x.round() as i128, 1);
    }
    RationalApprox { value: x, numerator: p1 as i64, denominator: q1 as u64, residual: (x - p1 as f64 / q1 as f64).abs() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimultaneousApprox {
    pub denominator: u64,
    pub numerators: [i64; 4],
    /// `max_i |x_i - p_i / q|`.
    pub residual: f64,
}

/// Common denominator `q <= max_den` minimizing the worst residual.
pub fn simultaneous_approx(xs: [f64; 4], max_den: u64) -> SimultaneousApprox {
    let mut best = SimultaneousApprox { denominator: 1, numerators: [0; 4], residual: f64::INFINITY };
    for q in 1..=max_den.max(1) {
        let qf = q as f64;
        let nums = xs.map(|x| (x * qf).round());
        let res = xs.iter().zip(&nums).map(|(x, p)| (x - p / qf).abs()).fold(0.0, f64::max);
        if res < best.residual {
            best = SimultaneousApprox { denominator: q, numerators: nums.map(|p| p as i64), residual: res };
            if res == 0.0 {
                break;
            }
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingAnalysis {
    /// Coordinates of the second lattice's periods in the first lattice's basis, row-major.
    pub matrix: [f64; 4],
    pub convergents: [RationalApprox; 4],
    pub simultaneous: SimultaneousApprox,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommensurabilityReport {
    pub heuristic: bool,
    pub note: String,
    pub max_denominator: u64,
    pub forward: CouplingAnalysis,
    pub backward: CouplingAnalysis,
    /// Max of the forward and backward simultaneous residuals.
    pub residual: f64,
    pub tolerance: f64,
    pub suggests_commensurable: bool,
}

/// `B_from^{-1} B_to` by Cramer's rule, so identical lattices give exactly `I`.
fn coupling(from: &Periods, to: &Periods) -> [f64; 4] {
    let [[a, b], [cc, d]] = from.basis();
    let [[x1, x2], [y1, y2]] = to.basis();
    let det = a * d - b * cc;
    [(d * x1 - b * y1) / det, (d * x2 - b * y2) / det, (a * y1 - cc * x1) / det, (a * y2 - cc * x2) / det]
}

fn analyse(m: [f64; 4], max_den: u64) -> CouplingAnalysis {
    CouplingAnalysis { matrix: m, convergents: m.map(|x| best_convergent(x, max_den)), simultaneous: simultaneous_approx(m, max_den) }
}

pub const PROBE_MAX_DENOMINATOR: u64 = 10_000;

/// Rational-approximation quality of the real 2x2 matrix relating the two
/// period lattices. Heuristic: a small residual suggests, but does not
/// certify, that the lattices are commensurable.
pub fn commensurability_probe(p1: &Periods, p2: &Periods, tol: f64) -> CommensurabilityReport {
    let forward = analyse(coupling(p1, p2), PROBE_MAX_DENOMINATOR);
    let backward = analyse(coupling(p2, p1), PROBE_MAX_DENOMINATOR);
    let residual = forward.simultaneous.residual.max(backward.simultaneous.residual);
    CommensurabilityReport {
        heuristic: true,
        note: "heuristic: small residuals suggest but do not certify closing".into(),
        max_denominator: PROBE_MAX_DENOMINATOR,
        forward,
        backward,
        residual,
        tolerance: tol,
        suggests_commensurable: residual <= tol,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub u: f64,
    pub v: f64,
    pub w: f64,
    pub admissible: bool,
    pub circle_branch: bool,
    pub boundary_distance: f64,
    pub split_ok: bool,
    pub tau1: Option<Complex64>,
    pub tau2: Option<Complex64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanBox {
    pub u: [f64; 2],
    pub v: [f64; 2],
    pub w: [f64; 2],
    /// Grid points per axis, endpoints included.
    pub n: usize,
}

fn axis(range: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (range[0] + range[1])];
    }
    (0..n).map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64).collect()
}

/// Evaluates admissibility, the circle oracle and the splitting on every grid
/// point with `u < v`. Period ratios (AGM) are included when `periods` is set.
pub fn scan(region: &ScanBox, samples: usize, periods: bool, exec: Execution) -> Result<Vec<ScanRow>> {
    if region.n == 0 {
        return Err(Error::domain("scan needs at least one point per axis"));
    }
    if samples < 16 {
        return Err(Error::domain(format!("need at least 16 samples, got {samples}")));
    }
    let (us, vs, ws) = (axis(region.u, region.n), axis(region.v, region.n), axis(region.w, region.n));
    let mut pairs = Vec::new();
    for &u in &us {
        for &v in &vs {
            if u < v {
                pairs.push((u, v));
            }
        }
    }
    let rows = par::map_slice(exec, &pairs, |&(u, v)| {
        ws.iter()
            .map(|&w| {
                let curve = CurveTypeII::from_critical(u, v, w, c(1.0, 0.0)).expect("finite grid point");
                let split = elliptic_split(&curve).ok();
                let (tau1, tau2) = match (&split, periods) {
                    (Some((e1, e2)), true) => (Some(e1.periods_agm().ratio()), Some(e2.periods_agm().ratio())),
                    _ => (None, None),
                };
                ScanRow {
                    u,
                    v,
                    w,
                    admissible: admissible(u, v, w).expect("u < v"),
                    circle_branch: circle_branch_check(&curve, samples).expect("samples checked"),
                    boundary_distance: boundary_distance(u, v, w),
                    split_ok: split.is_some(),
                    tau1,
                    tau2,
                }
            })
            .collect::<Vec<_>>()
    });
    Ok(rows.into_iter().flatten().collect())
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn scan_to_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("u,v,w,admissible,circle_branch,split_ok,tau1_re,tau1_im,tau2_re,tau2_im\n");
    let opt = |z: Option<Complex64>| match z {
        Some(z) => format!("{},{}", fmt(z.re), fmt(z.im)),
        None => ",".into(),
    };
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt(r.u),
            fmt(r.v),
            fmt(r.w),
            r.admissible,
            r.circle_branch,
            r.split_ok,
            opt(r.tau1),
            opt(r.tau2)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_examples() {
        assert!(admissible(-2.0, 2.0, 0.0).unwrap());
        assert_eq!(admissible_bounds(-2.0, 2.0), (-15.0, 15.0));
        assert!(!admissible(0.0, 1.0, 0.0).unwrap());
        assert!(!admissible(-2.0, 2.0, 15.0).unwrap());
        assert!(admissible(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn circle_check_examples() {
        let curve = CurveTypeII::from_critical(-2.0, 2.0, 0.0, c(1.0, 0.0)).unwrap();
        assert_eq!(curve.b(), [0.0, -12.0, 0.0, 1.0]);
        assert!(circle_branch_check(&curve, 256).unwrap());
        let cube = CurveTypeII::new(c(1.0, 0.0), [0.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(!circle_branch_check(&cube, 256).unwrap());
        assert!(circle_branch_check(&cube, 8).is_err());
    }

    #[test]
    fn period_routes_agree() {
        for cubic in [[0.0, -1.0, 0.0, 1.0], [-1.0, 0.0, 0.0, 1.0], [1.0, -12.0, 0.0, 1.0], [0.3, 2.0, -1.0, -0.5]] {
            let e = EllipticCurveModel::new(cubic).unwrap();
            let p = e.periods_quadrature(1e-13).unwrap();
            let r = e.periods_agm();
            assert!((p.omega1 - r.omega1).norm() < 1e-12 * r.omega1.norm(), "{cubic:?} {p:?} {r:?}");
            assert!((p.omega2 - r.omega2).norm() < 1e-12 * r.omega2.norm(), "{cubic:?} {p:?} {r:?}");
        }
    }

    #[test]
    fn classical_ratios() {
        let sq = elliptic_periods(&EllipticCurveModel::new([0.0, -1.0, 0.0, 1.0]).unwrap(), 1e-12).unwrap();
        assert!((sq.ratio() - c(0.0, 1.0)).norm() < 1e-12);
        let hex = elliptic_periods(&EllipticCurveModel::new([-1.0, 0.0, 0.0, 1.0]).unwrap(), 1e-12).unwrap();
        assert!((hex.ratio() - c(0.5, 3f64.sqrt() / 2.0)).norm() < 1e-12);
    }

    #[test]
    fn convergents() {
        let r = best_convergent(PI, 1000);
        assert_eq!((r.numerator, r.denominator), (355, 113));
        let r = best_convergent(0.5, 10);
        assert_eq!((r.numerator, r.denominator, r.residual), (1, 2, 0.0));
    }

    #[test]
    fn spec_json_roundtrip() {
        let curve = CurveSpec::parse(r#"{"type":"II","u":-2,"v":2,"w":0,"k":[1,0]}"#).unwrap();
        let json = serde_json::to_string(&CurveSpec::from_curve(&curve)).unwrap();
        assert_eq!(CurveSpec::parse(&json).unwrap(), curve);
        let t1 = CurveSpec::parse(r#"{"type":"I","b":[[1,2],[0,1],[0,-1],[1,-2]]}"#).unwrap();
        assert!(matches!(t1, SpectralCurve::I(_)));
        assert!(CurveSpec::parse(r#"{"type":"I","b":[1,0,0,2]}"#).is_err());
        assert!(CurveSpec::parse(r#"{"type":"III"}"#).is_err());
    }
}
