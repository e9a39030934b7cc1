//! Small polynomial toolkit: cubic discriminants and roots, and exact
//! arithmetic over `Q(i)` for repeated-root detection.
//!
//! Coefficient arrays are ascending: `c[0] + c[1] x + c[2] x^2 + ...`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

pub type ExactComplex = Complex<BigRational>;

pub fn eval_real(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

pub fn eval_complex(c: &[Complex64], x: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, a| acc * x + a)
}

/// Discriminant of `c0 + c1 x + c2 x^2 + c3 x^3` in floating point.
pub fn cubic_discriminant(c: &[f64; 4]) -> f64 {
    let (d, cc, b, a) = (c[0], c[1], c[2], c[3]);
    18.0 * a * b * cc * d - 4.0 * b * b * b * d + b * b * cc * cc - 4.0 * a * cc * cc * cc - 27.0 * a * a * d * d
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite coefficient")
}

/// The same discriminant, exact in the rational values of the inputs.
pub fn exact_cubic_discriminant(c: &[f64; 4]) -> BigRational {
    let [d, cc, b, a] = c.map(exact);
    let n = |k: i64| BigRational::from_integer(BigInt::from(k));
    n(18) * &a * &b * &cc * &d - n(4) * &b * &b * &b * &d + &b * &b * &cc * &cc
        - n(4) * &a * &cc * &cc * &cc
        - n(27) * &a * &a * &d * &d
}

/// Sign of the cubic discriminant. Values within `1e-12` of zero relative to
/// the size of its terms are settled by exact arithmetic.
pub fn cubic_discriminant_sign(c: &[f64; 4]) -> Ordering {
    let (d, cc, b, a) = (c[0], c[1], c[2], c[3]);
    let terms = [
        18.0 * a * b * cc * d,
        4.0 * b * b * b * d,
        b * b * cc * cc,
        4.0 * a * cc * cc * cc,
        27.0 * a * a * d * d,
    ];
    let scale: f64 = terms.iter().map(|t| t.abs()).sum();
    let disc = cubic_discriminant(c);
    if disc.is_finite() && disc.abs() > 1e-12 * scale {
        return disc.partial_cmp(&0.0).unwrap_or(Ordering::Equal);
    }
    let e = exact_cubic_discriminant(c);
    if e.is_zero() {
        Ordering::Equal
    } else if e.is_positive() {
        Ordering::Greater
    } else {
        Ordering::Less
    }
}

/// Roots of a real cubic with nonzero discriminant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CubicRoots {
    /// Ascending.
    Three([f64; 3]),
    /// The real root and the complex root with positive imaginary part.
    One(f64, Complex64),
}

fn polish(c: &[f64; 4], mut x: f64) -> f64 {
    for _ in 0..4 {
        let f = eval_real(c, x);
        let df = c[1] + 2.0 * c[2] * x + 3.0 * c[3] * x * x;
        if df == 0.0 {
            break;
        }
        let next = x - f / df;
        if !next.is_finite() || (eval_real(c, next).abs() >= f.abs()) {
            break;
        }
        x = next;
    }
    x
}

/// Roots of `c0 + c1 x + c2 x^2 + c3 x^3`, `c3 != 0`, Newton-polished.
pub fn real_cubic_roots(c: &[f64; 4]) -> CubicRoots {
    let a = c[3];
    let (b, cc, d) = (c[2] / a, c[1] / a, c[0] / a);
    // x = y - b/3 gives y^3 + p y + q
    let shift = b / 3.0;
    let p = cc - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * cc / 3.0 + d;
    match cubic_discriminant_sign(c) {
        Ordering::Greater | Ordering::Equal if p < 0.0 => {
            let r = 2.0 * (-p / 3.0).sqrt();
            let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            let mut roots = [0, 1, 2].map(|k| {
                r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos() - shift
            });
            roots.iter_mut().for_each(|x| *x = polish(c, *x));
            roots.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
            CubicRoots::Three(roots)
        }
        _ => {
            let disc = (q * q / 4.0 + p * p * p / 27.0).max(0.0).sqrt();
            let u = (-q / 2.0 + disc).cbrt();
            let v = (-q / 2.0 - disc).cbrt();
            let x = polish(c, u + v - shift);
            // deflate: a (x - r)(x^2 + s x + t)
            let s = b + x;
            let t = cc + s * x;
            let re = -s / 2.0;
            let im = (t - s * s / 4.0).max(0.0).sqrt();
            CubicRoots::One(x, Complex64::new(re, im))
        }
    }
}

pub fn exact_complex(z: Complex64) -> ExactComplex {
    Complex::new(exact(z.re), exact(z.im))
}

fn trim(p: &mut Vec<ExactComplex>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

pub fn exact_mul(a: &[ExactComplex], b: &[ExactComplex]) -> Vec<ExactComplex> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![ExactComplex::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + x * y;
        }
    }
    trim(&mut out);
    out
}

pub fn exact_sub(a: &[ExactComplex], b: &[ExactComplex]) -> Vec<ExactComplex> {
    let n = a.len().max(b.len());
    let mut out: Vec<ExactComplex> = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(ExactComplex::zero);
            let y = b.get(i).cloned().unwrap_or_else(ExactComplex::zero);
            x - y
        })
        .collect();
    trim(&mut out);
    out
}

fn derivative(p: &[ExactComplex]) -> Vec<ExactComplex> {
    let mut out: Vec<ExactComplex> = p
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * ExactComplex::new(BigRational::from_integer(BigInt::from(i)), BigRational::zero()))
        .collect();
    trim(&mut out);
    out
}

fn remainder(a: &[ExactComplex], b: &[ExactComplex]) -> Vec<ExactComplex> {
    let mut r = a.to_vec();
    trim(&mut r);
    let lead = b.last().expect("nonzero divisor").clone();
    while r.len() >= b.len() && !r.is_empty() {
        let shift = r.len() - b.len();
        let factor = r.last().unwrap().clone() / lead.clone();
        for (i, c) in b.iter().enumerate() {
            r[shift + i] = &r[shift + i] - &factor * c;
        }
        r.pop();
        trim(&mut r);
    }
    r
}

/// Degree of `gcd(p, p')`; positive iff `p` has a repeated root.
pub fn repeated_root_degree(p: &[ExactComplex]) -> usize {
    let mut a = p.to_vec();
    trim(&mut a);
    let mut b = derivative(&a);
    if b.is_empty() {
        return 0;
    }
    while !b.is_empty() {
        let r = remainder(&a, &b);
        a = b;
        b = r;
    }
    a.len() - 1
}

pub fn to_f64(c: &ExactComplex) -> Complex64 {
    use num_traits::ToPrimitive;
    Complex64::new(c.re.to_f64().unwrap_or(f64::NAN), c.im.to_f64().unwrap_or(f64::NAN))
}
