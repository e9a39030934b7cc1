//! su(3) linear algebra for the 6-symmetric structures on `SU3/K2` and `SU3/K1`.
//!
//! Group and algebra elements are dense 3x3 complex matrices. The constant
//! matrices `S`, `T`, `R` and `U` are built from exact expressions, and every
//! identity check uses [`IDENTITY_TOL`] unless stated otherwise.
//!
//! Conventions:
//! - `nu(g) = S g S^-1` with `S = diag(1, eps, eps^2)`, `eps = exp(2 pi i / 3)`;
//! - `mu(g) = T g^{-1 t} T^-1` with `T` swapping `e2` and `e3`;
//! - `sigma = mu nu`, acting on the algebra with eigenvalues `(-eps)^j`;
//! - `sigma_hat(g) = R g^{-1 t} R^-1` with `R` the rotation about `e1` through
//!   `pi/3`, which equals `U^-1 T S^-1 U^{-1 t}` and so conjugates `sigma`
//!   into `sigma_hat` through `U`.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use crate::error::{Error, Result};

pub type ComplexMatrix3 = Matrix3<Complex64>;
pub type ComplexVector3 = Vector3<Complex64>;

/// Default tolerance for identity checks.
pub const IDENTITY_TOL: f64 = 1e-10;
/// Tolerance on `M^dagger M = I` for [`UnitaryMatrix3`].
pub const UNITARY_TOL: f64 = 1e-12;

const SQRT3_2: f64 = 0.866_025_403_784_438_6;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `exp(2 pi i / 3)`.
pub const EPSILON: Complex64 = Complex64::new(-0.5, SQRT3_2);
const EPSILON2: Complex64 = Complex64::new(-0.5, -SQRT3_2);

/// The Coxeter-Killing matrix `diag(1, eps, eps^2)`.
pub fn s_matrix() -> ComplexMatrix3 {
    ComplexMatrix3::from_diagonal(&Vector3::new(ONE, EPSILON, EPSILON2))
}

/// The permutation `e1 -> e1, e2 -> e3, e3 -> e2`.
pub fn t_matrix() -> ComplexMatrix3 {
    ComplexMatrix3::new(ONE, ZERO, ZERO, ZERO, ZERO, ONE, ZERO, ONE, ZERO)
}

/// Rotation about the `e1` axis through `pi/3`.
pub fn r_matrix() -> ComplexMatrix3 {
    let c = Complex64::new(0.5, 0.0);
    let s = Complex64::new(SQRT3_2, 0.0);
    ComplexMatrix3::new(ONE, ZERO, ZERO, ZERO, c, -s, ZERO, s, c)
}

/// The change of frame from `(f, f_z/|f_z|, -f_zbar/|f_zbar|)` to the real
/// orthonormal frame `(f, f_x/|f_x|, f_y/|f_y|)`. `det U = -i`.
pub fn u_matrix() -> ComplexMatrix3 {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let ih = Complex64::new(0.0, FRAC_1_SQRT_2);
    ComplexMatrix3::new(ONE, ZERO, ZERO, ZERO, h, -ih, ZERO, -h, -ih)
}

/// Inverse of [`u_matrix`] (its adjoint).
pub fn u_inverse() -> ComplexMatrix3 {
    u_matrix().adjoint()
}

/// The matrix `[[0,0,1],[1,0,0],[0,1,0]]`: `e1 -> e2 -> e3 -> e1`.
pub fn cyclic_permutation() -> ComplexMatrix3 {
    ComplexMatrix3::new(ZERO, ZERO, ONE, ONE, ZERO, ZERO, ZERO, ONE, ZERO)
}

/// Frobenius distance between two matrices.
pub fn distance(a: &ComplexMatrix3, b: &ComplexMatrix3) -> f64 {
    (a - b).norm()
}

/// `||M^dagger M - I||_F`.
pub fn unitarity_defect(m: &ComplexMatrix3) -> f64 {
    (m.adjoint() * m - ComplexMatrix3::identity()).norm()
}

/// Nearest unitary matrix in the Frobenius norm (unitary polar factor).
///
/// Uses the scaled-free Newton iteration `X <- (X + X^{-dagger}) / 2`, which
/// converges quadratically for inputs already close to `U(3)`.
pub fn nearest_unitary(m: &ComplexMatrix3) -> ComplexMatrix3 {
    let mut x = *m;
    for _ in 0..30 {
        let defect = unitarity_defect(&x);
        if defect < 1e-15 {
            break;
        }
        let inv_adj = match x.adjoint().try_inverse() {
            Some(v) => v,
            None => break,
        };
        let next = (x + inv_adj) * Complex64::new(0.5, 0.0);
        let step = distance(&next, &x);
        x = next;
        if step < 1e-16 {
            break;
        }
    }
    x
}

/// A unitary 3x3 matrix together with its determinant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitaryMatrix3 {
    matrix: ComplexMatrix3,
    det: Complex64,
}

impl UnitaryMatrix3 {
    /// Validates unitarity to [`UNITARY_TOL`].
    pub fn new(matrix: ComplexMatrix3) -> Result<Self> {
        Self::with_tolerance(matrix, UNITARY_TOL)
    }

    pub fn with_tolerance(matrix: ComplexMatrix3, tol: f64) -> Result<Self> {
        if matrix.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::domain("matrix has non-finite entries"));
        }
        let defect = unitarity_defect(&matrix);
        if defect > tol {
            return Err(Error::Domain(format!(
                "matrix is not unitary: ||M^dagger M - I|| = {defect:e} > {tol:e}"
            )));
        }
        Ok(Self { matrix, det: matrix.determinant() })
    }

    /// Projects onto `U(3)` first, then validates.
    pub fn project(matrix: &ComplexMatrix3) -> Result<Self> {
        Self::new(nearest_unitary(matrix))
    }

    pub fn identity() -> Self {
        Self { matrix: ComplexMatrix3::identity(), det: ONE }
    }

    pub fn matrix(&self) -> &ComplexMatrix3 {
        &self.matrix
    }

    pub fn det(&self) -> Complex64 {
        self.det
    }

    /// True if `det = 1` to `tol`.
    pub fn is_special(&self, tol: f64) -> bool {
        (self.det - ONE).norm() <= tol
    }

    /// True if `det = i` to `tol`, the convention for the coset `N = U^-1 SU3`.
    pub fn is_n_coset(&self, tol: f64) -> bool {
        (self.det - Complex64::i()).norm() <= tol
    }

    pub fn inverse(&self) -> Self {
        Self { matrix: self.matrix.adjoint(), det: self.det.conj() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { matrix: self.matrix * other.matrix, det: self.det * other.det }
    }

    /// Unchecked constructor for matrices that are unitary by construction.
    pub(crate) fn from_unitary_unchecked(matrix: ComplexMatrix3) -> Self {
        Self { matrix, det: matrix.determinant() }
    }
}

/// The automorphisms of `SU3` used by the twistor constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Automorphism {
    /// Coxeter-Killing automorphism, order 3.
    Nu,
    /// Outer involution, order 2.
    Mu,
    /// `mu nu`, order 6, fixing `K2 = {diag(1, a, a^-1)}`.
    Sigma,
    /// Order 6, fixing `K1 = SO2` (rotations about `e1`).
    SigmaHat,
}

impl Automorphism {
    pub const ALL: [Automorphism; 4] =
        [Automorphism::Nu, Automorphism::Mu, Automorphism::Sigma, Automorphism::SigmaHat];

    pub fn order(self) -> usize {
        match self {
            Automorphism::Nu => 3,
            Automorphism::Mu => 2,
            Automorphism::Sigma | Automorphism::SigmaHat => 6,
        }
    }

    /// Action on a unitary matrix; uses `g^{-1 t} = conj(g)`.
    pub fn apply_matrix(self, g: &ComplexMatrix3) -> ComplexMatrix3 {
        match self {
            Automorphism::Nu => s_matrix() * g * s_matrix().adjoint(),
            Automorphism::Mu => {
                let t = t_matrix();
                t * g.conjugate() * t
            }
            Automorphism::Sigma => Automorphism::Mu.apply_matrix(&Automorphism::Nu.apply_matrix(g)),
            Automorphism::SigmaHat => {
                let r = r_matrix();
                r * g.conjugate() * r.transpose()
            }
        }
    }

    /// Differential of the automorphism on `sl(3, C)`; complex linear.
    pub fn apply_algebra(self, x: &ComplexMatrix3) -> ComplexMatrix3 {
        match self {
            Automorphism::Nu => s_matrix() * x * s_matrix().adjoint(),
            Automorphism::Mu => {
                let t = t_matrix();
                -(t * x.transpose() * t)
            }
            Automorphism::Sigma => Automorphism::Mu.apply_algebra(&Automorphism::Nu.apply_algebra(x)),
            Automorphism::SigmaHat => {
                let r = r_matrix();
                -(r * x.transpose() * r.transpose())
            }
        }
    }
}

/// Applies an automorphism to a unitary matrix.
pub fn apply_automorphism(g: &UnitaryMatrix3, which: Automorphism) -> UnitaryMatrix3 {
    UnitaryMatrix3::from_unitary_unchecked(which.apply_matrix(g.matrix()))
}

/// Applies `which` `times` times.
pub fn apply_repeated(g: &UnitaryMatrix3, which: Automorphism, times: usize) -> UnitaryMatrix3 {
    (0..times).fold(*g, |acc, _| apply_automorphism(&acc, which))
}

/// `(-eps)^j`, the eigenvalue of sigma on the `j`-th graded piece.
pub fn grade_eigenvalue(j: usize) -> Complex64 {
    (-EPSILON).powu((j % 6) as u32)
}

/// Splitting of a traceless matrix into the six eigenspaces of sigma.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedDecomposition {
    parts: [ComplexMatrix3; 6],
}

impl GradedDecomposition {
    pub const ORDER: usize = 6;

    pub fn part(&self, j: usize) -> &ComplexMatrix3 {
        &self.parts[j % 6]
    }

    pub fn parts(&self) -> &[ComplexMatrix3; 6] {
        &self.parts
    }

    pub fn sum(&self) -> ComplexMatrix3 {
        self.parts.iter().fold(ComplexMatrix3::zeros(), |acc, p| acc + p)
    }

    /// Largest `||sigma(X_j) - (-eps)^j X_j||` over the six parts.
    pub fn eigen_defect(&self) -> f64 {
        self.parts
            .iter()
            .enumerate()
            .map(|(j, p)| (Automorphism::Sigma.apply_algebra(p) - p * grade_eigenvalue(j)).norm())
            .fold(0.0, f64::max)
    }
}

fn check_traceless(x: &ComplexMatrix3) -> Result<()> {
    let tr = x.trace().norm();
    if !(tr <= IDENTITY_TOL * (1.0 + x.norm())) {
        return Err(Error::Domain(format!("matrix is not traceless: |tr X| = {tr:e}")));
    }
    Ok(())
}

/// Decomposes `X` by the character projection
/// `X_j = (1/6) sum_k (-eps)^{-jk} sigma^k(X)`.
pub fn grade_decompose(x: &ComplexMatrix3) -> Result<GradedDecomposition> {
    check_traceless(x)?;
    let mut orbit = [*x; 6];
    for k in 1..6 {
        orbit[k] = Automorphism::Sigma.apply_algebra(&orbit[k - 1]);
    }
    let mut parts = [ComplexMatrix3::zeros(); 6];
    for (j, part) in parts.iter_mut().enumerate() {
        for (k, term) in orbit.iter().enumerate() {
            let weight = grade_eigenvalue(j * k).conj() / 6.0;
            *part += term * weight;
        }
    }
    Ok(GradedDecomposition { parts })
}

/// Projection onto `g_1 = {[[0,0,a],[a,0,0],[0,b,0]]}`.
pub fn project_g1(x: &ComplexMatrix3) -> ComplexMatrix3 {
    let a = (x[(0, 2)] + x[(1, 0)]) * 0.5;
    let b = x[(2, 1)];
    ComplexMatrix3::new(ZERO, ZERO, a, a, ZERO, ZERO, ZERO, b, ZERO)
}

/// `||A - Pi_{g_1}(A)||_F`; zero iff `A` lies in `g_1`.
pub fn primitivity_residual(az: &ComplexMatrix3) -> Result<f64> {
    check_traceless(az)?;
    Ok((az - project_g1(az)).norm())
}

/// The image of `Y` under `Phi_*`, i.e. `Ad U^-1 . Y`.
pub fn phi_pushforward(y: &ComplexMatrix3) -> ComplexMatrix3 {
    u_inverse() * y * u_matrix()
}

/// `||-Ad R . Y^t + eps Y||`, which vanishes on `hat g_1`, the
/// `(-eps)`-eigenspace of `sigma_hat`.
pub fn hat_g1_defect(y_hat: &ComplexMatrix3) -> f64 {
    (Automorphism::SigmaHat.apply_algebra(y_hat) + y_hat * EPSILON).norm()
}

/// A point `(w, W)` of `FL2`; `W` is spanned by `w` and `w1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlagPoint {
    w: ComplexVector3,
    w1: ComplexVector3,
}

impl FlagPoint {
    pub fn new(w: ComplexVector3, w1: ComplexVector3) -> Result<Self> {
        let tol = 1e-12;
        let nw = (w.norm() - 1.0).abs();
        let nw1 = (w1.norm() - 1.0).abs();
        let ip = w.dotc(&w1).norm();
        if nw > tol || nw1 > tol || ip > tol {
            return Err(Error::Domain(format!(
                "flag vectors not orthonormal (| |w|-1 | = {nw:e}, | |w1|-1 | = {nw1:e}, |<w,w1>| = {ip:e})"
            )));
        }
        Ok(Self { w, w1 })
    }

    pub fn w(&self) -> &ComplexVector3 {
        &self.w
    }

    pub fn w1(&self) -> &ComplexVector3 {
        &self.w1
    }
}

/// A point `(v, V)` of `FL1`, with `V` given by an ordered real basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SlFlag {
    pub v: ComplexVector3,
    pub basis: [ComplexVector3; 3],
}

impl SlFlag {
    /// The columns as a matrix.
    pub fn matrix(&self) -> ComplexMatrix3 {
        ComplexMatrix3::from_columns(&self.basis)
    }
}

/// The isomorphism `Phi: FL2 -> FL1`, `(v, v1, v2) = (w, w1, w2) U`.
///
/// `w2` must complete `(w, w1)` to a unitary basis with determinant `i`.
pub fn phi_map(p: &FlagPoint, w2: &ComplexVector3) -> Result<SlFlag> {
    let basis = ComplexMatrix3::from_columns(&[p.w, p.w1, *w2]);
    let g = UnitaryMatrix3::new(basis)?;
    if !g.is_n_coset(IDENTITY_TOL) {
        return Err(Error::Domain(format!(
            "adapted basis must have determinant i, got {}",
            g.det()
        )));
    }
    let v = basis * u_matrix();
    Ok(SlFlag {
        v: v.column(0).into_owned(),
        basis: [v.column(0).into_owned(), v.column(1).into_owned(), v.column(2).into_owned()],
    })
}

/// Phase of a special Lagrangian 3-plane with ordered orthonormal real basis:
/// `arg det(v0, v1, v2)` in `[0, 2 pi)`.
///
/// Fails with the measured defect if the triple is not orthonormal over `R`
/// or not Lagrangian (`Im <vi, vj> != 0`).
pub fn special_lagrangian_phase(v: &[ComplexVector3; 3]) -> Result<f64> {
    special_lagrangian_phase_tol(v, IDENTITY_TOL)
}

pub fn special_lagrangian_phase_tol(v: &[ComplexVector3; 3], tol: f64) -> Result<f64> {
    let mut orth = 0.0f64;
    let mut symp = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let h = v[i].dotc(&v[j]);
            let target = if i == j { 1.0 } else { 0.0 };
            orth = orth.max((h.re - target).abs());
            symp = symp.max(h.im.abs());
        }
    }
    if orth > tol {
        return Err(Error::Domain(format!("triple is not orthonormal over R (defect {orth:e})")));
    }
    if symp > tol {
        return Err(Error::Domain(format!("triple is not Lagrangian (symplectic defect {symp:e})")));
    }
    let det = ComplexMatrix3::from_columns(v).determinant();
    Ok(wrap_angle(det.arg()))
}

/// Maps an angle into `[0, 2 pi)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Smallest angular distance between two phases.
pub fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Orthogonal projector of `R^6` onto the real span of the given vectors,
/// with `C^3 = R^6` via `(x1, y1, x2, y2, x3, y3)`.
pub fn real_span_projector(v: &[ComplexVector3; 3]) -> nalgebra::Matrix6<f64> {
    let mut m = nalgebra::Matrix6x3::<f64>::zeros();
    for (c, vec) in v.iter().enumerate() {
        for r in 0..3 {
            m[(2 * r, c)] = vec[r].re;
            m[(2 * r + 1, c)] = vec[r].im;
        }
    }
    let gram = m.transpose() * m;
    let inv = gram.try_inverse().unwrap_or_else(nalgebra::Matrix3::zeros);
    m * inv * m.transpose()
}

/// A random element of `SU3` (Haar distributed).
pub fn random_su3<R: Rng + ?Sized>(rng: &mut R) -> UnitaryMatrix3 {
    let z = random_complex_matrix(rng);
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..3 {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    let det = q.determinant();
    let fix = Complex64::from_polar(1.0, -det.arg() / 3.0);
    q *= fix;
    UnitaryMatrix3::from_unitary_unchecked(nearest_unitary(&q))
}

/// A matrix with independent standard complex Gaussian entries.
pub fn random_complex_matrix<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix3 {
    ComplexMatrix3::from_fn(|_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

/// A random traceless complex matrix.
pub fn random_traceless<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix3 {
    let mut x = random_complex_matrix(rng);
    let t = x.trace() / 3.0;
    for k in 0..3 {
        x[(k, k)] -= t;
    }
    x
}

/// A random element of `g_1`.
pub fn random_g1<R: Rng + ?Sized>(rng: &mut R) -> ComplexMatrix3 {
    let a = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    let b = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
    ComplexMatrix3::new(ZERO, ZERO, a, a, ZERO, ZERO, ZERO, b, ZERO)
}

/// A random element of `K2 = {diag(1, a, a^-1)}`.
pub fn random_k2<R: Rng + ?Sized>(rng: &mut R) -> UnitaryMatrix3 {
    let a = Complex64::from_polar(1.0, rng.random_range(0.0..TAU));
    UnitaryMatrix3::from_unitary_unchecked(ComplexMatrix3::from_diagonal(&Vector3::new(
        ONE,
        a,
        a.conj(),
    )))
}

/// True if `k` lies in `K1 = {g in SO3 : g e1 = e1}` to `tol`.
pub fn in_k1(k: &ComplexMatrix3, tol: f64) -> bool {
    let real = k.iter().all(|c| c.im.abs() <= tol);
    let fixes = (k.column(0) - Vector3::new(ONE, ZERO, ZERO)).norm() <= tol
        && (k.row(0).transpose() - Vector3::new(ONE, ZERO, ZERO)).norm() <= tol;
    real && fixes && unitarity_defect(k) <= tol && (k.determinant() - ONE).norm() <= tol
}

/// Angle of the rotation about `e1` fixed by `sigma_hat`: `pi/3`.
pub const R_ANGLE: f64 = PI / 3.0;
