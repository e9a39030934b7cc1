//! Extended Toda frames of a Tzitzéica solution, the minimal Legendrian
//! surface they carry, and the checks that go with it.
//!
//! With `s1 = e^{u/2}` the `dz` part of the Maurer–Cartan form at spectral
//! parameter `zeta` is
//! `A = diag(0, u_z/2, -u_z/2) + zeta [[0,0,s1],[s1,0,0],[0,s1^-2,0]]`
//! and the `dzbar` part is `B = -A^dagger`. Frames satisfy `dF = F (A dz + B dzbar)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Matrix6x3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::liecore::{
    self, distance, nearest_unitary, unitarity_defect, ComplexMatrix3, ComplexVector3, UnitaryMatrix3, EPSILON,
};
use crate::par::{self, Execution};
use crate::report::VerificationReport;
use crate::spectral::{upsample_periodic, SpectralGrid};
use crate::tzsolve::{fmt_f64, Generator, Lattice, ScalarField};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Accepted deviation of `|zeta|` from 1.
pub const ZETA_TOL: f64 = 1e-12;
/// Default bound on the flatness defect accepted by [`integrate_frame`].
pub const DEFAULT_FLATNESS_THRESHOLD: f64 = 1e-5;

pub fn check_zeta(zeta: Complex64) -> Result<()> {
    if !zeta.is_finite() || (zeta.norm() - 1.0).abs() > ZETA_TOL {
        return Err(Error::domain(format!("spectral parameter must be unimodular, |zeta| = {}", zeta.norm())));
    }
    Ok(())
}

/// `<a, b> = sum a_i conj(b_i)`.
pub fn hermitian(a: &ComplexVector3, b: &ComplexVector3) -> Complex64 {
    b.dotc(a)
}

/// The `dz` coefficient at a point with values `u`, `u_z`.
pub fn connection_matrix(u: f64, u_z: Complex64, zeta: Complex64) -> ComplexMatrix3 {
    let s1 = (0.5 * u).exp();
    let c = zeta * s1;
    let d = zeta / (s1 * s1);
    let h = u_z * 0.5;
    ComplexMatrix3::new(ZERO, ZERO, c, c, h, ZERO, ZERO, d, -h)
}

/// The `dzbar` coefficient `diag(0, -u_zbar/2, u_zbar/2) - zeta^{-1} P1^T`.
pub fn connection_zbar_matrix(u: f64, u_zbar: Complex64, zeta: Complex64) -> ComplexMatrix3 {
    let s1 = (0.5 * u).exp();
    let zi = zeta.inv();
    let h = u_zbar * 0.5;
    ComplexMatrix3::new(ZERO, -zi * s1, ZERO, ZERO, -h, -zi / (s1 * s1), -zi * s1, ZERO, h)
}

/// Value of the `dz` coefficient at one grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionCoefficient {
    pub a: ComplexMatrix3,
    pub zeta: Complex64,
}

impl ConnectionCoefficient {
    /// Diagonal part `diag(0, u_z/2, -u_z/2)`.
    pub fn k_part(&self) -> ComplexMatrix3 {
        ComplexMatrix3::from_diagonal(&self.a.diagonal())
    }

    /// Off-diagonal part `zeta P1`.
    pub fn p_part(&self) -> ComplexMatrix3 {
        self.a - self.k_part()
    }
}

/// `u`, `u_z` and `u_zbar` on the grid, for a fixed `zeta`.
#[derive(Clone, Debug)]
pub struct ConnectionField {
    u: ScalarField,
    uz: Vec<Complex64>,
    uzbar: Vec<Complex64>,
    zeta: Complex64,
}

impl ConnectionField {
    pub fn new(u: &ScalarField, zeta: Complex64) -> Result<Self> {
        Self::with_execution(u, zeta, Execution::default())
    }

    pub fn with_execution(u: &ScalarField, zeta: Complex64, exec: Execution) -> Result<Self> {
        check_zeta(zeta)?;
        let grid = u.spectral_grid(exec);
        let spec = grid.spectrum_of_real(u.values());
        let uz = grid.d_z_from_spectrum(&spec);
        let vals: Vec<Complex64> = u.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let uzbar = grid.d_zbar(&vals);
        Ok(Self { u: u.clone(), uz, uzbar, zeta })
    }

    pub fn field(&self) -> &ScalarField {
        &self.u
    }

    pub fn zeta(&self) -> Complex64 {
        self.zeta
    }

    fn index(&self, j: usize, k: usize) -> usize {
        (j % self.u.nx()) * self.u.ny() + k % self.u.ny()
    }

    pub fn u_z(&self, j: usize, k: usize) -> Complex64 {
        self.uz[self.index(j, k)]
    }

    pub fn a(&self, j: usize, k: usize) -> ComplexMatrix3 {
        let i = self.index(j, k);
        connection_matrix(self.u.values()[i], self.uz[i], self.zeta)
    }

    /// The `dzbar` coefficient at the same `zeta`.
    pub fn b(&self, j: usize, k: usize) -> ComplexMatrix3 {
        let i = self.index(j, k);
        connection_zbar_matrix(self.u.values()[i], self.uzbar[i], self.zeta)
    }

    pub fn coefficient(&self, j: usize, k: usize) -> ConnectionCoefficient {
        ConnectionCoefficient { a: self.a(j, k), zeta: self.zeta }
    }

    /// Samples of `u` and `u_z` along the row `k` (direction `omega1`).
    fn row(&self, k: usize) -> (Vec<f64>, Vec<Complex64>) {
        let nx = self.u.nx();
        ((0..nx).map(|j| self.u.get(j, k)).collect(), (0..nx).map(|j| self.u_z(j, k)).collect())
    }

    /// Samples along the column `j` (direction `omega2`).
    fn column(&self, j: usize) -> (Vec<f64>, Vec<Complex64>) {
        let ny = self.u.ny();
        ((0..ny).map(|k| self.u.get(j, k)).collect(), (0..ny).map(|k| self.u_z(j, k)).collect())
    }
}

/// Connection coefficient at grid index `at = (j, k)`.
pub fn connection(u: &ScalarField, at: (usize, usize), zeta: Complex64) -> Result<ConnectionCoefficient> {
    if at.0 >= u.nx() || at.1 >= u.ny() {
        return Err(Error::domain(format!("grid index {at:?} out of range")));
    }
    Ok(ConnectionField::new(u, zeta)?.coefficient(at.0, at.1))
}

/// `dF/dtau = F G` along a straight path `z = z0 + tau omega`.
fn direction_generator(a: &ComplexMatrix3, omega: Complex64) -> ComplexMatrix3 {
    a * omega - a.adjoint() * omega.conj()
}

/// One fourth-order Magnus step for `F' = F G` from endpoint and midpoint values.
pub fn magnus_step(g0: &ComplexMatrix3, gm: &ComplexMatrix3, g1: &ComplexMatrix3, h: f64) -> ComplexMatrix3 {
    let omega = (g0 + gm * Complex64::new(4.0, 0.0) + g1) * Complex64::new(h / 6.0, 0.0)
        + (g0 * g1 - g1 * g0) * Complex64::new(h * h / 12.0, 0.0);
    omega.exp()
}

/// Per-cell propagators `Phi_j` along a periodic line, `F_{j+1} = F_j Phi_j`,
/// with `substeps` Magnus steps per cell.
fn line_propagators(
    u: &[f64],
    uz: &[Complex64],
    omega: Complex64,
    zeta: Complex64,
    substeps: usize,
) -> Vec<ComplexMatrix3> {
    let n = u.len();
    let factor = 2 * substeps;
    let uc: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let ufine = upsample_periodic(&uc, factor);
    let uzfine = upsample_periodic(uz, factor);
    let m = n * factor;
    let gen = |i: usize| {
        let i = i % m;
        direction_generator(&connection_matrix(ufine[i].re, uzfine[i], zeta), omega)
    };
    let h = 1.0 / (n * substeps) as f64;
    (0..n)
        .map(|j| {
            let mut phi = ComplexMatrix3::identity();
            let mut g0 = gen(j * factor);
            for q in 0..substeps {
                let base = j * factor + 2 * q;
                let gm = gen(base + 1);
                let g1 = gen(base + 2);
                phi *= magnus_step(&g0, &gm, &g1, h);
                g0 = g1;
            }
            phi
        })
        .collect()
}

/// Substeps per cell so that `||G|| dtau <= target` along the line.
fn substeps_for(u: &[f64], uz: &[Complex64], omega: Complex64, zeta: Complex64, target: f64, cap: usize) -> usize {
    let n = u.len();
    let gmax = u
        .iter()
        .zip(uz)
        .map(|(&v, &d)| direction_generator(&connection_matrix(v, d, zeta), omega).norm())
        .fold(0.0, f64::max);
    ((gmax / n as f64 / target).ceil() as usize).clamp(1, cap)
}

/// Largest `||holonomy - I||_F` over the elementary cells, one Magnus step per edge.
pub fn flatness_defect(u: &ScalarField, zeta: Complex64) -> Result<f64> {
    flatness_defect_with(u, zeta, Execution::default())
}

pub fn flatness_defect_with(u: &ScalarField, zeta: Complex64, exec: Execution) -> Result<f64> {
    let conn = ConnectionField::with_execution(u, zeta, exec)?;
    let (nx, ny) = (u.nx(), u.ny());
    let (w1, w2) = (u.lattice().omega1(), u.lattice().omega2());
    let rows: Vec<Vec<ComplexMatrix3>> = par::map_range(exec, ny, |k| {
        let (a, b) = conn.row(k);
        line_propagators(&a, &b, w1, zeta, 1)
    });
    let cols: Vec<Vec<ComplexMatrix3>> = par::map_range(exec, nx, |j| {
        let (a, b) = conn.column(j);
        line_propagators(&a, &b, w2, zeta, 1)
    });
    let id = ComplexMatrix3::identity();
    Ok(par::max_range(exec, nx * ny, |i| {
        let (j, k) = (i / ny, i % ny);
        let hol = rows[k][j] * cols[(j + 1) % nx][k] * rows[(k + 1) % ny][j].adjoint() * cols[j][k].adjoint();
        distance(&hol, &id)
    }))
}

/// Which lattice direction is integrated first.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationOrder {
    /// Along `omega1` through the base point, then along `omega2`.
    #[default]
    RowsFirst,
    ColumnsFirst,
}

#[derive(Clone, Debug)]
pub struct FrameOptions {
    pub order: IntegrationOrder,
    /// Target for `||G|| dtau` per Magnus substep.
    pub substep_norm: f64,
    pub max_substeps: usize,
    pub flatness_threshold: f64,
    /// Largest unitarity defect tolerated before reprojection.
    pub drift_threshold: f64,
    pub execution: Execution,
}

impl Default for FrameOptions {
    fn default() -> Self {
        Self {
            order: IntegrationOrder::RowsFirst,
            substep_norm: 5e-3,
            max_substeps: 512,
            flatness_threshold: DEFAULT_FLATNESS_THRESHOLD,
            drift_threshold: 1e-8,
            execution: Execution::default(),
        }
    }
}

/// Frames on the closed grid `0..=nx` by `0..=ny`; index `(nx, k)` is the
/// frame at `z + omega1`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameField {
    lattice: Lattice,
    nx: usize,
    ny: usize,
    zeta: Complex64,
    base: UnitaryMatrix3,
    frames: Vec<ComplexMatrix3>,
    /// Largest unitarity defect seen before reprojection.
    pub max_drift: f64,
    pub flatness_defect: f64,
}

fn propagate(start: &ComplexMatrix3, props: &[ComplexMatrix3], drift: &mut f64) -> Vec<ComplexMatrix3> {
    let mut out = Vec::with_capacity(props.len() + 1);
    let mut f = *start;
    out.push(f);
    for p in props {
        let next = f * p;
        *drift = drift.max(unitarity_defect(&next));
        f = nearest_unitary(&next);
        out.push(f);
    }
    out
}

pub fn integrate_frame(u: &ScalarField, zeta: Complex64, f0: &UnitaryMatrix3) -> Result<FrameField> {
    integrate_frame_with(u, zeta, f0, &FrameOptions::default())
}

pub fn integrate_frame_with(
    u: &ScalarField,
    zeta: Complex64,
    f0: &UnitaryMatrix3,
    opts: &FrameOptions,
) -> Result<FrameField> {
    let exec = opts.execution;
    let defect = flatness_defect_with(u, zeta, exec)?;
    if !(defect <= opts.flatness_threshold) {
        return Err(Error::NotFlat { defect, threshold: opts.flatness_threshold });
    }
    let conn = ConnectionField::with_execution(u, zeta, exec)?;
    let (nx, ny) = (u.nx(), u.ny());
    let (w1, w2) = (u.lattice().omega1(), u.lattice().omega2());
    let line = |vals: (Vec<f64>, Vec<Complex64>), omega: Complex64| {
        let m = substeps_for(&vals.0, &vals.1, omega, zeta, opts.substep_norm, opts.max_substeps);
        line_propagators(&vals.0, &vals.1, omega, zeta, m)
    };
    let mut drift = 0.0;
    let mut frames = vec![ComplexMatrix3::zeros(); (nx + 1) * (ny + 1)];
    let at = |j: usize, k: usize| j * (ny + 1) + k;
    match opts.order {
        IntegrationOrder::RowsFirst => {
            let axis = propagate(f0.matrix(), &line(conn.row(0), w1), &mut drift);
            let cols: Vec<(Vec<ComplexMatrix3>, f64)> = par::map_range(exec, nx + 1, |j| {
                let mut d = 0.0;
                let c = propagate(&axis[j], &line(conn.column(j % nx), w2), &mut d);
                (c, d)
            });
            for (j, (c, d)) in cols.into_iter().enumerate() {
                drift = f64::max(drift, d);
                for (k, f) in c.into_iter().enumerate() {
                    frames[at(j, k)] = f;
                }
            }
        }
        IntegrationOrder::ColumnsFirst => {
            let axis = propagate(f0.matrix(), &line(conn.column(0), w2), &mut drift);
            let rows: Vec<(Vec<ComplexMatrix3>, f64)> = par::map_range(exec, ny + 1, |k| {
                let mut d = 0.0;
                let r = propagate(&axis[k], &line(conn.row(k % ny), w1), &mut d);
                (r, d)
            });
            for (k, (r, d)) in rows.into_iter().enumerate() {
                drift = f64::max(drift, d);
                for (j, f) in r.into_iter().enumerate() {
                    frames[at(j, k)] = f;
                }
            }
        }
    }
    frames[0] = *f0.matrix();
    if !(drift <= opts.drift_threshold) {
        return Err(Error::Integration { drift, threshold: opts.drift_threshold });
    }
    Ok(FrameField {
        lattice: *u.lattice(),
        nx,
        ny,
        zeta,
        base: *f0,
        frames,
        max_drift: drift,
        flatness_defect: defect,
    })
}

impl FrameField {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn zeta(&self) -> Complex64 {
        self.zeta
    }

    pub fn base(&self) -> &UnitaryMatrix3 {
        &self.base
    }

    /// Frame at `(j, k)` for `j <= nx`, `k <= ny`.
    pub fn frame(&self, j: usize, k: usize) -> &ComplexMatrix3 {
        &self.frames[j * (self.ny + 1) + k]
    }

    pub fn unitary(&self, j: usize, k: usize) -> UnitaryMatrix3 {
        UnitaryMatrix3::from_unitary_unchecked(*self.frame(j, k))
    }

    pub fn max_unitarity_defect(&self) -> f64 {
        self.frames.iter().map(unitarity_defect).fold(0.0, f64::max)
    }

    /// `max |det F - det F0|`.
    pub fn determinant_spread(&self) -> f64 {
        let d0 = self.base.det();
        self.frames.iter().map(|f| (f.determinant() - d0).norm()).fold(0.0, f64::max)
    }

    /// Largest Frobenius distance to another frame field on the same grid.
    pub fn max_distance(&self, other: &FrameField) -> f64 {
        self.frames.iter().zip(&other.frames).map(|(a, b)| distance(a, b)).fold(0.0, f64::max)
    }
}

/// Holonomy over a generator and its distance to the centre `{I, eps I, eps^2 I}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monodromy {
    pub matrix: UnitaryMatrix3,
    pub distance_to_center: f64,
}

impl Monodromy {
    fn from_matrix(m: ComplexMatrix3) -> Self {
        Self { matrix: UnitaryMatrix3::from_unitary_unchecked(m), distance_to_center: distance_to_center(&m) }
    }
}

pub fn distance_to_center(m: &ComplexMatrix3) -> f64 {
    let id = ComplexMatrix3::identity();
    [Complex64::new(1.0, 0.0), EPSILON, EPSILON * EPSILON]
        .iter()
        .map(|c| distance(m, &(id * *c)))
        .fold(f64::INFINITY, f64::min)
}

/// `M = F(z0 + omega) F(z0)^{-1}` at the base point.
pub fn monodromy(frames: &FrameField, generator: Generator) -> Monodromy {
    let f0 = frames.frame(0, 0);
    let f1 = match generator {
        Generator::Omega1 => frames.frame(frames.nx, 0),
        Generator::Omega2 => frames.frame(0, frames.ny),
    };
    Monodromy::from_matrix(f1 * f0.adjoint())
}

/// Monodromy over `m omega1 + n omega2`; `(0, 0)` gives the identity exactly.
pub fn monodromy_combination(frames: &FrameField, m: i64, n: i64) -> Monodromy {
    let pow = |g: Generator, e: i64| {
        let base = *monodromy(frames, g).matrix.matrix();
        let base = if e < 0 { base.adjoint() } else { base };
        (0..e.unsigned_abs()).fold(ComplexMatrix3::identity(), |acc, _| acc * base)
    };
    Monodromy::from_matrix(pow(Generator::Omega1, m) * pow(Generator::Omega2, n))
}

/// First frame column over the grid, with the monodromies needed to
/// differentiate it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LegendrianSurface {
    lattice: Lattice,
    nx: usize,
    ny: usize,
    zeta: Complex64,
    points: Vec<ComplexVector3>,
    monodromy: [ComplexMatrix3; 2],
}

impl LegendrianSurface {
    pub fn from_frames(frames: &FrameField) -> Self {
        let (nx, ny) = (frames.nx, frames.ny);
        let points = (0..nx * ny).map(|i| frames.frame(i / ny, i % ny).column(0).into_owned()).collect();
        let monodromy = [
            *monodromy(frames, Generator::Omega1).matrix.matrix(),
            *monodromy(frames, Generator::Omega2).matrix.matrix(),
        ];
        Self { lattice: frames.lattice, nx, ny, zeta: frames.zeta, points, monodromy }
    }

    /// A surface from raw samples; `monodromy` maps `f(z)` to `f(z + omega_i)`.
    pub fn new(
        lattice: Lattice,
        nx: usize,
        ny: usize,
        zeta: Complex64,
        points: Vec<ComplexVector3>,
        monodromy: [ComplexMatrix3; 2],
    ) -> Result<Self> {
        if points.len() != nx * ny {
            return Err(Error::domain(format!("expected {} points, got {}", nx * ny, points.len())));
        }
        for m in &monodromy {
            UnitaryMatrix3::with_tolerance(*m, 1e-8)?;
        }
        Ok(Self { lattice, nx, ny, zeta, points, monodromy })
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

    pub fn zeta(&self) -> Complex64 {
        self.zeta
    }

    pub fn points(&self) -> &[ComplexVector3] {
        &self.points
    }

    pub fn point(&self, j: usize, k: usize) -> &ComplexVector3 {
        &self.points[j * self.ny + k]
    }

    pub fn monodromy(&self) -> &[ComplexMatrix3; 2] {
        &self.monodromy
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.points.iter().map(|p| (p.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `G f` for a constant unitary `G`.
    pub fn transformed(&self, g: &UnitaryMatrix3) -> Self {
        let gm = g.matrix();
        Self {
            points: self.points.iter().map(|p| gm * p).collect(),
            monodromy: self.monodromy.map(|m| gm * m * gm.adjoint()),
            ..self.clone()
        }
    }

    /// `e^{i theta} f`.
    pub fn with_phase(&self, theta: f64) -> Self {
        let c = Complex64::from_polar(1.0, theta);
        Self { points: self.points.iter().map(|p| p * c).collect(), ..self.clone() }
    }

    /// The same samples read over the lattice `lambda Lambda`.
    pub fn rescaled(&self, lambda: Complex64) -> Result<Self> {
        Ok(Self { lattice: self.lattice.scaled(lambda)?, ..self.clone() })
    }

    fn twist(&self) -> Twist {
        Twist::new(&self.monodromy[0], &self.monodromy[1])
    }
}

/// Commuting logarithms `L1`, `L2` of the two monodromies in a shared eigenbasis.
#[derive(Clone, Debug)]
struct Twist {
    q: ComplexMatrix3,
    l1: [Complex64; 3],
    l2: [Complex64; 3],
}

impl Twist {
    fn new(m1: &ComplexMatrix3, m2: &ComplexMatrix3) -> Self {
        // generic combination, so that its eigenvectors separate both
        let mix = m1 + m2 * Complex64::new(0.6180339887, 0.2718281828);
        let (q, _) = nalgebra::linalg::Schur::new(mix).unpack();
        let q = nearest_unitary(&q);
        let d1 = q.adjoint() * m1 * q;
        let d2 = q.adjoint() * m2 * q;
        let log = |c: Complex64| Complex64::new(0.0, c.arg());
        Self { q, l1: [0, 1, 2].map(|i| log(d1[(i, i)])), l2: [0, 1, 2].map(|i| log(d2[(i, i)])) }
    }

    fn mat(&self, d: [Complex64; 3]) -> ComplexMatrix3 {
        self.q * ComplexMatrix3::from_diagonal(&Vector3::from(d)) * self.q.adjoint()
    }

    /// `exp(sign (s L1 + t L2))`.
    fn factor(&self, s: f64, t: f64, sign: f64) -> ComplexMatrix3 {
        self.mat([0, 1, 2].map(|i| ((self.l1[i] * s + self.l2[i] * t) * sign).exp()))
    }

    fn log1(&self) -> ComplexMatrix3 {
        self.mat(self.l1)
    }

    fn log2(&self) -> ComplexMatrix3 {
        self.mat(self.l2)
    }
}

/// Periodic vector field on the grid, stored component-wise.
type Components = [Vec<Complex64>; 3];

/// Covariant derivatives `D_z`, `D_zbar` acting on the periodic part
/// `g = exp(-s L1 - t L2) f` of a twisted-periodic vector field.
struct TwistedCalculus {
    grid: SpectralGrid,
    l1: ComplexMatrix3,
    l2: ComplexMatrix3,
    cz: (Complex64, Complex64),
    czbar: (Complex64, Complex64),
}

impl TwistedCalculus {
    fn new(lattice: &Lattice, nx: usize, ny: usize, twist: &Twist, exec: Execution) -> Self {
        let (w1, w2) = (lattice.omega1(), lattice.omega2());
        let det = lattice.jacobian();
        Self {
            grid: SpectralGrid::new(w1, w2, nx, ny, exec),
            l1: twist.log1(),
            l2: twist.log2(),
            cz: (w2.conj() / det, -w1.conj() / det),
            czbar: (w2 / det.conj(), -w1 / det.conj()),
        }
    }

    fn apply(&self, g: &Components, c: (Complex64, Complex64)) -> Components {
        let ds: Vec<Vec<Complex64>> = g.iter().map(|v| self.grid.d_s(v)).collect();
        let dt: Vec<Vec<Complex64>> = g.iter().map(|v| self.grid.d_t(v)).collect();
        let n = g[0].len();
        let mut out: Components = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
        let m = self.l1 * c.0 + self.l2 * c.1;
        for i in 0..n {
            for r in 0..3 {
                let mut acc = c.0 * ds[r][i] + c.1 * dt[r][i];
                for q in 0..3 {
                    acc += m[(r, q)] * g[q][i];
                }
                out[r][i] = acc;
            }
        }
        out
    }

    fn dz(&self, g: &Components) -> Components {
        self.apply(g, self.cz)
    }

    fn dzbar(&self, g: &Components) -> Components {
        self.apply(g, self.czbar)
    }
}

fn vec_at(c: &Components, i: usize) -> ComplexVector3 {
    Vector3::new(c[0][i], c[1][i], c[2][i])
}

fn untwist(surface: &LegendrianSurface, twist: &Twist) -> Components {
    let (nx, ny) = (surface.nx, surface.ny);
    let n = nx * ny;
    let mut g: Components = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    for i in 0..n {
        let (s, t) = ((i / ny) as f64 / nx as f64, (i % ny) as f64 / ny as f64);
        let v = twist.factor(s, t, -1.0) * surface.points[i];
        for r in 0..3 {
            g[r][i] = v[r];
        }
    }
    g
}

/// Pointwise derivative data of a Legendrian surface.
#[derive(Clone, Debug)]
pub struct SurfaceDerivatives {
    pub f: Vec<ComplexVector3>,
    pub f_z: Vec<ComplexVector3>,
    pub f_zbar: Vec<ComplexVector3>,
    /// `Q = <f_zzz, f>`.
    pub hopf: Vec<Complex64>,
}

/// Spectral derivatives of `f` in the gauge where they are periodic.
pub fn surface_derivatives(surface: &LegendrianSurface) -> SurfaceDerivatives {
    let twist = surface.twist();
    let calc = TwistedCalculus::new(&surface.lattice, surface.nx, surface.ny, &twist, Execution::default());
    let g = untwist(surface, &twist);
    let gz = calc.dz(&g);
    let gzb = calc.dzbar(&g);
    let gzzz = calc.dz(&calc.dz(&gz));
    let (nx, ny) = (surface.nx, surface.ny);
    let n = nx * ny;
    let mut f_z = Vec::with_capacity(n);
    let mut f_zbar = Vec::with_capacity(n);
    let mut hopf = Vec::with_capacity(n);
    for i in 0..n {
        let (s, t) = ((i / ny) as f64 / nx as f64, (i % ny) as f64 / ny as f64);
        let e = twist.factor(s, t, 1.0);
        f_z.push(e * vec_at(&gz, i));
        f_zbar.push(e * vec_at(&gzb, i));
        hopf.push(hermitian(&vec_at(&gzzz, i), &vec_at(&g, i)));
    }
    SurfaceDerivatives { f: surface.points.clone(), f_z, f_zbar, hopf }
}

/// Mean of `Q` and `stddev / |mean|`.
pub fn hopf_statistics(q: &[Complex64]) -> (Complex64, f64) {
    let n = q.len() as f64;
    let mean = q.iter().sum::<Complex64>() / n;
    let var = q.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>() / n;
    (mean, var.sqrt() / mean.norm())
}

/// Names of the entries of [`verify_legendrian`], in order.
pub const LEGENDRIAN_CHECKS: [&str; 5] = ["unit_norm", "horizontality", "isotropy", "conformal_factor", "hopf_constancy"];

/// Thresholds for the five Legendrian checks.
#[derive(Clone, Debug)]
pub struct LegendrianThresholds {
    pub unit_norm: f64,
    pub horizontality: f64,
    pub isotropy: f64,
    /// Relative to `e^u`.
    pub conformal_factor: f64,
    pub hopf_constancy: f64,
}

impl Default for LegendrianThresholds {
    fn default() -> Self {
        Self { unit_norm: 1e-7, horizontality: 1e-7, isotropy: 1e-7, conformal_factor: 1e-6, hopf_constancy: 1e-6 }
    }
}

/// `|f| - 1`, `<f_z, f>` and `<f_zbar, f>`, `<f_z, f_zbar>`, `|f_z|^2 / e^u - 1`
/// and the spread of the Hopf differential.
pub fn verify_legendrian(f: &LegendrianSurface, u: &ScalarField) -> Result<VerificationReport> {
    verify_legendrian_with(f, u, &LegendrianThresholds::default())
}

pub fn verify_legendrian_with(
    f: &LegendrianSurface,
    u: &ScalarField,
    thresholds: &LegendrianThresholds,
) -> Result<VerificationReport> {
    if u.nx() != f.nx || u.ny() != f.ny {
        return Err(Error::domain("field and surface grids differ"));
    }
    let d = surface_derivatives(f);
    let mut norm = 0.0f64;
    let mut horizontal = 0.0f64;
    let mut isotropy = 0.0f64;
    let mut conformal = 0.0f64;
    for i in 0..d.f.len() {
        norm = norm.max((d.f[i].norm() - 1.0).abs());
        horizontal = horizontal
            .max(hermitian(&d.f_z[i], &d.f[i]).norm())
            .max(hermitian(&d.f_zbar[i], &d.f[i]).norm());
        isotropy = isotropy.max(hermitian(&d.f_z[i], &d.f_zbar[i]).norm());
        let eu = u.values()[i].exp();
        conformal = conformal.max((d.f_z[i].norm_squared() - eu).abs() / eu);
    }
    let (_, spread) = hopf_statistics(&d.hopf);
    let mut report = VerificationReport::default();
    report.push(LEGENDRIAN_CHECKS[0], norm, thresholds.unit_norm);
    report.push(LEGENDRIAN_CHECKS[1], horizontal, thresholds.horizontality);
    report.push(LEGENDRIAN_CHECKS[2], isotropy, thresholds.isotropy);
    report.push(LEGENDRIAN_CHECKS[3], conformal, thresholds.conformal_factor);
    report.push(LEGENDRIAN_CHECKS[4], spread, thresholds.hopf_constancy);
    Ok(report)
}

/// Special Lagrangian phase of `(f, f_x/|f_x|, f_y/|f_y|)` at every grid point.
pub fn lagrangian_phases(surface: &LegendrianSurface) -> Result<Vec<f64>> {
    let d = surface_derivatives(surface);
    let i = Complex64::i();
    d.f.iter()
        .zip(d.f_z.iter().zip(&d.f_zbar))
        .map(|(f, (fz, fzb))| {
            let fx = fz + fzb;
            let fy = (fz - fzb) * i;
            let v = [*f, fx / Complex64::new(fx.norm(), 0.0), fy / Complex64::new(fy.norm(), 0.0)];
            liecore::special_lagrangian_phase_tol(&v, 1e-6)
        })
        .collect()
}

/// Largest angular distance of the phases from the phase at the base point.
pub fn phase_spread(phases: &[f64]) -> f64 {
    phases.iter().map(|p| liecore::phase_distance(*p, phases[0])).fold(0.0, f64::max)
}

/// Projected structure of `F^{-1} F_z`: largest primitivity residual of its
/// off-diagonal part, and its largest distance to the connection `A`.
pub fn frame_derivative_check(frames: &FrameField, u: &ScalarField) -> Result<(f64, f64)> {
    let (nx, ny) = (frames.nx, frames.ny);
    let m1 = *monodromy(frames, Generator::Omega1).matrix.matrix();
    let m2 = *monodromy(frames, Generator::Omega2).matrix.matrix();
    let twist = Twist::new(&m1, &m2);
    let calc = TwistedCalculus::new(&frames.lattice, nx, ny, &twist, Execution::default());
    let conn = ConnectionField::new(u, frames.zeta)?;
    let n = nx * ny;
    let mut fz = vec![ComplexMatrix3::zeros(); n];
    for col in 0..3 {
        let mut g: Components = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
        for i in 0..n {
            let (j, k) = (i / ny, i % ny);
            let v = twist.factor(j as f64 / nx as f64, k as f64 / ny as f64, -1.0) * frames.frame(j, k).column(col);
            for r in 0..3 {
                g[r][i] = v[r];
            }
        }
        let gz = calc.dz(&g);
        for (i, m) in fz.iter_mut().enumerate() {
            let (j, k) = (i / ny, i % ny);
            let v = twist.factor(j as f64 / nx as f64, k as f64 / ny as f64, 1.0) * vec_at(&gz, i);
            m.set_column(col, &v);
        }
    }
    let mut prim = 0.0f64;
    let mut agree = 0.0f64;
    for (i, d) in fz.iter().enumerate() {
        let (j, k) = (i / ny, i % ny);
        let x = frames.frame(j, k).adjoint() * d;
        let off = x - ComplexMatrix3::from_diagonal(&x.diagonal());
        prim = prim.max(liecore::primitivity_residual(&off)?);
        agree = agree.max(distance(&x, &conn.a(j, k)));
    }
    Ok((prim, agree))
}

/// Unitarity, determinant, primitivity, connection agreement and phase checks on a frame field.
pub fn verify_frame(frames: &FrameField, u: &ScalarField) -> Result<VerificationReport> {
    let mut report = VerificationReport::default();
    report.push("unitarity", frames.max_unitarity_defect(), 1e-10);
    report.push("determinant_constancy", frames.determinant_spread(), 1e-10);
    let (prim, agree) = frame_derivative_check(frames, u)?;
    report.push("primitivity", prim, 1e-8);
    report.push("connection_agreement", agree, 1e-6);
    let surface = LegendrianSurface::from_frames(frames);
    let spread = match lagrangian_phases(&surface) {
        Ok(p) => phase_spread(&p),
        Err(_) => f64::INFINITY,
    };
    report.push("phase_constancy", spread, 1e-8);
    Ok(report)
}

/// Representatives in `C^3` of the Hopf images, first non-negligible coordinate real positive.
pub fn hopf_project(f: &LegendrianSurface) -> Vec<ComplexVector3> {
    f.points
        .iter()
        .map(|p| {
            let n = p.norm();
            let v = p / Complex64::new(n, 0.0);
            let lead = v.iter().find(|c| c.norm() > 1e-8).copied().unwrap_or(Complex64::new(1.0, 0.0));
            v * Complex64::from_polar(1.0, -lead.arg())
        })
        .collect()
}

/// Fubini–Study conformal factor `|f_x|^2 - |<f_x, f>|^2` of the projected map.
pub fn fubini_study_factor(f: &LegendrianSurface) -> Vec<f64> {
    let d = surface_derivatives(f);
    d.f.iter()
        .zip(d.f_z.iter().zip(&d.f_zbar))
        .map(|(p, (fz, fzb))| {
            let fx = fz + fzb;
            fx.norm_squared() - hermitian(&fx, p).norm_sqr()
        })
        .collect()
}

/// Cone over the surface, sampled at the given radii.
#[derive(Clone, Debug)]
pub struct ConeMesh {
    /// Vertex `r f(z)` in `C^3 = R^6` as `(Re w1, Im w1, Re w2, Im w2, Re w3, Im w3)`.
    pub vertices: Vec<[f64; 6]>,
    pub quads: Vec<[usize; 4]>,
}

/// Default `R^6 -> R^3` projection `(Re w1, Re w2, Re w3)`.
pub fn default_projection() -> Matrix6x3<f64> {
    let mut p = Matrix6x3::zeros();
    p[(0, 0)] = 1.0;
    p[(2, 1)] = 1.0;
    p[(4, 2)] = 1.0;
    p
}

pub fn cone_mesh(f: &LegendrianSurface, radii: &[f64]) -> Result<ConeMesh> {
    if radii.is_empty() {
        return Err(Error::domain("cone mesh needs at least one radius"));
    }
    if let Some(r) = radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(Error::domain(format!("radius {r} is not positive")));
    }
    let (nx, ny) = (f.nx, f.ny);
    let per = nx * ny;
    let mut vertices = Vec::with_capacity(per * radii.len());
    for &r in radii {
        for p in &f.points {
            vertices.push([r * p[0].re, r * p[0].im, r * p[1].re, r * p[1].im, r * p[2].re, r * p[2].im]);
        }
    }
    // wrap only across seams where the surface closes up
    let closed = |m: &ComplexMatrix3| distance(m, &ComplexMatrix3::identity()) < 1e-6;
    let (wrap_j, wrap_k) = (closed(&f.monodromy[0]), closed(&f.monodromy[1]));
    let jmax = if wrap_j { nx } else { nx - 1 };
    let kmax = if wrap_k { ny } else { ny - 1 };
    let id = |layer: usize, j: usize, k: usize| layer * per + (j % nx) * ny + k % ny;
    let mut quads = Vec::new();
    for layer in 0..radii.len() {
        for j in 0..jmax {
            for k in 0..kmax {
                quads.push([id(layer, j, k), id(layer, j + 1, k), id(layer, j + 1, k + 1), id(layer, j, k + 1)]);
            }
        }
    }
    for layer in 1..radii.len() {
        for j in 0..jmax {
            for k in 0..ny {
                quads.push([id(layer - 1, j, k), id(layer - 1, j + 1, k), id(layer, j + 1, k), id(layer, j, k)]);
            }
        }
    }
    Ok(ConeMesh { vertices, quads })
}

impl ConeMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Six real columns per vertex.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x1,y1,x2,y2,x3,y3\n");
        for v in &self.vertices {
            let row: Vec<String> = v.iter().map(|c| fmt_f64(*c)).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// OBJ with vertices projected by `p` (orthonormal columns) and quads split into triangles.
    pub fn to_obj(&self, p: &Matrix6x3<f64>) -> Result<String> {
        let gram = p.transpose() * p;
        if (gram - Matrix3::identity()).norm() > 1e-10 {
            return Err(Error::domain("projection columns must be orthonormal"));
        }
        let mut out = String::from("# cone over a Legendrian torus\n");
        for v in &self.vertices {
            let x = nalgebra::Vector6::from_row_slice(v);
            let y = p.transpose() * x;
            let _ = writeln!(out, "v {} {} {}", fmt_f64(y[0]), fmt_f64(y[1]), fmt_f64(y[2]));
        }
        for q in &self.quads {
            let _ = writeln!(out, "f {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1);
            let _ = writeln!(out, "f {} {} {}", q[0] + 1, q[2] + 1, q[3] + 1);
        }
        Ok(out)
    }
}

/// Random unimodular number.
pub fn random_zeta<R: rand::Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))
}
