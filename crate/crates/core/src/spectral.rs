//! Fourier differentiation on a doubly periodic grid over an arbitrary lattice.
//!
//! Grid point `(j, k)` sits at `z = (j/nx) omega1 + (k/ny) omega2`; data is
//! stored row-major with index `j * ny + k`. Derivatives are taken in lattice
//! coordinates `(s, t)` and mapped to `d/dz` through the constant Jacobian of
//! `(omega1, omega2)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::par::{self, Execution};

/// Signed frequency of FFT bin `i` out of `n`.
pub fn frequency(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn is_nyquist(i: usize, n: usize) -> bool {
    n.is_multiple_of(2) && i == n / 2
}

/// FFT plans and Fourier multipliers for one lattice and resolution.
#[derive(Clone)]
pub struct SpectralGrid {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    ds: Vec<Complex64>,
    dt: Vec<Complex64>,
    dz: Vec<Complex64>,
    dzbar: Vec<Complex64>,
    laplacian: Vec<f64>,
    exec: Execution,
}

impl std::fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralGrid").field("nx", &self.nx).field("ny", &self.ny).finish()
    }
}

impl SpectralGrid {
    pub fn new(omega1: Complex64, omega2: Complex64, nx: usize, ny: usize, exec: Execution) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(nx);
        let inv_x = planner.plan_fft_inverse(nx);
        let fwd_y = planner.plan_fft_forward(ny);
        let inv_y = planner.plan_fft_inverse(ny);

        // d/dz = (conj(w2) d/ds - conj(w1) d/dt) / D,  D = w1 conj(w2) - conj(w1) w2
        let det = omega1 * omega2.conj() - omega1.conj() * omega2;
        let det2 = det.norm_sqr();
        let n = nx * ny;
        let mut ds = vec![Complex64::new(0.0, 0.0); n];
        let mut dt = vec![Complex64::new(0.0, 0.0); n];
        let mut dz = vec![Complex64::new(0.0, 0.0); n];
        let mut dzbar = vec![Complex64::new(0.0, 0.0); n];
        let mut laplacian = vec![0.0; n];
        let two_pi_i = Complex64::new(0.0, 2.0 * PI);
        for j in 0..nx {
            let m = frequency(j, nx) as f64;
            let ny_j = is_nyquist(j, nx);
            for k in 0..ny {
                let q = frequency(k, ny) as f64;
                let ny_k = is_nyquist(k, ny);
                let idx = j * ny + k;
                let ms = if ny_j { 0.0 } else { m };
                let qs = if ny_k { 0.0 } else { q };
                ds[idx] = two_pi_i * ms;
                dt[idx] = two_pi_i * qs;
                dz[idx] = (omega2.conj() * ds[idx] - omega1.conj() * dt[idx]) / det;
                dzbar[idx] = (omega2 * ds[idx] - omega1 * dt[idx]) / det.conj();
                // 4 d_z d_zbar; the mixed term is dropped on Nyquist rows/columns
                let cross = if ny_j || ny_k { 0.0 } else { 2.0 * (omega1 * omega2.conj()).re * m * q };
                let quad = omega2.norm_sqr() * m * m + omega1.norm_sqr() * q * q - cross;
                laplacian[idx] = -16.0 * PI * PI * quad / det2;
            }
        }
        Self { nx, ny, fwd_x, inv_x, fwd_y, inv_y, ds, dt, dz, dzbar, laplacian, exec }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn execution(&self) -> Execution {
        self.exec
    }

    /// Multiplier of `Delta = 4 d_z d_zbar` per Fourier mode.
    pub fn laplacian_symbol(&self) -> &[f64] {
        &self.laplacian
    }

    fn transform(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(data.len(), nx * ny);
        par::for_each_chunk_mut(self.exec, data, ny, |_, row| rows.process(row));
        let mut tr = vec![Complex64::new(0.0, 0.0); nx * ny];
        for j in 0..nx {
            for k in 0..ny {
                tr[k * nx + j] = data[j * ny + k];
            }
        }
        par::for_each_chunk_mut(self.exec, &mut tr, nx, |_, col| cols.process(col));
        for k in 0..ny {
            for j in 0..nx {
                data[j * ny + k] = tr[k * nx + j];
            }
        }
    }

    /// In-place forward transform (unnormalized).
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.fwd_y, &self.fwd_x);
    }

    /// In-place inverse transform, normalized so that `inverse(forward(x)) = x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inv_y, &self.inv_x);
        let scale = 1.0 / (self.len() as f64);
        data.iter_mut().for_each(|c| *c *= scale);
    }

    pub fn spectrum_of_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    fn apply(&self, spectrum: &[Complex64], symbol: &[Complex64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = spectrum.iter().zip(symbol).map(|(a, b)| a * b).collect();
        self.inverse(&mut data);
        data
    }

    /// Spectral Laplacian of a real field.
    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let mut data = self.spectrum_of_real(values);
        data.iter_mut().zip(&self.laplacian).for_each(|(c, l)| *c *= *l);
        self.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }

    /// `d/dz` of a real field given by its spectrum.
    pub fn d_z_from_spectrum(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        self.apply(spectrum, &self.dz)
    }

    pub fn d_s_from_spectrum(&self, spectrum: &[Complex64]) -> Vec<f64> {
        self.apply(spectrum, &self.ds).into_iter().map(|c| c.re).collect()
    }

    pub fn d_t_from_spectrum(&self, spectrum: &[Complex64]) -> Vec<f64> {
        self.apply(spectrum, &self.dt).into_iter().map(|c| c.re).collect()
    }

    /// `d/ds` of complex samples.
    pub fn d_s(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.forward(&mut data);
        self.apply(&data, &self.ds)
    }

    /// `d/dt` of complex samples.
    pub fn d_t(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.forward(&mut data);
        self.apply(&data, &self.dt)
    }

    /// `d/dz` of complex samples.
    pub fn d_z(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.forward(&mut data);
        self.apply(&data, &self.dz)
    }

    /// `d/dzbar` of complex samples.
    pub fn d_zbar(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut data = values.to_vec();
        self.forward(&mut data);
        self.apply(&data, &self.dzbar)
    }

    /// Solves `(Delta/4 - shift) x = rhs` for real `rhs`; requires `shift > 0`.
    pub fn solve_shifted_laplacian(&self, rhs: &[f64], shift: f64) -> Vec<f64> {
        let mut data = self.spectrum_of_real(rhs);
        data.iter_mut()
            .zip(&self.laplacian)
            .for_each(|(c, l)| *c /= 0.25 * l - shift);
        self.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }
}

/// Trigonometric interpolation of periodic samples onto a grid `factor`
/// times finer. The Nyquist coefficient is split evenly between `+-n/2`.
pub fn upsample_periodic(values: &[Complex64], factor: usize) -> Vec<Complex64> {
    let n = values.len();
    if factor <= 1 {
        return values.to_vec();
    }
    let m = n * factor;
    let mut planner = FftPlanner::new();
    let mut spec = values.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut padded = vec![Complex64::new(0.0, 0.0); m];
    for (i, c) in spec.iter().enumerate() {
        let f = frequency(i, n);
        if n.is_multiple_of(2) && i == n / 2 {
            padded[n / 2] += c * 0.5;
            padded[m - n / 2] += c * 0.5;
        } else if f >= 0 {
            padded[f as usize] = *c;
        } else {
            padded[(m as i64 + f) as usize] = *c;
        }
    }
    planner.plan_fft_inverse(m).process(&mut padded);
    let scale = 1.0 / n as f64;
    padded.iter_mut().for_each(|c| *c *= scale);
    padded
}

/// Evaluates the trigonometric interpolant of periodic samples (period 1) at `x`.
pub fn interpolate_periodic(spectrum: &[Complex64], x: f64) -> f64 {
    let n = spectrum.len();
    let mut acc = 0.0;
    for (i, c) in spectrum.iter().enumerate() {
        let f = frequency(i, n) as f64;
        let phase = 2.0 * PI * f * x;
        let term = c * Complex64::from_polar(1.0, phase);
        if n.is_multiple_of(2) && i == n / 2 {
            // cos part only, shared between +-n/2
            acc += c.re * phase.cos();
        } else {
            acc += term.re;
        }
    }
    acc / n as f64
}
