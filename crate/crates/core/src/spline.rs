//! Periodic tensor-product cubic spline interpolation.
//!
//! Node arrays are converted to cubic B-spline coefficients by dividing
//! their spectrum by the B-spline symbol, so the interpolant reproduces
//! node values exactly (to rounding). Gradients are interpolated from the
//! spectrally differentiated node arrays, not by differentiating the spline.

use num_complex::Complex64;

use crate::grid::{GridSpec, Spectral};

/// Interpolation weights for one off-grid point.
#[derive(Debug, Clone)]
pub struct Stencil {
    dim: usize,
    points: usize,
    index: [[usize; 4]; 3],
    weight: [[f64; 4]; 3],
}

impl Stencil {
    /// Builds the stencil at `x` (periodic wrap; callers check the domain).
    pub fn new(grid: &GridSpec, x: &[f64]) -> Self {
        let h = grid.spacing();
        let m = grid.points;
        let mut index = [[0; 4]; 3];
        let mut weight = [[0.0; 4]; 3];
        for a in 0..grid.dim {
            let u = (x[a] + grid.half_width) / h;
            let cell = u.floor();
            let f = u - cell;
            let base = (cell as i64).rem_euclid(m as i64) as usize;
            let f2 = f * f;
            let f3 = f2 * f;
            let g = 1.0 - f;
            weight[a] = [
                g * g * g / 6.0,
                (3.0 * f3 - 6.0 * f2 + 4.0) / 6.0,
                (-3.0 * f3 + 3.0 * f2 + 3.0 * f + 1.0) / 6.0,
                f3 / 6.0,
            ];
            for (t, slot) in index[a].iter_mut().enumerate() {
                *slot = (base + m + t - 1) % m;
            }
        }
        Self {
            dim: grid.dim,
            points: m,
            index,
            weight,
        }
    }

    /// Accumulates `scale * sum_taps w * coeffs[node * ncomp + c]` into `out[c]`.
    #[inline]
    pub fn accumulate(&self, coeffs: &[Complex64], ncomp: usize, scale: f64, out: &mut [Complex64]) {
        match self.dim {
            1 => {
                for t in 0..4 {
                    let w = self.weight[0][t] * scale;
                    let base = self.index[0][t] * ncomp;
                    for c in 0..ncomp {
                        out[c] += coeffs[base + c] * w;
                    }
                }
            }
            2 => {
                let m = self.points;
                for t0 in 0..4 {
                    let row = self.index[0][t0] * m;
                    let w0 = self.weight[0][t0] * scale;
                    for t1 in 0..4 {
                        let w = w0 * self.weight[1][t1];
                        let base = (row + self.index[1][t1]) * ncomp;
                        for c in 0..ncomp {
                            out[c] += coeffs[base + c] * w;
                        }
                    }
                }
            }
            _ => {
                let m = self.points;
                for t0 in 0..4 {
                    let w0 = self.weight[0][t0] * scale;
                    for t1 in 0..4 {
                        let w01 = w0 * self.weight[1][t1];
                        let row = (self.index[0][t0] * m + self.index[1][t1]) * m;
                        for t2 in 0..4 {
                            let w = w01 * self.weight[2][t2];
                            let base = (row + self.index[2][t2]) * ncomp;
                            for c in 0..ncomp {
                                out[c] += coeffs[base + c] * w;
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Spline coefficients of a single-particle factor and its gradient,
/// interleaved per node as `[value, d/dx_1, .., d/dx_d]`.
#[derive(Debug, Clone)]
pub struct FactorField {
    dim: usize,
    coeffs: Vec<Complex64>,
    max_abs: f64,
}

impl FactorField {
    /// From node amplitudes (one forward FFT).
    pub fn from_amplitudes(spectral: &Spectral, amplitudes: &[Complex64]) -> Self {
        let mut hat = amplitudes.to_vec();
        spectral.forward(&mut hat);
        Self::from_spectrum(spectral, &hat)
    }

    /// From the unnormalized FFT of the node amplitudes.
    pub fn from_spectrum(spectral: &Spectral, hat: &[Complex64]) -> Self {
        let grid = *spectral.grid();
        let d = grid.dim;
        let ncomp = d + 1;
        let n = grid.len();
        let kx = spectral.wavenumbers();
        let symbol = spectral.bspline_symbol();
        let nyquist = grid.points / 2;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n * ncomp];
        let mut work = vec![Complex64::new(0.0, 0.0); n];
        for comp in 0..ncomp {
            for (flat, w) in work.iter_mut().enumerate() {
                let idx = grid.unravel(flat);
                let mut sym = 1.0;
                for a in 0..d {
                    sym *= symbol[idx[a]];
                }
                let mut v = hat[flat] / sym;
                if comp > 0 {
                    let axis = comp - 1;
                    // The Nyquist mode has no consistent derivative; drop it.
                    let k = if idx[axis] == nyquist { 0.0 } else { kx[idx[axis]] };
                    v *= Complex64::new(0.0, k);
                }
                *w = v;
            }
            spectral.inverse(&mut work);
            for (flat, v) in work.iter().enumerate() {
                coeffs[flat * ncomp + comp] = *v;
            }
        }
        let max_abs = coeffs
            .iter()
            .step_by(ncomp)
            .fold(0.0f64, |acc, c| acc.max(c.norm()));
        Self {
            dim: d,
            coeffs,
            max_abs,
        }
    }

    pub fn ncomp(&self) -> usize {
        self.dim + 1
    }

    /// Largest spline coefficient magnitude, a proxy for `max |phi|` used by node guards.
    pub fn max_abs(&self) -> f64 {
        self.max_abs
    }

    /// Adds `scale * [phi, grad phi]` at the stencil point to `out`.
    #[inline]
    pub fn accumulate(&self, stencil: &Stencil, scale: f64, out: &mut [Complex64]) {
        stencil.accumulate(&self.coeffs, self.dim + 1, scale, out);
    }

    pub fn value(&self, stencil: &Stencil) -> Complex64 {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        self.accumulate(stencil, 1.0, &mut out);
        out[0]
    }

    /// Interpolated node values squared, summed over nodes within `band` nodes of any face.
    pub fn boundary_mass(&self, grid: &GridSpec, band: usize) -> f64 {
        let m = grid.points;
        let mut mass = 0.0;
        for flat in 0..grid.len() {
            let idx = grid.unravel(flat);
            if (0..grid.dim).any(|a| idx[a] < band || idx[a] >= m - band) {
                let x = grid.node_position(flat);
                let st = Stencil::new(grid, &x[..grid.dim]);
                mass += self.value(&st).norm_sqr();
            }
        }
        mass * grid.cell_volume()
    }
}
