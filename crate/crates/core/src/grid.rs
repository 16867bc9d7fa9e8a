//! Periodic position grids and their spectral (FFT) machinery.
//!
//! Nodes along every axis sit at `-L + i h` for `i = 0..M`, with `h = 2L/M`.
//! Multi-dimensional arrays are stored row-major with axis 0 slowest.
//! Wavenumbers follow FFT ordering: `k_m = m * pi / L` for `m` in
//! `0..M/2` followed by `-M/2..0`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spatial dimension per particle (1, 2 or 3).
    pub dim: usize,
    /// Points per axis, a power of two.
    pub points: usize,
    /// Domain half-width `L`; the domain is `[-L, L)` per axis.
    pub half_width: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, half_width: f64) -> Result<Self> {
        let grid = Self {
            dim,
            points,
            half_width,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::InvalidGrid(format!(
                "dimension {} not in 1..=3",
                self.dim
            )));
        }
        if self.points < 16 || !self.points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {} must be a power of two >= 16",
                self.points
            )));
        }
        if !(self.half_width > 0.0) || !self.half_width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "half-width {} must be positive",
                self.half_width
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Total node count `M^d`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn coordinate(&self, index: usize) -> f64 {
        -self.half_width + index as f64 * self.spacing()
    }

    pub fn wavenumber_spacing(&self) -> f64 {
        PI / self.half_width
    }

    /// Wavenumber of FFT bin `index` along one axis.
    pub fn wavenumber(&self, index: usize) -> f64 {
        let m = if index < self.points / 2 {
            index as f64
        } else {
            index as f64 - self.points as f64
        };
        m * self.wavenumber_spacing()
    }

    /// Splits a flat row-major index into per-axis indices.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = flat % self.points;
            flat /= self.points;
        }
        out
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx[..self.dim]
            .iter()
            .fold(0, |acc, &i| acc * self.points + i)
    }

    /// Position of a flat node index.
    pub fn node_position(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.coordinate(idx[a]);
        }
        x
    }

    /// Wavevector of a flat FFT-ordered index.
    pub fn node_wavevector(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut k = [0.0; 3];
        for a in 0..self.dim {
            k[a] = self.wavenumber(idx[a]);
        }
        k
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .all(|&c| c.is_finite() && c >= -self.half_width && c < self.half_width)
    }

    /// Sub-step bound for split-step propagation: `min(0.1 h^2, 1e-2)`.
    pub fn max_substep(&self) -> f64 {
        (0.1 * self.spacing().powi(2)).min(1e-2)
    }
}

/// FFT plans and per-axis spectral tables for one grid.
pub struct Spectral {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    wavenumbers: Vec<f64>,
    bspline_symbol: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

static SPECTRAL_CACHE: Lazy<Mutex<HashMap<(usize, usize, u64), Arc<Spectral>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

impl Spectral {
    /// Shared spectral tables for `grid`; plans are built once per grid.
    pub fn for_grid(grid: &GridSpec) -> Arc<Spectral> {
        let key = (grid.dim, grid.points, grid.half_width.to_bits());
        let mut cache = SPECTRAL_CACHE.lock().expect("spectral cache poisoned");
        cache
            .entry(key)
            .or_insert_with(|| Arc::new(Spectral::new(*grid)))
            .clone()
    }

    fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.points);
        let inverse = planner.plan_fft_inverse(grid.points);
        let wavenumbers = (0..grid.points).map(|i| grid.wavenumber(i)).collect();
        // Fourier symbol of the cubic B-spline sampled at the nodes: (4 + 2 cos(kh)) / 6.
        let bspline_symbol = (0..grid.points)
            .map(|i| (4.0 + 2.0 * (2.0 * PI * i as f64 / grid.points as f64).cos()) / 6.0)
            .collect();
        Self {
            grid,
            forward,
            inverse,
            wavenumbers,
            bspline_symbol,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Per-axis wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    pub fn bspline_symbol(&self) -> &[f64] {
        &self.bspline_symbol
    }

    /// Squared wavevector magnitude at a flat FFT-ordered index.
    pub fn k_squared(&self, flat: usize) -> f64 {
        let idx = self.grid.unravel(flat);
        (0..self.grid.dim)
            .map(|a| self.wavenumbers[idx[a]].powi(2))
            .sum()
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform in place, normalized by `1/M^d`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.grid.points;
        let d = self.grid.dim;
        assert_eq!(data.len(), self.grid.len(), "array does not match grid");
        // Last axis is contiguous: rustfft handles consecutive rows in one call.
        plan.process(data);
        if d == 1 {
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        for axis in 0..d - 1 {
            let stride = m.pow((d - 1 - axis) as u32);
            let block = stride * m;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[start + i * stride];
                    }
                    plan.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }
}
