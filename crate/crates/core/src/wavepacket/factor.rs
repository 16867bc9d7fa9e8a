use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Values of one single-particle packet at the grid nodes.
#[derive(Debug, Clone)]
pub struct Factor {
    grid: GridSpec,
    amplitudes: Arc<[Complex64]>,
}

impl Factor {
    pub fn from_amplitudes(grid: GridSpec, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::Shape(format!(
                "factor has {} amplitudes, grid needs {}",
                amplitudes.len(),
                grid.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite factor amplitude".into()));
        }
        Ok(Self {
            grid,
            amplitudes: amplitudes.into(),
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        (self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_volume()).sqrt()
    }

    /// Grid inner product `<self, other>` (antilinear in `self`).
    pub fn inner(&self, other: &Factor) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.cell_volume()
    }

    pub fn normalized(&self) -> Result<Factor> {
        let n = self.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidArgument("cannot normalize a zero factor".into()));
        }
        let amps = self.amplitudes.iter().map(|a| a / n).collect::<Vec<_>>();
        Factor::from_amplitudes(self.grid, amps)
    }
}

/// Parameters of a Gaussian packet `exp(-|x-c|^2/(4 sigma^2) + i k.(x-c))`.
///
/// `sigma` is the position-space standard deviation of `|phi|^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
    pub sigma: f64,
}

impl GaussianPacket {
    pub fn new(center: Vec<f64>, momentum: Vec<f64>, sigma: f64) -> Self {
        Self {
            center,
            momentum,
            sigma,
        }
    }

    /// Continuum-normalized value at `x`.
    pub fn value(&self, x: &[f64]) -> Complex64 {
        let d = self.center.len();
        let s2 = self.sigma * self.sigma;
        let mut r2 = 0.0;
        let mut phase = 0.0;
        for a in 0..d {
            let dx = x[a] - self.center[a];
            r2 += dx * dx;
            phase += self.momentum[a] * dx;
        }
        let amp = (2.0 * PI * s2).powf(-(d as f64) / 4.0) * (-r2 / (4.0 * s2)).exp();
        Complex64::from_polar(amp, phase)
    }

    pub fn check(&self, grid: &GridSpec) -> Result<()> {
        if self.center.len() != grid.dim || self.momentum.len() != grid.dim {
            return Err(Error::Shape(format!(
                "packet vectors must have dimension {}",
                grid.dim
            )));
        }
        let min = 4.0 * grid.spacing();
        if !(self.sigma >= min) {
            return Err(Error::UnderResolved {
                sigma: self.sigma,
                min,
            });
        }
        let mass = self.mass_outside(grid);
        if mass >= 1e-12 {
            return Err(Error::PacketLeak { mass });
        }
        Ok(())
    }

    /// Continuum mass of `|phi|^2` outside `[-L, L)^d`.
    pub fn mass_outside(&self, grid: &GridSpec) -> f64 {
        let l = grid.half_width;
        let scale = self.sigma * std::f64::consts::SQRT_2;
        let inside: f64 = self
            .center
            .iter()
            .map(|&c| 1.0 - 0.5 * erfc((l - c) / scale) - 0.5 * erfc((l + c) / scale))
            .product();
        (1.0 - inside).max(0.0)
    }
}

/// Normalized Gaussian factor with the given center, mean momentum and width.
pub fn init_gaussian(
    center: &[f64],
    momentum: &[f64],
    sigma: f64,
    grid: &GridSpec,
) -> Result<Factor> {
    let packet = GaussianPacket::new(center.to_vec(), momentum.to_vec(), sigma);
    superpose(&[(Complex64::new(1.0, 0.0), packet)], grid)
}

/// Normalized superposition `sum_i w_i g_i` of Gaussian packets.
pub fn superpose(parts: &[(Complex64, GaussianPacket)], grid: &GridSpec) -> Result<Factor> {
    if parts.is_empty() {
        return Err(Error::InvalidArgument("superposition needs at least one packet".into()));
    }
    for (_, p) in parts {
        p.check(grid)?;
    }
    let d = grid.dim;
    let amps: Vec<Complex64> = (0..grid.len())
        .map(|flat| {
            let x = grid.node_position(flat);
            parts.iter().map(|(w, p)| w * p.value(&x[..d])).sum()
        })
        .collect();
    Factor::from_amplitudes(*grid, amps)?.normalized()
}
