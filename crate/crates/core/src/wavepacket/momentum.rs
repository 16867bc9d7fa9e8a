//! Branch-structured momentum densities `|psi_hat(k_1, .., k_N)|^2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::state::{norm_squared_from_grams, Gram, ProductSumState};
use crate::grid::{GridSpec, Spectral};

/// Continuum Fourier transform `(2 pi)^{-d/2} int phi(x) e^{-ik.x} dx` sampled on the
/// momentum grid, in FFT order.
pub fn continuous_transform(spectral: &Spectral, amplitudes: &[Complex64]) -> Vec<Complex64> {
    let grid = spectral.grid();
    let mut hat = amplitudes.to_vec();
    spectral.forward(&mut hat);
    let scale = (grid.spacing() / (2.0 * PI).sqrt()).powi(grid.dim as i32);
    for (flat, v) in hat.iter_mut().enumerate() {
        let idx = grid.unravel(flat);
        // Nodes start at -L, so each axis contributes e^{i k_m L} = (-1)^m (M is even).
        let parity: usize = (0..grid.dim).map(|a| idx[a]).sum();
        let sign = if parity % 2 == 0 { scale } else { -scale };
        *v *= sign;
    }
    hat
}

/// Inverse of [`continuous_transform`].
pub fn inverse_continuous_transform(spectral: &Spectral, hat: &[Complex64]) -> Vec<Complex64> {
    let grid = spectral.grid();
    let scale = (grid.spacing() / (2.0 * PI).sqrt()).powi(grid.dim as i32);
    let mut amps: Vec<Complex64> = hat
        .iter()
        .enumerate()
        .map(|(flat, v)| {
            let idx = grid.unravel(flat);
            let parity: usize = (0..grid.dim).map(|a| idx[a]).sum();
            if parity % 2 == 0 {
                v / scale
            } else {
                -v / scale
            }
        })
        .collect();
    spectral.inverse(&mut amps);
    amps
}

/// Volume of one momentum-grid cell, `(pi / L)^d`.
pub fn momentum_cell_volume(grid: &GridSpec) -> f64 {
    grid.wavenumber_spacing().powi(grid.dim as i32)
}

/// Matrix `sum_nodes w(n) conj(a_j(n)) a_k(n) * volume` over the arrays of one particle.
pub(crate) fn weighted_overlaps(arrays: &[&[Complex64]], weights: Option<&[f64]>, volume: f64) -> Gram {
    let nb = arrays.len();
    let mut data = vec![Complex64::new(0.0, 0.0); nb * nb];
    for j in 0..nb {
        for k in j..nb {
            let mut acc = Complex64::new(0.0, 0.0);
            match weights {
                Some(w) => {
                    for ((a, b), &wn) in arrays[j].iter().zip(arrays[k].iter()).zip(w) {
                        if wn != 0.0 {
                            acc += a.conj() * b * wn;
                        }
                    }
                }
                None => {
                    for (a, b) in arrays[j].iter().zip(arrays[k].iter()) {
                        acc += a.conj() * b;
                    }
                }
            }
            data[j * nb + k] = acc * volume;
            data[k * nb + j] = (acc * volume).conj();
        }
    }
    Gram::from_data(nb, data)
}

/// Node densities of particle `l`'s marginal: `Re sum_jk conj(c_j) c_k conj(a_j) a_k prod_{m != l} G^m_jk`.
pub(crate) fn marginal_density(
    coefficients: &[Complex64],
    arrays: &[&[Complex64]],
    others: &[&Gram],
) -> Vec<f64> {
    let nb = coefficients.len();
    let mut weights = vec![Complex64::new(0.0, 0.0); nb * nb];
    for j in 0..nb {
        for k in 0..nb {
            let mut w = coefficients[j].conj() * coefficients[k];
            for g in others {
                w *= g.get(j, k);
            }
            weights[j * nb + k] = w;
        }
    }
    let n = arrays[0].len();
    (0..n)
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..nb {
                for k in 0..nb {
                    let w = weights[j * nb + k];
                    if w != Complex64::new(0.0, 0.0) {
                        acc += (w * arrays[j][i].conj() * arrays[k][i]).re;
                    }
                }
            }
            acc.max(0.0)
        })
        .collect()
}

/// Sums node masses over all axes but `axis`, returning `(coordinate, mass)` sorted by coordinate.
pub fn axis_marginal(grid: &GridSpec, masses: &[f64], axis: usize, coordinate: impl Fn(usize) -> f64) -> Vec<(f64, f64)> {
    let mut line = vec![0.0; grid.points];
    for (flat, m) in masses.iter().enumerate() {
        line[grid.unravel(flat)[axis]] += m;
    }
    let mut out: Vec<(f64, f64)> = line.into_iter().enumerate().map(|(i, m)| (coordinate(i), m)).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Momentum-space representation of a sum-of-products state.
#[derive(Debug, Clone)]
pub struct MomentumDensity {
    grid: GridSpec,
    coefficients: Vec<Complex64>,
    /// `hats[j][l]`, continuum-normalized, FFT order.
    hats: Vec<Vec<Vec<Complex64>>>,
    grams: Vec<Gram>,
}

impl MomentumDensity {
    pub fn from_parts(grid: GridSpec, coefficients: Vec<Complex64>, hats: Vec<Vec<Vec<Complex64>>>) -> Self {
        let n = hats[0].len();
        let vol = momentum_cell_volume(&grid);
        let grams = (0..n)
            .map(|l| {
                let arrays: Vec<&[Complex64]> = hats.iter().map(|b| b[l].as_slice()).collect();
                weighted_overlaps(&arrays, None, vol)
            })
            .collect();
        Self {
            grid,
            coefficients,
            hats,
            grams,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.hats[0].len()
    }

    pub fn branches(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn hat(&self, branch: usize, particle: usize) -> &[Complex64] {
        &self.hats[branch][particle]
    }

    /// `|psi_hat|^2` at per-particle flat momentum-node indices (FFT order).
    pub fn density_at(&self, nodes: &[usize]) -> f64 {
        let amp: Complex64 = self
            .coefficients
            .iter()
            .zip(&self.hats)
            .map(|(c, branch)| c * branch.iter().zip(nodes).map(|(h, &n)| h[n]).product::<Complex64>())
            .sum();
        amp.norm_sqr()
    }

    /// Total momentum-space mass.
    pub fn total(&self) -> f64 {
        let refs: Vec<&Gram> = self.grams.iter().collect();
        norm_squared_from_grams(&self.coefficients, &refs)
    }

    /// `I^l_jk = sum_k w(k) conj(phi_hat_j) phi_hat_k dk^d` for one particle.
    pub fn factor_integrals(&self, particle: usize, weights: &[f64]) -> Gram {
        let arrays: Vec<&[Complex64]> = self.hats.iter().map(|b| b[particle].as_slice()).collect();
        weighted_overlaps(&arrays, Some(weights), momentum_cell_volume(&self.grid))
    }

    /// Integral of the density against per-particle cell weights (product region).
    pub fn region_integral(&self, weights: &[&[f64]]) -> f64 {
        let mats: Vec<Gram> = weights
            .iter()
            .enumerate()
            .map(|(l, w)| self.factor_integrals(l, w))
            .collect();
        let refs: Vec<&Gram> = mats.iter().collect();
        combine(&self.coefficients, &refs)
    }

    /// Probability mass of particle `l`'s marginal in each momentum cell (FFT order).
    pub fn marginal_masses(&self, particle: usize) -> Vec<f64> {
        let arrays: Vec<&[Complex64]> = self.hats.iter().map(|b| b[particle].as_slice()).collect();
        let others: Vec<&Gram> = (0..self.particles()).filter(|&m| m != particle).map(|m| &self.grams[m]).collect();
        let vol = momentum_cell_volume(&self.grid);
        marginal_density(&self.coefficients, &arrays, &others)
            .into_iter()
            .map(|p| p * vol)
            .collect()
    }

    /// Sorted `(k, mass)` pairs of particle `l`'s marginal along one axis.
    pub fn axis_marginal(&self, particle: usize, axis: usize) -> Vec<(f64, f64)> {
        let masses = self.marginal_masses(particle);
        let g = self.grid;
        axis_marginal(&g, &masses, axis, |i| g.wavenumber(i))
    }
}

/// `Re sum_jk conj(c_j) c_k prod_l M^l_jk`.
pub fn combine(coefficients: &[Complex64], mats: &[&Gram]) -> f64 {
    let nb = coefficients.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nb {
        for k in 0..nb {
            let mut term = coefficients[j].conj() * coefficients[k];
            for m in mats {
                term *= m.get(j, k);
            }
            acc += term;
        }
    }
    acc.re
}

/// Momentum density handle of a state via per-factor transforms.
pub fn momentum_density(s: &ProductSumState) -> MomentumDensity {
    let spectral = Spectral::for_grid(s.grid());
    let hats = s
        .factors()
        .iter()
        .map(|b| b.iter().map(|f| continuous_transform(&spectral, f.amplitudes())).collect())
        .collect();
    MomentumDensity::from_parts(*s.grid(), s.coefficients().to_vec(), hats)
}

/// Sorted `(x, mass)` pairs of particle `l`'s position marginal along one axis.
pub fn position_axis_marginal(s: &ProductSumState, particle: usize, axis: usize) -> Vec<(f64, f64)> {
    let grams = s.grams();
    let arrays: Vec<&[Complex64]> = s.factors().iter().map(|b| b[particle].amplitudes()).collect();
    let others: Vec<&Gram> = (0..s.particles()).filter(|&m| m != particle).map(|m| &grams[m]).collect();
    let vol = s.grid().cell_volume();
    let masses: Vec<f64> = marginal_density(s.coefficients(), &arrays, &others)
        .into_iter()
        .map(|p| p * vol)
        .collect();
    let g = *s.grid();
    axis_marginal(&g, &masses, axis, |i| g.coordinate(i))
}
