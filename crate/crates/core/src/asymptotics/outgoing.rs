//! Outgoing asymptote of a scattering state via a numerical wave operator.

use num_complex::Complex64;

use crate::dynamics::timeline::{BOUNDARY_BAND, BOUNDARY_TOLERANCE};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Spectral};
use crate::spline::{FactorField, Stencil};
use crate::wavepacket::momentum::{continuous_transform, momentum_cell_volume};
use crate::wavepacket::propagate::FactorPropagator;
use crate::wavepacket::{Factor, MomentumDensity, PotentialSpec, ProductSumState};

/// Potential values above this magnitude count as the interaction region.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;
/// Largest tolerated mass inside the interaction region at the horizon.
pub const OVERLAP_TOLERANCE: f64 = 1e-6;
/// Largest tolerated L2 change between horizons `T` and `2T`.
pub const CONVERGENCE_TOLERANCE: f64 = 1e-4;
pub const MAX_DOUBLINGS: usize = 8;

/// `psi_out` in momentum space, in the branch structure of the initial state.
#[derive(Debug, Clone)]
pub struct OutgoingAsymptote {
    density: MomentumDensity,
    /// Accepted wave-operator horizon per particle (0 for free motion).
    horizons: Vec<f64>,
}

impl OutgoingAsymptote {
    pub fn density(&self) -> &MomentumDensity {
        &self.density
    }

    pub fn grid(&self) -> &GridSpec {
        self.density.grid()
    }

    pub fn particles(&self) -> usize {
        self.density.particles()
    }

    /// Largest horizon used over all factors.
    pub fn horizon(&self) -> f64 {
        self.horizons.iter().copied().fold(0.0, f64::max)
    }

    pub fn horizons(&self) -> &[f64] {
        &self.horizons
    }

    pub fn total(&self) -> f64 {
        self.density.total()
    }

    /// Interpolated `psi_hat_out(k)` for the full configuration `k` (`N d` components).
    pub fn evaluate(&self, k: &[f64]) -> Result<Complex64> {
        let fields = self.spline_fields();
        evaluate_fields(&fields, self, k)
    }

    pub(crate) fn spline_fields(&self) -> MomentumFields {
        let grid = *self.grid();
        let kgrid = momentum_grid(&grid);
        let spectral = Spectral::for_grid(&kgrid);
        let fields = (0..self.density.branches())
            .map(|j| {
                (0..self.particles())
                    .map(|l| FactorField::from_amplitudes(&spectral, &fft_shift(&grid, self.density.hat(j, l))))
                    .collect()
            })
            .collect();
        MomentumFields { kgrid, fields }
    }
}

/// Momentum nodes in increasing order viewed as a position-type grid.
pub(crate) fn momentum_grid(grid: &GridSpec) -> GridSpec {
    GridSpec {
        dim: grid.dim,
        points: grid.points,
        half_width: std::f64::consts::PI / grid.spacing(),
    }
}

/// Reorders an FFT-ordered array so that wavenumbers increase from `-pi/h`.
pub(crate) fn fft_shift(grid: &GridSpec, data: &[Complex64]) -> Vec<Complex64> {
    let m = grid.points;
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    for (flat, v) in data.iter().enumerate() {
        let idx = grid.unravel(flat);
        let mut shifted = [0usize; 3];
        for a in 0..grid.dim {
            shifted[a] = (idx[a] + m / 2) % m;
        }
        out[grid.ravel(&shifted[..grid.dim])] = *v;
    }
    out
}

pub(crate) struct MomentumFields {
    pub kgrid: GridSpec,
    pub fields: Vec<Vec<FactorField>>,
}

pub(crate) fn evaluate_fields(f: &MomentumFields, out: &OutgoingAsymptote, k: &[f64]) -> Result<Complex64> {
    let d = f.kgrid.dim;
    let n = out.particles();
    if k.len() != n * d {
        return Err(Error::Shape(format!("momentum configuration has {} components", k.len())));
    }
    if !f.kgrid.contains(k) {
        return Err(Error::InvalidArgument("momentum outside the grid".into()));
    }
    let stencils: Vec<Stencil> = (0..n).map(|l| Stencil::new(&f.kgrid, &k[l * d..(l + 1) * d])).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, c) in out.density.coefficients().iter().enumerate() {
        let mut prod = *c;
        for (l, st) in stencils.iter().enumerate() {
            prod *= f.fields[j][l].value(st);
        }
        acc += prod;
    }
    Ok(acc)
}

fn position_spread(f: &Factor) -> f64 {
    let g = f.grid();
    let mut mean = [0.0; 3];
    let mut second = [0.0; 3];
    let mut total = 0.0;
    for (flat, a) in f.amplitudes().iter().enumerate() {
        let p = a.norm_sqr();
        let x = g.node_position(flat);
        for i in 0..g.dim {
            mean[i] += p * x[i];
            second[i] += p * x[i] * x[i];
        }
        total += p;
    }
    (0..g.dim)
        .map(|i| (second[i] / total - (mean[i] / total).powi(2)).max(0.0).sqrt())
        .fold(0.0, f64::max)
}

fn rms_speed(grid: &GridSpec, hat: &[Complex64]) -> f64 {
    let sp = Spectral::for_grid(grid);
    let mut total = 0.0;
    let mut k2 = 0.0;
    for (flat, v) in hat.iter().enumerate() {
        let p = v.norm_sqr();
        total += p;
        k2 += p * sp.k_squared(flat);
    }
    (k2 / total).sqrt()
}

/// Default first horizon `8 (w_V + sigma) / v` for one factor.
pub fn default_horizon(f: &Factor, potential: &PotentialSpec) -> f64 {
    let hat = continuous_transform(&Spectral::for_grid(f.grid()), f.amplitudes());
    let v = rms_speed(f.grid(), &hat).max(1e-3);
    8.0 * (potential.max_width() + position_spread(f)) / v
}

fn band_mass(grid: &GridSpec, amps: &[Complex64]) -> f64 {
    let m = grid.points;
    let b = BOUNDARY_BAND;
    amps.iter()
        .enumerate()
        .filter(|(flat, _)| {
            let idx = grid.unravel(*flat);
            (0..grid.dim).any(|a| idx[a] < b || idx[a] >= m - b)
        })
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        * grid.cell_volume()
}

/// `e^{i H_0 T} e^{-i H T} phi` in momentum space, doubling `T` until converged.
pub fn outgoing_factor(f: &Factor, potential: &PotentialSpec, initial_horizon: Option<f64>) -> Result<(Vec<Complex64>, f64)> {
    let grid = *f.grid();
    let spectral = Spectral::for_grid(&grid);
    if potential.is_none() {
        return Ok((continuous_transform(&spectral, f.amplitudes()), 0.0));
    }
    let t0 = initial_horizon.unwrap_or_else(|| default_horizon(f, potential));
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::InvalidArgument(format!("wave-operator horizon {t0} must be positive")));
    }
    let dt = grid.max_substep();
    let prop = FactorPropagator::new(&grid, potential, dt);
    let support: Vec<bool> = potential.sample(&grid).iter().map(|v| v.abs() > SUPPORT_THRESHOLD).collect();
    let vol = momentum_cell_volume(&grid);
    let mut amps = f.amplitudes().to_vec();
    let mut steps = 0usize;
    let mut previous: Option<Vec<Complex64>> = None;
    let mut target = t0;
    let mut last_change = f64::NAN;
    let mut last_overlap = f64::NAN;
    for _ in 0..=MAX_DOUBLINGS {
        let n_target = (target / dt).ceil() as usize;
        while steps < n_target {
            prop.step(&mut amps);
            steps += 1;
        }
        let t = steps as f64 * dt;
        let leak = band_mass(&grid, &amps);
        if leak > BOUNDARY_TOLERANCE {
            return Err(Error::Horizon(format!(
                "packet reached the grid boundary (mass {leak:e}) at T = {t} before the wave operator converged \
                 (last L2 change {last_change:e}, interaction-region mass {last_overlap:e})"
            )));
        }
        last_overlap = amps
            .iter()
            .zip(&support)
            .filter(|(_, &s)| s)
            .map(|(a, _)| a.norm_sqr())
            .sum::<f64>()
            * grid.cell_volume();
        let mut out = continuous_transform(&spectral, &amps);
        crate::wavepacket::propagate::apply_free_phase(&spectral, &mut out, -t);
        if last_overlap < OVERLAP_TOLERANCE {
            if let Some(prev) = &previous {
                last_change = (prev
                    .iter()
                    .zip(&out)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    * vol)
                    .sqrt();
                if last_change < CONVERGENCE_TOLERANCE {
                    return Ok((out, t));
                }
            }
            previous = Some(out);
        }
        target *= 2.0;
    }
    Err(Error::Horizon(format!(
        "no convergence after {MAX_DOUBLINGS} doublings from T = {t0}: L2 change {last_change:e}, \
         interaction-region mass {last_overlap:e}"
    )))
}

/// Outgoing asymptote of `s0` under per-particle potentials (empty for free motion).
pub fn compute_psi_out(s0: &ProductSumState, potentials: &[PotentialSpec], initial_horizon: Option<f64>) -> Result<OutgoingAsymptote> {
    let n = s0.particles();
    if !potentials.is_empty() && potentials.len() != n {
        return Err(Error::Shape(format!("{} potentials for {n} particles", potentials.len())));
    }
    let none = PotentialSpec::None;
    let mut horizons = vec![0.0f64; n];
    let mut hats = Vec::with_capacity(s0.branches());
    for branch in s0.factors() {
        let mut row = Vec::with_capacity(n);
        for (l, f) in branch.iter().enumerate() {
            let v = potentials.get(l).unwrap_or(&none);
            v.validate(s0.grid().dim)?;
            let (hat, t) = outgoing_factor(f, v, initial_horizon)?;
            horizons[l] = horizons[l].max(t);
            row.push(hat);
        }
        hats.push(row);
    }
    Ok(OutgoingAsymptote {
        density: MomentumDensity::from_parts(*s0.grid(), s0.coefficients().to_vec(), hats),
        horizons,
    })
}
