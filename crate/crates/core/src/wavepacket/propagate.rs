//! Split-step Fourier propagation of single-particle factors.

use std::sync::Arc;

use num_complex::Complex64;

use super::factor::Factor;
use super::potential::PotentialSpec;
use super::state::ProductSumState;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Spectral};

/// Strang substep `e^{-iV dt/2} e^{-iT dt} e^{-iV dt/2}` for one factor on one grid.
#[derive(Debug, Clone)]
pub struct FactorPropagator {
    spectral: Arc<Spectral>,
    dt: f64,
    kinetic: Vec<Complex64>,
    potential_half: Option<Vec<Complex64>>,
}

impl FactorPropagator {
    pub fn new(grid: &GridSpec, potential: &PotentialSpec, dt: f64) -> Self {
        let spectral = Spectral::for_grid(grid);
        let kinetic = (0..grid.len())
            .map(|flat| Complex64::from_polar(1.0, -0.5 * spectral.k_squared(flat) * dt))
            .collect();
        let potential_half = if potential.is_none() {
            None
        } else {
            Some(
                potential
                    .sample(grid)
                    .into_iter()
                    .map(|v| Complex64::from_polar(1.0, -0.5 * v * dt))
                    .collect(),
            )
        };
        Self {
            spectral,
            dt,
            kinetic,
            potential_half,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn is_free(&self) -> bool {
        self.potential_half.is_none()
    }

    pub fn spectral(&self) -> &Arc<Spectral> {
        &self.spectral
    }

    /// One substep applied in place to node amplitudes.
    pub fn step(&self, amplitudes: &mut [Complex64]) {
        if let Some(vh) = &self.potential_half {
            for (a, p) in amplitudes.iter_mut().zip(vh) {
                *a *= p;
            }
        }
        self.spectral.forward(amplitudes);
        for (a, p) in amplitudes.iter_mut().zip(&self.kinetic) {
            *a *= p;
        }
        self.spectral.inverse(amplitudes);
        if let Some(vh) = &self.potential_half {
            for (a, p) in amplitudes.iter_mut().zip(vh) {
                *a *= p;
            }
        }
    }
}

/// Multiplies a spectrum by the exact free phase `e^{-i k^2 t / 2}`.
pub fn apply_free_phase(spectral: &Spectral, hat: &mut [Complex64], t: f64) {
    for (flat, v) in hat.iter_mut().enumerate() {
        *v *= Complex64::from_polar(1.0, -0.5 * spectral.k_squared(flat) * t);
    }
}

/// Number of substeps and their length covering `dt` with `dt_sub <= max_substep`.
pub fn substeps(grid: &GridSpec, dt: f64) -> (usize, f64) {
    let n = (dt / grid.max_substep()).ceil().max(1.0) as usize;
    (n, dt / n as f64)
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "propagation time {dt} must be finite and non-negative"
        )));
    }
    Ok(())
}

/// Approximates `e^{-i H dt} f` with `H = -Laplacian/2 + V`.
///
/// Free factors are propagated exactly in Fourier space.
pub fn evolve_factor(f: &Factor, potential: &PotentialSpec, dt: f64) -> Result<Factor> {
    check_dt(dt)?;
    if dt == 0.0 {
        return Ok(f.clone());
    }
    let grid = *f.grid();
    let mut amps = f.amplitudes().to_vec();
    if potential.is_none() {
        let spectral = Spectral::for_grid(&grid);
        spectral.forward(&mut amps);
        apply_free_phase(&spectral, &mut amps, dt);
        spectral.inverse(&mut amps);
    } else {
        let (n, sub) = substeps(&grid, dt);
        let prop = FactorPropagator::new(&grid, potential, sub);
        for _ in 0..n {
            prop.step(&mut amps);
        }
    }
    Factor::from_amplitudes(grid, amps)
}

/// Branch-wise evolution: every `phi_{j,l}` evolves under `H_l`; coefficients are unchanged.
pub fn evolve_state(
    s: &ProductSumState,
    potentials: &[PotentialSpec],
    dt: f64,
) -> Result<ProductSumState> {
    check_dt(dt)?;
    let n = s.particles();
    if !potentials.is_empty() && potentials.len() != n {
        return Err(Error::Shape(format!(
            "{} potentials for {n} particles",
            potentials.len()
        )));
    }
    let none = PotentialSpec::None;
    let factors = s
        .factors()
        .iter()
        .map(|branch| {
            branch
                .iter()
                .enumerate()
                .map(|(l, f)| evolve_factor(f, potentials.get(l).unwrap_or(&none), dt))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(s.with_parts(s.coefficients().to_vec(), factors, s.time() + dt))
}
