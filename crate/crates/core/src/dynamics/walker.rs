use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ode::{DenseStep, Dopri5, IntegratorConfig};
use super::timeline::Window;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::wavepacket::{Evaluator, ProductSumState};

/// Why a sample stopped before producing all of its exit records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortKind {
    Node,
    Domain,
    Horizon,
    OutsideStart,
    Degenerate,
}

impl AbortKind {
    pub const ALL: [AbortKind; 5] = [
        AbortKind::Node,
        AbortKind::Domain,
        AbortKind::Horizon,
        AbortKind::OutsideStart,
        AbortKind::Degenerate,
    ];

    /// Per-sample failures; anything else is a run-level error.
    pub fn from_error(e: &Error) -> Option<Self> {
        match e {
            Error::NodeProximity { .. } | Error::StepUnderflow { .. } => Some(Self::Node),
            Error::DomainEscape { .. } => Some(Self::Domain),
            Error::OutsideBall { .. } => Some(Self::OutsideStart),
            Error::CollapseDegenerate { .. } => Some(Self::Degenerate),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Node => "node",
            Self::Domain => "domain",
            Self::Horizon => "horizon",
            Self::OutsideStart => "outside_start",
            Self::Degenerate => "degenerate",
        }
    }
}

/// One trajectory of the guidance ODE over a shared snapshot sequence.
///
/// Only `active` particles move; the others are frozen and their factors are
/// already folded into `coefficients`.
#[derive(Debug, Clone)]
pub struct Walker {
    ode: Dopri5,
    dim: usize,
    active: Vec<usize>,
    coefficients: Vec<Complex64>,
    evaluator: Evaluator,
    pos: Vec<f64>,
    vel: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn guidance(
    evaluator: &mut Evaluator,
    active: &[usize],
    coefficients: &[Complex64],
    dim: usize,
    window: &Window,
    guard: f64,
    t: f64,
    y: &[f64],
    dy: &mut [f64],
    pos: &mut [f64],
    vel: &mut [f64],
) -> Result<()> {
    let na = active.len();
    for (slot, &l) in active.iter().enumerate() {
        pos[slot * dim..(slot + 1) * dim].copy_from_slice(&y[l * dim..(l + 1) * dim]);
    }
    evaluator.velocity(
        &window.source_at(t),
        coefficients,
        active,
        &pos[..na * dim],
        guard,
        t,
        &mut vel[..na * dim],
    )?;
    dy.fill(0.0);
    for (slot, &l) in active.iter().enumerate() {
        dy[l * dim..(l + 1) * dim].copy_from_slice(&vel[slot * dim..(slot + 1) * dim]);
    }
    Ok(())
}

impl Walker {
    pub fn new(grid: GridSpec, particles: usize, coefficients: Vec<Complex64>, x0: &[f64], t0: f64, cfg: &IntegratorConfig) -> Self {
        let dim = grid.dim;
        Self {
            ode: Dopri5::new(t0, x0, cfg.initial_step),
            dim,
            active: (0..particles).collect(),
            coefficients,
            evaluator: Evaluator::new(grid, particles),
            pos: vec![0.0; particles * dim],
            vel: vec![0.0; particles * dim],
        }
    }

    pub fn time(&self) -> f64 {
        self.ode.time()
    }

    pub fn state(&self) -> &[f64] {
        self.ode.state()
    }

    pub fn dense(&self) -> &DenseStep {
        self.ode.dense()
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn counts(&self) -> (usize, usize) {
        self.ode.counts()
    }

    pub fn is_active(&self, particle: usize) -> bool {
        self.active.contains(&particle)
    }

    /// Freezes a particle and installs the conditional coefficients.
    pub fn freeze(&mut self, particle: usize, coefficients: Vec<Complex64>) {
        self.active.retain(|&l| l != particle);
        self.coefficients = coefficients;
    }

    /// Restarts the integrator from `(t, y)`.
    pub fn restart(&mut self, t: f64, y: &[f64]) {
        self.ode.reset(t, y);
    }

    /// Velocity of every particle at `(t, y)`; frozen particles get zero.
    pub fn velocity(&mut self, window: &Window, t: f64, y: &[f64], cfg: &IntegratorConfig, out: &mut [f64]) -> Result<()> {
        guidance(
            &mut self.evaluator,
            &self.active,
            &self.coefficients,
            self.dim,
            window,
            cfg.node_guard,
            t,
            y,
            out,
            &mut self.pos,
            &mut self.vel,
        )
    }

    /// One accepted step ending no later than `t_limit <= window.end()`.
    pub fn step(&mut self, window: &Window, t_limit: f64, cfg: &IntegratorConfig) -> Result<()> {
        let Self {
            ode,
            dim,
            active,
            coefficients,
            evaluator,
            pos,
            vel,
        } = self;
        if active.is_empty() {
            let y = ode.state().to_vec();
            let mut f = |_t: f64, _y: &[f64], dy: &mut [f64]| {
                dy.fill(0.0);
                Ok(())
            };
            ode.reset(ode.time(), &y);
            return ode.step(&mut f, t_limit, cfg);
        }
        let mut f = |t: f64, y: &[f64], dy: &mut [f64]| {
            guidance(evaluator, active, coefficients, *dim, window, cfg.node_guard, t, y, dy, pos, vel)
        };
        ode.step(&mut f, t_limit, cfg)
    }
}

/// Bohmian velocity `Im(grad_l psi / psi)` of all particles at configuration `x`.
pub fn velocity(s: &ProductSumState, x: &[f64], t: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    if (s.time() - t).abs() > 1e-12 * (1.0 + t.abs()) {
        return Err(Error::InvalidArgument(format!(
            "state is at t = {}, velocity requested at t = {t}",
            s.time()
        )));
    }
    let snap = s.snapshot();
    let all: Vec<usize> = (0..s.particles()).collect();
    let mut ev = Evaluator::new(*s.grid(), s.particles());
    let mut out = vec![0.0; x.len()];
    ev.velocity(&snap, s.coefficients(), &all, x, cfg.node_guard, t, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepacket::factor::init_gaussian;
    use crate::wavepacket::propagate::evolve_state;

    #[test]
    fn real_state_has_zero_velocity() {
        let g = GridSpec::new(1, 256, 16.0).unwrap();
        let a = init_gaussian(&[0.0], &[0.0], 1.0, &g).unwrap();
        let b = init_gaussian(&[1.0], &[0.0], 1.5, &g).unwrap();
        let s = ProductSumState::product(vec![a, b]).unwrap();
        let v = velocity(&s, &[0.3, -2.0], 0.0, &IntegratorConfig::default()).unwrap();
        assert!(v.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn spreading_gaussian_velocity_matches_closed_form() {
        let g = GridSpec::new(1, 1024, 32.0).unwrap();
        let (c, k, s) = (-1.0, 1.5, 1.0);
        let f = init_gaussian(&[c], &[k], s, &g).unwrap();
        let st = evolve_state(&ProductSumState::product(vec![f]).unwrap(), &[], 1.0).unwrap();
        // v(x, t) = k + (x - c - k t) * t / (4 s^4 + t^2)
        for x in [-2.0, 0.1, 0.77, 2.5] {
            let t = 1.0;
            let expected = k + (x - c - k * t) * t / (4.0 * s.powi(4) + t * t);
            let v = velocity(&st, &[x], 1.0, &IntegratorConfig::default()).unwrap()[0];
            assert!((v - expected).abs() < 1e-6, "x = {x}: {v} vs {expected}");
        }
    }

    #[test]
    fn wrong_time_is_rejected() {
        let g = GridSpec::new(1, 128, 16.0).unwrap();
        let s = ProductSumState::product(vec![init_gaussian(&[0.0], &[0.0], 1.0, &g).unwrap()]).unwrap();
        assert!(velocity(&s, &[0.0], 1.0, &IntegratorConfig::default()).is_err());
    }
}
