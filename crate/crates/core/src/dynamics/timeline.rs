//! Shared wave-function snapshots on the propagation substep lattice.
//!
//! The wave function is advanced in windows of `K` substeps. Every window
//! holds the `K + 1` spline snapshots bracketing it, and the guidance field
//! at an intermediate time blends the two adjacent snapshots linearly.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, Spectral};
use crate::spline::{FactorField, Stencil};
use crate::wavepacket::eval::{FactorSource, Snapshot};
use crate::wavepacket::propagate::FactorPropagator;
use crate::wavepacket::{PotentialSpec, ProductSumState};

/// Mass within this many nodes of a face counts as boundary mass.
pub const BOUNDARY_BAND: usize = 3;
/// Largest tolerated per-factor boundary mass.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

const WINDOW_BYTES: usize = 64 << 20;
const MAX_WINDOW: usize = 256;

enum Track {
    Free { hat0: Vec<Complex64>, k2: Arc<Vec<f64>> },
    Driven { amplitudes: Vec<Complex64>, propagator: Arc<FactorPropagator> },
}

impl Track {
    fn field(&mut self, spectral: &Spectral, elapsed: f64, advance: bool) -> FactorField {
        match self {
            Track::Free { hat0, k2 } => {
                let hat: Vec<Complex64> = hat0
                    .iter()
                    .zip(k2.iter())
                    .map(|(h, k)| h * Complex64::from_polar(1.0, -0.5 * k * elapsed))
                    .collect();
                FactorField::from_spectrum(spectral, &hat)
            }
            Track::Driven { amplitudes, propagator } => {
                if advance {
                    propagator.step(amplitudes);
                }
                FactorField::from_amplitudes(spectral, amplitudes)
            }
        }
    }
}

/// Producer of snapshot windows for one initial state.
pub struct Timeline {
    grid: GridSpec,
    spectral: Arc<Spectral>,
    dt: f64,
    t0: f64,
    branches: usize,
    particles: usize,
    tracks: Vec<Track>,
    step: usize,
    window: usize,
    last: Option<Arc<Snapshot>>,
}

impl std::fmt::Debug for Timeline {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Timeline")
            .field("grid", &self.grid)
            .field("dt", &self.dt)
            .field("time", &self.time())
            .finish()
    }
}

impl Timeline {
    /// `potentials` holds one entry per particle, or is empty for free motion.
    pub fn new(state: &ProductSumState, potentials: &[PotentialSpec]) -> Result<Self> {
        let grid = *state.grid();
        let n = state.particles();
        if !potentials.is_empty() && potentials.len() != n {
            return Err(Error::Shape(format!("{} potentials for {n} particles", potentials.len())));
        }
        let spectral = Spectral::for_grid(&grid);
        let dt = grid.max_substep();
        let k2: Arc<Vec<f64>> = Arc::new((0..grid.len()).map(|i| spectral.k_squared(i)).collect());
        let mut propagators: Vec<Option<Arc<FactorPropagator>>> = Vec::with_capacity(n);
        for l in 0..n {
            let v = potentials.get(l).cloned().unwrap_or_default();
            v.validate(grid.dim)?;
            propagators.push(if v.is_none() { None } else { Some(Arc::new(FactorPropagator::new(&grid, &v, dt))) });
        }
        let mut tracks = Vec::with_capacity(state.branches() * n);
        for branch in state.factors() {
            for (l, f) in branch.iter().enumerate() {
                tracks.push(match &propagators[l] {
                    None => {
                        let mut hat0 = f.amplitudes().to_vec();
                        spectral.forward(&mut hat0);
                        Track::Free { hat0, k2: k2.clone() }
                    }
                    Some(p) => Track::Driven {
                        amplitudes: f.amplitudes().to_vec(),
                        propagator: p.clone(),
                    },
                });
            }
        }
        let per_snapshot = tracks.len() * grid.len() * (grid.dim + 1) * std::mem::size_of::<Complex64>();
        let window = (WINDOW_BYTES / per_snapshot.max(1)).clamp(1, MAX_WINDOW);
        Ok(Self {
            grid,
            spectral,
            dt,
            t0: state.time(),
            branches: state.branches(),
            particles: n,
            tracks,
            step: 0,
            window,
            last: None,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn substep(&self) -> f64 {
        self.dt
    }

    pub fn start_time(&self) -> f64 {
        self.t0
    }

    /// Time of the most recent snapshot.
    pub fn time(&self) -> f64 {
        self.t0 + self.step as f64 * self.dt
    }

    pub fn set_window_len(&mut self, k: usize) {
        self.window = k.max(1);
    }

    /// Next window, shortened so that it does not run past `t_end`.
    pub fn next_window_until(&mut self, t_end: f64) -> Window {
        let remaining = ((t_end - self.time()) / self.dt - 1e-9).ceil().max(1.0) as usize;
        let full = self.window;
        self.window = full.min(remaining);
        let w = self.next_window();
        self.window = full;
        w
    }

    fn snapshot(&mut self, advance: bool) -> Snapshot {
        let elapsed = self.step as f64 * self.dt;
        let spectral = self.spectral.clone();
        let fields: Vec<FactorField> = self
            .tracks
            .par_iter_mut()
            .map(|t| t.field(&spectral, elapsed, advance))
            .collect();
        Snapshot::from_fields(self.t0 + elapsed, self.grid, self.branches, self.particles, fields)
    }

    /// Produces the next window, starting at the end of the previous one.
    pub fn next_window(&mut self) -> Window {
        let first = match self.last.take() {
            Some(s) => s,
            None => Arc::new(self.snapshot(false)),
        };
        let start = self.time();
        let mut snaps = Vec::with_capacity(self.window + 1);
        snaps.push(first);
        for _ in 0..self.window {
            self.step += 1;
            snaps.push(Arc::new(self.snapshot(true)));
        }
        self.last = snaps.last().cloned();
        Window {
            start,
            dt: self.dt,
            snaps,
        }
    }
}

/// Consecutive snapshots covering `[start, start + K dt]`.
#[derive(Debug, Clone)]
pub struct Window {
    start: f64,
    dt: f64,
    snaps: Vec<Arc<Snapshot>>,
}

impl Window {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.start + (self.snaps.len() - 1) as f64 * self.dt
    }

    pub fn last(&self) -> &Snapshot {
        self.snaps.last().expect("window is never empty")
    }

    pub fn snapshots(&self) -> &[Arc<Snapshot>] {
        &self.snaps
    }

    /// Largest factor mass near the boundary at the window end.
    pub fn boundary_mass(&self) -> f64 {
        self.last().boundary_mass()
    }

    /// Errors when the wave function reaches the grid boundary.
    pub fn check_boundary(&self) -> Result<()> {
        let mass = self.boundary_mass();
        if mass > BOUNDARY_TOLERANCE {
            return Err(Error::BoundaryLeak { time: self.end(), mass });
        }
        Ok(())
    }

    /// Guidance source at time `t`, clamped into the window.
    #[inline]
    pub fn source_at(&self, t: f64) -> Interpolated<'_> {
        let k = self.snaps.len() - 1;
        if k == 0 {
            return Interpolated { a: &self.snaps[0], b: &self.snaps[0], s: 0.0 };
        }
        let u = ((t - self.start) / self.dt).clamp(0.0, k as f64);
        let i = (u.floor() as usize).min(k - 1);
        let s = (u - i as f64).clamp(0.0, 1.0);
        Interpolated {
            a: &self.snaps[i],
            b: &self.snaps[i + 1],
            s,
        }
    }
}

/// Linear blend `(1 - s) a + s b` of two snapshots.
#[derive(Debug, Clone, Copy)]
pub struct Interpolated<'a> {
    a: &'a Snapshot,
    b: &'a Snapshot,
    s: f64,
}

impl FactorSource for Interpolated<'_> {
    fn grid(&self) -> &GridSpec {
        self.a.grid()
    }
    fn particles(&self) -> usize {
        self.a.particles()
    }
    fn branches(&self) -> usize {
        self.a.branches()
    }
    #[inline]
    fn factor_eval(&self, branch: usize, particle: usize, stencil: &Stencil, out: &mut [Complex64]) {
        if self.s == 0.0 {
            self.a.field(branch, particle).accumulate(stencil, 1.0, out);
        } else if self.s == 1.0 {
            self.b.field(branch, particle).accumulate(stencil, 1.0, out);
        } else {
            self.a.field(branch, particle).accumulate(stencil, 1.0 - self.s, out);
            self.b.field(branch, particle).accumulate(stencil, self.s, out);
        }
    }
    fn factor_max(&self, branch: usize, particle: usize) -> f64 {
        (1.0 - self.s) * self.a.factor_max(branch, particle) + self.s * self.b.factor_max(branch, particle)
    }
}
