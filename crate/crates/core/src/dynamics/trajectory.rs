use super::events::ExitEvent;
use super::ode::{DenseStep, IntegratorConfig};
use super::timeline::Timeline;
use super::walker::{AbortKind, Walker};
use crate::error::{Error, Result};
use crate::wavepacket::{PotentialSpec, ProductSumState};

/// One accepted integrator step with its continuous extension.
#[derive(Debug, Clone)]
pub struct TrajectorySegment {
    pub start: f64,
    pub end: f64,
    pub dense: DenseStep,
    /// Velocity at `start`.
    pub velocity: Vec<f64>,
}

impl TrajectorySegment {
    pub fn position(&self, t: f64) -> Result<Vec<f64>> {
        let tol = 1e-12 * (1.0 + self.end.abs());
        if t < self.start - tol || t > self.end + tol {
            return Err(Error::OutsideSegment {
                time: t,
                start: self.start,
                end: self.end,
            });
        }
        let mut out = vec![0.0; self.dense.dim()];
        self.dense.eval(t, &mut out);
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct EventHit {
    /// Index into the event list.
    pub event: usize,
    pub particle: usize,
    pub time: f64,
    pub position: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub x0: Vec<f64>,
    pub t0: f64,
    pub segments: Vec<TrajectorySegment>,
    pub hits: Vec<EventHit>,
    pub abort: Option<(AbortKind, f64)>,
}

impl Trajectory {
    pub fn start_time(&self) -> f64 {
        self.t0
    }

    pub fn end_time(&self) -> f64 {
        self.segments.last().map_or(self.t0, |s| s.end)
    }

    /// Configuration at time `t` from the dense output.
    pub fn position(&self, t: f64) -> Result<Vec<f64>> {
        if self.segments.is_empty() || t == self.t0 {
            if (t - self.t0).abs() <= 1e-12 {
                return Ok(self.x0.clone());
            }
        }
        let i = self.segments.partition_point(|s| s.end < t);
        match self.segments.get(i) {
            Some(seg) => seg.position(t),
            None => Err(Error::OutsideSegment {
                time: t,
                start: self.t0,
                end: self.end_time(),
            }),
        }
    }
}

/// Integrates one Bohmian trajectory from `x0` at `s0.time()` to `t_end`.
///
/// With `stop_at_event`, integration ends at the first event hit (ties go
/// to the lowest particle index). Node and domain failures end the
/// trajectory with `abort` set.
pub fn integrate(
    s0: &ProductSumState,
    potentials: &[PotentialSpec],
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    events: &[ExitEvent],
    stop_at_event: bool,
) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = *s0.grid();
    let d = grid.dim;
    let n = s0.particles();
    if x0.len() != n * d {
        return Err(Error::Shape(format!("configuration has {} coordinates, expected {}", x0.len(), n * d)));
    }
    if !grid.contains(x0) {
        return Err(Error::DomainEscape { particle: 0, time: s0.time() });
    }
    for ev in events {
        if ev.particle >= n {
            return Err(Error::InvalidArgument(format!("event for particle {} of {n}", ev.particle)));
        }
        ev.check_start(x0, d)?;
    }
    let mut timeline = Timeline::new(s0, potentials)?;
    let mut walker = Walker::new(grid, n, s0.coefficients().to_vec(), x0, s0.time(), cfg);
    let mut traj = Trajectory {
        x0: x0.to_vec(),
        t0: s0.time(),
        segments: Vec::new(),
        hits: Vec::new(),
        abort: None,
    };
    let mut hit = vec![false; events.len()];
    let mut v = vec![0.0; n * d];
    let mut first = true;
    while walker.time() < t_end {
        let window = timeline.next_window_until(t_end);
        window.check_boundary()?;
        if first {
            // Precondition: the start point must clear the node guard.
            walker.velocity(&window, s0.time(), x0, cfg, &mut v)?;
            first = false;
        }
        let limit = window.end().min(t_end);
        while walker.time() < limit {
            let t_start = walker.time();
            let y_start = walker.state().to_vec();
            if let Err(e) = walker.step(&window, limit, cfg) {
                return match AbortKind::from_error(&e) {
                    Some(kind) => {
                        traj.abort = Some((kind, walker.time()));
                        Ok(traj)
                    }
                    None => Err(e),
                };
            }
            walker.velocity(&window, t_start, &y_start, cfg, &mut v).ok();
            let dense = walker.dense().clone();
            let mut seg = TrajectorySegment {
                start: dense.start(),
                end: dense.end(),
                dense,
                velocity: v.clone(),
            };
            let mut found: Vec<(f64, usize)> = Vec::new();
            for (i, ev) in events.iter().enumerate() {
                if hit[i] {
                    continue;
                }
                if let Some(t) = ev.locate(&seg.dense, d) {
                    found.push((t, i));
                }
            }
            found.sort_by(|a, b| a.0.total_cmp(&b.0).then(events[a.1].particle.cmp(&events[b.1].particle)));
            if stop_at_event && !found.is_empty() {
                let t_min = found[0].0;
                let (t, i) = found
                    .iter()
                    .filter(|(t, _)| *t - t_min <= super::events::EVENT_TIME_TOLERANCE)
                    .min_by_key(|(_, i)| events[*i].particle)
                    .copied()
                    .expect("non-empty");
                seg.end = t;
                traj.hits.push(EventHit {
                    event: i,
                    particle: events[i].particle,
                    time: t,
                    position: seg.position(t)?,
                });
                traj.segments.push(seg);
                return Ok(traj);
            }
            for (t, i) in found {
                hit[i] = true;
                traj.hits.push(EventHit {
                    event: i,
                    particle: events[i].particle,
                    time: t,
                    position: seg.position(t)?,
                });
            }
            traj.segments.push(seg);
        }
    }
    Ok(traj)
}
