//! Exit detection along one trajectory, with or without collapse.
//!
//! A [`SampleRun`] is advanced window by window so that many samples can
//! share the same wave-function snapshots. Collapses only change the branch
//! coefficients: every factor keeps evolving under its own Hamiltonian, so
//! the conditional state at later times is read off the shared snapshots.

use serde::{Deserialize, Serialize};

use super::collapse::collapse_coefficients;
use super::geometry::{classify_exit, BinPartition, DetectorGeometry};
use crate::dynamics::events::{exit_event, ExitEvent, EVENT_TIME_TOLERANCE};
use crate::dynamics::ode::{DenseStep, IntegratorConfig};
use crate::dynamics::timeline::{Timeline, Window};
use crate::dynamics::trajectory::integrate;
use crate::dynamics::walker::{AbortKind, Walker};
use crate::error::{Error, Result};
use crate::wavepacket::{Gram, PotentialSpec, ProductSumState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessMode {
    /// No collapse; every particle's first exit along the full flow.
    Plain,
    /// One collapse at the first detection, none afterwards.
    StoppedSingle,
    /// A collapse at every detection.
    StoppedIterated,
}

impl ProcessMode {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Plain => "plain",
            Self::StoppedSingle => "stopped-single",
            Self::StoppedIterated => "stopped-iterated",
        }
    }

    pub fn is_stopped(&self) -> bool {
        !matches!(self, Self::Plain)
    }
}

impl std::str::FromStr for ProcessMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Self::Plain),
            "stopped-single" => Ok(Self::StoppedSingle),
            "stopped-iterated" => Ok(Self::StoppedIterated),
            _ => Err(Error::InvalidArgument(format!("unknown process mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExitFlags {
    pub collapsed_before_exit: bool,
    pub node_abort: bool,
    pub domain_abort: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExitRecord {
    pub particle: usize,
    pub radius: f64,
    pub time: f64,
    pub position: Vec<f64>,
    pub bin: usize,
    pub flags: ExitFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseEvent {
    pub particle: usize,
    pub time: f64,
    pub position: Vec<f64>,
    pub bin: usize,
}

/// Configuration and velocities at a requested output time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSample {
    pub time: f64,
    pub positions: Vec<f64>,
    /// NaN when the velocity could not be evaluated.
    pub velocities: Vec<f64>,
    /// Whether a collapse happened at or before `time`.
    pub collapsed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub mode: ProcessMode,
    pub radii: Vec<f64>,
    pub x0: Vec<f64>,
    /// `records[radius][particle]`.
    pub records: Vec<Vec<Option<ExitRecord>>>,
    /// Radii whose ball did not contain the start configuration.
    #[serde(default)]
    pub outside_start: Vec<bool>,
    pub collapses: Vec<CollapseEvent>,
    pub abort: Option<(AbortKind, f64)>,
    pub outputs: Vec<OutputSample>,
}

impl SampleOutcome {
    /// Joint bin tuple at radius index `r`, if every particle exited cleanly.
    ///
    /// A horizon abort only voids radii whose records are incomplete.
    pub fn bins(&self, r: usize) -> Option<Vec<usize>> {
        if self.abort_at(r).is_some() {
            return None;
        }
        self.records[r].iter().map(|rec| rec.as_ref().map(|x| x.bin)).collect()
    }

    /// Why radius index `r` has no complete bin tuple, if it has none.
    pub fn abort_at(&self, r: usize) -> Option<AbortKind> {
        if self.outside_start.get(r).copied().unwrap_or(false) {
            return Some(AbortKind::OutsideStart);
        }
        match self.abort {
            Some((kind, _)) if kind != AbortKind::Horizon => Some(kind),
            _ if self.records[r].iter().any(Option::is_none) => Some(AbortKind::Horizon),
            _ => None,
        }
    }

    /// Exit records at radius index `r` in particle order.
    pub fn exit_records(&self, r: usize) -> Vec<ExitRecord> {
        self.records[r].iter().flatten().cloned().collect()
    }

    /// Earliest exit at radius index `r`: `(particle, time, position)`.
    pub fn first_detection(&self, r: usize) -> Option<(usize, f64, Vec<f64>)> {
        self.records[r]
            .iter()
            .flatten()
            .min_by(|a, b| a.time.total_cmp(&b.time).then(a.particle.cmp(&b.particle)))
            .map(|rec| (rec.particle, rec.time, rec.position.clone()))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("outcome serializes")
    }
}

/// Shared, read-only inputs of [`SampleRun::advance`].
#[derive(Debug, Clone, Copy)]
pub struct RunContext<'a> {
    pub cfg: &'a IntegratorConfig,
    /// Per-particle Gram matrices of the initial state (time invariant).
    pub grams: &'a [Gram],
    pub bins: &'a BinPartition,
    pub t_max: f64,
    /// Sorted output times.
    pub output_times: &'a [f64],
}

/// Per-sample state machine for one process.
#[derive(Debug, Clone)]
pub struct SampleRun {
    mode: ProcessMode,
    dim: usize,
    particles: usize,
    events: Vec<Vec<ExitEvent>>,
    walker: Walker,
    outcome: SampleOutcome,
    next_output: usize,
    started: bool,
    done: bool,
    vbuf: Vec<f64>,
    ybuf: Vec<f64>,
}

impl SampleRun {
    /// A run for `mode`; stopped modes take exactly one radius.
    ///
    /// Plain runs accept an empty radius list.
    ///
    /// A start point outside a detector ball yields a run that is already
    /// finished with an `OutsideStart` abort.
    pub fn new(mode: ProcessMode, radii: &[f64], s0: &ProductSumState, x0: &[f64], cfg: &IntegratorConfig) -> Result<Self> {
        let d = s0.grid().dim;
        let n = s0.particles();
        if x0.len() != n * d {
            return Err(Error::Shape(format!("configuration has {} coordinates, expected {}", x0.len(), n * d)));
        }
        // Plain runs without radii only transport the sample to the output times.
        if mode.is_stopped() && radii.len() != 1 {
            return Err(Error::InvalidArgument(format!("{} needs exactly one radius", mode.name())));
        }
        let events = radii
            .iter()
            .map(|&r| (0..n).map(|l| exit_event(l, r)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let mut run = Self {
            mode,
            dim: d,
            particles: n,
            walker: Walker::new(*s0.grid(), n, s0.coefficients().to_vec(), x0, s0.time(), cfg),
            events,
            outcome: SampleOutcome {
                mode,
                radii: radii.to_vec(),
                x0: x0.to_vec(),
                records: vec![vec![None; n]; radii.len()],
                outside_start: vec![false; radii.len()],
                collapses: Vec::new(),
                abort: None,
                outputs: Vec::new(),
            },
            next_output: 0,
            started: false,
            done: false,
            vbuf: vec![0.0; n * d],
            ybuf: vec![0.0; n * d],
        };
        // A plain run keeps going for the radii whose ball holds the start.
        for (r, evs) in run.events.iter().enumerate() {
            run.outcome.outside_start[r] = evs.iter().any(|ev| ev.check_start(x0, d).is_err());
        }
        if run.outcome.outside_start.iter().any(|&o| o) && (mode.is_stopped() || run.outcome.outside_start.iter().all(|&o| o)) {
            run.abort(AbortKind::OutsideStart, s0.time());
        }
        Ok(run)
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn time(&self) -> f64 {
        self.walker.time()
    }

    pub fn outcome(&self) -> &SampleOutcome {
        &self.outcome
    }

    /// Closes the run; a sample without all exit records by now hit the horizon.
    pub fn finish(mut self) -> SampleOutcome {
        if !self.done && !self.records_complete() {
            let t = self.walker.time();
            self.abort(AbortKind::Horizon, t);
        }
        self.outcome
    }

    fn abort(&mut self, kind: AbortKind, time: f64) {
        self.outcome.abort = Some((kind, time));
        for rec in self.outcome.records.iter_mut().flatten().flatten() {
            rec.flags.node_abort |= kind == AbortKind::Node;
            rec.flags.domain_abort |= kind == AbortKind::Domain;
        }
        self.done = true;
    }

    fn fail(&mut self, e: Error, time: f64) -> Result<()> {
        match AbortKind::from_error(&e) {
            Some(kind) => {
                let t = match e {
                    Error::NodeProximity { time: t, .. } | Error::DomainEscape { time: t, .. } if t.is_finite() => t,
                    _ => time,
                };
                self.abort(kind, t);
                Ok(())
            }
            None => Err(e),
        }
    }

    fn records_complete(&self) -> bool {
        self.outcome
            .records
            .iter()
            .zip(&self.outcome.outside_start)
            .all(|(r, &outside)| outside || r.iter().all(Option::is_some))
    }

    fn outputs_complete(&self, ctx: &RunContext) -> bool {
        ctx.output_times.get(self.next_output).map_or(true, |&t| t > ctx.t_max)
    }

    fn update_done(&mut self, ctx: &RunContext) {
        if !self.done && self.records_complete() && self.outputs_complete(ctx) {
            self.done = true;
        }
    }

    /// Records outputs with times up to `t_hi`, reading positions from `dense`
    /// or from the current integrator state.
    fn emit_outputs(&mut self, window: &Window, ctx: &RunContext, t_hi: f64, dense: Option<&DenseStep>) {
        while let Some(&t) = ctx.output_times.get(self.next_output) {
            if t > t_hi || t > ctx.t_max {
                break;
            }
            self.next_output += 1;
            if t < self.walker.time() - 1e-12 && dense.is_none() {
                continue;
            }
            let mut y = self.walker.state().to_vec();
            if let Some(d) = dense {
                if t >= d.start() {
                    d.eval(t, &mut y);
                }
            }
            let mut v = vec![0.0; y.len()];
            if self.walker.velocity(window, t, &y, ctx.cfg, &mut v).is_err() {
                v.fill(f64::NAN);
            }
            self.outcome.outputs.push(OutputSample {
                time: t,
                positions: y,
                velocities: v,
                collapsed: !self.outcome.collapses.is_empty(),
            });
        }
    }

    fn record(&mut self, ctx: &RunContext, r: usize, particle: usize, time: f64, y: &[f64]) -> Result<usize> {
        let d = self.dim;
        let position = y[particle * d..(particle + 1) * d].to_vec();
        let radius = self.outcome.radii[r];
        let bin = classify_exit(&position, radius, ctx.bins)?;
        self.outcome.records[r][particle] = Some(ExitRecord {
            particle,
            radius,
            time,
            position,
            bin,
            flags: ExitFlags {
                collapsed_before_exit: !self.outcome.collapses.is_empty(),
                ..Default::default()
            },
        });
        Ok(bin)
    }

    /// Marks every exit inside the latest step; the flow itself is unchanged.
    fn scan_plain(&mut self, dense: &DenseStep, ctx: &RunContext) -> Result<()> {
        for r in 0..self.events.len() {
            for l in 0..self.particles {
                if self.outcome.outside_start[r] || self.outcome.records[r][l].is_some() {
                    continue;
                }
                if let Some(t) = self.events[r][l].locate(dense, self.dim) {
                    dense.eval(t, &mut self.ybuf);
                    let y = std::mem::take(&mut self.ybuf);
                    let res = self.record(ctx, r, l, t, &y);
                    self.ybuf = y;
                    res?;
                }
            }
        }
        Ok(())
    }

    /// Earliest pending exit inside the step; ties go to the lowest index.
    fn first_exit(&self, dense: &DenseStep) -> Option<(f64, usize)> {
        let mut hits: Vec<(f64, usize)> = (0..self.particles)
            .filter(|&l| self.outcome.records[0][l].is_none())
            .filter_map(|l| self.events[0][l].locate(dense, self.dim).map(|t| (t, l)))
            .collect();
        let t_min = hits.iter().map(|h| h.0).fold(f64::INFINITY, f64::min);
        hits.retain(|h| h.0 - t_min <= EVENT_TIME_TOLERANCE);
        hits.into_iter().min_by_key(|h| h.1)
    }

    /// Detection of `particle` at time `t` in a stopped process.
    fn detect(&mut self, window: &Window, ctx: &RunContext, particle: usize, t: f64, y: &[f64]) -> Result<bool> {
        let bin = self.record(ctx, 0, particle, t, y)?;
        let collapse = match self.mode {
            ProcessMode::Plain => false,
            ProcessMode::StoppedSingle => self.outcome.collapses.is_empty(),
            ProcessMode::StoppedIterated => true,
        };
        if !collapse {
            return Ok(true);
        }
        let d = self.dim;
        let x = y[particle * d..(particle + 1) * d].to_vec();
        let remaining: Vec<&Gram> = self
            .walker
            .active()
            .iter()
            .filter(|&&m| m != particle)
            .map(|&m| &ctx.grams[m])
            .collect();
        let coeffs = if remaining.is_empty() {
            self.walker.coefficients().to_vec()
        } else {
            match collapse_coefficients(
                &window.source_at(t),
                self.walker.coefficients(),
                particle,
                &x,
                &remaining,
                ctx.cfg.node_guard,
            ) {
                Ok(c) => c,
                Err(e) => {
                    self.fail(e, t)?;
                    return Ok(false);
                }
            }
        };
        self.walker.freeze(particle, coeffs);
        self.outcome.collapses.push(CollapseEvent {
            particle,
            time: t,
            position: x,
            bin,
        });
        Ok(true)
    }

    /// Advances the run through `window`, stopping at `t_max`.
    ///
    /// Per-sample failures end the run with an abort; only run-level errors
    /// are returned.
    pub fn advance(&mut self, window: &Window, ctx: &RunContext) -> Result<()> {
        if self.done {
            return Ok(());
        }
        if !self.started {
            self.started = true;
            let t = self.walker.time();
            let y = self.walker.state().to_vec();
            if let Err(e) = self.walker.velocity(window, t, &y, ctx.cfg, &mut self.vbuf) {
                return self.fail(e, t);
            }
            self.emit_outputs(window, ctx, t, None);
            self.update_done(ctx);
        }
        let limit = window.end().min(ctx.t_max);
        while !self.done && self.walker.time() < limit {
            let t_start = self.walker.time();
            if let Err(e) = self.walker.step(window, limit, ctx.cfg) {
                return self.fail(e, t_start);
            }
            let dense = self.walker.dense().clone();
            if !self.mode.is_stopped() {
                self.scan_plain(&dense, ctx)?;
                self.emit_outputs(window, ctx, dense.end(), Some(&dense));
            } else if let Some((t_ex, l)) = self.first_exit(&dense) {
                self.emit_outputs(window, ctx, t_ex, Some(&dense));
                let mut y = vec![0.0; self.particles * self.dim];
                dense.eval(t_ex, &mut y);
                let mut next = Some(l);
                while let Some(l) = next {
                    if !self.detect(window, ctx, l, t_ex, &y)? {
                        return Ok(());
                    }
                    // Pending particles already outside at the restart are detected at once.
                    next = (0..self.particles).find(|&m| {
                        self.outcome.records[0][m].is_none() && self.events[0][m].value(&y, self.dim) >= 0.0
                    });
                }
                self.walker.restart(t_ex, &y);
            } else {
                self.emit_outputs(window, ctx, dense.end(), Some(&dense));
            }
            self.update_done(ctx);
        }
        if !self.done && self.walker.time() >= ctx.t_max {
            if self.records_complete() {
                self.done = true;
            } else {
                self.abort(AbortKind::Horizon, ctx.t_max);
            }
        }
        Ok(())
    }
}

fn aborted(kind: AbortKind, time: f64) -> Error {
    Error::SampleAborted { kind: kind.name(), time }
}

/// Drives one sample over its own snapshot sequence.
fn run_single(
    mode: ProcessMode,
    radii: &[f64],
    s0: &ProductSumState,
    potentials: &[PotentialSpec],
    x0: &[f64],
    bins: &BinPartition,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<SampleOutcome> {
    cfg.validate()?;
    bins.validate(s0.grid().dim)?;
    let d = s0.grid().dim;
    for &r in radii {
        for l in 0..s0.particles() {
            exit_event(l, r)?.check_start(x0, d)?;
        }
    }
    let grams = s0.grams();
    let ctx = RunContext {
        cfg,
        grams: &grams,
        bins,
        t_max,
        output_times: &[],
    };
    let mut run = SampleRun::new(mode, radii, s0, x0, cfg)?;
    let mut timeline = Timeline::new(s0, potentials)?;
    while !run.is_done() && run.time() < t_max {
        let window = timeline.next_window_until(t_max);
        window.check_boundary()?;
        run.advance(&window, &ctx)?;
    }
    Ok(run.finish())
}

/// Every particle's first exit from the ball along the uncollapsed flow.
pub fn run_plain_process(
    s0: &ProductSumState,
    potentials: &[PotentialSpec],
    x0: &[f64],
    geom: &DetectorGeometry,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<SampleOutcome> {
    run_single(ProcessMode::Plain, &[geom.radius], s0, potentials, x0, &geom.bins, t_max, cfg)
}

/// Exit records of the stopped process with one or repeated collapses.
pub fn run_stopped_process(
    s0: &ProductSumState,
    potentials: &[PotentialSpec],
    x0: &[f64],
    geom: &DetectorGeometry,
    mode: ProcessMode,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<SampleOutcome> {
    if !mode.is_stopped() {
        return Err(Error::InvalidArgument("stopped process needs a stopped mode".into()));
    }
    run_single(mode, &[geom.radius], s0, potentials, x0, &geom.bins, t_max, cfg)
}

/// First detection among all particles: `(particle, time, position)`.
pub fn first_detection(
    s0: &ProductSumState,
    potentials: &[PotentialSpec],
    x0: &[f64],
    geom: &DetectorGeometry,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<(usize, f64, Vec<f64>)> {
    let events = (0..s0.particles())
        .map(|l| exit_event(l, geom.radius))
        .collect::<Result<Vec<_>>>()?;
    let tr = integrate(s0, potentials, x0, t_max, cfg, &events, true)?;
    if let Some((kind, t)) = tr.abort {
        return Err(aborted(kind, t));
    }
    let hit = tr.hits.first().ok_or_else(|| aborted(AbortKind::Horizon, t_max))?;
    let d = s0.grid().dim;
    Ok((hit.particle, hit.time, hit.position[hit.particle * d..(hit.particle + 1) * d].to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::wavepacket::factor::init_gaussian;
    use num_complex::Complex64;

    fn geom(r: f64) -> DetectorGeometry {
        DetectorGeometry::new(r, BinPartition::HalfLines).unwrap()
    }

    #[test]
    fn free_gaussian_exit_time_matches_closed_form() {
        let g = GridSpec::new(1, 2048, 64.0).unwrap();
        let (c, k, s) = (0.0, 2.0, 1.0);
        let st = ProductSumState::product(vec![init_gaussian(&[c], &[k], s, &g).unwrap()]).unwrap();
        let x0 = 0.3;
        let out = run_plain_process(&st, &[], &[x0], &geom(20.0), 30.0, &IntegratorConfig::default()).unwrap();
        let rec = out.records[0][0].clone().unwrap();
        // Root of c + k t + (x0 - c) sqrt(1 + (t / 2 s^2)^2) = 20 by bisection.
        let path = |t: f64| c + k * t + (x0 - c) * (1.0 + (t / (2.0 * s * s)).powi(2)).sqrt() - 20.0;
        let (mut lo, mut hi) = (0.0, 30.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if path(mid) >= 0.0 {
                hi = mid
            } else {
                lo = mid
            }
        }
        assert_eq!(rec.bin, 0);
        assert!((rec.time - hi).abs() < 1e-5, "{} vs {hi}", rec.time);
        assert!((rec.position[0] - 20.0).abs() <= 1e-8 * 20.0);
        assert!(out.abort.is_none());
    }

    #[test]
    fn faster_particle_is_detected_first() {
        let g = GridSpec::new(1, 1024, 128.0).unwrap();
        let st = ProductSumState::product(vec![
            init_gaussian(&[0.0], &[4.0], 1.0, &g).unwrap(),
            init_gaussian(&[0.0], &[1.0], 1.0, &g).unwrap(),
        ])
        .unwrap();
        let cfg = IntegratorConfig::default();
        let (l, t, x) = first_detection(&st, &[], &[0.1, 0.1], &geom(10.0), 20.0, &cfg).unwrap();
        assert_eq!(l, 0);
        assert!((x[0] - 10.0).abs() < 1e-7);
        let out = run_stopped_process(&st, &[], &[0.1, 0.1], &geom(10.0), ProcessMode::StoppedSingle, 20.0, &cfg).unwrap();
        let (l2, t2, _) = out.first_detection(0).unwrap();
        assert_eq!(l2, 0);
        assert!((t - t2).abs() < 1e-8);
        assert_eq!(out.collapses.len(), 1);
        assert!(out.records[0][1].as_ref().unwrap().flags.collapsed_before_exit);
    }

    #[test]
    fn collapse_is_a_no_op_for_products() {
        let g = GridSpec::new(1, 512, 32.0).unwrap();
        let st = ProductSumState::product(vec![
            init_gaussian(&[0.0], &[3.0], 1.0, &g).unwrap(),
            init_gaussian(&[0.5], &[-1.5], 1.2, &g).unwrap(),
        ])
        .unwrap();
        let cfg = IntegratorConfig::default();
        let x0 = [0.4, -0.2];
        let plain = run_plain_process(&st, &[], &x0, &geom(8.0), 20.0, &cfg).unwrap();
        let stopped = run_stopped_process(&st, &[], &x0, &geom(8.0), ProcessMode::StoppedSingle, 20.0, &cfg).unwrap();
        for l in 0..2 {
            let a = plain.records[0][l].as_ref().unwrap();
            let b = stopped.records[0][l].as_ref().unwrap();
            assert_eq!(a.bin, b.bin);
            assert!((a.time - b.time).abs() < 1e-6);
        }
    }

    #[test]
    fn modes_agree_for_two_particles() {
        let g = GridSpec::new(1, 512, 32.0).unwrap();
        let p = |k: f64| init_gaussian(&[0.0], &[k], 1.0, &g).unwrap();
        let st = ProductSumState::normalized(
            vec![Complex64::new(0.8, 0.0), Complex64::new(0.6, 0.0)],
            vec![vec![p(3.0), p(-3.0)], vec![p(-3.0), p(3.0)]],
            0.0,
        )
        .unwrap();
        let cfg = IntegratorConfig::default();
        let x0 = [0.7, -0.4];
        let a = run_stopped_process(&st, &[], &x0, &geom(6.0), ProcessMode::StoppedSingle, 20.0, &cfg).unwrap();
        let b = run_stopped_process(&st, &[], &x0, &geom(6.0), ProcessMode::StoppedIterated, 20.0, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert!(a.abort.is_none());
        assert!(a.bins(0).is_some());
        let json = a.to_json();
        assert_eq!(json["mode"], "stopped-single");
    }

    #[test]
    fn start_outside_ball_is_a_precondition_error() {
        let g = GridSpec::new(1, 256, 16.0).unwrap();
        let st = ProductSumState::product(vec![init_gaussian(&[0.0], &[1.0], 1.0, &g).unwrap()]).unwrap();
        let r = run_plain_process(&st, &[], &[2.0], &geom(1.0), 5.0, &IntegratorConfig::default());
        assert!(matches!(r, Err(Error::OutsideBall { .. })));
    }
}
