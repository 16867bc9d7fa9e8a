//! Asymptotic velocities and straightness diagnostics along trajectories.

use crate::detection::OutputSample;
use crate::dynamics::Trajectory;
use crate::error::{Error, Result};

/// Read access to a trajectory at arbitrary and at natural sample times.
pub trait TrajectoryView {
    fn start_time(&self) -> f64;
    fn end_time(&self) -> f64;
    fn position(&self, t: f64) -> Result<Vec<f64>>;
    /// Times at which the trajectory is natively resolved.
    fn sample_times(&self) -> Vec<f64>;
}

impl TrajectoryView for Trajectory {
    fn start_time(&self) -> f64 {
        Trajectory::start_time(self)
    }
    fn end_time(&self) -> f64 {
        Trajectory::end_time(self)
    }
    fn position(&self, t: f64) -> Result<Vec<f64>> {
        Trajectory::position(self, t)
    }
    fn sample_times(&self) -> Vec<f64> {
        std::iter::once(self.t0).chain(self.segments.iter().map(|s| s.end)).collect()
    }
}

/// Trajectory known only at discrete times, linearly interpolated in between.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<f64>>,
}

impl SampledTrajectory {
    pub fn new(times: Vec<f64>, positions: Vec<Vec<f64>>) -> Result<Self> {
        if times.is_empty() || times.len() != positions.len() || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("sample times must be nonempty and increasing".into()));
        }
        Ok(Self { times, positions })
    }

    pub fn from_outputs(outputs: &[OutputSample]) -> Result<Self> {
        Self::new(
            outputs.iter().map(|o| o.time).collect(),
            outputs.iter().map(|o| o.positions.clone()).collect(),
        )
    }
}

impl TrajectoryView for SampledTrajectory {
    fn start_time(&self) -> f64 {
        self.times[0]
    }
    fn end_time(&self) -> f64 {
        *self.times.last().expect("nonempty")
    }
    fn position(&self, t: f64) -> Result<Vec<f64>> {
        let (t0, t1) = (self.start_time(), self.end_time());
        if !(t >= t0 && t <= t1) {
            return Err(Error::OutsideSegment { time: t, start: t0, end: t1 });
        }
        let i = self.times.partition_point(|&s| s < t);
        if self.times[i] == t {
            return Ok(self.positions[i].clone());
        }
        let (a, b) = (self.times[i - 1], self.times[i]);
        let u = (t - a) / (b - a);
        Ok(self.positions[i - 1]
            .iter()
            .zip(&self.positions[i])
            .map(|(p, q)| p + u * (q - p))
            .collect())
    }
    fn sample_times(&self) -> Vec<f64> {
        self.times.clone()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticVelocity {
    /// `X(t) / t`.
    pub velocity: Vec<f64>,
    /// `|X(t)/t - X(t/2)/(t/2)|` per component.
    pub uncertainty: Vec<f64>,
    pub time: f64,
}

/// Estimates `lim X(t)/t` at `t_eval`, or at the end of the trajectory when `None`.
pub fn asymptotic_velocity(traj: &dyn TrajectoryView, t_eval: Option<f64>, t_min: f64) -> Result<AsymptoticVelocity> {
    let t = t_eval.unwrap_or_else(|| traj.end_time());
    if traj.end_time() < t_min || t < t_min || t > traj.end_time() || !(t > 0.0) {
        return Err(Error::InsufficientHorizon {
            available: traj.end_time().min(t),
            required: t_min.max(f64::MIN_POSITIVE),
        });
    }
    let x = traj.position(t)?;
    let half = (0.5 * t).max(traj.start_time());
    let xh = traj.position(half)?;
    let velocity: Vec<f64> = x.iter().map(|v| v / t).collect();
    let uncertainty = if half > 0.0 {
        velocity.iter().zip(&xh).map(|(v, p)| (v - p / half).abs()).collect()
    } else {
        vec![f64::INFINITY; x.len()]
    };
    Ok(AsymptoticVelocity { velocity, uncertainty, time: t })
}

/// `sup_t |X(t) - v t| / (1 + sqrt t)` over the native sample times.
pub fn straightness_statistic(traj: &dyn TrajectoryView, v_inf: &[f64]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for t in traj.sample_times() {
        if t < 0.0 {
            continue;
        }
        let x = traj.position(t)?;
        let dev = x
            .iter()
            .zip(v_inf)
            .map(|(p, v)| (p - v * t).powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(dev / (1.0 + t.sqrt()));
    }
    Ok(worst)
}

/// Whether `|X(t) - v t| < C (1 + sqrt t)` at every sample time.
pub fn straightness_check(traj: &dyn TrajectoryView, v_inf: &[f64], c: f64) -> Result<bool> {
    Ok(straightness_statistic(traj, v_inf)? < c)
}

/// Smallest `C` for which the velocity bounds around a first detection hold.
///
/// Before the detection time `T^R` the bound is `sqrt(t) |v - v_inf|` over
/// `t >= t_lo`; afterwards it is `sqrt(T^R) |v_l - v_inf_l|` for every
/// particle except the detected one. Samples with NaN velocities yield NaN.
pub fn velocity_bound_statistic(
    outputs: &[OutputSample],
    v_inf: &[f64],
    detected: usize,
    detection_time: f64,
    t_lo: f64,
    dim: usize,
) -> f64 {
    let n = v_inf.len() / dim;
    let mut worst: f64 = 0.0;
    for o in outputs {
        if o.time < t_lo {
            continue;
        }
        if o.time < detection_time {
            let dev = o
                .velocities
                .iter()
                .zip(v_inf)
                .map(|(v, w)| (v - w).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(o.time.sqrt() * dev);
        } else {
            for l in (0..n).filter(|&l| l != detected) {
                let dev = (0..dim)
                    .map(|a| (o.velocities[l * dim + a] - v_inf[l * dim + a]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(detection_time.sqrt() * dev);
            }
        }
        if worst.is_nan() {
            return f64::NAN;
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(v: f64, offset: impl Fn(f64) -> f64) -> SampledTrajectory {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.5).collect();
        let positions = times.iter().map(|&t| vec![v * t + offset(t)]).collect();
        SampledTrajectory::new(times, positions).unwrap()
    }

    #[test]
    fn straight_line_velocity_is_exact() {
        let tr = line(1.7, |_| 0.0);
        let v = asymptotic_velocity(&tr, None, 10.0).unwrap();
        assert!((v.velocity[0] - 1.7).abs() < 1e-15);
        assert!(v.uncertainty[0] < 1e-14);
        assert!(straightness_check(&tr, &[1.7], 1e-9).unwrap());
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let tr = line(1.0, |_| 0.0);
        assert!(matches!(
            asymptotic_velocity(&tr, None, 100.0),
            Err(Error::InsufficientHorizon { .. })
        ));
    }

    #[test]
    fn transient_of_size_five() {
        let tr = line(2.0, |t| 5.0 * (-t).exp());
        assert!(straightness_check(&tr, &[2.0], 10.0).unwrap());
        assert!(!straightness_check(&tr, &[2.0], 1.0).unwrap());
    }

    #[test]
    fn velocity_bounds_split_at_detection() {
        let out = |t: f64, v: [f64; 2]| OutputSample {
            time: t,
            positions: vec![0.0, 0.0],
            velocities: v.to_vec(),
            collapsed: false,
        };
        let samples = vec![out(1.0, [1.0, 1.0]), out(4.0, [1.5, 1.0]), out(9.0, [9.0, 1.25])];
        // Before T = 9: sqrt(4) * 0.5 = 1; afterwards particle 0 is ignored: sqrt(9) * 0.25.
        let s = velocity_bound_statistic(&samples, &[1.0, 1.0], 0, 9.0, 2.0, 1);
        assert!((s - 1.0).abs() < 1e-15);
    }
}
