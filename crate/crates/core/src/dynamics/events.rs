use super::ode::DenseStep;
use crate::error::{Error, Result};

/// Bisection tolerance for event times.
pub const EVENT_TIME_TOLERANCE: f64 = 1e-10;

/// First crossing of `|X_l(t)| = R` from inside the ball.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitEvent {
    pub particle: usize,
    pub radius: f64,
}

/// Event for the first exit of particle `l` from the ball of radius `R`.
pub fn exit_event(particle: usize, radius: f64) -> Result<ExitEvent> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument(format!("detector radius {radius} must be positive")));
    }
    Ok(ExitEvent { particle, radius })
}

impl ExitEvent {
    /// `|x_l|^2 - R^2` for the configuration `y`.
    #[inline]
    pub fn value(&self, y: &[f64], dim: usize) -> f64 {
        let x = &y[self.particle * dim..(self.particle + 1) * dim];
        x.iter().map(|v| v * v).sum::<f64>() - self.radius * self.radius
    }

    #[inline]
    fn value_dense(&self, dense: &DenseStep, t: f64, dim: usize) -> f64 {
        let mut r2 = 0.0;
        for a in 0..dim {
            let v = dense.component(t, self.particle * dim + a);
            r2 += v * v;
        }
        r2 - self.radius * self.radius
    }

    /// Precondition: the particle starts strictly inside the ball.
    pub fn check_start(&self, y: &[f64], dim: usize) -> Result<()> {
        if self.value(y, dim) >= 0.0 {
            let x = &y[self.particle * dim..(self.particle + 1) * dim];
            return Err(Error::OutsideBall {
                particle: self.particle,
                distance: x.iter().map(|v| v * v).sum::<f64>().sqrt(),
                radius: self.radius,
            });
        }
        Ok(())
    }

    /// Crossing time inside the step, located by bisection on the dense output.
    pub fn locate(&self, dense: &DenseStep, dim: usize) -> Option<f64> {
        let (mut lo, mut hi) = (dense.start(), dense.end());
        if !(hi > lo) || self.value_dense(dense, lo, dim) >= 0.0 || self.value_dense(dense, hi, dim) < 0.0 {
            return None;
        }
        while hi - lo > EVENT_TIME_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.value_dense(dense, mid, dim) >= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Some(hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ode::{Dopri5, IntegratorConfig};

    #[test]
    fn straight_line_exit_time() {
        let cfg = IntegratorConfig::default();
        let ev = exit_event(0, 10.0).unwrap();
        let mut f = |_t: f64, _y: &[f64], dy: &mut [f64]| {
            dy[0] = 0.6;
            dy[1] = -0.8;
            Ok(())
        };
        let mut ode = Dopri5::new(0.0, &[0.0, 0.0], 0.1);
        let mut hit = None;
        while hit.is_none() && ode.time() < 20.0 {
            ode.step(&mut f, 20.0, &cfg).unwrap();
            hit = ev.locate(ode.dense(), 2);
        }
        let t = hit.unwrap();
        assert!((t - 10.0).abs() < 1e-9);
        let mut x = [0.0; 2];
        ode.dense().eval(t, &mut x);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        assert!((r - 10.0).abs() <= 1e-8 * 10.0);
    }

    #[test]
    fn start_outside_is_a_precondition_error() {
        let ev = exit_event(1, 2.0).unwrap();
        assert!(matches!(ev.check_start(&[0.0, 3.0], 1), Err(Error::OutsideBall { .. })));
        assert!(ev.check_start(&[5.0, 1.0], 1).is_ok());
        assert!(exit_event(0, 0.0).is_err());
    }
}
