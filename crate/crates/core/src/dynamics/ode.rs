//! Dormand-Prince 5(4) with Hairer's continuous extension.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub atol: f64,
    pub rtol: f64,
    pub max_step: f64,
    pub initial_step: f64,
    /// Abort when `|psi| < node_guard * sum_j |c_j| prod_l max|phi_{j,l}|`.
    pub node_guard: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            atol: 1e-9,
            rtol: 1e-8,
            max_step: 0.5,
            initial_step: 1e-3,
            node_guard: 1e-12,
        }
    }
}

impl IntegratorConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [
            ("atol", self.atol),
            ("rtol", self.rtol),
            ("max_step", self.max_step),
            ("initial_step", self.initial_step),
            ("node_guard", self.node_guard),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                out.push(format!("integrator.{name} = {v} must be positive"));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }

    /// Same settings with tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            atol: self.atol * factor,
            rtol: self.rtol * factor,
            ..*self
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Continuous extension of one accepted step.
#[derive(Debug, Clone, Default)]
pub struct DenseStep {
    t0: f64,
    h: f64,
    n: usize,
    r: Vec<f64>,
}

impl DenseStep {
    pub fn start(&self) -> f64 {
        self.t0
    }

    pub fn end(&self) -> f64 {
        self.t0 + self.h
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Value of component `i` at `t` (no range check).
    #[inline]
    pub fn component(&self, t: f64, i: usize) -> f64 {
        let n = self.n;
        if self.h == 0.0 {
            return self.r[i];
        }
        let s = (t - self.t0) / self.h;
        let s1 = 1.0 - s;
        let r = &self.r;
        r[i] + s * (r[n + i] + s1 * (r[2 * n + i] + s * (r[3 * n + i] + s1 * r[4 * n + i])))
    }

    pub fn eval(&self, t: f64, out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            *o = self.component(t, i);
        }
    }

    /// Checked evaluation.
    pub fn position(&self, t: f64) -> Result<Vec<f64>> {
        let tol = 1e-12 * (1.0 + self.end().abs());
        if t < self.t0 - tol || t > self.end() + tol {
            return Err(Error::OutsideSegment {
                time: t,
                start: self.t0,
                end: self.end(),
            });
        }
        let mut out = vec![0.0; self.n];
        self.eval(t, &mut out);
        Ok(out)
    }
}

/// Adaptive integrator state for one trajectory.
#[derive(Debug, Clone)]
pub struct Dopri5 {
    n: usize,
    t: f64,
    y: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 7],
    ytmp: Vec<f64>,
    y1: Vec<f64>,
    fsal: bool,
    dense: DenseStep,
    accepted: usize,
    rejected: usize,
}

impl Dopri5 {
    pub fn new(t0: f64, y0: &[f64], initial_step: f64) -> Self {
        let n = y0.len();
        let z = vec![0.0; n];
        Self {
            n,
            t: t0,
            y: y0.to_vec(),
            h: initial_step,
            k: [z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
            ytmp: z.clone(),
            y1: z,
            fsal: false,
            dense: DenseStep {
                t0,
                h: 0.0,
                n,
                r: y0.iter().copied().chain(std::iter::repeat(0.0).take(4 * n)).collect(),
            },
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.y
    }

    pub fn dense(&self) -> &DenseStep {
        &self.dense
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.accepted, self.rejected)
    }

    /// Restarts from `(t, y)`, discarding the cached first stage.
    pub fn reset(&mut self, t: f64, y: &[f64]) {
        self.t = t;
        self.y.copy_from_slice(y);
        self.fsal = false;
    }

    /// Takes one accepted step ending no later than `t_limit`.
    pub fn step<F>(&mut self, f: &mut F, t_limit: f64, cfg: &IntegratorConfig) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = self.n;
        if !self.fsal {
            let (k1, _) = self.k.split_at_mut(1);
            f(self.t, &self.y, &mut k1[0])?;
            self.fsal = true;
        }
        loop {
            let proposal = self.h.min(cfg.max_step);
            let remaining = t_limit - self.t;
            let clipped = proposal >= remaining;
            let h = if clipped { remaining } else { proposal };
            if !(h > 1e-13 * (1.0 + self.t.abs())) {
                if remaining <= 1e-13 * (1.0 + self.t.abs()) {
                    // Nothing left to integrate.
                    self.dense = DenseStep {
                        t0: self.t,
                        h: 0.0,
                        n,
                        r: self.y.iter().copied().chain(std::iter::repeat(0.0).take(4 * n)).collect(),
                    };
                    self.t = t_limit.max(self.t);
                    return Ok(());
                }
                return Err(Error::StepUnderflow { time: self.t });
            }
            let t = self.t;
            let y = &self.y;
            let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
            let yt = &mut self.ytmp;
            for i in 0..n {
                yt[i] = y[i] + h * A21 * k1[i];
            }
            f(t + C2 * h, yt, k2)?;
            for i in 0..n {
                yt[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
            }
            f(t + C3 * h, yt, k3)?;
            for i in 0..n {
                yt[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
            }
            f(t + C4 * h, yt, k4)?;
            for i in 0..n {
                yt[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
            }
            f(t + C5 * h, yt, k5)?;
            for i in 0..n {
                yt[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
            }
            let t1 = if clipped { t_limit } else { t + h };
            f(t1, yt, k6)?;
            let y1 = &mut self.y1;
            for i in 0..n {
                y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
            }
            f(t1, y1, k7)?;
            let mut err = 0.0;
            for i in 0..n {
                let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sk = cfg.atol + cfg.rtol * y[i].abs().max(y1[i].abs());
                err += (e / sk).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if err <= 1.0 {
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                let r = &mut self.dense.r;
                r.resize(5 * n, 0.0);
                for i in 0..n {
                    let dy = y1[i] - y[i];
                    let bspl = h * k1[i] - dy;
                    r[i] = y[i];
                    r[n + i] = dy;
                    r[2 * n + i] = bspl;
                    r[3 * n + i] = dy - h * k7[i] - bspl;
                    r[4 * n + i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
                self.dense.t0 = t;
                self.dense.h = t1 - t;
                self.dense.n = n;
                if !(clipped && fac >= 1.0) {
                    self.h = h * fac;
                }
                std::mem::swap(&mut self.y, &mut self.y1);
                self.k.swap(0, 6);
                self.t = t1;
                self.accepted += 1;
                return Ok(());
            }
            self.rejected += 1;
            self.h = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
}
