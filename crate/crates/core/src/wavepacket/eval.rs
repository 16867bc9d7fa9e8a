//! Off-grid evaluation of `psi` and `grad psi` for sum-of-products states.

use num_complex::Complex64;

use super::state::ProductSumState;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Spectral};
use crate::spline::{FactorField, Stencil};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Anything that can produce `[phi_{j,l}, grad phi_{j,l}]` at a point.
pub trait FactorSource {
    fn grid(&self) -> &GridSpec;
    fn particles(&self) -> usize;
    fn branches(&self) -> usize;
    /// Adds `[phi, grad phi]` of factor `(branch, particle)` at the stencil to `out`.
    fn factor_eval(&self, branch: usize, particle: usize, stencil: &Stencil, out: &mut [Complex64]);
    fn factor_max(&self, branch: usize, particle: usize) -> f64;
}

/// Spline coefficient arrays for every factor of a state at one time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    time: f64,
    grid: GridSpec,
    branches: usize,
    particles: usize,
    fields: Vec<FactorField>,
}

impl Snapshot {
    pub fn from_state(state: &ProductSumState) -> Self {
        let spectral = Spectral::for_grid(state.grid());
        let fields = state
            .factors()
            .iter()
            .flat_map(|b| b.iter())
            .map(|f| FactorField::from_amplitudes(&spectral, f.amplitudes()))
            .collect();
        Self {
            time: state.time(),
            grid: *state.grid(),
            branches: state.branches(),
            particles: state.particles(),
            fields,
        }
    }

    pub(crate) fn from_fields(
        time: f64,
        grid: GridSpec,
        branches: usize,
        particles: usize,
        fields: Vec<FactorField>,
    ) -> Self {
        debug_assert_eq!(fields.len(), branches * particles);
        Self {
            time,
            grid,
            branches,
            particles,
            fields,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn field(&self, branch: usize, particle: usize) -> &FactorField {
        &self.fields[branch * self.particles + particle]
    }

    /// Largest mass of any factor within three nodes of the grid boundary.
    pub fn boundary_mass(&self) -> f64 {
        self.fields
            .iter()
            .map(|f| f.boundary_mass(&self.grid, 3))
            .fold(0.0, f64::max)
    }
}

impl FactorSource for Snapshot {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn particles(&self) -> usize {
        self.particles
    }
    fn branches(&self) -> usize {
        self.branches
    }
    #[inline]
    fn factor_eval(&self, branch: usize, particle: usize, stencil: &Stencil, out: &mut [Complex64]) {
        self.field(branch, particle).accumulate(stencil, 1.0, out);
    }
    fn factor_max(&self, branch: usize, particle: usize) -> f64 {
        self.field(branch, particle).max_abs()
    }
}

/// Result of one evaluation; `grad` holds `active.len() * d` components.
#[derive(Debug)]
pub struct Amplitude<'a> {
    pub psi: Complex64,
    pub grad: &'a [Complex64],
    /// `sum_j |c_j| prod_l max|phi_{j,l}|`, the reference scale for node guards.
    pub scale: f64,
}

/// Reusable buffers for repeated evaluations.
#[derive(Debug, Clone)]
pub struct Evaluator {
    grid: GridSpec,
    stencils: Vec<Stencil>,
    values: Vec<[Complex64; 4]>,
    grad: Vec<Complex64>,
}

impl Evaluator {
    pub fn new(grid: GridSpec, particles: usize) -> Self {
        Self {
            grid,
            stencils: Vec::with_capacity(particles),
            values: vec![[ZERO; 4]; particles],
            grad: vec![ZERO; particles * grid.dim],
        }
    }

    /// Evaluates the state restricted to the `active` particles at `positions`
    /// (`active.len() * d` coordinates). Inactive particles must already be
    /// folded into `coefficients`.
    pub fn evaluate<S: FactorSource + ?Sized>(
        &mut self,
        source: &S,
        coefficients: &[Complex64],
        active: &[usize],
        positions: &[f64],
        with_grad: bool,
    ) -> Result<Amplitude<'_>> {
        let d = self.grid.dim;
        let na = active.len();
        self.stencils.clear();
        for (slot, &l) in active.iter().enumerate() {
            let x = &positions[slot * d..(slot + 1) * d];
            if !self.grid.contains(x) {
                return Err(Error::DomainEscape {
                    particle: l,
                    time: f64::NAN,
                });
            }
            self.stencils.push(Stencil::new(&self.grid, x));
        }
        if self.values.len() < na {
            self.values.resize(na, [ZERO; 4]);
        }
        self.grad.clear();
        self.grad.resize(na * d, ZERO);
        let mut psi = ZERO;
        let mut scale = 0.0;
        for (j, &c) in coefficients.iter().enumerate() {
            if c == ZERO {
                continue;
            }
            let mut prod = c;
            let mut bound = c.norm();
            for (slot, &l) in active.iter().enumerate() {
                let v = &mut self.values[slot];
                *v = [ZERO; 4];
                source.factor_eval(j, l, &self.stencils[slot], &mut v[..=d]);
                prod *= v[0];
                bound *= source.factor_max(j, l);
            }
            psi += prod;
            scale += bound;
            if with_grad {
                for slot in 0..na {
                    let mut others = c;
                    for (other, v) in self.values[..na].iter().enumerate() {
                        if other != slot {
                            others *= v[0];
                        }
                    }
                    for a in 0..d {
                        self.grad[slot * d + a] += others * self.values[slot][1 + a];
                    }
                }
            }
        }
        Ok(Amplitude {
            psi,
            grad: &self.grad,
            scale,
        })
    }

    /// Bohmian velocity `Im(grad_l psi / psi)` for every active particle.
    #[allow(clippy::too_many_arguments)]
    pub fn velocity<S: FactorSource + ?Sized>(
        &mut self,
        source: &S,
        coefficients: &[Complex64],
        active: &[usize],
        positions: &[f64],
        node_guard: f64,
        time: f64,
        out: &mut [f64],
    ) -> Result<()> {
        let amp = self
            .evaluate(source, coefficients, active, positions, true)
            .map_err(|e| match e {
                Error::DomainEscape { particle, .. } => Error::DomainEscape { particle, time },
                other => other,
            })?;
        let modulus = amp.psi.norm();
        if !(modulus > node_guard * amp.scale) {
            return Err(Error::NodeProximity {
                time,
                ratio: if amp.scale > 0.0 { modulus / amp.scale } else { 0.0 },
            });
        }
        let inv = 1.0 / amp.psi.norm_sqr();
        let conj = amp.psi.conj();
        for (o, g) in out.iter_mut().zip(amp.grad.iter()) {
            *o = (g * conj).im * inv;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepacket::factor::{init_gaussian, Factor};

    #[test]
    fn node_values_multiply() {
        let g = GridSpec::new(1, 128, 12.0).unwrap();
        let a = init_gaussian(&[0.5], &[1.0], 1.0, &g).unwrap();
        let b = init_gaussian(&[-0.5], &[-0.3], 1.2, &g).unwrap();
        let s = ProductSumState::product(vec![a.clone(), b.clone()]).unwrap();
        let (i, k) = (60, 70);
        let x = [g.coordinate(i), g.coordinate(k)];
        let psi = s.evaluate_psi(&x).unwrap();
        let expected = a.amplitudes()[i] * b.amplitudes()[k];
        assert!((psi - expected).norm() < 1e-13);
    }

    #[test]
    fn real_state_has_real_gradient() {
        let g = GridSpec::new(1, 128, 8.0).unwrap();
        let a = init_gaussian(&[0.3], &[0.0], 1.0, &g).unwrap();
        let s = ProductSumState::product(vec![a]).unwrap();
        for x in [-2.3, -0.01, 0.77, 3.3] {
            let grad = s.evaluate_grad(&[x], 0).unwrap();
            assert!(grad[0].im.abs() < 1e-12);
        }
    }

    #[test]
    fn outside_domain_is_an_error() {
        let g = GridSpec::new(1, 64, 8.0).unwrap();
        let a = init_gaussian(&[0.0], &[0.0], 1.0, &g).unwrap();
        let s = ProductSumState::product(vec![a]).unwrap();
        assert!(matches!(s.evaluate_psi(&[8.5]), Err(Error::DomainEscape { .. })));
    }

    #[test]
    fn plane_wave_velocity_is_wavenumber() {
        let g = GridSpec::new(1, 64, 8.0).unwrap();
        let k = 5.0 * g.wavenumber_spacing();
        let amps: Vec<Complex64> = (0..64)
            .map(|i| Complex64::from_polar(1.0 / 4.0, k * g.coordinate(i)))
            .collect();
        let f = Factor::from_amplitudes(g, amps).unwrap();
        let s = ProductSumState::product(vec![f]).unwrap();
        let snap = s.snapshot();
        let mut ev = Evaluator::new(g, 1);
        let mut v = [0.0];
        for x in [-7.7, -1.234, 0.0, 3.9] {
            ev.velocity(&snap, s.coefficients(), &[0], &[x], 1e-12, 0.0, &mut v)
                .unwrap();
            assert!((v[0] - k).abs() / k < 1e-8);
        }
    }
}
