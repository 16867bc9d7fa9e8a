use num_complex::Complex64;

use super::eval::{Evaluator, Snapshot};
use super::factor::Factor;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Normalization tolerance enforced at construction.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Square matrix of branch overlaps `<phi_{j,l}, phi_{k,l}>` for one particle.
#[derive(Debug, Clone, PartialEq)]
pub struct Gram {
    size: usize,
    data: Vec<Complex64>,
}

impl Gram {
    pub fn identity(size: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); size * size];
        for j in 0..size {
            data[j * size + j] = Complex64::new(1.0, 0.0);
        }
        Self { size, data }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> Complex64 {
        self.data[j * self.size + k]
    }

    pub(crate) fn from_data(size: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), size * size);
        Self { size, data }
    }

    pub fn of_factors(factors: &[&Factor]) -> Self {
        let size = factors.len();
        let mut data = vec![Complex64::new(0.0, 0.0); size * size];
        for j in 0..size {
            for k in 0..size {
                data[j * size + k] = factors[j].inner(factors[k]);
            }
        }
        Self { size, data }
    }
}

/// `|| sum_j c_j prod_l phi_{j,l} ||^2` from coefficients and per-particle Gram matrices.
pub fn norm_squared_from_grams(coefficients: &[Complex64], grams: &[&Gram]) -> f64 {
    let nb = coefficients.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nb {
        if coefficients[j] == Complex64::new(0.0, 0.0) {
            continue;
        }
        for k in 0..nb {
            let mut term = coefficients[j].conj() * coefficients[k];
            for g in grams {
                term *= g.get(j, k);
            }
            acc += term;
        }
    }
    acc.re.max(0.0)
}

/// Entangled N-particle state `sum_j c_j prod_l phi_{j,l}(x_l)` at time `t`.
#[derive(Debug, Clone)]
pub struct ProductSumState {
    grid: GridSpec,
    coefficients: Vec<Complex64>,
    /// `factors[j][l]`
    factors: Vec<Vec<Factor>>,
    time: f64,
}

impl ProductSumState {
    /// Builds a state and checks `||psi|| = 1` to [`NORM_TOLERANCE`].
    pub fn new(coefficients: Vec<Complex64>, factors: Vec<Vec<Factor>>, time: f64) -> Result<Self> {
        let state = Self::unnormalized(coefficients, factors, time)?;
        let norm = state_norm(&state);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(state)
    }

    /// Builds a state with shape checks only.
    pub fn unnormalized(
        coefficients: Vec<Complex64>,
        factors: Vec<Vec<Factor>>,
        time: f64,
    ) -> Result<Self> {
        if coefficients.is_empty() || coefficients.len() != factors.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for {} branches",
                coefficients.len(),
                factors.len()
            )));
        }
        let n = factors[0].len();
        if n == 0 {
            return Err(Error::Shape("a state needs at least one particle".into()));
        }
        let grid = *factors[0][0].grid();
        for branch in &factors {
            if branch.len() != n {
                return Err(Error::Shape("branches have different particle counts".into()));
            }
            if branch.iter().any(|f| f.grid() != &grid) {
                return Err(Error::Shape("factors live on different grids".into()));
            }
        }
        Ok(Self {
            grid,
            coefficients,
            factors,
            time,
        })
    }

    /// Rescales the coefficients so that the state has unit norm.
    pub fn normalized(
        coefficients: Vec<Complex64>,
        factors: Vec<Vec<Factor>>,
        time: f64,
    ) -> Result<Self> {
        let mut state = Self::unnormalized(coefficients, factors, time)?;
        let norm = state_norm(&state);
        if !(norm > 0.0) {
            return Err(Error::NotNormalized { norm });
        }
        for c in state.coefficients.iter_mut() {
            *c /= norm;
        }
        Ok(state)
    }

    /// Single-branch product state.
    pub fn product(factors: Vec<Factor>) -> Result<Self> {
        Self::new(vec![Complex64::new(1.0, 0.0)], vec![factors], 0.0)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn particles(&self) -> usize {
        self.factors[0].len()
    }

    pub fn branches(&self) -> usize {
        self.coefficients.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    pub fn factor(&self, branch: usize, particle: usize) -> &Factor {
        &self.factors[branch][particle]
    }

    pub fn factors(&self) -> &[Vec<Factor>] {
        &self.factors
    }

    pub fn gram(&self, particle: usize) -> Gram {
        let fs: Vec<&Factor> = self.factors.iter().map(|b| &b[particle]).collect();
        Gram::of_factors(&fs)
    }

    pub fn grams(&self) -> Vec<Gram> {
        (0..self.particles()).map(|l| self.gram(l)).collect()
    }

    pub(crate) fn with_parts(
        &self,
        coefficients: Vec<Complex64>,
        factors: Vec<Vec<Factor>>,
        time: f64,
    ) -> Self {
        Self {
            grid: self.grid,
            coefficients,
            factors,
            time,
        }
    }

    /// Complex conjugate state (time-reversed wave function).
    pub fn conjugate(&self) -> Result<Self> {
        let factors = self
            .factors
            .iter()
            .map(|b| {
                b.iter()
                    .map(|f| {
                        Factor::from_amplitudes(
                            self.grid,
                            f.amplitudes().iter().map(|a| a.conj()).collect(),
                        )
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let coefficients = self.coefficients.iter().map(|c| c.conj()).collect();
        Ok(self.with_parts(coefficients, factors, self.time))
    }

    /// Same factors at a different reference time.
    pub fn at_time(&self, time: f64) -> Self {
        self.with_parts(self.coefficients.clone(), self.factors.clone(), time)
    }

    /// Spline snapshot for off-grid evaluation.
    pub fn snapshot(&self) -> Snapshot {
        Snapshot::from_state(self)
    }

    /// `psi(x)` by spline interpolation; `x` holds `N*d` coordinates.
    pub fn evaluate_psi(&self, x: &[f64]) -> Result<Complex64> {
        let snap = self.snapshot();
        let mut ev = Evaluator::new(self.grid, self.particles());
        let all: Vec<usize> = (0..self.particles()).collect();
        Ok(ev.evaluate(&snap, &self.coefficients, &all, x, false)?.psi)
    }

    /// `grad_l psi(x)` with spectrally differentiated factors.
    pub fn evaluate_grad(&self, x: &[f64], particle: usize) -> Result<Vec<Complex64>> {
        let snap = self.snapshot();
        let mut ev = Evaluator::new(self.grid, self.particles());
        let all: Vec<usize> = (0..self.particles()).collect();
        let d = self.grid.dim;
        let amp = ev.evaluate(&snap, &self.coefficients, &all, x, true)?;
        Ok(amp.grad[particle * d..(particle + 1) * d].to_vec())
    }
}

/// `||psi||` via the branch Gram matrices; branches need not be orthogonal.
pub fn state_norm(state: &ProductSumState) -> f64 {
    let grams = state.grams();
    let refs: Vec<&Gram> = grams.iter().collect();
    norm_squared_from_grams(&state.coefficients, &refs).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepacket::factor::init_gaussian;

    fn grid() -> GridSpec {
        GridSpec::new(1, 256, 16.0).unwrap()
    }

    #[test]
    fn single_product_has_unit_norm() {
        let g = grid();
        let f = init_gaussian(&[0.0], &[1.0], 1.0, &g).unwrap();
        let s = ProductSumState::product(vec![f.clone(), f]).unwrap();
        assert!((state_norm(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_branches_obey_pythagoras() {
        let g = grid();
        // Disjoint supports make the factors orthogonal to machine precision.
        let a = init_gaussian(&[-6.0], &[0.0], 0.6, &g).unwrap();
        let b = init_gaussian(&[6.0], &[0.0], 0.6, &g).unwrap();
        let (ca, cb) = (Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.5));
        let s = ProductSumState::unnormalized(vec![ca, cb], vec![vec![a], vec![b]], 0.0).unwrap();
        let expected = (ca.norm_sqr() + cb.norm_sqr()).sqrt();
        assert!((state_norm(&s) - expected).abs() < 1e-12);
    }

    #[test]
    fn identical_branches_add_coherently() {
        let g = grid();
        let f = init_gaussian(&[0.0], &[2.0], 1.0, &g).unwrap();
        let half = Complex64::new(0.5, 0.0);
        let s = ProductSumState::new(vec![half, half], vec![vec![f.clone()], vec![f]], 0.0).unwrap();
        assert!((state_norm(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unnormalized_input_is_rejected_with_norm() {
        let g = grid();
        let f = init_gaussian(&[0.0], &[0.0], 1.0, &g).unwrap();
        let err = ProductSumState::new(vec![Complex64::new(2.0, 0.0)], vec![vec![f]], 0.0).unwrap_err();
        match err {
            Error::NotNormalized { norm } => assert!((norm - 2.0).abs() < 1e-12),
            other => panic!("unexpected {other}"),
        }
    }
}
