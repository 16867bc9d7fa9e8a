//! Sequential conditional sampling of initial configurations from `|psi|^2`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spline::Stencil;
use crate::wavepacket::state::{state_norm, NORM_TOLERANCE};
use crate::wavepacket::{FactorSource, ProductSumState, Snapshot};

pub const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { samples: 10_000, seed: 1 }
    }
}

impl SamplerConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.samples < MIN_SAMPLES {
            v.push(format!("sampler.samples = {} must be at least {MIN_SAMPLES}", self.samples));
        }
        v
    }
}

/// Cumulative cross-products `sum_{n' <= n} conj(phi_j) phi_k` for one particle.
struct Cumulative {
    branches: usize,
    /// `data[(j * J + k) * len + n]`.
    data: Vec<Complex64>,
    len: usize,
    /// `prod_{m > l} G^m_jk`.
    weight: Vec<Complex64>,
}

impl Cumulative {
    fn new(s: &ProductSumState, l: usize) -> Self {
        let nb = s.branches();
        let len = s.grid().len();
        let mut data = vec![Complex64::new(0.0, 0.0); nb * nb * len];
        for j in 0..nb {
            for k in 0..nb {
                let a = s.factor(j, l).amplitudes();
                let b = s.factor(k, l).amplitudes();
                let row = &mut data[(j * nb + k) * len..(j * nb + k + 1) * len];
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..len {
                    acc += a[n].conj() * b[n];
                    row[n] = acc;
                }
            }
        }
        let grams: Vec<_> = (l + 1..s.particles()).map(|m| s.gram(m)).collect();
        let weight = (0..nb * nb)
            .map(|jk| grams.iter().fold(Complex64::new(1.0, 0.0), |w, g| w * g.get(jk / nb, jk % nb)))
            .collect();
        Self {
            branches: nb,
            data,
            len,
            weight,
        }
    }

    /// Unnormalized CDF at node `n` for coefficients `a`.
    fn cdf(&self, pair: &[Complex64], n: usize) -> f64 {
        let nb = self.branches;
        let mut acc = 0.0;
        for jk in 0..nb * nb {
            let w = pair[jk];
            if w != Complex64::new(0.0, 0.0) {
                acc += (w * self.data[jk * self.len + n]).re;
            }
        }
        acc
    }

    fn pair_weights(&self, a: &[Complex64]) -> Vec<Complex64> {
        let nb = self.branches;
        (0..nb * nb)
            .map(|jk| a[jk / nb].conj() * a[jk % nb] * self.weight[jk])
            .collect()
    }
}

/// Draws `cfg.samples` configurations from `|psi_0|^2`.
///
/// Particle 1 comes from its marginal, particle 2 from its conditional given
/// `x_1`, and so on. Each draw picks a node-centered grid cell by inverse CDF
/// and places the point inside the cell: along the first axis by the linear
/// CDF fraction, along the others uniformly.
pub fn sample_initial(s0: &ProductSumState, cfg: &SamplerConfig) -> Result<Vec<Vec<f64>>> {
    if let Some(v) = cfg.violations().into_iter().next() {
        return Err(Error::InvalidArgument(v));
    }
    let norm = state_norm(s0);
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized { norm });
    }
    let grid = *s0.grid();
    let d = grid.dim;
    let n = s0.particles();
    let h = grid.spacing();
    let cums: Vec<Cumulative> = (0..n).map(|l| Cumulative::new(s0, l)).collect();
    let snap = Snapshot::from_state(s0);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let upper = grid.half_width * (1.0 - f64::EPSILON);
    let mut out = Vec::with_capacity(cfg.samples);
    for _ in 0..cfg.samples {
        let mut a = s0.coefficients().to_vec();
        let mut x = vec![0.0; n * d];
        for (l, cum) in cums.iter().enumerate() {
            let pair = cum.pair_weights(&a);
            let total = cum.cdf(&pair, cum.len - 1);
            let target = rng.gen::<f64>() * total;
            // Smallest node whose CDF reaches the target.
            let (mut lo, mut hi) = (0usize, cum.len - 1);
            while lo < hi {
                let mid = (lo + hi) / 2;
                if cum.cdf(&pair, mid) >= target {
                    hi = mid;
                } else {
                    lo = mid + 1;
                }
            }
            let node = lo;
            let below = if node == 0 { 0.0 } else { cum.cdf(&pair, node - 1) };
            let mass = cum.cdf(&pair, node) - below;
            let frac = if mass > 0.0 { ((target - below) / mass).clamp(0.0, 1.0) } else { 0.5 };
            let center = grid.node_position(node);
            let xl = &mut x[l * d..(l + 1) * d];
            for axis in 0..d {
                let f = if axis == 0 { frac } else { rng.gen::<f64>() };
                xl[axis] = (center[axis] + (f - 0.5) * h).clamp(-grid.half_width, upper);
            }
            let st = Stencil::new(&grid, xl);
            for (j, c) in a.iter_mut().enumerate() {
                let mut vals = [Complex64::new(0.0, 0.0); 4];
                snap.factor_eval(j, l, &st, &mut vals[..=d]);
                *c *= vals[0];
            }
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::wavepacket::factor::init_gaussian;

    #[test]
    fn gaussian_moments() {
        let g = GridSpec::new(1, 256, 16.0).unwrap();
        let s = ProductSumState::product(vec![
            init_gaussian(&[0.0], &[1.0], 1.0, &g).unwrap(),
            init_gaussian(&[0.0], &[0.0], 1.0, &g).unwrap(),
        ])
        .unwrap();
        let m = 10_000;
        let xs = sample_initial(&s, &SamplerConfig { samples: m, seed: 3 }).unwrap();
        for l in 0..2 {
            let mean = xs.iter().map(|x| x[l]).sum::<f64>() / m as f64;
            let var = xs.iter().map(|x| (x[l] - mean).powi(2)).sum::<f64>() / (m - 1) as f64;
            assert!(mean.abs() < 4.0 / (m as f64).sqrt(), "mean {mean}");
            assert!((var - 1.0).abs() < 0.1, "variance {var}");
        }
    }

    #[test]
    fn narrow_packet_stays_concentrated() {
        let g = GridSpec::new(1, 512, 16.0).unwrap();
        let sigma = 4.0 * g.spacing();
        let s = ProductSumState::product(vec![init_gaussian(&[2.0], &[0.0], sigma, &g).unwrap()]).unwrap();
        let xs = sample_initial(&s, &SamplerConfig { samples: 1000, seed: 1 }).unwrap();
        assert!(xs.iter().all(|x| (x[0] - 2.0).abs() < 5.0 * sigma));
    }

    #[test]
    fn same_seed_same_samples() {
        let g = GridSpec::new(1, 128, 12.0).unwrap();
        let s = ProductSumState::product(vec![init_gaussian(&[0.0], &[0.0], 1.0, &g).unwrap()]).unwrap();
        let cfg = SamplerConfig { samples: 200, seed: 9 };
        assert_eq!(sample_initial(&s, &cfg).unwrap(), sample_initial(&s, &cfg).unwrap());
        assert!(sample_initial(&s, &SamplerConfig { samples: 50, seed: 9 }).is_err());
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let g = GridSpec::new(1, 128, 12.0).unwrap();
        let f = init_gaussian(&[0.0], &[0.0], 1.0, &g).unwrap();
        let s = ProductSumState::unnormalized(vec![Complex64::new(2.0, 0.0)], vec![vec![f]], 0.0).unwrap();
        assert!(matches!(
            sample_initial(&s, &SamplerConfig::default()),
            Err(Error::NotNormalized { .. })
        ));
    }
}
