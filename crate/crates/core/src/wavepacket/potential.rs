use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// One Gaussian bump `a * exp(-|x - c|^2 / (2 w^2))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBump {
    pub amplitude: f64,
    pub width: f64,
    pub center: Vec<f64>,
}

/// External single-particle potential `V_l`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    None,
    GaussianSum { bumps: Vec<GaussianBump> },
}

impl PotentialSpec {
    pub fn gaussian(amplitude: f64, width: f64, center: Vec<f64>) -> Self {
        Self::GaussianSum {
            bumps: vec![GaussianBump {
                amplitude,
                width,
                center,
            }],
        }
    }

    pub fn is_none(&self) -> bool {
        match self {
            Self::None => true,
            Self::GaussianSum { bumps } => bumps.iter().all(|b| b.amplitude == 0.0),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if let Self::GaussianSum { bumps } = self {
            for b in bumps {
                if !(b.width > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "potential width {} must be positive",
                        b.width
                    )));
                }
                if b.center.len() != dim {
                    return Err(Error::Shape(format!(
                        "potential center has {} components, expected {dim}",
                        b.center.len()
                    )));
                }
                if !b.amplitude.is_finite() {
                    return Err(Error::InvalidArgument("potential amplitude not finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Self::None => 0.0,
            Self::GaussianSum { bumps } => bumps
                .iter()
                .map(|b| {
                    let r2: f64 = b.center.iter().zip(x).map(|(c, xi)| (xi - c).powi(2)).sum();
                    b.amplitude * (-r2 / (2.0 * b.width * b.width)).exp()
                })
                .sum(),
        }
    }

    pub fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        (0..grid.len())
            .map(|flat| {
                let x = grid.node_position(flat);
                self.value(&x[..grid.dim])
            })
            .collect()
    }

    /// Largest Gaussian width, zero for the free case.
    pub fn max_width(&self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::GaussianSum { bumps } => bumps.iter().map(|b| b.width).fold(0.0, f64::max),
        }
    }
}
