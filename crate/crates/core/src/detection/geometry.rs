use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on `| |x| - R |` accepted by [`classify_exit`].
pub const RADIUS_TOLERANCE: f64 = 1e-6;

/// Partition of the unit sphere of directions into bins.
///
/// Bins are numbered from 0. Points on a bin boundary belong to the lowest
/// adjacent index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BinPartition {
    /// `d = 1`: bin 0 is the positive half-line, bin 1 the negative one.
    HalfLines,
    /// `d = 2`: `count` equal angular sectors counter-clockwise from the +x axis.
    Sectors { count: usize },
    /// `d = 3`: rectangles in polar angle (`n_theta`) times azimuth (`n_phi`).
    Spherical { n_theta: usize, n_phi: usize },
}

impl BinPartition {
    /// Natural default partition for a dimension.
    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => Self::HalfLines,
            2 => Self::Sectors { count: 4 },
            _ => Self::Spherical { n_theta: 2, n_phi: 4 },
        }
    }

    pub fn count(&self) -> usize {
        match *self {
            Self::HalfLines => 2,
            Self::Sectors { count } => count,
            Self::Spherical { n_theta, n_phi } => n_theta * n_phi,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::HalfLines => 1,
            Self::Sectors { .. } => 2,
            Self::Spherical { .. } => 3,
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::InvalidArgument(format!(
                "bin partition for d = {} used with d = {dim}",
                self.dim()
            )));
        }
        match *self {
            Self::Sectors { count } if count == 0 => Err(Error::InvalidArgument("sector count must be positive".into())),
            Self::Spherical { n_theta, n_phi } if n_theta == 0 || n_phi == 0 => {
                Err(Error::InvalidArgument("spherical bin counts must be positive".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn label(&self, bin: usize) -> String {
        match self {
            Self::HalfLines => if bin == 0 { "+" } else { "-" }.to_string(),
            _ => bin.to_string(),
        }
    }

    /// Bin of a nonzero direction vector (not necessarily normalized).
    pub fn classify_direction(&self, v: &[f64]) -> usize {
        match *self {
            Self::HalfLines => usize::from(v[0] < 0.0),
            Self::Sectors { count } => angle_bin(v[1].atan2(v[0]).rem_euclid(2.0 * PI), 2.0 * PI, count),
            Self::Spherical { n_theta, n_phi } => {
                let rho = v[0].hypot(v[1]);
                let theta = rho.atan2(v[2]);
                let phi = v[1].atan2(v[0]).rem_euclid(2.0 * PI);
                angle_bin(theta, PI, n_theta) * n_phi + angle_bin(phi, 2.0 * PI, n_phi)
            }
        }
    }
}

/// Index of the interval `((i-1) D, i D]` containing `angle`, with `0` mapped to bin 0.
fn angle_bin(angle: f64, range: f64, count: usize) -> usize {
    let width = range / count as f64;
    let i = (angle / width).ceil() as i64 - 1;
    i.clamp(0, count as i64 - 1) as usize
}

/// Detector sphere of radius `R` with its bin partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorGeometry {
    pub radius: f64,
    pub bins: BinPartition,
}

impl DetectorGeometry {
    pub fn new(radius: f64, bins: BinPartition) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("detector radius {radius} must be positive")));
        }
        Ok(Self { radius, bins })
    }

    pub fn dim(&self) -> usize {
        self.bins.dim()
    }
}

/// Bin of an exit point on the sphere of radius `radius`.
pub fn classify_exit(position: &[f64], radius: f64, bins: &BinPartition) -> Result<usize> {
    let r = position.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !((r - radius).abs() <= RADIUS_TOLERANCE * radius) {
        return Err(Error::RadiusMismatch { distance: r, radius });
    }
    Ok(bins.classify_direction(position))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_lines() {
        let b = BinPartition::HalfLines;
        assert_eq!(classify_exit(&[7.0], 7.0, &b).unwrap(), 0);
        assert_eq!(classify_exit(&[-7.0], 7.0, &b).unwrap(), 1);
        assert_eq!(b.label(0), "+");
    }

    #[test]
    fn quadrants_and_boundaries() {
        let b = BinPartition::Sectors { count: 4 };
        let r = 2.0;
        let at = |deg: f64| [r * deg.to_radians().cos(), r * deg.to_radians().sin()];
        assert_eq!(classify_exit(&at(45.0), r, &b).unwrap(), 0);
        assert_eq!(classify_exit(&at(135.0), r, &b).unwrap(), 1);
        assert_eq!(classify_exit(&at(300.0), r, &b).unwrap(), 3);
        // Boundaries go to the lowest adjacent bin.
        assert_eq!(classify_exit(&[r, 0.0], r, &b).unwrap(), 0);
        assert_eq!(classify_exit(&[0.0, r], r, &b).unwrap(), 0);
        assert_eq!(classify_exit(&[-r, 0.0], r, &b).unwrap(), 1);
    }

    #[test]
    fn spherical_patches() {
        let b = BinPartition::Spherical { n_theta: 2, n_phi: 4 };
        assert_eq!(b.classify_direction(&[1.0, 1.0, 1.0]), 0);
        assert_eq!(b.classify_direction(&[-1.0, -1.0, -1.0]), 4 + 2);
        assert_eq!(b.classify_direction(&[0.0, 0.0, 1.0]), 0);
    }

    #[test]
    fn radius_mismatch_is_rejected() {
        assert!(matches!(
            classify_exit(&[5.1], 5.0, &BinPartition::HalfLines),
            Err(Error::RadiusMismatch { .. })
        ));
        assert!(BinPartition::HalfLines.validate(2).is_err());
    }
}
