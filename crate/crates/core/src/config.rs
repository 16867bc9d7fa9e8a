//! Experiment configuration files.
//!
//! Configs are TOML (or JSON, which is what `summary.json` echoes back).
//! Unknown keys are rejected and every violation is reported at once.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::detection::{BinPartition, ProcessMode};
use crate::dynamics::IntegratorConfig;
use crate::ensemble::SamplerConfig;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::wavepacket::state::NORM_TOLERANCE;
use crate::wavepacket::{state_norm, superpose, GaussianPacket, PotentialSpec, ProductSumState};

/// One-sided 99.9% normal quantile used for the fast end of a packet's momentum spread.
const MOMENTUM_QUANTILE: f64 = 3.090232306167813;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub grid: GridConfig,
    pub branches: Vec<BranchConfig>,
    /// One entry per particle; empty means free motion.
    #[serde(default)]
    pub potentials: Vec<PotentialSpec>,
    pub detector: DetectorConfig,
    #[serde(default)]
    pub sampler: SamplerConfig,
    pub process: ProcessConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub asymptotics: AsymptoticsConfig,
    #[serde(default)]
    pub checks: ChecksConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub points: usize,
    pub half_width: f64,
}

/// `coefficient * prod_l factor_l`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchConfig {
    /// `[re, im]`.
    pub coefficient: Complex64,
    pub factors: Vec<FactorConfig>,
}

/// Normalized superposition of Gaussian packets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub packets: Vec<PacketConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketConfig {
    #[serde(default = "unit_weight")]
    pub weight: Complex64,
    pub center: Vec<f64>,
    pub momentum: Vec<f64>,
    pub sigma: f64,
}

fn unit_weight() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Increasing detector radii.
    pub radii: Vec<f64>,
    /// Defaults to the standard partition of the grid dimension.
    #[serde(default)]
    pub bins: Option<BinPartition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessConfig {
    #[serde(default = "default_modes")]
    pub modes: Vec<ProcessMode>,
    pub t_max: f64,
}

fn default_modes() -> Vec<ProcessMode> {
    vec![ProcessMode::Plain]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsConfig {
    /// First wave-operator horizon; chosen from the packet and potential widths when unset.
    pub initial_horizon: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChecksConfig {
    /// Frequencies at the largest radius within 3 standard errors of the cone values.
    pub cone_agreement: bool,
    /// Discrepancy at the largest radius at most the smallest-radius discrepancy plus one standard error.
    pub convergence_trend: bool,
    /// Plain and stopped-single frequencies agree at the largest radius.
    pub mode_agreement: bool,
    /// Plain and stopped-single bins coincide for every sample.
    pub identical_modes: bool,
    /// Largest tolerated fraction of aborted samples.
    pub abort_tolerance: f64,
}

impl Default for ChecksConfig {
    fn default() -> Self {
        Self {
            cone_agreement: true,
            convergence_trend: true,
            mode_agreement: true,
            identical_modes: false,
            abort_tolerance: crate::ensemble::stats::ABORT_TOLERANCE,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        cfg.fill_defaults();
        Ok(cfg)
    }

    /// Accepts a bare config or a summary with a `config` member.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        let mut cfg: Self = serde_json::from_value(value).map_err(|e| Error::Config(vec![e.to_string()]))?;
        cfg.validate()?;
        cfg.fill_defaults();
        Ok(cfg)
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.grid.dim, self.grid.points, self.grid.half_width)
    }

    pub fn particles(&self) -> usize {
        self.branches.first().map_or(0, |b| b.factors.len())
    }

    pub fn bins(&self) -> BinPartition {
        self.detector
            .bins
            .clone()
            .unwrap_or_else(|| BinPartition::default_for(self.grid.dim))
    }

    pub fn potentials(&self) -> Vec<PotentialSpec> {
        self.potentials.clone()
    }

    fn fill_defaults(&mut self) {
        self.detector.bins = Some(self.bins());
    }

    /// Builds the initial state without the normalization check.
    fn raw_state(&self) -> Result<ProductSumState> {
        let grid = self.grid_spec()?;
        let mut coeffs = Vec::with_capacity(self.branches.len());
        let mut factors = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            coeffs.push(b.coefficient);
            let fs = b
                .factors
                .iter()
                .map(|f| {
                    let parts: Vec<(Complex64, GaussianPacket)> = f
                        .packets
                        .iter()
                        .map(|p| (p.weight, GaussianPacket::new(p.center.clone(), p.momentum.clone(), p.sigma)))
                        .collect();
                    superpose(&parts, &grid)
                })
                .collect::<Result<Vec<_>>>()?;
            factors.push(fs);
        }
        ProductSumState::unnormalized(coeffs, factors, 0.0)
    }

    pub fn initial_state(&self) -> Result<ProductSumState> {
        let s = self.raw_state()?;
        let norm = state_norm(&s);
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized { norm });
        }
        Ok(s)
    }

    /// `L >= max |c| + R + v_max t_max + 6 sigma`, with `v_max` the 99.9% momentum quantile.
    pub fn required_half_width(&self) -> f64 {
        let d = self.grid.dim as f64;
        let r = self.detector.radii.iter().copied().fold(0.0, f64::max);
        let mut need: f64 = 0.0;
        for p in self.branches.iter().flat_map(|b| &b.factors).flat_map(|f| &f.packets) {
            let c = p.center.iter().map(|x| x * x).sum::<f64>().sqrt();
            let k = p.momentum.iter().map(|x| x * x).sum::<f64>().sqrt();
            let v_max = k + MOMENTUM_QUANTILE * d.sqrt() / (2.0 * p.sigma);
            need = need.max(c + r + v_max * self.process.t_max + 6.0 * p.sigma);
        }
        need
    }

    /// Every violation of the schema's cross-field rules.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let grid = match self.grid_spec() {
            Ok(g) => Some(g),
            Err(e) => {
                out.push(format!("grid: {e}"));
                None
            }
        };
        let d = self.grid.dim;
        let l_half = self.grid.half_width;
        let n = self.particles();
        if self.branches.is_empty() {
            out.push("branches: at least one branch is required".into());
        }
        if n == 0 && !self.branches.is_empty() {
            out.push("branches: every branch needs at least one factor".into());
        }
        for (j, b) in self.branches.iter().enumerate() {
            if b.factors.len() != n {
                out.push(format!("branches[{j}]: {} factors, expected {n}", b.factors.len()));
            }
            if !(b.coefficient.re.is_finite() && b.coefficient.im.is_finite()) {
                out.push(format!("branches[{j}].coefficient is not finite"));
            }
            for (l, f) in b.factors.iter().enumerate() {
                if f.packets.is_empty() {
                    out.push(format!("branches[{j}].factors[{l}]: no packets"));
                }
                for (i, p) in f.packets.iter().enumerate() {
                    let at = format!("branches[{j}].factors[{l}].packets[{i}]");
                    if p.center.len() != d || p.momentum.len() != d {
                        out.push(format!("{at}: center and momentum need {d} components"));
                        continue;
                    }
                    if let Some(g) = &grid {
                        if let Err(e) = GaussianPacket::new(p.center.clone(), p.momentum.clone(), p.sigma).check(g) {
                            out.push(format!("{at}: {e}"));
                        }
                    }
                }
            }
        }
        if !self.potentials.is_empty() && self.potentials.len() != n {
            out.push(format!("potentials: {} entries for {n} particles", self.potentials.len()));
        }
        for (l, v) in self.potentials.iter().enumerate() {
            if let Err(e) = v.validate(d) {
                out.push(format!("potentials[{l}]: {e}"));
            }
        }
        let radii = &self.detector.radii;
        if radii.is_empty() {
            out.push("detector.radii: at least one radius is required".into());
        }
        if radii.windows(2).any(|w| !(w[1] > w[0])) {
            out.push("detector.radii must be strictly increasing".into());
        }
        for &r in radii {
            if !(r > 0.0) || !r.is_finite() {
                out.push(format!("detector radius R = {r} must be positive"));
            } else if r >= l_half {
                out.push(format!(
                    "detector radius R = {r} must be smaller than the domain half-width L = {l_half}"
                ));
            }
        }
        if let Some(b) = &self.detector.bins {
            if let Err(e) = b.validate(d) {
                out.push(format!("detector.bins: {e}"));
            }
        }
        out.extend(self.sampler.violations().into_iter().map(|v| format!("sampler: {v}")));
        out.extend(self.integrator.violations());
        if !(self.process.t_max > 0.0) || !self.process.t_max.is_finite() {
            out.push(format!("process.t_max = {} must be positive", self.process.t_max));
        }
        if self.process.modes.is_empty() {
            out.push("process.modes: at least one mode is required".into());
        }
        let mut modes = self.process.modes.clone();
        modes.sort();
        modes.dedup();
        if modes.len() != self.process.modes.len() {
            out.push("process.modes: duplicate entries".into());
        }
        if let Some(t) = self.asymptotics.initial_horizon {
            if !(t > 0.0) || !t.is_finite() {
                out.push(format!("asymptotics.initial_horizon = {t} must be positive"));
            }
        }
        let tol = self.checks.abort_tolerance;
        if !(tol > 0.0 && tol < 1.0) {
            out.push(format!("checks.abort_tolerance = {tol} must lie in (0, 1)"));
        }
        if out.is_empty() {
            let need = self.required_half_width();
            if l_half < need {
                out.push(format!(
                    "domain-sizing rule L >= |c| + R + v_max t_max + 6 sigma violated: L = {l_half}, R = {}, t_max = {}, required L >= {need:.6}",
                    radii.iter().copied().fold(0.0, f64::max),
                    self.process.t_max
                ));
            }
            match self.raw_state() {
                Ok(s) => {
                    let norm = state_norm(&s);
                    if (norm - 1.0).abs() > NORM_TOLERANCE {
                        out.push(format!("branch coefficients are not normalized: computed norm {norm:.12}"));
                    }
                }
                Err(e) => out.push(format!("initial state: {e}")),
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

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Reads a `.json` or TOML config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
    if path.extension().is_some_and(|e| e == "json") {
        ExperimentConfig::from_json(&text)
    } else {
        ExperimentConfig::from_toml(&text)
    }
}

/// Default directory for run artifacts.
pub fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
