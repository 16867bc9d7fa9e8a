//! Configured experiments: presets, checks and result files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::asymptotics::{compute_psi_out, cone_table, ConeTable};
use crate::config::{
    AsymptoticsConfig, BranchConfig, ChecksConfig, DetectorConfig, ExperimentConfig, FactorConfig, GridConfig,
    PacketConfig, ProcessConfig,
};
use crate::detection::{BinPartition, ProcessMode};
use crate::dynamics::IntegratorConfig;
use crate::ensemble::stats::binomial_se;
use crate::ensemble::{
    compare_from, convergence_from, run_ensemble, sample_initial, ConvergenceTable, EnsembleStats, ModeComparison,
    ProcessSpec, RunPlan, SamplerConfig,
};
use crate::error::{Error, Result};
use crate::wavepacket::PotentialSpec;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_ABORT_BUDGET: i32 = 3;
pub const EXIT_CHECK_FAILED: i32 = 4;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 5] = [
    "theorem2-free-1d",
    "barrier-1d",
    "collapse-modes",
    "product-control",
    "determinism-small",
];

fn packet(center: f64, momentum: f64, sigma: f64, weight: f64) -> PacketConfig {
    PacketConfig {
        weight: Complex64::new(weight, 0.0),
        center: vec![center],
        momentum: vec![momentum],
        sigma,
    }
}

fn one_packet(center: f64, momentum: f64, sigma: f64) -> FactorConfig {
    FactorConfig {
        packets: vec![packet(center, momentum, sigma, 1.0)],
    }
}

fn cat(w_plus: f64, w_minus: f64, k: f64) -> FactorConfig {
    FactorConfig {
        packets: vec![packet(0.0, k, 1.0, w_plus), packet(0.0, -k, 1.0, w_minus)],
    }
}

/// Two particles in `(|+>|a> + |->|b>) / sqrt 2`, where `|+>` and `|->` move
/// apart with momenta `+-3` and `a`, `b` are superpositions of the same two packets.
///
/// The joint half-line probabilities are 0.35, 0.15, 0.10 and 0.40.
pub fn entangled_branches() -> Vec<BranchConfig> {
    let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    vec![
        BranchConfig {
            coefficient: c,
            factors: vec![one_packet(0.0, 3.0, 1.0), cat(0.7f64.sqrt(), 0.3f64.sqrt(), 3.0)],
        },
        BranchConfig {
            coefficient: c,
            factors: vec![one_packet(0.0, -3.0, 1.0), cat(0.2f64.sqrt(), -(0.8f64.sqrt()), 3.0)],
        },
    ]
}

fn base(name: &str, grid: GridConfig, branches: Vec<BranchConfig>, radii: Vec<f64>, t_max: f64) -> ExperimentConfig {
    ExperimentConfig {
        name: Some(name.to_string()),
        grid,
        branches,
        potentials: Vec::new(),
        detector: DetectorConfig {
            radii,
            bins: Some(BinPartition::HalfLines),
        },
        sampler: SamplerConfig::default(),
        process: ProcessConfig {
            modes: vec![ProcessMode::Plain],
            t_max,
        },
        integrator: IntegratorConfig::default(),
        asymptotics: AsymptoticsConfig::default(),
        checks: ChecksConfig::default(),
    }
}

const WIDE_1D: GridConfig = GridConfig {
    dim: 1,
    points: 4096,
    half_width: 256.0,
};

/// Built-in configuration by name.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let cfg = match name {
        "theorem2-free-1d" => {
            let mut c = base(name, WIDE_1D, entangled_branches(), vec![5.0, 10.0, 20.0, 40.0], 45.0);
            c.checks.mode_agreement = false;
            c
        }
        "barrier-1d" => {
            let grid = GridConfig {
                dim: 1,
                points: 16384,
                half_width: 1024.0,
            };
            let branches = vec![BranchConfig {
                coefficient: Complex64::new(1.0, 0.0),
                factors: vec![one_packet(-8.0, 3.0, 1.0)],
            }];
            let mut c = base(name, grid, branches, vec![15.0, 40.0], 50.0);
            c.potentials = vec![PotentialSpec::gaussian(4.5, 0.5, vec![0.0])];
            c.checks.convergence_trend = false;
            c.checks.mode_agreement = false;
            c
        }
        "collapse-modes" => {
            let mut c = base(name, WIDE_1D, entangled_branches(), vec![5.0, 40.0], 45.0);
            c.process.modes = vec![ProcessMode::Plain, ProcessMode::StoppedSingle];
            c.checks.convergence_trend = false;
            c
        }
        "product-control" => {
            let branches = vec![BranchConfig {
                coefficient: Complex64::new(1.0, 0.0),
                factors: vec![one_packet(0.0, 3.0, 1.0), cat(0.7f64.sqrt(), 0.3f64.sqrt(), 3.0)],
            }];
            let mut c = base(name, WIDE_1D, branches, vec![5.0, 40.0], 45.0);
            c.process.modes = vec![ProcessMode::Plain, ProcessMode::StoppedSingle];
            c.sampler.samples = 2000;
            c.checks.convergence_trend = false;
            c.checks.identical_modes = true;
            c
        }
        "determinism-small" => {
            let grid = GridConfig {
                dim: 1,
                points: 1024,
                half_width: 64.0,
            };
            let mut c = base(name, grid, entangled_branches(), vec![4.0, 10.0], 10.0);
            c.process.modes = vec![ProcessMode::Plain, ProcessMode::StoppedSingle];
            c.sampler.samples = 400;
            c.checks = ChecksConfig {
                cone_agreement: false,
                convergence_trend: false,
                mode_agreement: false,
                ..ChecksConfig::default()
            };
            c
        }
        _ => {
            return Err(Error::Config(vec![format!(
                "unknown preset {name:?}; available: {}",
                PRESETS.join(", ")
            )]))
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Everything an experiment run produces.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub cones: ConeTable,
    /// Wave-operator horizon per particle.
    pub horizons: Vec<f64>,
    /// Per mode, then per radius.
    pub stats: Vec<EnsembleStats>,
    pub convergence: Vec<ConvergenceTable>,
    pub comparisons: Vec<ModeComparison>,
    pub checks: Vec<CheckOutcome>,
    pub abort_budget_ok: bool,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.abort_budget_ok && self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if !self.abort_budget_ok {
            EXIT_ABORT_BUDGET
        } else if self.checks.iter().any(|c| !c.passed) {
            EXIT_CHECK_FAILED
        } else {
            EXIT_OK
        }
    }

    pub fn stats_for(&self, mode: ProcessMode, radius: f64) -> Option<&EnsembleStats> {
        self.stats.iter().find(|s| s.process == mode && s.radius == radius)
    }
}

/// Exit code for an error raised before or during a run.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::NotNormalized { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Human-readable execution plan; nothing is computed.
pub fn plan_text(cfg: &ExperimentConfig) -> Result<String> {
    cfg.validate()?;
    let g = cfg.grid_spec()?;
    let mut s = String::new();
    let _ = writeln!(s, "experiment: {}", cfg.name.as_deref().unwrap_or("unnamed"));
    let _ = writeln!(
        s,
        "grid: d = {}, M = {}, L = {}, h = {}, substep = {:e}",
        g.dim,
        g.points,
        g.half_width,
        g.spacing(),
        g.max_substep()
    );
    let _ = writeln!(s, "particles: {}, branches: {}", cfg.particles(), cfg.branches.len());
    let free = cfg.potentials.iter().all(PotentialSpec::is_none);
    let _ = writeln!(s, "potentials: {}", if free { "none" } else { "gaussian" });
    let _ = writeln!(s, "bins: {:?}", cfg.bins());
    let _ = writeln!(s, "radii: {:?}", cfg.detector.radii);
    let modes: Vec<&str> = cfg.process.modes.iter().map(ProcessMode::name).collect();
    let _ = writeln!(s, "processes: {}", modes.join(", "));
    let _ = writeln!(s, "t_max: {}", cfg.process.t_max);
    let _ = writeln!(s, "samples: {}, seed: {}", cfg.sampler.samples, cfg.sampler.seed);
    let _ = writeln!(
        s,
        "steps: wave-operator asymptote, cone table, sampling, {} lockstep runs per sample, {} propagation substeps",
        run_plan(cfg).run_keys().len(),
        (cfg.process.t_max / g.max_substep()).ceil()
    );
    Ok(s)
}

fn run_plan(cfg: &ExperimentConfig) -> RunPlan {
    RunPlan {
        processes: cfg
            .process
            .modes
            .iter()
            .map(|&mode| ProcessSpec {
                mode,
                radii: cfg.detector.radii.clone(),
                record_outputs: false,
            })
            .collect(),
        bins: cfg.bins(),
        t_max: cfg.process.t_max,
        output_times: Vec::new(),
        integrator: cfg.integrator,
    }
}

/// Runs the configured experiment and evaluates its checks.
pub fn run(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let s0 = cfg.initial_state()?;
    let potentials = cfg.potentials();
    let bins = cfg.bins();
    let n = s0.particles();
    let radii = &cfg.detector.radii;
    let largest = *radii.last().expect("validated");

    let out = compute_psi_out(&s0, &potentials, cfg.asymptotics.initial_horizon)?;
    let cones = cone_table(&out, &bins)?;
    let x0 = sample_initial(&s0, &cfg.sampler)?;
    let res = run_ensemble(&s0, &potentials, x0, &run_plan(cfg))?;

    let mut stats = Vec::new();
    let mut convergence = Vec::new();
    for &mode in &cfg.process.modes {
        for &r in radii {
            stats.push(res.stats(mode, r, &bins, n).expect("run exists"));
        }
        convergence.push(convergence_from(&res, mode, radii, &bins, n, &cones));
    }
    let modes = &cfg.process.modes;
    let mut comparisons = Vec::new();
    if modes.contains(&ProcessMode::Plain) && modes.contains(&ProcessMode::StoppedSingle) {
        for &r in radii {
            comparisons.push(compare_from(&res, ProcessMode::StoppedSingle, r, &bins, n, r < largest)?);
        }
    }

    let tol = cfg.checks.abort_tolerance;
    let abort_budget_ok = stats.iter().all(|s| s.abort_fraction() <= tol);
    let mut checks = Vec::new();
    if cfg.checks.cone_agreement {
        for s in stats.iter().filter(|s| s.radius == largest) {
            let mut worst: f64 = 0.0;
            for (t, c) in &s.counts {
                let p = cones.probability(t).unwrap_or(f64::NAN);
                let se = binomial_se(p.clamp(0.0, 1.0), s.samples);
                worst = worst.max((*c as f64 / s.samples as f64 - p).abs() / se);
            }
            checks.push(CheckOutcome {
                name: format!("cone_agreement/{}", s.process.name()),
                passed: worst <= 3.0,
                detail: format!("largest |frequency - cone| / se = {worst:.4} at R = {largest}"),
            });
        }
    }
    if cfg.checks.convergence_trend && radii.len() > 1 {
        for t in &convergence {
            let (first, last) = (&t.rows[0], &t.rows[t.rows.len() - 1]);
            checks.push(CheckOutcome {
                name: format!("convergence_trend/{}", t.process.name()),
                passed: last.discrepancy <= first.discrepancy + last.se,
                detail: format!(
                    "discrepancy {:.6} at R = {} vs {:.6} + se {:.6} at R = {}",
                    last.discrepancy, last.radius, first.discrepancy, last.se, first.radius
                ),
            });
        }
    }
    if cfg.checks.mode_agreement {
        if let Some(c) = comparisons.iter().find(|c| !c.pre_asymptotic) {
            let worst = c
                .rows
                .iter()
                .map(|r| r.difference.abs() / r.joint_se)
                .fold(0.0, f64::max);
            checks.push(CheckOutcome {
                name: "mode_agreement".into(),
                passed: c.passes(),
                detail: format!("largest |difference| / joint se = {worst:.4} at R = {}", c.radius),
            });
        }
    }
    if cfg.checks.identical_modes {
        let differing: usize = comparisons.iter().map(|c| c.differing_samples).sum();
        checks.push(CheckOutcome {
            name: "identical_modes".into(),
            passed: !comparisons.is_empty() && differing == 0,
            detail: format!("{differing} samples with differing bins over {} radii", comparisons.len()),
        });
    }
    Ok(RunReport {
        config: cfg.clone(),
        cones,
        horizons: out.horizons().to_vec(),
        stats,
        convergence,
        comparisons,
        checks,
        abort_budget_ok,
    })
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn stats_csv(report: &RunReport) -> String {
    let mut s = String::from("process,radius,bin_tuple,count,frequency,ci_low,ci_high\n");
    for st in &report.stats {
        for row in st.rows() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                st.process.name(),
                fmt(st.radius),
                row.label,
                row.count,
                fmt(row.frequency),
                fmt(row.ci_low),
                fmt(row.ci_high)
            );
        }
    }
    s
}

pub fn convergence_csv(report: &RunReport) -> String {
    let mut s = String::from("process,radius,discrepancy,se\n");
    for t in &report.convergence {
        for r in &t.rows {
            let _ = writeln!(s, "{},{},{},{}", t.process.name(), fmt(r.radius), fmt(r.discrepancy), fmt(r.se));
        }
    }
    s
}

pub fn summary_json(report: &RunReport) -> serde_json::Value {
    let bins = &report.cones.bins;
    let cones: Vec<serde_json::Value> = report
        .cones
        .rows
        .iter()
        .map(|(t, p)| {
            serde_json::json!({
                "bin_tuple": crate::asymptotics::bin_tuple_label(bins, t),
                "probability": p,
            })
        })
        .collect();
    let stats: Vec<serde_json::Value> = report
        .stats
        .iter()
        .map(|s| {
            serde_json::json!({
                "process": s.process.name(),
                "radius": s.radius,
                "samples": s.samples,
                "aborts": s.aborts,
                "abort_fraction": s.abort_fraction(),
            })
        })
        .collect();
    serde_json::json!({
        "config": report.config.to_json(),
        "seed": report.config.sampler.seed,
        "samples": report.config.sampler.samples,
        "wave_operator_horizons": report.horizons,
        "cones": cones,
        "stats": stats,
        "convergence": report.convergence,
        "mode_comparisons": report.comparisons,
        "abort_budget_ok": report.abort_budget_ok,
        "checks": report.checks,
        "passed": report.passed(),
        "exit_code": report.exit_code(),
    })
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Writes `stats.csv`, `convergence.csv` and `summary.json`.
pub fn write_outputs(report: &RunReport, dir: &Path) -> Result<()> {
    write_atomic(dir, "stats.csv", &stats_csv(report))?;
    write_atomic(dir, "convergence.csv", &convergence_csv(report))?;
    let summary = serde_json::to_string_pretty(&summary_json(report))?;
    write_atomic(dir, "summary.json", &(summary + "\n"))?;
    Ok(())
}
