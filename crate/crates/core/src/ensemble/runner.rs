//! Lockstep ensembles: all samples advance through the same snapshot windows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::{sample_initial, SamplerConfig};
use super::stats::{binomial_se, ConvergenceTable, EnsembleStats};
use crate::asymptotics::cones::{bin_tuple_label, ConeTable};
use crate::detection::{BinPartition, DetectorGeometry, ProcessMode, RunContext, SampleOutcome, SampleRun};
use crate::dynamics::{IntegratorConfig, Timeline};
use crate::error::{Error, Result};
use crate::wavepacket::{PotentialSpec, ProductSumState};

/// One process evaluated on every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub mode: ProcessMode,
    pub radii: Vec<f64>,
    /// Whether to keep configuration and velocity samples at the output times.
    #[serde(default)]
    pub record_outputs: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub processes: Vec<ProcessSpec>,
    pub bins: BinPartition,
    pub t_max: f64,
    pub output_times: Vec<f64>,
    pub integrator: IntegratorConfig,
}

/// Identifies one per-sample run: plain runs carry every radius, stopped runs one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunKey {
    pub mode: ProcessMode,
    pub radii: Vec<f64>,
    pub record_outputs: bool,
}

impl RunPlan {
    pub fn run_keys(&self) -> Vec<RunKey> {
        let mut keys = Vec::new();
        for p in &self.processes {
            if p.mode.is_stopped() {
                for &r in &p.radii {
                    keys.push(RunKey {
                        mode: p.mode,
                        radii: vec![r],
                        record_outputs: p.record_outputs,
                    });
                }
            } else {
                keys.push(RunKey {
                    mode: p.mode,
                    radii: p.radii.clone(),
                    record_outputs: p.record_outputs,
                });
            }
        }
        keys
    }
}

/// Outcomes of every run on every sample.
#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub keys: Vec<RunKey>,
    pub x0: Vec<Vec<f64>>,
    /// `outcomes[sample][run]`.
    pub outcomes: Vec<Vec<SampleOutcome>>,
}

impl EnsembleResult {
    /// Index of the run of `mode` that covers `radius`, and the radius index within it.
    pub fn locate(&self, mode: ProcessMode, radius: f64) -> Option<(usize, usize)> {
        self.keys.iter().enumerate().find_map(|(i, k)| {
            (k.mode == mode)
                .then(|| k.radii.iter().position(|&r| r == radius).map(|ri| (i, ri)))
                .flatten()
        })
    }

    pub fn run_outcomes(&self, run: usize) -> impl Iterator<Item = &SampleOutcome> {
        self.outcomes.iter().map(move |o| &o[run])
    }

    pub fn stats(&self, mode: ProcessMode, radius: f64, bins: &BinPartition, particles: usize) -> Option<EnsembleStats> {
        let (run, ri) = self.locate(mode, radius)?;
        Some(EnsembleStats::from_outcomes(mode, ri, bins, particles, self.run_outcomes(run)))
    }
}

/// Runs every process of `plan` on every start configuration.
///
/// The wave function is propagated once; samples advance window by window
/// in parallel. Results do not depend on the thread count.
pub fn run_ensemble(s0: &ProductSumState, potentials: &[PotentialSpec], x0: Vec<Vec<f64>>, plan: &RunPlan) -> Result<EnsembleResult> {
    plan.integrator.validate()?;
    plan.bins.validate(s0.grid().dim)?;
    if !(plan.t_max > s0.time()) {
        return Err(Error::InvalidArgument(format!("t_max = {} must exceed the start time", plan.t_max)));
    }
    let keys = plan.run_keys();
    let mut runs: Vec<Vec<SampleRun>> = x0
        .iter()
        .map(|x| {
            keys.iter()
                .map(|k| SampleRun::new(k.mode, &k.radii, s0, x, &plan.integrator))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let grams = s0.grams();
    let contexts: Vec<RunContext> = keys
        .iter()
        .map(|k| RunContext {
            cfg: &plan.integrator,
            grams: &grams,
            bins: &plan.bins,
            t_max: plan.t_max,
            output_times: if k.record_outputs { &plan.output_times } else { &[] },
        })
        .collect();
    let mut timeline = Timeline::new(s0, potentials)?;
    while timeline.time() < plan.t_max && runs.iter().flatten().any(|r| !r.is_done()) {
        let window = timeline.next_window_until(plan.t_max);
        window.check_boundary()?;
        runs.par_iter_mut().try_for_each(|sample| {
            sample
                .iter_mut()
                .zip(&contexts)
                .try_for_each(|(run, ctx)| run.advance(&window, ctx))
        })?;
    }
    let outcomes = runs
        .into_iter()
        .map(|sample| sample.into_iter().map(SampleRun::finish).collect())
        .collect();
    Ok(EnsembleResult { keys, x0, outcomes })
}

/// Shared settings of the high-level experiment operations.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSettings {
    pub sampler: SamplerConfig,
    pub t_max: f64,
    pub integrator: IntegratorConfig,
}

/// Joint exit-bin statistics of one process at one detector.
pub fn run_experiment(
    s0: &ProductSumState,
    potentials: &[PotentialSpec],
    geom: &DetectorGeometry,
    settings: &ExperimentSettings,
    mode: ProcessMode,
) -> Result<EnsembleStats> {
    let x0 = sample_initial(s0, &settings.sampler)?;
    let plan = RunPlan {
        processes: vec![ProcessSpec {
            mode,
            radii: vec![geom.radius],
            record_outputs: false,
        }],
        bins: geom.bins.clone(),
        t_max: settings.t_max,
        output_times: Vec::new(),
        integrator: settings.integrator,
    };
    let res = run_ensemble(s0, potentials, x0, &plan)?;
    Ok(res
        .stats(mode, geom.radius, &geom.bins, s0.particles())
        .expect("run exists"))
}

/// Discrepancy between exit frequencies and cone probabilities for each radius,
/// using the same start configurations at every radius.
pub fn convergence_study(
    s0: &ProductSumState,
    potentials: &[PotentialSpec],
    bins: &BinPartition,
    radii: &[f64],
    cones: &ConeTable,
    settings: &ExperimentSettings,
    mode: ProcessMode,
) -> Result<ConvergenceTable> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("radii must be nonempty and increasing".into()));
    }
    let x0 = sample_initial(s0, &settings.sampler)?;
    let plan = RunPlan {
        processes: vec![ProcessSpec {
            mode,
            radii: radii.to_vec(),
            record_outputs: false,
        }],
        bins: bins.clone(),
        t_max: settings.t_max,
        output_times: Vec::new(),
        integrator: settings.integrator,
    };
    let res = run_ensemble(s0, potentials, x0, &plan)?;
    Ok(convergence_from(&res, mode, radii, bins, s0.particles(), cones))
}

/// Builds the convergence table of an already computed ensemble.
pub fn convergence_from(
    res: &EnsembleResult,
    mode: ProcessMode,
    radii: &[f64],
    bins: &BinPartition,
    particles: usize,
    cones: &ConeTable,
) -> ConvergenceTable {
    let stats: Vec<EnsembleStats> = radii
        .iter()
        .filter_map(|&r| res.stats(mode, r, bins, particles))
        .collect();
    let refs: Vec<&EnsembleStats> = stats.iter().collect();
    ConvergenceTable::new(mode, &refs, cones)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeDifference {
    pub bin_tuple: Vec<usize>,
    pub label: String,
    pub plain: f64,
    pub stopped: f64,
    pub difference: f64,
    pub joint_se: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeComparison {
    pub radius: f64,
    pub rows: Vec<ModeDifference>,
    /// Samples whose joint bin tuple differs between the two processes.
    pub differing_samples: usize,
    pub samples: usize,
    /// Set for every radius below the largest compared one.
    pub pre_asymptotic: bool,
}

impl ModeComparison {
    pub fn passes(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }
}

/// Per-tuple frequency differences of the plain and stopped processes.
///
/// Each tuple passes when the difference stays within `3 sqrt(p1 (1 - p1) / n + p2 (1 - p2) / n)`.
pub fn compare_from(
    res: &EnsembleResult,
    stopped: ProcessMode,
    radius: f64,
    bins: &BinPartition,
    particles: usize,
    pre_asymptotic: bool,
) -> Result<ModeComparison> {
    let missing = || Error::InvalidArgument(format!("ensemble lacks both processes at R = {radius}"));
    let (pr, pi) = res.locate(ProcessMode::Plain, radius).ok_or_else(missing)?;
    let (sr, si) = res.locate(stopped, radius).ok_or_else(missing)?;
    let a = EnsembleStats::from_outcomes(ProcessMode::Plain, pi, bins, particles, res.run_outcomes(pr));
    let b = EnsembleStats::from_outcomes(stopped, si, bins, particles, res.run_outcomes(sr));
    let n = a.samples;
    let rows = a
        .counts
        .iter()
        .map(|(t, _)| {
            let p1 = a.frequency(t);
            let p2 = b.frequency(t);
            let se = (binomial_se(p1, n).powi(2) + binomial_se(p2, n).powi(2)).sqrt();
            let diff = p2 - p1;
            ModeDifference {
                bin_tuple: t.clone(),
                label: bin_tuple_label(bins, t),
                plain: p1,
                stopped: p2,
                difference: diff,
                joint_se: se,
                within: diff.abs() <= 3.0 * se,
            }
        })
        .collect();
    let differing_samples = res
        .outcomes
        .iter()
        .filter(|o| o[pr].bins(pi) != o[sr].bins(si))
        .count();
    Ok(ModeComparison {
        radius,
        rows,
        differing_samples,
        samples: n,
        pre_asymptotic,
    })
}

/// Runs plain and stopped-single on the same samples and compares them at every radius.
pub fn compare_collapse_modes(
    s0: &ProductSumState,
    potentials: &[PotentialSpec],
    bins: &BinPartition,
    radii: &[f64],
    settings: &ExperimentSettings,
) -> Result<Vec<ModeComparison>> {
    let x0 = sample_initial(s0, &settings.sampler)?;
    let plan = RunPlan {
        processes: vec![
            ProcessSpec {
                mode: ProcessMode::Plain,
                radii: radii.to_vec(),
                record_outputs: false,
            },
            ProcessSpec {
                mode: ProcessMode::StoppedSingle,
                radii: radii.to_vec(),
                record_outputs: false,
            },
        ],
        bins: bins.clone(),
        t_max: settings.t_max,
        output_times: Vec::new(),
        integrator: settings.integrator,
    };
    let res = run_ensemble(s0, potentials, x0, &plan)?;
    let largest = radii.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    radii
        .iter()
        .map(|&r| compare_from(&res, ProcessMode::StoppedSingle, r, bins, s0.particles(), r < largest))
        .collect()
}
