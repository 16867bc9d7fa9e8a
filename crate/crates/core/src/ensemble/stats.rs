//! Frequency tables, confidence intervals and distribution tests.

use serde::{Deserialize, Serialize};

use crate::asymptotics::cones::{bin_tuple_label, bin_tuples, ConeTable};
use crate::detection::{BinPartition, ProcessMode, SampleOutcome};
use crate::dynamics::AbortKind;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Wilson score interval for `count` successes out of `n`.
pub fn wilson_interval(count: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = count as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Binomial standard error `sqrt(p (1 - p) / n)`.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    if n == 0 {
        return f64::INFINITY;
    }
    (p * (1.0 - p) / n as f64).max(0.0).sqrt()
}

/// Asymptotic two-sided Kolmogorov-Smirnov critical value at level `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}

/// CDF of a gridded distribution given sorted `(node, mass)` pairs on a
/// uniform grid; mass is spread evenly over each node-centered cell.
#[derive(Debug, Clone)]
pub struct GridCdf {
    start: f64,
    spacing: f64,
    cumulative: Vec<f64>,
}

impl GridCdf {
    pub fn new(masses: &[(f64, f64)]) -> Self {
        let spacing = if masses.len() > 1 { masses[1].0 - masses[0].0 } else { 1.0 };
        let total: f64 = masses.iter().map(|m| m.1).sum();
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(masses.len() + 1);
        cumulative.push(0.0);
        for m in masses {
            acc += m.1.max(0.0);
            cumulative.push(acc / total);
        }
        Self {
            start: masses[0].0 - 0.5 * spacing,
            spacing,
            cumulative,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.start) / self.spacing;
        if u <= 0.0 {
            return 0.0;
        }
        let cells = self.cumulative.len() - 1;
        if u >= cells as f64 {
            return 1.0;
        }
        let i = u.floor() as usize;
        let f = u - i as f64;
        self.cumulative[i] + f * (self.cumulative[i + 1] - self.cumulative[i])
    }
}

/// One-sample KS distance of `samples` against `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs: Vec<f64> = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbortCounts {
    pub node: usize,
    pub domain: usize,
    pub horizon: usize,
    pub outside_start: usize,
    pub degenerate: usize,
}

impl AbortCounts {
    pub fn add(&mut self, kind: AbortKind) {
        match kind {
            AbortKind::Node => self.node += 1,
            AbortKind::Domain => self.domain += 1,
            AbortKind::Horizon => self.horizon += 1,
            AbortKind::OutsideStart => self.outside_start += 1,
            AbortKind::Degenerate => self.degenerate += 1,
        }
    }

    pub fn total(&self) -> usize {
        self.node + self.domain + self.horizon + self.outside_start + self.degenerate
    }
}

/// Largest tolerated abort fraction for a valid experiment.
pub const ABORT_TOLERANCE: f64 = 0.01;

/// Joint exit-bin statistics of one process at one radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub process: ProcessMode,
    pub radius: f64,
    pub bins: BinPartition,
    pub particles: usize,
    /// All samples, including aborted ones.
    pub samples: usize,
    /// Counts per joint bin tuple in lexicographic order.
    pub counts: Vec<(Vec<usize>, usize)>,
    pub aborts: AbortCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyRow {
    pub bin_tuple: Vec<usize>,
    pub label: String,
    pub count: usize,
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl EnsembleStats {
    /// Tallies radius index `r` of every outcome.
    pub fn from_outcomes<'a>(
        process: ProcessMode,
        radius_index: usize,
        bins: &BinPartition,
        particles: usize,
        outcomes: impl IntoIterator<Item = &'a SampleOutcome>,
    ) -> Self {
        let count = bins.count();
        let tuples = bin_tuples(count, particles);
        let mut counts = vec![0usize; tuples.len()];
        let mut aborts = AbortCounts::default();
        let mut samples = 0;
        let mut radius = f64::NAN;
        for o in outcomes {
            samples += 1;
            radius = o.radii[radius_index];
            match o.bins(radius_index) {
                Some(t) => {
                    let idx = t.iter().fold(0usize, |acc, &b| acc * count + b);
                    counts[idx] += 1;
                }
                None => aborts.add(o.abort_at(radius_index).unwrap_or(AbortKind::Horizon)),
            }
        }
        Self {
            process,
            radius,
            bins: bins.clone(),
            particles,
            samples,
            counts: tuples.into_iter().zip(counts).collect(),
            aborts,
        }
    }

    pub fn abort_fraction(&self) -> f64 {
        self.aborts.total() as f64 / self.samples.max(1) as f64
    }

    pub fn is_valid(&self) -> bool {
        self.abort_fraction() <= ABORT_TOLERANCE
    }

    /// Frequencies are counts over all samples, so they add up to one minus the abort fraction.
    pub fn frequency(&self, tuple: &[usize]) -> f64 {
        self.counts
            .iter()
            .find(|(t, _)| t == tuple)
            .map_or(0.0, |(_, c)| *c as f64 / self.samples.max(1) as f64)
    }

    pub fn rows(&self) -> Vec<FrequencyRow> {
        self.counts
            .iter()
            .map(|(t, c)| {
                let (lo, hi) = wilson_interval(*c, self.samples);
                FrequencyRow {
                    bin_tuple: t.clone(),
                    label: bin_tuple_label(&self.bins, t),
                    count: *c,
                    frequency: *c as f64 / self.samples.max(1) as f64,
                    ci_low: lo,
                    ci_high: hi,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub radius: f64,
    pub frequencies: Vec<f64>,
    pub cones: Vec<f64>,
    /// `max_tuple |frequency - cone|`.
    pub discrepancy: f64,
    /// Largest binomial standard error over tuples, from the cone targets.
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub process: ProcessMode,
    pub rows: Vec<ConvergenceRow>,
    /// Kendall tau between radius and discrepancy; `None` for a single row.
    pub trend: Option<f64>,
}

impl ConvergenceTable {
    /// Builds the table from per-radius statistics (sorted by radius).
    pub fn new(process: ProcessMode, stats: &[&EnsembleStats], cones: &ConeTable) -> Self {
        let mut rows: Vec<ConvergenceRow> = stats
            .iter()
            .map(|s| {
                let cone: Vec<f64> = s.counts.iter().map(|(t, _)| cones.probability(t).unwrap_or(f64::NAN)).collect();
                let freq: Vec<f64> = s.counts.iter().map(|(_, c)| *c as f64 / s.samples.max(1) as f64).collect();
                let discrepancy = freq.iter().zip(&cone).map(|(f, p)| (f - p).abs()).fold(0.0, f64::max);
                let se = cone
                    .iter()
                    .map(|&p| binomial_se(p.clamp(0.0, 1.0), s.samples))
                    .fold(0.0, f64::max);
                ConvergenceRow {
                    radius: s.radius,
                    frequencies: freq,
                    cones: cone,
                    discrepancy,
                    se,
                }
            })
            .collect();
        rows.sort_by(|a, b| a.radius.total_cmp(&b.radius));
        let trend = kendall_tau(
            &rows.iter().map(|r| r.radius).collect::<Vec<_>>(),
            &rows.iter().map(|r| r.discrepancy).collect::<Vec<_>>(),
        );
        Self { process, rows, trend }
    }
}

/// Kendall rank correlation; `None` for fewer than two points.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s += ((x[j] - x[i]) * (y[j] - y[i])).signum();
        }
    }
    Some(s / (n * (n - 1) / 2) as f64)
}
