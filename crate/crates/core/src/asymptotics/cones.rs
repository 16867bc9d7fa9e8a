//! Cone probabilities `int_{C_1} .. int_{C_N} |psi_hat_out|^2`.

use std::fmt::Write as _;

use super::outgoing::OutgoingAsymptote;
use crate::detection::BinPartition;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::wavepacket::momentum::combine;
use crate::wavepacket::Gram;

/// Momentum-space cone for one particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cone {
    Full,
    Bin(usize),
}

/// One cone per particle, all cut from the same bin partition.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeSpec {
    pub bins: BinPartition,
    pub cones: Vec<Cone>,
}

fn sub_samples(dim: usize) -> usize {
    match dim {
        1 => 1,
        2 => 8,
        _ => 4,
    }
}

/// End correction `sum_i a_i (f_i - f_-i)`, `i = 1, 2, 3`, for half-line sums.
///
/// It matches `h f'(0)/12 - h^3 f'''(0)/720` with no fifth-order term, so the
/// corrected node sum over a half-line is accurate to `O(h^6)` while the two
/// half-line weights still add up to one at every node.
const HALF_LINE_CORRECTION: [f64; 3] = [373.0 / 5760.0, -1.0 / 72.0, 1.0 / 640.0];

fn half_line_weights(grid: &GridSpec, bin: usize) -> Vec<f64> {
    let dk = grid.wavenumber_spacing();
    (0..grid.points)
        .map(|i| {
            let m = (grid.wavenumber(i) / dk).round() as i64;
            // The negative half-line mirrors the positive one.
            let m = if bin == 0 { m } else { -m };
            let base = match m.signum() {
                1 => 1.0,
                0 => 0.5,
                _ => 0.0,
            };
            let corr = match m.unsigned_abs() {
                j @ 1..=3 => HALF_LINE_CORRECTION[j as usize - 1] * m.signum() as f64,
                _ => 0.0,
            };
            base + corr
        })
        .collect()
}

/// Weight of every momentum cell (FFT order) inside the cone.
///
/// Half-line sums in one dimension carry a high-order end correction at
/// `k = 0`. In higher dimensions each cell is sampled at `S^d` sub-cell midpoints.
pub fn cone_weights(grid: &GridSpec, bins: &BinPartition, cone: Cone) -> Vec<f64> {
    let bin = match cone {
        Cone::Full => return vec![1.0; grid.len()],
        Cone::Bin(b) => b,
    };
    if grid.dim == 1 {
        return half_line_weights(grid, bin);
    }
    let d = grid.dim;
    let s = sub_samples(d);
    let dk = grid.wavenumber_spacing();
    let offsets: Vec<f64> = (0..s).map(|i| ((i as f64 + 0.5) / s as f64 - 0.5) * dk).collect();
    let total = s.pow(d as u32) as f64;
    (0..grid.len())
        .map(|flat| {
            let k = grid.node_wavevector(flat);
            let mut inside = 0usize;
            for sub in 0..s.pow(d as u32) {
                let mut q = [0.0; 3];
                let mut rest = sub;
                for a in 0..d {
                    q[a] = k[a] + offsets[rest % s];
                    rest /= s;
                }
                if bins.classify_direction(&q[..d]) == bin {
                    inside += 1;
                }
            }
            inside as f64 / total
        })
        .collect()
}

pub fn cone_probability(out: &OutgoingAsymptote, spec: &ConeSpec) -> Result<f64> {
    let n = out.particles();
    if spec.cones.len() != n {
        return Err(Error::Shape(format!("{} cones for {n} particles", spec.cones.len())));
    }
    spec.bins.validate(out.grid().dim)?;
    let mats: Vec<Gram> = spec
        .cones
        .iter()
        .enumerate()
        .map(|(l, &c)| {
            let w = cone_weights(out.grid(), &spec.bins, c);
            out.density().factor_integrals(l, &w)
        })
        .collect();
    let refs: Vec<&Gram> = mats.iter().collect();
    Ok(combine(out.density().coefficients(), &refs))
}

/// Cone probabilities for every joint bin tuple.
#[derive(Debug, Clone, PartialEq)]
pub struct ConeTable {
    pub bins: BinPartition,
    /// `(bin tuple, probability)` in lexicographic tuple order.
    pub rows: Vec<(Vec<usize>, f64)>,
}

/// Text key of a joint bin tuple, e.g. `+:-`.
pub fn bin_tuple_label(bins: &BinPartition, tuple: &[usize]) -> String {
    tuple.iter().map(|&b| bins.label(b)).collect::<Vec<_>>().join(":")
}

/// All joint bin tuples of `particles` particles in lexicographic order.
pub fn bin_tuples(count: usize, particles: usize) -> Vec<Vec<usize>> {
    let total = count.pow(particles as u32);
    (0..total)
        .map(|mut i| {
            let mut t = vec![0; particles];
            for slot in t.iter_mut().rev() {
                *slot = i % count;
                i /= count;
            }
            t
        })
        .collect()
}

impl ConeTable {
    pub fn probability(&self, tuple: &[usize]) -> Option<f64> {
        self.rows.iter().find(|(t, _)| t == tuple).map(|r| r.1)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin_tuple,probability\n");
        for (t, p) in &self.rows {
            let _ = writeln!(s, "{},{:.16e}", bin_tuple_label(&self.bins, t), p);
        }
        s
    }
}

pub fn cone_table(out: &OutgoingAsymptote, bins: &BinPartition) -> Result<ConeTable> {
    bins.validate(out.grid().dim)?;
    let n = out.particles();
    let count = bins.count();
    // I^l_b for every particle and bin, reused across tuples.
    let mats: Vec<Vec<Gram>> = (0..count)
        .map(|b| cone_weights(out.grid(), bins, Cone::Bin(b)))
        .collect::<Vec<_>>()
        .iter()
        .fold(vec![Vec::new(); n], |mut acc, w| {
            for (l, row) in acc.iter_mut().enumerate() {
                row.push(out.density().factor_integrals(l, w));
            }
            acc
        });
    let rows = bin_tuples(count, n)
        .into_iter()
        .map(|t| {
            let refs: Vec<&Gram> = t.iter().enumerate().map(|(l, &b)| &mats[l][b]).collect();
            let p = combine(out.density().coefficients(), &refs);
            (t, p)
        })
        .collect();
    Ok(ConeTable { bins: bins.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asymptotics::outgoing::compute_psi_out;
    use crate::wavepacket::factor::init_gaussian;
    use crate::wavepacket::ProductSumState;
    use statrs::function::erf::erfc;

    #[test]
    fn full_cones_give_unit_mass() {
        let g = GridSpec::new(1, 256, 16.0).unwrap();
        let s = ProductSumState::product(vec![
            init_gaussian(&[0.0], &[1.0], 1.0, &g).unwrap(),
            init_gaussian(&[0.0], &[-2.0], 1.0, &g).unwrap(),
        ])
        .unwrap();
        let out = compute_psi_out(&s, &[], None).unwrap();
        let spec = ConeSpec { bins: BinPartition::HalfLines, cones: vec![Cone::Full, Cone::Full] };
        assert!((cone_probability(&out, &spec).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn symmetric_products_split_evenly() {
        let g = GridSpec::new(1, 256, 16.0).unwrap();
        for n in 1..=3 {
            let s = ProductSumState::product((0..n).map(|_| init_gaussian(&[0.0], &[0.0], 1.0, &g).unwrap()).collect())
                .unwrap();
            let out = compute_psi_out(&s, &[], None).unwrap();
            let spec = ConeSpec { bins: BinPartition::HalfLines, cones: vec![Cone::Bin(0); n] };
            let p = cone_probability(&out, &spec).unwrap();
            assert!((p - 0.5f64.powi(n as i32)).abs() < 1e-8, "n = {n}: {p}");
        }
    }

    #[test]
    fn half_line_matches_gaussian_tail() {
        // |phi_hat|^2 is normal with mean k0 and standard deviation 1 / (2 sigma).
        let g = GridSpec::new(1, 512, 32.0).unwrap();
        let (sigma, k0) = (1.0, 1.0);
        let s = ProductSumState::product(vec![init_gaussian(&[0.0], &[k0], sigma, &g).unwrap()]).unwrap();
        let out = compute_psi_out(&s, &[], None).unwrap();
        let sk = 1.0 / (2.0 * sigma);
        let expected = 0.5 * erfc(-k0 / (sk * std::f64::consts::SQRT_2));
        let spec = ConeSpec { bins: BinPartition::HalfLines, cones: vec![Cone::Bin(0)] };
        let p = cone_probability(&out, &spec).unwrap();
        assert!((p - expected).abs() < 1e-6, "{p} vs {expected}");
    }

    #[test]
    fn table_rows_sum_to_one_in_two_dimensions() {
        let g = GridSpec::new(2, 64, 10.0).unwrap();
        let s = ProductSumState::product(vec![init_gaussian(&[0.0, 0.0], &[1.0, 0.5], 1.25, &g).unwrap()]).unwrap();
        let out = compute_psi_out(&s, &[], None).unwrap();
        let table = cone_table(&out, &BinPartition::Sectors { count: 4 }).unwrap();
        let sum: f64 = table.rows.iter().map(|r| r.1).sum();
        assert!((sum - 1.0).abs() < 1e-8);
        assert!(table.to_csv().starts_with("bin_tuple,probability\n0,"));
    }

    #[test]
    fn tuples_are_lexicographic() {
        assert_eq!(bin_tuples(2, 2), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert_eq!(bin_tuple_label(&BinPartition::HalfLines, &[0, 1]), "+:-");
    }
}
