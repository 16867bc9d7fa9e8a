use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spline::Stencil;
use crate::wavepacket::state::norm_squared_from_grams;
use crate::wavepacket::{FactorSource, Gram, ProductSumState};

/// Normalized coefficients below this modulus are set to zero.
pub const PRUNE_TOLERANCE: f64 = 1e-14;

/// Conditions the coefficients on particle `particle` being found at `x`.
///
/// Returns `a_j phi_{j,l}(x)` normalized with the Gram matrices of the
/// particles that remain. Branches whose normalized weight falls below
/// [`PRUNE_TOLERANCE`] are zeroed but kept, so the branch count is unchanged.
pub fn collapse_coefficients<S: FactorSource + ?Sized>(
    source: &S,
    coefficients: &[Complex64],
    particle: usize,
    x: &[f64],
    remaining: &[&Gram],
    node_guard: f64,
) -> Result<Vec<Complex64>> {
    let grid = *source.grid();
    if !grid.contains(x) {
        return Err(Error::DomainEscape { particle, time: f64::NAN });
    }
    let stencil = Stencil::new(&grid, x);
    let mut bound = 0.0;
    let mut out = Vec::with_capacity(coefficients.len());
    for (j, &c) in coefficients.iter().enumerate() {
        if c == Complex64::new(0.0, 0.0) {
            out.push(c);
            continue;
        }
        let mut v = [Complex64::new(0.0, 0.0); 4];
        source.factor_eval(j, particle, &stencil, &mut v[..=grid.dim]);
        bound += c.norm() * source.factor_max(j, particle);
        out.push(c * v[0]);
    }
    let norm = norm_squared_from_grams(&out, remaining).sqrt();
    if !(norm > node_guard * bound) {
        return Err(Error::CollapseDegenerate { norm });
    }
    for c in out.iter_mut() {
        *c /= norm;
        if c.norm() < PRUNE_TOLERANCE {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    Ok(out)
}

/// Conditional wave function of the other particles given `X_l = x`.
pub fn collapse(s: &ProductSumState, particle: usize, x: &[f64], node_guard: f64) -> Result<ProductSumState> {
    let n = s.particles();
    if particle >= n {
        return Err(Error::InvalidArgument(format!("particle {particle} of {n}")));
    }
    if n == 1 {
        return Err(Error::InvalidArgument("collapsing a one-particle state leaves no particles".into()));
    }
    if x.len() != s.grid().dim {
        return Err(Error::Shape(format!("detection position has {} coordinates", x.len())));
    }
    let grams: Vec<Gram> = (0..n).filter(|&m| m != particle).map(|m| s.gram(m)).collect();
    let refs: Vec<&Gram> = grams.iter().collect();
    let coeffs = collapse_coefficients(&s.snapshot(), s.coefficients(), particle, x, &refs, node_guard)?;
    let factors = s
        .factors()
        .iter()
        .map(|branch| {
            branch
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != particle)
                .map(|(_, f)| f.clone())
                .collect()
        })
        .collect();
    ProductSumState::unnormalized(coeffs, factors, s.time())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::wavepacket::factor::init_gaussian;
    use crate::wavepacket::state::state_norm;

    fn entangled(g: &GridSpec) -> ProductSumState {
        let a = init_gaussian(&[-1.0], &[1.0], 1.0, g).unwrap();
        let b = init_gaussian(&[1.5], &[-0.5], 1.2, g).unwrap();
        let c = init_gaussian(&[0.0], &[2.0], 1.0, g).unwrap();
        let d = init_gaussian(&[0.5], &[-1.0], 1.5, g).unwrap();
        ProductSumState::normalized(
            vec![Complex64::new(0.6, 0.2), Complex64::new(-0.3, 0.7)],
            vec![vec![a, c], vec![b, d]],
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn product_state_keeps_its_factors() {
        let g = GridSpec::new(1, 256, 16.0).unwrap();
        let a = init_gaussian(&[0.0], &[1.0], 1.0, &g).unwrap();
        let b = init_gaussian(&[2.0], &[-1.0], 1.3, &g).unwrap();
        let s = ProductSumState::product(vec![a, b.clone()]).unwrap();
        let c = collapse(&s, 0, &[0.4], 1e-12).unwrap();
        assert_eq!(c.particles(), 1);
        assert_eq!(c.factor(0, 0).amplitudes(), b.amplitudes());
        assert!((state_norm(&c) - 1.0).abs() < 1e-10);
        // The remaining particle's velocity is unchanged up to the global phase.
        let cfg = crate::dynamics::IntegratorConfig::default();
        let v_before = crate::dynamics::velocity(&s, &[0.4, 1.7], 0.0, &cfg).unwrap()[1];
        let v_after = crate::dynamics::velocity(&c, &[1.7], 0.0, &cfg).unwrap()[0];
        assert!((v_before - v_after).abs() < 1e-12);
    }

    #[test]
    fn disjoint_branches_select_one() {
        let g = GridSpec::new(1, 512, 32.0).unwrap();
        let a = init_gaussian(&[-12.0], &[0.0], 1.0, &g).unwrap();
        let b = init_gaussian(&[12.0], &[0.0], 1.0, &g).unwrap();
        let c = init_gaussian(&[0.0], &[1.0], 1.0, &g).unwrap();
        let d = init_gaussian(&[0.0], &[-1.0], 1.0, &g).unwrap();
        let s = ProductSumState::normalized(
            vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)],
            vec![vec![a, c], vec![b, d]],
            0.0,
        )
        .unwrap();
        let out = collapse(&s, 0, &[-12.0], 1e-12).unwrap();
        assert_eq!(out.branches(), 2);
        assert!((out.coefficients()[0].norm() - 1.0).abs() < 1e-10);
        assert_eq!(out.coefficients()[1], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn matches_direct_conditional_wave_function() {
        let g = GridSpec::new(1, 256, 16.0).unwrap();
        let s = entangled(&g);
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let x: f64 = rng.gen_range(-3.0..3.0);
            let c = collapse(&s, 0, &[x], 1e-12).unwrap();
            assert!((state_norm(&c) - 1.0).abs() < 1e-10);
            // Norm of psi(x, .) by a node sum over the second coordinate.
            let h = g.spacing();
            let norm = (0..g.points)
                .map(|i| s.evaluate_psi(&[x, g.coordinate(i)]).unwrap().norm_sqr())
                .sum::<f64>()
                .mul_add(h, 0.0)
                .sqrt();
            for y in [-1.0, 0.3, 2.2] {
                let direct = s.evaluate_psi(&[x, y]).unwrap() / norm;
                let got = c.evaluate_psi(&[y]).unwrap();
                assert!((direct - got).norm() < 1e-10, "x = {x}, y = {y}");
            }
        }
    }

    #[test]
    fn degenerate_detection_is_reported() {
        let g = GridSpec::new(1, 256, 16.0).unwrap();
        let s = entangled(&g);
        assert!(matches!(collapse(&s, 1, &[15.0], 1e-6), Err(Error::CollapseDegenerate { .. })));
    }
}
