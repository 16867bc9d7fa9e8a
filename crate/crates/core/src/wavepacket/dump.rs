//! Binary state dump.
//!
//! Layout (little-endian): `d, M, N, J` as `u64`, `L, t` as `f64`, then `J`
//! coefficients as `(re, im)` pairs, then every factor's `M^d` amplitudes as
//! `(re, im)` pairs in row-major order, branch-major (`phi_{1,1}, phi_{1,2}, ..`).

use std::io::{Read, Write};

use num_complex::Complex64;

use super::factor::Factor;
use super::state::ProductSumState;
use crate::error::{Error, Result};
use crate::grid::GridSpec;

pub fn write_state<W: Write>(state: &ProductSumState, mut out: W) -> Result<()> {
    let g = state.grid();
    for v in [g.dim, g.points, state.particles(), state.branches()] {
        out.write_all(&(v as u64).to_le_bytes())?;
    }
    out.write_all(&g.half_width.to_le_bytes())?;
    out.write_all(&state.time().to_le_bytes())?;
    let put = |out: &mut W, c: &Complex64| -> std::io::Result<()> {
        out.write_all(&c.re.to_le_bytes())?;
        out.write_all(&c.im.to_le_bytes())
    };
    for c in state.coefficients() {
        put(&mut out, c)?;
    }
    for branch in state.factors() {
        for f in branch {
            for a in f.amplitudes() {
                put(&mut out, a)?;
            }
        }
    }
    Ok(())
}

pub fn read_state<R: Read>(mut input: R) -> Result<ProductSumState> {
    let mut b8 = [0u8; 8];
    let mut u = |input: &mut R| -> Result<u64> {
        input.read_exact(&mut b8)?;
        Ok(u64::from_le_bytes(b8))
    };
    let dim = u(&mut input)? as usize;
    let points = u(&mut input)? as usize;
    let n = u(&mut input)? as usize;
    let nb = u(&mut input)? as usize;
    let f = |input: &mut R| -> Result<f64> {
        let mut b = [0u8; 8];
        input.read_exact(&mut b)?;
        Ok(f64::from_le_bytes(b))
    };
    let half_width = f(&mut input)?;
    let time = f(&mut input)?;
    let grid = GridSpec::new(dim, points, half_width)?;
    if n == 0 || nb == 0 {
        return Err(Error::Shape("dump declares an empty state".into()));
    }
    let complex = |input: &mut R| -> Result<Complex64> { Ok(Complex64::new(f(input)?, f(input)?)) };
    let coefficients = (0..nb).map(|_| complex(&mut input)).collect::<Result<Vec<_>>>()?;
    let mut factors = Vec::with_capacity(nb);
    for _ in 0..nb {
        let mut branch = Vec::with_capacity(n);
        for _ in 0..n {
            let amps = (0..grid.len()).map(|_| complex(&mut input)).collect::<Result<Vec<_>>>()?;
            branch.push(Factor::from_amplitudes(grid, amps)?);
        }
        factors.push(branch);
    }
    ProductSumState::unnormalized(coefficients, factors, time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavepacket::factor::init_gaussian;

    #[test]
    fn roundtrip() {
        let g = GridSpec::new(1, 128, 12.0).unwrap();
        let a = init_gaussian(&[0.0], &[1.0], 1.0, &g).unwrap();
        let b = init_gaussian(&[1.0], &[-1.0], 1.0, &g).unwrap();
        let s = ProductSumState::normalized(
            vec![Complex64::new(0.3, 0.4), Complex64::new(-0.5, 0.1)],
            vec![vec![a.clone(), b.clone()], vec![b, a]],
            2.5,
        )
        .unwrap();
        let mut bytes = Vec::new();
        write_state(&s, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 * 6 + 16 * 2 + 16 * 4 * 128);
        let back = read_state(bytes.as_slice()).unwrap();
        assert_eq!(back.coefficients(), s.coefficients());
        assert_eq!(back.factor(1, 0).amplitudes(), s.factor(1, 0).amplitudes());
        assert_eq!(back.time(), 2.5);
    }
}
