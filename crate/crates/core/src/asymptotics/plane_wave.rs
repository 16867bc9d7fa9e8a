use num_complex::Complex64;

use super::outgoing::{evaluate_fields, OutgoingAsymptote};
use crate::error::{Error, Result};
use crate::wavepacket::ProductSumState;

/// Relative deviation of `psi(x, t)` from the local plane wave
/// `(it)^{-Nd/2} e^{i|x|^2/2t} psi_hat_out(x/t)`; `t` is the state's time.
///
/// Returns infinity where `|psi|` vanishes.
pub fn local_plane_wave_residual(s: &ProductSumState, out: &OutgoingAsymptote, x: &[f64]) -> Result<f64> {
    let t = s.time();
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("plane-wave residual needs t > 0, got {t}")));
    }
    let psi = s.evaluate_psi(x)?;
    let k: Vec<f64> = x.iter().map(|v| v / t).collect();
    let fields = out.spline_fields();
    let hat = evaluate_fields(&fields, out, &k)?;
    let nd = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let prefactor = Complex64::new(0.0, t).powf(-0.5 * nd) * Complex64::from_polar(1.0, 0.5 * r2 / t);
    let modulus = psi.norm();
    if !(modulus > 0.0) || !modulus.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok((psi - prefactor * hat).norm() / modulus)
}
