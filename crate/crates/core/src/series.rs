//! The entire function behind the backstepping kernel.
//!
//! `φ(u) = ½ Σ_m (u/4)^m / (m! (m+1)!)`, so that `I₁(s)/s = φ(s²)` and
//! `J₁(s)/s = φ(−s²)`. Working in `u = s²` removes the square root and the
//! removable singularity on the kernel diagonal.

use crate::error::{domain, Result};

const MIN_TERMS: usize = 8;
const MAX_TERMS: usize = 2000;
const REL_STOP: f64 = 1e-17;

/// `φ(u)`.
pub fn phi(u: f64) -> Result<f64> {
    phi_deriv(0, u)
}

/// The `order`-th derivative of `φ`:
/// `φ⁽ʲ⁾(u) = ½ 4⁻ʲ Σ_m (u/4)^m / (m! (m+1+j)!)`.
pub fn phi_deriv(order: u32, u: f64) -> Result<f64> {
    if !u.is_finite() {
        return Err(domain(format!("phi: non-finite argument {u}")));
    }
    let j = f64::from(order);
    // leading term: ½ 4⁻ʲ / (j+1)!
    let mut term = 0.5 * 0.25f64.powi(order as i32);
    for k in 1..=order + 1 {
        term /= f64::from(k);
    }
    let q = 0.25 * u;
    let mut sum = term;
    for m in 0..MAX_TERMS {
        let mf = m as f64;
        term *= q / ((mf + 1.0) * (mf + 2.0 + j));
        sum += term;
        if m + 2 >= MIN_TERMS && term.abs() <= REL_STOP * sum.abs() {
            break;
        }
    }
    Ok(sum)
}

/// `φ`, `φ'`, `φ''` in one call.
pub fn phi_triple(u: f64) -> Result<(f64, f64, f64)> {
    Ok((phi_deriv(0, u)?, phi_deriv(1, u)?, phi_deriv(2, u)?))
}
