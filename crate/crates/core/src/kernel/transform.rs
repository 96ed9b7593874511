//! The Volterra state transformations between `ṽ` and `w̃`.

use super::{Kernel2D, KernelKind};
use crate::error::{argument, Result};

/// `out(x_i) = f(x_i) + sign · ∫_{x_i}^1 k(x_i, y) f(y) dy` by the trapezoid
/// rule along each row.
fn volterra(f: &[f64], k: &Kernel2D, sign: f64) -> Result<Vec<f64>> {
    let n = k.n();
    if f.len() != n {
        return Err(argument(format!(
            "grid function has {} samples, kernel grid has {n}",
            f.len()
        )));
    }
    let h = k.grid.h();
    Ok((0..n)
        .map(|i| {
            let row = k.row(i);
            let tail = &f[i..];
            let m = row.len();
            let integral = if m < 2 {
                0.0
            } else {
                let inner: f64 = (1..m - 1).map(|q| row[q] * tail[q]).sum();
                h * (inner + 0.5 * (row[0] * tail[0] + row[m - 1] * tail[m - 1]))
            };
            f[i] + sign * integral
        })
        .collect())
}

/// `ṽ(x) = w̃(x) − ∫_x^1 p(x,y) w̃(y) dy`.
pub fn forward_transform(w: &[f64], p: &Kernel2D) -> Result<Vec<f64>> {
    if p.kind != KernelKind::DirectP {
        return Err(argument("forward transform expects the direct kernel"));
    }
    volterra(w, p, -1.0)
}

/// `w̃(x) = ṽ(x) + ∫_x^1 l(x,y) ṽ(y) dy`.
pub fn inverse_transform(v: &[f64], l: &Kernel2D) -> Result<Vec<f64>> {
    if l.kind != KernelKind::InverseL {
        return Err(argument("inverse transform expects the inverse kernel"));
    }
    volterra(v, l, 1.0)
}
