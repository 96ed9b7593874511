//! Inverse kernel `l` from the Volterra relation
//! `l(x,y) = p(x,y) + ∫_x^y p(x,ξ) l(ξ,y) dξ`.

use rayon::prelude::*;

use super::{kernel_value, Kernel2D, KernelKind};
use crate::error::{argument, Error, Result};
use crate::numeric::fd_weights;

/// Iteration cap of [`picard_inverse_kernel`].
pub const PICARD_MAX_ITER: usize = 200;
const PICARD_TOL: f64 = 1e-12;
const MIN_NODES: usize = 33;

fn check_direct(p: &Kernel2D) -> Result<()> {
    if p.kind != KernelKind::DirectP {
        return Err(argument("inverse kernel needs a direct kernel table"));
    }
    if p.n() < MIN_NODES {
        return Err(argument(format!(
            "inverse kernel needs n >= {MIN_NODES} nodes per axis, got {}",
            p.n()
        )));
    }
    Ok(())
}

/// Solve the trapezoid-discretised Volterra relation by marching down each
/// column `y = y_j`.
///
/// Each column is a lower-triangular system, so marching gives its exact
/// solution in `O(n²)`; this is the same fixed point that
/// [`picard_inverse_kernel`] converges to, reached without its iteration
/// budget. The relation is also marched below the diagonal (`x > y`, where
/// the integral runs backwards) so that `l` is known on the whole square and
/// its partials can use centred stencils right up to the diagonal.
pub fn solve_inverse_kernel(p: &Kernel2D) -> Result<Kernel2D> {
    check_direct(p)?;
    let n = p.n();
    let h = p.grid.h();
    // the marching divisor 1 − hσx/(4a) must stay away from zero
    let q = 0.25 * h * p.params.lambda();
    if q >= 0.5 {
        return Err(Error::Precondition(format!(
            "grid too coarse for sigma/a = {}: h·sigma/(4a) = {q} must be < 0.5, use more than {} nodes",
            p.params.lambda(),
            (0.5 * p.params.lambda()).ceil() + 1.0
        )));
    }
    let axis = p.grid.axis();

    // Without an analytic extension the solve stays on the triangle.
    let full = p.closed_form;
    let pfull: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j >= i {
                        Ok(p.at(i, j))
                    } else if full {
                        kernel_value(p.params, axis[i], axis[j])
                    } else {
                        Ok(0.0)
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let cols: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|j| march_column(&pfull, j, h, full))
        .collect();
    if cols.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure { iterations: 0, residual: f64::NAN });
    }
    let rows: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();

    let mut l = Kernel2D::zeros(p.params, p.grid, KernelKind::InverseL);
    let st = Stencils::new();
    for (idx, (i, j)) in p.grid.nodes().enumerate() {
        // valid ranges: the whole line, or only the triangle side of it
        let (col, row) = if full { ((0, n - 1), (0, n - 1)) } else { ((0, j), (i, n - 1)) };
        l.values[idx] = cols[j][i];
        l.dx[idx] = st.apply(&cols[j], col, i, 1) / h;
        l.dxx[idx] = st.apply(&cols[j], col, i, 2) / (h * h);
        l.dy[idx] = st.apply(&rows[i], row, j, 1) / h;
        l.dyy[idx] = st.apply(&rows[i], row, j, 2) / (h * h);
    }
    Ok(l)
}

fn march_column(pfull: &[Vec<f64>], j: usize, h: f64, full: bool) -> Vec<f64> {
    let n = pfull.len();
    let mut c = vec![0.0; n];
    c[j] = pfull[j][j];
    // above the diagonal: i < j, integral from x_i up to y_j
    for i in (0..j).rev() {
        let pi = &pfull[i];
        let mut acc = 0.5 * pi[j] * c[j];
        for k in i + 1..j {
            acc += pi[k] * c[k];
        }
        c[i] = (pi[j] + h * acc) / (1.0 - 0.5 * h * pi[i]);
    }
    if !full {
        return c;
    }
    // below the diagonal: i > j, the integral runs from x_i down to y_j
    for i in j + 1..n {
        let pi = &pfull[i];
        let mut acc = 0.5 * pi[j] * c[j];
        for k in j + 1..i {
            acc += pi[k] * c[k];
        }
        c[i] = (pi[j] - h * acc) / (1.0 + 0.5 * h * pi[i]);
    }
    c
}

/// Fourth-order stencils on a unit-spaced line: centred where five nodes
/// fit, one-sided (five nodes for first, six for second derivatives) near the
/// ends of the valid range.
struct Stencils {
    central: [Vec<f64>; 2],
}

impl Stencils {
    fn new() -> Self {
        let c = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        Self { central: [c[1].clone(), c[2].clone()] }
    }

    /// Derivative of order 1 or 2 at `at`, restricted to nodes
    /// `range.0..=range.1`, in units of the node spacing.
    fn apply(&self, line: &[f64], range: (usize, usize), at: usize, order: usize) -> f64 {
        let (lo, hi) = range;
        if at >= lo + 2 && at + 2 <= hi {
            let w = &self.central[order - 1];
            return (0..5).map(|k| w[k] * line[at + k - 2]).sum();
        }
        let len = hi - lo + 1;
        let width = (if order == 1 { 5 } else { 6 }).min(len);
        if width <= order {
            return 0.0;
        }
        let start = if at < lo + 2 { lo } else { hi + 1 - width };
        let xs: Vec<f64> = (start..start + width).map(|k| k as f64).collect();
        let w = fd_weights(at as f64, &xs, order);
        (0..width).map(|k| w[order][k] * line[start + k]).sum()
    }
}

/// Successive approximation of the same discretised relation on the
/// triangle: `l⁽ᵏ⁺¹⁾ = p + T_p l⁽ᵏ⁾`, stopped when the sup-norm update drops
/// below `1e−12` (relative to `max(1, |l|_∞)`).
///
/// Returns the packed node values. Converges only while the Neumann series
/// is short enough for the iteration budget, which fails for large `σ/a`.
pub fn picard_inverse_kernel(p: &Kernel2D) -> Result<Vec<f64>> {
    check_direct(p)?;
    let n = p.n();
    let h = p.grid.h();
    let g = p.grid;
    let mut l = p.values.clone();
    let mut next = vec![0.0; l.len()];
    let mut update = f64::INFINITY;
    for _ in 0..PICARD_MAX_ITER {
        for i in 0..n {
            let prow = p.row(i);
            for j in i..n {
                let mut acc = 0.0;
                if j > i {
                    acc = 0.5 * (prow[0] * l[g.index(i, j)] + prow[j - i] * l[g.index(j, j)]);
                    for k in i + 1..j {
                        acc += prow[k - i] * l[g.index(k, j)];
                    }
                }
                next[g.index(i, j)] = prow[j - i] + h * acc;
            }
        }
        let scale = next.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        update = l.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        std::mem::swap(&mut l, &mut next);
        if !update.is_finite() {
            break;
        }
        if update < PICARD_TOL {
            return Ok(l);
        }
    }
    Err(Error::NumericalFailure { iterations: PICARD_MAX_ITER, residual: update })
}
