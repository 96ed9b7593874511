//! Kernel norms entering the Lyapunov constants.
//!
//! Entries named `*_l2sq` are squared `L²` norms over the triangle (or over a
//! boundary trace); `px_l4_4` is `∫∫ p_x⁴`. Double integrals use Simpson's
//! rule along each row `y ∈ [x, 1]`, then along `x`.

use serde::{Deserialize, Serialize};

use super::{Kernel2D, KernelDesign, KernelKind, KernelParams};
use crate::error::{argument, Error, Result};
use crate::numeric::simpson;

/// Relative change allowed between the `n` and `2n − 1` tables.
pub const REFINEMENT_TOL: f64 = 1e-4;
/// Entries below this magnitude are compared in absolute terms.
const ABS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelNorms {
    pub p_l2sq: f64,
    pub p_inf: f64,
    pub px_l2sq: f64,
    pub px_l4_4: f64,
    pub pxx_l2sq: f64,
    /// `sup_x (p_x(x,x) − σ/(2a))²`.
    pub sup_diag_px_shift: f64,
    pub l_l2sq: f64,
    pub l_inf: f64,
    pub lx_l2sq: f64,
    /// `∫ l_y(x,1)² dx`.
    pub ly_col1_l2sq: f64,
    /// `∫ l(x,1)² dx`.
    pub l_col1_l2sq: f64,
    pub lyy_l2sq: f64,
    /// `sup_x |l_y(x,x)|`.
    pub sup_diag_ly: f64,
}

impl KernelNorms {
    /// All thirteen entries with their names, in declaration order.
    pub fn entries(&self) -> [(&'static str, f64); 13] {
        [
            ("p_l2sq", self.p_l2sq),
            ("p_inf", self.p_inf),
            ("px_l2sq", self.px_l2sq),
            ("px_l4_4", self.px_l4_4),
            ("pxx_l2sq", self.pxx_l2sq),
            ("sup_diag_px_shift", self.sup_diag_px_shift),
            ("l_l2sq", self.l_l2sq),
            ("l_inf", self.l_inf),
            ("lx_l2sq", self.lx_l2sq),
            ("ly_col1_l2sq", self.ly_col1_l2sq),
            ("l_col1_l2sq", self.l_col1_l2sq),
            ("lyy_l2sq", self.lyy_l2sq),
            ("sup_diag_ly", self.sup_diag_ly),
        ]
    }

    /// Norms of the zero kernel pair.
    pub fn zero() -> Self {
        Self {
            p_l2sq: 0.0,
            p_inf: 0.0,
            px_l2sq: 0.0,
            px_l4_4: 0.0,
            pxx_l2sq: 0.0,
            sup_diag_px_shift: 0.0,
            l_l2sq: 0.0,
            l_inf: 0.0,
            lx_l2sq: 0.0,
            ly_col1_l2sq: 0.0,
            l_col1_l2sq: 0.0,
            lyy_l2sq: 0.0,
            sup_diag_ly: 0.0,
        }
    }
}

/// `∫_0^1 ∫_x^1 g(table) dy dx` for a per-node integrand.
fn triangle_integral(k: &Kernel2D, table: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let n = k.n();
    let h = k.grid.h();
    let mut row = Vec::with_capacity(n);
    let outer: Vec<f64> = (0..n)
        .map(|i| {
            row.clear();
            row.extend((i..n).map(|j| g(table[k.grid.index(i, j)])));
            simpson(&row, h)
        })
        .collect();
    simpson(&outer, h)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Compute all thirteen norms from a direct/inverse kernel pair.
pub fn kernel_norms(p: &Kernel2D, l: &Kernel2D) -> Result<KernelNorms> {
    if p.grid != l.grid {
        return Err(argument(format!(
            "kernel grids differ: p has n = {}, l has n = {}",
            p.n(),
            l.n()
        )));
    }
    if p.kind != KernelKind::DirectP || l.kind != KernelKind::InverseL {
        return Err(argument("kernel_norms expects (direct p, inverse l)"));
    }
    let n = p.n();
    let h = p.grid.h();
    let sq = |v: f64| v * v;
    let shift = p.params.half_ratio();

    let sup_diag_px_shift = (0..n)
        .map(|i| sq(p.dx[p.grid.index(i, i)] - shift))
        .fold(0.0, f64::max);
    let sup_diag_ly = (0..n).map(|i| l.dy[l.grid.index(i, i)].abs()).fold(0.0, f64::max);
    let col1 = |table: &[f64]| -> f64 {
        let v: Vec<f64> = (0..n).map(|i| sq(table[l.grid.index(i, n - 1)])).collect();
        simpson(&v, h)
    };

    Ok(KernelNorms {
        p_l2sq: triangle_integral(p, &p.values, sq),
        p_inf: max_abs(&p.values),
        px_l2sq: triangle_integral(p, &p.dx, sq),
        px_l4_4: triangle_integral(p, &p.dx, |v| sq(sq(v))),
        pxx_l2sq: triangle_integral(p, &p.dxx, sq),
        sup_diag_px_shift,
        l_l2sq: triangle_integral(l, &l.values, sq),
        l_inf: max_abs(&l.values),
        lx_l2sq: triangle_integral(l, &l.dx, sq),
        ly_col1_l2sq: col1(&l.dy),
        l_col1_l2sq: col1(&l.values),
        lyy_l2sq: triangle_integral(l, &l.dyy, sq),
        sup_diag_ly,
    })
}

/// Outcome of comparing the norms at `n` and `2n − 1` nodes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementReport {
    pub n: usize,
    pub coarse: KernelNorms,
    pub fine: KernelNorms,
    pub max_rel_change: f64,
    pub worst_entry: String,
    pub passed: bool,
}

/// Build the design at `n` and `2n − 1` nodes and compare every norm entry.
pub fn refinement_check(params: KernelParams, n: usize) -> Result<RefinementReport> {
    let coarse = KernelDesign::build(params, n)?.norms;
    let fine = KernelDesign::build(params, 2 * n - 1)?.norms;
    Ok(compare(n, coarse, fine))
}

/// Largest grid [`refined_design`] escalates to by default.
pub const DEFAULT_MAX_NODES: usize = 1601;

/// Starting from `n`, refine `n → 2n − 1` until the norm tables of two
/// successive grids agree to [`REFINEMENT_TOL`]. Returns the finer design of
/// the accepted pair with the report that accepted it.
pub fn refined_design(
    params: KernelParams,
    n: usize,
    max_n: usize,
) -> Result<(KernelDesign, RefinementReport)> {
    let mut coarse = KernelDesign::build(params, n)?;
    let mut levels = 0;
    loop {
        let m = 2 * coarse.p.n() - 1;
        let fine = KernelDesign::build(params, m)?;
        let report = compare(coarse.p.n(), coarse.norms, fine.norms);
        levels += 1;
        if report.passed {
            return Ok((fine, report));
        }
        if 2 * m - 1 > max_n {
            return Err(Error::NumericalFailure { iterations: levels, residual: report.max_rel_change });
        }
        coarse = fine;
    }
}

fn compare(n: usize, coarse: KernelNorms, fine: KernelNorms) -> RefinementReport {
    let mut worst = (0.0, "");
    for ((name, c), (_, f)) in coarse.entries().into_iter().zip(fine.entries()) {
        let rel = (c - f).abs() / f.abs().max(ABS_FLOOR);
        if rel > worst.0 || worst.1.is_empty() {
            worst = (rel, name);
        }
    }
    RefinementReport {
        n,
        coarse,
        fine,
        max_rel_change: worst.0,
        worst_entry: worst.1.to_string(),
        passed: worst.0 < REFINEMENT_TOL,
    }
}
