//! Backstepping kernel design.
//!
//! The error `ṽ = v − v̂` and the transformed error `w̃` are related by
//!
//! ```text
//! ṽ(x) = w̃(x) − ∫_x^1 p(x,y) w̃(y) dy,      w̃(x) = ṽ(x) + ∫_x^1 l(x,y) ṽ(y) dy,
//! ```
//!
//! on the triangle `0 ≤ x ≤ y ≤ 1`. The direct kernel solves
//! `a(p_yy − p_xx) = σp`, `p(x,x) = −σx/(2a)`, `p_x(0,y) = 0` and has the
//! closed form `p(x,y) = −λ y φ(λ(y² − x²))` with `λ = σ/a` and `φ` from
//! [`crate::series`].

mod inverse;
mod norms;
mod transform;

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Result};
use crate::series::phi_deriv;

pub use inverse::{picard_inverse_kernel, solve_inverse_kernel, PICARD_MAX_ITER};
pub use norms::{
    kernel_norms, refined_design, refinement_check, KernelNorms, RefinementReport, DEFAULT_MAX_NODES,
    REFINEMENT_TOL,
};
pub use transform::{forward_transform, inverse_transform};

/// Default number of nodes per axis for kernel tables.
pub const DEFAULT_KERNEL_NODES: usize = 201;

/// Design diffusivity `a` and decay gain `σ` of the linear backstepping
/// observer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    a: f64,
    sigma: f64,
}

impl KernelParams {
    pub fn new(a: f64, sigma: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(argument(format!("design diffusivity a must be positive, got {a}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(argument(format!("decay gain sigma must be positive, got {sigma}")));
        }
        Ok(Self { a, sigma })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `λ = σ/a`.
    pub fn lambda(&self) -> f64 {
        self.sigma / self.a
    }

    /// `σ/(2a)`, the magnitude of the kernel slope on the diagonal.
    pub fn half_ratio(&self) -> f64 {
        0.5 * self.sigma / self.a
    }
}

/// Uniform lattice on the transform triangle `{0 ≤ x ≤ y ≤ 1}`.
///
/// Nodes are stored row by row (fixed `x_i`, `y_j` for `j ≥ i`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriGrid {
    n: usize,
}

impl TriGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(argument(format!("triangle grid needs n >= 2 nodes per axis, got {n}")));
        }
        Ok(Self { n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    pub fn coord(&self, k: usize) -> f64 {
        if k == self.n - 1 {
            1.0
        } else {
            k as f64 * self.h()
        }
    }

    /// The 1D node coordinates shared by both axes.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.coord(k)).collect()
    }

    pub fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Packed index of node `(x_i, y_j)`, `i ≤ j`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < self.n);
        self.row_start(i) + (j - i)
    }

    /// Iterator over `(i, j)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j)))
    }

    #[inline]
    fn row_start(&self, i: usize) -> usize {
        // rows hold n, n-1, ... nodes
        i * self.n - i * i.saturating_sub(1) / 2
    }
}

/// Which transform the kernel belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    DirectP,
    InverseL,
}

/// Kernel values and first/second partials on a [`TriGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    pub params: KernelParams,
    pub grid: TriGrid,
    pub kind: KernelKind,
    /// Whether `values` come from the closed form, which extends past the
    /// diagonal.
    pub closed_form: bool,
    pub values: Vec<f64>,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dxx: Vec<f64>,
    pub dyy: Vec<f64>,
}

impl Kernel2D {
    /// Tabulate the closed-form direct kernel and its analytic partials.
    pub fn direct(params: KernelParams, n: usize) -> Result<Self> {
        let grid = TriGrid::new(n)?;
        let axis = grid.axis();
        let rows: Vec<Vec<[f64; 5]>> = (0..n)
            .into_par_iter()
            .map(|i| {
                (i..n)
                    .map(|j| {
                        let v = kernel_value(params, axis[i], axis[j])?;
                        let d = kernel_partials(params, axis[i], axis[j])?;
                        Ok([v, d.px, d.py, d.pxx, d.pyy])
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut k = Self::zeros(params, grid, KernelKind::DirectP);
        k.closed_form = true;
        for (idx, node) in rows.into_iter().flatten().enumerate() {
            k.values[idx] = node[0];
            k.dx[idx] = node[1];
            k.dy[idx] = node[2];
            k.dxx[idx] = node[3];
            k.dyy[idx] = node[4];
        }
        Ok(k)
    }

    /// An all-zero kernel table (the `σ → 0` limit).
    pub fn zeros(params: KernelParams, grid: TriGrid, kind: KernelKind) -> Self {
        let len = grid.len();
        Self {
            params,
            grid,
            kind,
            closed_form: false,
            values: vec![0.0; len],
            dx: vec![0.0; len],
            dy: vec![0.0; len],
            dxx: vec![0.0; len],
            dyy: vec![0.0; len],
        }
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    /// Row `i` of the table: values at `(x_i, y_j)` for `j = i..n`.
    pub fn row(&self, i: usize) -> &[f64] {
        let start = self.grid.row_start(i);
        &self.values[start..start + (self.n() - i)]
    }

    /// Write `x,y,p,px,py` rows, one per node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,y,p,px,py")?;
        for (idx, (i, j)) in self.grid.nodes().enumerate() {
            writeln!(
                out,
                "{},{},{:e},{:e},{:e}",
                self.grid.coord(i),
                self.grid.coord(j),
                self.values[idx],
                self.dx[idx],
                self.dy[idx]
            )?;
        }
        Ok(())
    }
}

fn check_unit_box(x: f64, y: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(domain(format!("kernel evaluated outside [0,1]^2 at ({x}, {y})")));
    }
    Ok(())
}

/// `p(x, y) = −λ y φ(λ(y² − x²))`.
pub fn eval_kernel(params: KernelParams, x: f64, y: f64) -> Result<f64> {
    check_unit_box(x, y)?;
    kernel_value(params, x, y)
}

/// The closed form without the box check; it is entire in `(x, y)`.
pub(crate) fn kernel_value(params: KernelParams, x: f64, y: f64) -> Result<f64> {
    let lam = params.lambda();
    Ok(-lam * y * phi_deriv(0, lam * (y * y - x * x))?)
}

/// First and second partials of the direct kernel at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPartials {
    pub px: f64,
    pub py: f64,
    pub pxx: f64,
    pub pyy: f64,
}

/// Analytic partials by the chain rule through `φ`, `φ'`, `φ''`.
pub fn eval_kernel_partials(params: KernelParams, x: f64, y: f64) -> Result<KernelPartials> {
    check_unit_box(x, y)?;
    kernel_partials(params, x, y)
}

pub(crate) fn kernel_partials(params: KernelParams, x: f64, y: f64) -> Result<KernelPartials> {
    let lam = params.lambda();
    let u = lam * (y * y - x * x);
    let f0 = phi_deriv(0, u)?;
    let f1 = phi_deriv(1, u)?;
    let f2 = phi_deriv(2, u)?;
    let lam2 = lam * lam;
    Ok(KernelPartials {
        px: 2.0 * lam2 * x * y * f1,
        py: -lam * (f0 + 2.0 * lam * y * y * f1),
        pxx: 2.0 * lam2 * y * (f1 - 2.0 * lam * x * x * f2),
        pyy: -lam * (6.0 * lam * y * f1 + 4.0 * lam2 * y * y * y * f2),
    })
}

/// Output-injection gains of the observer.
///
/// `p1(x) = −a p_y(x, 1)` drives the interior; `p10` is the boundary gain in
/// `v̂_x(1) = p10 (y − ŷ)`. Mapping the error onto a target system with
/// Neumann walls requires `p10 = −p(1,1) = σ/(2a)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObserverGains {
    pub params: KernelParams,
    pub x: Vec<f64>,
    pub p1: Vec<f64>,
    pub p10: f64,
}

impl ObserverGains {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    /// `x,p1` rows preceded by a comment line carrying `p10`, `a`, `sigma`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(
            out,
            "# p10={:e},a={:e},sigma={:e}",
            self.p10,
            self.params.a(),
            self.params.sigma()
        )?;
        writeln!(out, "x,p1")?;
        for (x, p1) in self.x.iter().zip(&self.p1) {
            writeln!(out, "{x},{p1:e}")?;
        }
        Ok(())
    }
}

/// Sample the gains on the `n`-node uniform grid of `[0, 1]`.
pub fn compute_gains(params: KernelParams, n: usize) -> Result<ObserverGains> {
    let grid = TriGrid::new(n)?;
    let x = grid.axis();
    let p1 = x
        .iter()
        .map(|&xi| Ok(-params.a() * kernel_partials(params, xi, 1.0)?.py))
        .collect::<Result<Vec<_>>>()?;
    let p10 = -kernel_value(params, 1.0, 1.0)?;
    Ok(ObserverGains { params, x, p1, p10 })
}

/// Everything the observer and the certificate need from the kernel side.
#[derive(Debug, Clone)]
pub struct KernelDesign {
    pub params: KernelParams,
    pub p: Kernel2D,
    pub l: Kernel2D,
    pub gains: ObserverGains,
    pub norms: KernelNorms,
}

impl KernelDesign {
    pub fn build(params: KernelParams, n: usize) -> Result<Self> {
        let p = Kernel2D::direct(params, n)?;
        let l = solve_inverse_kernel(&p)?;
        let gains = compute_gains(params, n)?;
        let norms = kernel_norms(&p, &l)?;
        Ok(Self { params, p, l, gains, norms })
    }

    /// `|p|_∞` from the node table.
    pub fn p_inf(&self) -> f64 {
        self.norms.p_inf
    }
}
