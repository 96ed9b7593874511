//! Initial-condition library.
//!
//! Plant data are Neumann cosine series. Observer data are `v̂_o = v_o − ṽ_o`
//! where the initial error either comes from a cosine series in the target
//! coordinates (mapped through the forward transform, which produces
//! `ṽ_o′(1) = −p10 ṽ_o(1)` automatically) or from a cosine series in the
//! original coordinates projected onto that boundary condition.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{argument, Result};
use crate::kernel::{forward_transform, Kernel2D};

/// `(wavenumber k, amplitude)` of a `cos(kπx)` term.
pub type Mode = (u32, f64);

/// `mean + Σ amp·cos(kπx)` on `n` uniform nodes.
pub fn cosine_series(n: usize, mean: f64, modes: &[Mode]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            mean + modes.iter().map(|&(k, a)| a * (k as f64 * PI * x).cos()).sum::<f64>()
        })
        .collect()
}

/// Shape of the initial observation error `ṽ_o`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ErrorShape {
    /// Cosine series for `w̃_o`; `ṽ_o` is its forward transform.
    Transformed { modes: Vec<Mode> },
    /// Cosine series for `ṽ_o`, then [`project_compat3`].
    Projected { modes: Vec<Mode> },
}

impl ErrorShape {
    pub fn modes(&self) -> &[Mode] {
        match self {
            Self::Transformed { modes } | Self::Projected { modes } => modes,
        }
    }

    /// Sample `ṽ_o` on the kernel's grid.
    pub fn build(&self, p: &Kernel2D, p10: f64) -> Result<Vec<f64>> {
        let n = p.n();
        match self {
            Self::Transformed { modes } => forward_transform(&cosine_series(n, 0.0, modes), p),
            Self::Projected { modes } => {
                let mut e = cosine_series(n, 0.0, modes);
                project_compat3(&mut e, p10)?;
                Ok(e)
            }
        }
    }

    /// Same shape with every amplitude multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        let sc = |m: &[Mode]| m.iter().map(|&(k, a)| (k, a * s)).collect();
        match self {
            Self::Transformed { modes } => Self::Transformed { modes: sc(modes) },
            Self::Projected { modes } => Self::Projected { modes: sc(modes) },
        }
    }
}

/// Make the one-sided slope at `x = 1` equal `−p10·e(1)` by the
/// smallest change of the two nodes next to the wall.
pub fn project_compat3(e: &mut [f64], p10: f64) -> Result<()> {
    let n = e.len();
    if n < 4 {
        return Err(argument("need at least 4 nodes"));
    }
    let h = 1.0 / (n - 1) as f64;
    // slope = (3e_N − 4e_{N−1} + e_{N−2}) / 2h
    let slope = (3.0 * e[n - 1] - 4.0 * e[n - 2] + e[n - 3]) / (2.0 * h);
    let r = (-p10 * e[n - 1] - slope) * 2.0 * h;
    e[n - 2] += -4.0 * r / 17.0;
    e[n - 3] += r / 17.0;
    Ok(())
}
