//! Checks of recorded trajectories against the stability theorem, the
//! inequalities its proof relies on, and the target-system identity.

use serde::{Deserialize, Serialize};

use super::fit::{fit_decay_rate, RateFit, NOISE_FLOOR};
use super::{derivative, error_norms, ErrorNorms, Trajectory};
use crate::certificate::Certificate;
use crate::error::{argument, Result};
use crate::kernel::{inverse_transform, Kernel2D, KernelDesign, KernelKind, KernelParams, ObserverGains};
use crate::material::MaterialModel;
use crate::nonlinearity::Diffusivity;

/// `|ṽ|_∞ ≤ √2 |ṽ|_{H¹}`.
pub const AGMON_FACTOR: f64 = std::f64::consts::SQRT_2;
/// Level the `H¹` error must reach to count as converged.
pub const CONVERGENCE_LEVEL: f64 = 1e-8;
/// Slack of the comparison-principle check.
const COMPARISON_SLACK: f64 = 1e-8;
/// Relative slack on the bound comparisons (round-off only).
const REL_SLACK: f64 = 1e-12;

/// Norms of `w̃ = ṽ + ∫_x^1 l ṽ` at every snapshot.
pub fn transformed_norms(traj: &Trajectory, l: &Kernel2D) -> Result<Vec<ErrorNorms>> {
    (0..traj.len())
        .map(|k| error_norms(&inverse_transform(&traj.error(k), l)?))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub samples: usize,
    /// `None` when the trajectory carries no bound channel.
    pub h1_bound_violations: Option<usize>,
    pub agmon_violations: usize,
    pub v_l2_violations: usize,
    pub vx_l2_violations: usize,
    pub comparison_violations: usize,
    /// `max_k |mass_k − mass_0|` relative to `max(|mass_0|, max|v_0|)`, so a
    /// zero-mean plant is not divided by round-off.
    pub mass_drift: f64,
    /// First recorded time with `err_H1 < 1e−8`.
    pub converged_at: Option<f64>,
    pub h1_rate: Option<RateFit>,
    /// Fitted decay of `|w̃|_{L²}`.
    pub transformed_l2_rate: Option<RateFit>,
    /// Largest `err_H1 / bound` over the run.
    pub max_bound_ratio: Option<f64>,
}

impl AuditReport {
    /// Number of failed checks among the hard audits.
    pub fn failures(&self, mass_tol: f64) -> usize {
        self.h1_bound_violations.unwrap_or(0)
            + self.agmon_violations
            + self.v_l2_violations
            + self.vx_l2_violations
            + self.comparison_violations
            + usize::from(!(self.mass_drift <= mass_tol))
    }
}

fn leq(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs * (1.0 + REL_SLACK) + NOISE_FLOOR * NOISE_FLOOR
}

/// Run every trajectory audit. `design` must live on the simulation grid.
pub fn audit_trajectory(traj: &Trajectory, design: &KernelDesign) -> Result<AuditReport> {
    if design.p.n() != traj.x.len() {
        return Err(argument(format!(
            "kernel grid has {} nodes, trajectory {}",
            design.p.n(),
            traj.x.len()
        )));
    }
    if traj.is_empty() {
        return Err(argument("empty trajectory"));
    }
    let w = transformed_norms(traj, &design.l)?;
    let nm = &design.norms;
    let (a, s) = (design.params.a(), design.params.sigma());
    let mut r = AuditReport {
        samples: traj.len(),
        h1_bound_violations: traj.bound.as_ref().map(|_| 0),
        agmon_violations: 0,
        v_l2_violations: 0,
        vx_l2_violations: 0,
        comparison_violations: 0,
        mass_drift: 0.0,
        converged_at: None,
        h1_rate: None,
        transformed_l2_rate: None,
        max_bound_ratio: None,
    };
    let v0 = &traj.v[0];
    let lo = v0.iter().cloned().fold(f64::INFINITY, f64::min) - COMPARISON_SLACK;
    let hi = v0.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + COMPARISON_SLACK;
    let m0 = traj.mass[0];
    let mass_scale = v0.iter().fold(m0.abs(), |m, x| m.max(x.abs()));
    let mass_scale = if mass_scale > 0.0 { mass_scale } else { 1.0 };
    for k in 0..traj.len() {
        let big_v = 0.5 * w[k].l2 * w[k].l2;
        if !leq(traj.err_max[k], AGMON_FACTOR * traj.err_h1[k]) {
            r.agmon_violations += 1;
        }
        if !leq(traj.err_l2[k].powi(2), 4.0 * (1.0 + nm.p_l2sq) * big_v) {
            r.v_l2_violations += 1;
        }
        let vx_rhs = 3.0 * w[k].x_l2.powi(2) + 3.0 * (s * s / (2.0 * a * a) + 2.0 * nm.px_l2sq) * big_v;
        if !leq(traj.errx_l2[k].powi(2), vx_rhs) {
            r.vx_l2_violations += 1;
        }
        if traj.v[k].iter().any(|&x| x < lo || x > hi) {
            r.comparison_violations += 1;
        }
        let drift = (traj.mass[k] - m0).abs() / mass_scale;
        r.mass_drift = r.mass_drift.max(drift);
        if let Some(b) = &traj.bound {
            if !leq(traj.err_h1[k], b[k]) {
                *r.h1_bound_violations.as_mut().unwrap() += 1;
            }
            if b[k] > 0.0 {
                let ratio = traj.err_h1[k] / b[k];
                r.max_bound_ratio = Some(r.max_bound_ratio.map_or(ratio, |m: f64| m.max(ratio)));
            }
        }
        if r.converged_at.is_none() && traj.err_h1[k] < CONVERGENCE_LEVEL {
            r.converged_at = Some(traj.times[k]);
        }
    }
    r.h1_rate = fit_decay_rate(&traj.times, &traj.err_h1).ok();
    let wl2: Vec<f64> = w.iter().map(|n| n.l2).collect();
    r.transformed_l2_rate = fit_decay_rate(&traj.times, &wl2).ok();
    Ok(r)
}

/// Temperature-level check `|T − T̂|_∞ ≤ C_T |ṽ_o|_{H¹} e^{−σ* t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TLevelAudit {
    /// `L_{ĉ⁻¹}(M)·√(2 M_p M_l)` with `M = √(2 M_p M_l) ω_op`; `None` when
    /// `[−M, M]` leaves the enthalpy range.
    pub c_t_symmetric: Option<f64>,
    /// Same with the Lipschitz constant of `ĉ⁻¹` over the range of values
    /// actually taken by `v` and `v̂`; this is the audited constant.
    pub c_t_range: f64,
    pub violations: usize,
    pub max_ratio: f64,
    pub t_err_max: Vec<f64>,
}

/// Map both states to temperatures and audit the decay of the max error.
/// Every `every`-th snapshot is checked.
pub fn t_level_audit(
    traj: &Trajectory,
    material: &MaterialModel,
    cert: &Certificate,
    every: usize,
) -> Result<TLevelAudit> {
    let sigma_star = cert
        .sigma_star
        .ok_or_else(|| argument("temperature audit needs a feasible certificate"))?;
    let omega = cert.omega_op.unwrap_or(0.0);
    let k2 = (2.0 * cert.m_p * cert.m_l).sqrt();
    let c_t_symmetric = material.inverse_lipschitz(k2 * omega).ok().map(|l| l * k2);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..traj.len() {
        for &x in traj.v[k].iter().chain(&traj.vhat[k]) {
            lo = lo.min(x);
            hi = hi.max(x);
        }
    }
    let c_t_range = material.inverse_lipschitz_on(lo, hi)? * k2;
    let h0 = traj.initial_h1();
    let mut out = TLevelAudit { c_t_symmetric, c_t_range, violations: 0, max_ratio: 0.0, t_err_max: vec![] };
    for k in (0..traj.len()).step_by(every.max(1)) {
        let mut e: f64 = 0.0;
        for (a, b) in traj.v[k].iter().zip(&traj.vhat[k]) {
            e = e.max((material.enthalpy_inverse(*a)? - material.enthalpy_inverse(*b)?).abs());
        }
        let bound = c_t_range * h0 * (-sigma_star * traj.times[k]).exp();
        if !leq(e, bound) {
            out.violations += 1;
        }
        if bound > 0.0 {
            out.max_ratio = out.max_ratio.max(e / bound);
        }
        out.t_err_max.push(e);
    }
    Ok(out)
}

/// Residual of `w̃_t = a w̃_xx − σ w̃ + f` on recorded snapshots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub times: Vec<f64>,
    /// Max-norm residual over interior nodes at each checked time.
    pub residual: Vec<f64>,
    pub max_residual: f64,
    /// Max of `|w̃_t|` over the same nodes, for scale.
    pub wt_scale: f64,
    /// Largest one-sided `|w̃_x(0)|` and `|w̃_x(1)|` seen.
    pub wx0_max: f64,
    pub wx1_max: f64,
}

/// Discrete `(ᾱ(u) u_x)_x` with zero flux at `x = 0` and outgoing flux
/// `right_flux` at `x = 1`, on the same control volumes as the simulator.
fn mismatch_divergence(u: &[f64], model: &dyn Diffusivity, a: f64, right_flux: f64) -> Vec<f64> {
    let n = u.len();
    let inv_h = (n - 1) as f64;
    let mut out = vec![0.0; n];
    let mut left = 0.0;
    for i in 0..n - 1 {
        let f = (model.alpha(0.5 * (u[i] + u[i + 1])) - a) * (u[i + 1] - u[i]) * inv_h;
        out[i] = (f - left) * inv_h;
        left = f;
    }
    out[n - 1] = (right_flux - left) * inv_h;
    out[0] *= 2.0;
    out[n - 1] *= 2.0;
    out
}

/// Evaluate the target-system identity at up to five snapshot triples
/// `(k−1, k, k+1)`, differencing `w̃` in time and assembling
/// `f = g + ∫_x^1 l g` with `g = (ᾱ(v)v_x)_x − (ᾱ(v̂)v̂_x)_x`. Needs a
/// trajectory recorded at every step or nearly so.
pub fn target_residual_check(
    traj: &Trajectory,
    l: &Kernel2D,
    gains: &ObserverGains,
    model: &dyn Diffusivity,
    params: KernelParams,
) -> Result<ResidualReport> {
    if l.kind != KernelKind::InverseL {
        return Err(argument("residual check expects the inverse kernel"));
    }
    if traj.len() < 3 {
        return Err(argument(format!("need at least 3 snapshots, got {}", traj.len())));
    }
    let n = traj.x.len();
    if l.n() != n || gains.n() != n {
        return Err(argument("kernel, gains and trajectory grids differ"));
    }
    let (a, s) = (params.a(), params.sigma());
    let h = 1.0 / (n - 1) as f64;
    let w_at = |k: usize| inverse_transform(&traj.error(k), l);
    let m = traj.len();
    let checks = 5.min(m - 2);
    let mut rep = ResidualReport {
        times: vec![],
        residual: vec![],
        max_residual: 0.0,
        wt_scale: 0.0,
        wx0_max: 0.0,
        wx1_max: 0.0,
    };
    for c in 1..=checks {
        // evenly spaced, never touching the shortened final step
        let k = (1 + (c * (m - 3)) / (checks + 1)).min(m.saturating_sub(3).max(1));
        let (t0, t1, t2) = (traj.times[k - 1], traj.times[k], traj.times[k + 1]);
        let (h1, h2) = (t1 - t0, t2 - t1);
        let (wm, w0, wp) = (w_at(k - 1)?, w_at(k)?, w_at(k + 1)?);
        let v = &traj.v[k];
        let vh = &traj.vhat[k];
        let bflux = (model.alpha(vh[n - 1]) - a) * gains.p10 * (v[n - 1] - vh[n - 1]);
        let gp = mismatch_divergence(v, model, a, 0.0);
        let go = mismatch_divergence(vh, model, a, bflux);
        let g: Vec<f64> = gp.iter().zip(&go).map(|(p, o)| p - o).collect();
        let f = inverse_transform(&g, l)?;
        let mut worst: f64 = 0.0;
        for i in 1..n - 1 {
            let wt = -h2 / (h1 * (h1 + h2)) * wm[i] + (h2 - h1) / (h1 * h2) * w0[i] + h1 / (h2 * (h1 + h2)) * wp[i];
            let wxx = (w0[i + 1] - 2.0 * w0[i] + w0[i - 1]) / (h * h);
            let res = wt - (a * wxx - s * w0[i] + f[i]);
            worst = worst.max(res.abs());
            rep.wt_scale = rep.wt_scale.max(wt.abs());
        }
        let d = derivative(&w0, h);
        rep.wx0_max = rep.wx0_max.max(d[0].abs());
        rep.wx1_max = rep.wx1_max.max(d[n - 1].abs());
        rep.times.push(t1);
        rep.residual.push(worst);
        rep.max_residual = rep.max_residual.max(worst);
    }
    Ok(rep)
}
