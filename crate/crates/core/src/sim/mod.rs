//! Plant/observer co-simulation on a vertex-centred finite-volume grid.
//!
//! Nodes sit at `x_i = i h`, `h = 1/(n−1)`; the two wall nodes own half
//! control volumes, so `y(t) = v(1, t)` is a node value and the conserved
//! discrete mass is the trapezoid integral of `v`.

mod audit;
mod fit;
pub mod ic;

pub use audit::{
    audit_trajectory, t_level_audit, target_residual_check, transformed_norms, AuditReport,
    ResidualReport, TLevelAudit, AGMON_FACTOR, CONVERGENCE_LEVEL,
};
pub use fit::{fit_decay_rate, fit_decay_rate_window, RateFit, NOISE_FLOOR};

use serde::{Deserialize, Serialize};

use crate::certificate::Certificate;
use crate::certificate::{BoundsSource, TrajectoryBounds};
use crate::error::{argument, domain, Error, Result};
use crate::kernel::ObserverGains;
use crate::nonlinearity::Diffusivity;
use crate::numeric::trapezoid;

pub const DEFAULT_SIM_NODES: usize = 401;
pub const DEFAULT_CFL: f64 = 0.4;
/// Blow-up threshold relative to the initial scale.
pub const BLOWUP_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n: usize,
    pub cfl: f64,
    pub t_end: f64,
    pub record_stride: usize,
    pub plant_ic: Vec<f64>,
    pub observer_ic: Vec<f64>,
}

/// One-sided second-order slopes at both walls.
fn wall_slopes(v: &[f64], h: f64) -> (f64, f64) {
    let n = v.len();
    let left = (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h);
    let right = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    (left, right)
}

/// Admissible slope mismatch for an `O(h²)` compatibility check: a few
/// times `h²` scaled by the largest third difference.
fn compat_tolerance(v: &[f64], h: f64) -> f64 {
    let m3 = v
        .windows(4)
        .map(|w| (w[3] - 3.0 * w[2] + 3.0 * w[1] - w[0]).abs())
        .fold(0.0, f64::max)
        / (h * h * h);
    10.0 * h * h * (1.0 + m3)
}

impl SimConfig {
    pub fn h(&self) -> f64 {
        1.0 / (self.n - 1) as f64
    }

    /// Shape checks plus the compatibility conditions
    /// `v_o′(0) = v_o′(1) = 0` and `v̂_o′(0) = 0`,
    /// `v̂_o′(1) = p10 (y(0) − ŷ(0))`, each within `O(h²)`.
    pub fn validate(&self, gains: &ObserverGains) -> Result<()> {
        if self.n < 5 {
            return Err(argument(format!("need at least 5 nodes, got {}", self.n)));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(argument(format!("cfl must lie in (0, 1), got {}", self.cfl)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(argument(format!("t_end must be positive, got {}", self.t_end)));
        }
        if self.record_stride == 0 {
            return Err(argument("record_stride must be >= 1"));
        }
        if self.plant_ic.len() != self.n || self.observer_ic.len() != self.n {
            return Err(argument("initial data must have n samples"));
        }
        if gains.n() != self.n {
            return Err(argument(format!(
                "gains sampled on {} nodes, simulation uses {}",
                gains.n(),
                self.n
            )));
        }
        if self.plant_ic.iter().chain(&self.observer_ic).any(|v| !v.is_finite()) {
            return Err(argument("initial data must be finite"));
        }
        let h = self.h();
        let (l, r) = wall_slopes(&self.plant_ic, h);
        let tol = compat_tolerance(&self.plant_ic, h);
        if l.abs() > tol || r.abs() > tol {
            return Err(Error::Precondition(format!(
                "plant initial data violate zero-flux walls: slopes ({l:e}, {r:e}), tolerance {tol:e}"
            )));
        }
        let (l, r) = wall_slopes(&self.observer_ic, h);
        let tol = compat_tolerance(&self.observer_ic, h);
        let innov = self.plant_ic[self.n - 1] - self.observer_ic[self.n - 1];
        let want = gains.p10 * innov;
        if l.abs() > tol || (r - want).abs() > tol {
            return Err(Error::Precondition(format!(
                "observer initial data violate the boundary conditions: slopes ({l:e}, {r:e}), \
                 expected (0, {want:e}), tolerance {tol:e}"
            )));
        }
        Ok(())
    }
}

/// Scratch space for [`divergence`].
struct Faces {
    mid: Vec<f64>,
    alpha: Vec<f64>,
}

impl Faces {
    fn new(n: usize) -> Self {
        Self { mid: vec![0.0; n - 1], alpha: vec![0.0; n - 1] }
    }
}

/// Conservative flux divergence with a prescribed outgoing flux at `x = 1`
/// and zero flux at `x = 0`. Returns the largest face diffusivity.
fn divergence(v: &[f64], model: &dyn Diffusivity, right_flux: f64, out: &mut [f64], faces: &mut Faces) -> f64 {
    let n = v.len();
    let inv_h = (n - 1) as f64;
    for ((m, a), b) in faces.mid.iter_mut().zip(v).zip(&v[1..]) {
        *m = 0.5 * (a + b);
    }
    model.alpha_into(&faces.mid, &mut faces.alpha);
    let mut amax: f64 = 0.0;
    let mut left = 0.0;
    for i in 0..n - 1 {
        let a = faces.alpha[i];
        amax = if a > amax { a } else { amax };
        let f = a * (v[i + 1] - v[i]) * inv_h;
        out[i] = (f - left) * inv_h;
        left = f;
    }
    out[n - 1] = (right_flux - left) * inv_h;
    out[0] *= 2.0;
    out[n - 1] *= 2.0;
    amax
}

/// `(α(v) v_x)_x` with zero-flux walls.
pub fn plant_rhs(v: &[f64], model: &dyn Diffusivity) -> Result<Vec<f64>> {
    if v.len() < 3 {
        return Err(argument("need at least 3 nodes"));
    }
    let mut out = vec![0.0; v.len()];
    divergence(v, model, 0.0, &mut out, &mut Faces::new(v.len()));
    Ok(out)
}

fn observer_rhs_into(
    vh: &[f64],
    y: f64,
    gains: &ObserverGains,
    model: &dyn Diffusivity,
    out: &mut [f64],
    faces: &mut Faces,
) -> f64 {
    let n = vh.len();
    let innov = y - vh[n - 1];
    let bflux = model.alpha(vh[n - 1]) * gains.p10 * innov;
    let amax = divergence(vh, model, bflux, out, faces);
    for (o, p1) in out.iter_mut().zip(&gains.p1) {
        *o += p1 * innov;
    }
    amax
}

/// `(α(v̂) v̂_x)_x + p1 (y − ŷ)` with `v̂_x(0) = 0` and boundary flux
/// `α(v̂(1)) p10 (y − ŷ)` at `x = 1`.
pub fn observer_rhs(
    vh: &[f64],
    y: f64,
    gains: &ObserverGains,
    model: &dyn Diffusivity,
) -> Result<Vec<f64>> {
    if vh.len() < 3 {
        return Err(argument("need at least 3 nodes"));
    }
    if gains.n() != vh.len() {
        return Err(argument("gains and state sampled on different grids"));
    }
    let mut out = vec![0.0; vh.len()];
    observer_rhs_into(vh, y, gains, model, &mut out, &mut Faces::new(vh.len()));
    Ok(out)
}

/// Discrete norms of a grid function on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub l2: f64,
    pub x_l2: f64,
    pub h1: f64,
    pub max: f64,
}

/// Trapezoid `L²`, central-difference derivative (second-order one-sided at
/// the walls), `H¹ = √(L² + derivative L²)` and max norm.
pub fn error_norms(e: &[f64]) -> Result<ErrorNorms> {
    let n = e.len();
    if n < 3 {
        return Err(argument("need at least 3 nodes"));
    }
    let h = 1.0 / (n - 1) as f64;
    let sq: Vec<f64> = e.iter().map(|v| v * v).collect();
    let d = derivative(e, h);
    let dsq: Vec<f64> = d.iter().map(|v| v * v).collect();
    let l2sq = trapezoid(&sq, h);
    let xsq = trapezoid(&dsq, h);
    Ok(ErrorNorms {
        l2: l2sq.sqrt(),
        x_l2: xsq.sqrt(),
        h1: (l2sq + xsq).sqrt(),
        max: e.iter().fold(0.0, |m, v| m.max(v.abs())),
    })
}

pub(crate) fn derivative(e: &[f64], h: f64) -> Vec<f64> {
    let n = e.len();
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        d[i] = (e[i + 1] - e[i - 1]) / (2.0 * h);
    }
    let (l, r) = wall_slopes(e, h);
    d[0] = l;
    d[n - 1] = r;
    d
}

/// Extremes of the plant state over every time step, from which the
/// certificate's trajectory bounds are measured.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantStats {
    pub v_min: f64,
    pub v_max: f64,
    /// Range of the measured output `y = v(1, ·)`.
    pub y_min: f64,
    pub y_max: f64,
    pub vx_inf: f64,
    pub vxx_inf: f64,
}

impl PlantStats {
    fn new(v: &[f64]) -> Self {
        let mut s = Self {
            v_min: f64::INFINITY,
            v_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
            vx_inf: 0.0,
            vxx_inf: 0.0,
        };
        s.update(v);
        s
    }

    fn update(&mut self, v: &[f64]) {
        let n = v.len();
        let inv_h = (n - 1) as f64;
        for w in v.windows(3) {
            self.vxx_inf = self.vxx_inf.max((w[2] - 2.0 * w[1] + w[0]).abs() * inv_h * inv_h);
        }
        for w in v.windows(2) {
            self.vx_inf = self.vx_inf.max((w[1] - w[0]).abs() * inv_h);
        }
        for &x in v {
            self.v_min = self.v_min.min(x);
            self.v_max = self.v_max.max(x);
        }
        self.y_min = self.y_min.min(v[n - 1]);
        self.y_max = self.y_max.max(v[n - 1]);
    }

    /// Trajectory bounds for design diffusivity `a`, every measured quantity
    /// multiplied by `inflation ≥ 1`. `δ1`/`δ2` are maxima of `|α − a|`
    /// over the visited ranges (a dense scan, hence conservative).
    pub fn bounds(&self, model: &dyn Diffusivity, a: f64, inflation: f64) -> Result<TrajectoryBounds> {
        if !(inflation >= 1.0 && inflation.is_finite()) {
            return Err(argument(format!("inflation must be >= 1, got {inflation}")));
        }
        let dev = |lo: f64, hi: f64| {
            (0..=1024)
                .map(|k| lo + (hi - lo) * k as f64 / 1024.0)
                .map(|r| (model.alpha(r) - a).abs())
                .fold(0.0, f64::max)
        };
        let d1 = dev(self.v_min, self.v_max) * inflation;
        let d2 = dev(self.y_min, self.y_max).min(d1 / inflation) * inflation;
        let b = TrajectoryBounds {
            m_v: self.v_min.abs().max(self.v_max.abs()) * inflation,
            vx_inf: self.vx_inf * inflation,
            vxx_inf: self.vxx_inf * inflation,
            delta1: d1,
            delta2: d2,
            source: BoundsSource::Simulated,
        };
        b.validate()?;
        Ok(b)
    }
}

/// Recorded samples of a co-simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub times: Vec<f64>,
    pub v: Vec<Vec<f64>>,
    pub vhat: Vec<Vec<f64>>,
    pub err_l2: Vec<f64>,
    pub errx_l2: Vec<f64>,
    pub err_h1: Vec<f64>,
    pub err_max: Vec<f64>,
    pub mass: Vec<f64>,
    /// `√(M_p M_l) |ṽ_o|_{H¹} e^{−σ* t}`, present when a feasible
    /// certificate was attached.
    pub bound: Option<Vec<f64>>,
    pub plant: PlantStats,
    pub steps: usize,
    /// Smallest step, ignoring the shortened final one.
    pub dt_min: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn error(&self, k: usize) -> Vec<f64> {
        self.v[k].iter().zip(&self.vhat[k]).map(|(a, b)| a - b).collect()
    }

    pub fn initial_h1(&self) -> f64 {
        self.err_h1[0]
    }

    /// Fill the bound channel from a certificate. Infeasible certificates
    /// leave it empty.
    pub fn attach_bound(&mut self, cert: &Certificate) {
        let h0 = self.initial_h1();
        self.bound = self
            .times
            .iter()
            .map(|&t| cert.h1_bound(h0, t))
            .collect::<Option<Vec<_>>>();
    }

    /// CSV of the norm channels; `bound` is empty when absent.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,err_L2,errx_L2,err_H1,err_max,mass,bound")?;
        for k in 0..self.len() {
            let b = self.bound.as_ref().map(|b| format!("{:e}", b[k])).unwrap_or_default();
            writeln!(
                out,
                "{:e},{:e},{:e},{:e},{:e},{:e},{b}",
                self.times[k], self.err_l2[k], self.errx_l2[k], self.err_h1[k], self.err_max[k], self.mass[k]
            )?;
        }
        Ok(())
    }

    /// Long-format snapshot dump `t,x,v,vhat`.
    pub fn write_snapshots_csv<W: std::io::Write>(&self, mut out: W, every: usize) -> std::io::Result<()> {
        writeln!(out, "t,x,v,vhat")?;
        for k in (0..self.len()).step_by(every.max(1)) {
            for i in 0..self.x.len() {
                writeln!(out, "{:e},{},{:e},{:e}", self.times[k], self.x[i], self.v[k][i], self.vhat[k][i])?;
            }
        }
        Ok(())
    }
}

struct Recorder {
    traj: Trajectory,
    h: f64,
}

impl Recorder {
    fn record(&mut self, t: f64, v: &[f64], vh: &[f64]) -> Result<()> {
        let e: Vec<f64> = v.iter().zip(vh).map(|(a, b)| a - b).collect();
        let nm = error_norms(&e)?;
        let tr = &mut self.traj;
        tr.times.push(t);
        tr.v.push(v.to_vec());
        tr.vhat.push(vh.to_vec());
        tr.err_l2.push(nm.l2);
        tr.errx_l2.push(nm.x_l2);
        tr.err_h1.push(nm.h1);
        tr.err_max.push(nm.max);
        tr.mass.push(trapezoid(v, self.h));
        Ok(())
    }
}

fn check_state(t: f64, v: &[f64], vh: &[f64], limit: f64, model: &dyn Diffusivity) -> Result<()> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &x in v.iter().chain(vh) {
        if !x.is_finite() || x.abs() > limit {
            return Err(Error::Instability { time: t });
        }
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !model.contains(lo) || !model.contains(hi) {
        let (a, b) = model.validity();
        return Err(domain(format!(
            "state range [{lo}, {hi}] left the validity interval [{a}, {b}] at t = {t}"
        )));
    }
    Ok(())
}

/// Integrate plant and observer together with classical RK4.
///
/// `dt = cfl·h²/(2·max α)` with the running maximum of `α` over every state
/// seen so far; the last step is shortened to land on `t_end`. Snapshots are
/// taken every `record_stride` steps and at `t_end`.
pub fn simulate_pair(
    config: &SimConfig,
    model: &dyn Diffusivity,
    gains: &ObserverGains,
    cert: Option<&Certificate>,
) -> Result<Trajectory> {
    config.validate(gains)?;
    let n = config.n;
    let h = config.h();
    let mut v = config.plant_ic.clone();
    let mut vh = config.observer_ic.clone();
    let scale = v
        .iter()
        .chain(&vh)
        .fold(0.0f64, |m, x| m.max(x.abs()))
        .max(1.0);
    let limit = BLOWUP_FACTOR * scale;
    check_state(0.0, &v, &vh, limit, model)?;

    let mut amax = v.iter().chain(&vh).map(|&r| model.alpha(r)).fold(0.0, f64::max);
    if !(amax > 0.0 && amax.is_finite()) {
        return Err(domain(format!("diffusivity must be positive on the initial data, max is {amax}")));
    }
    let mut rec = Recorder {
        traj: Trajectory {
            x: gains.x.clone(),
            times: vec![],
            v: vec![],
            vhat: vec![],
            err_l2: vec![],
            errx_l2: vec![],
            err_h1: vec![],
            err_max: vec![],
            mass: vec![],
            bound: None,
            plant: PlantStats::new(&v),
            steps: 0,
            dt_min: f64::INFINITY,
        },
        h,
    };
    rec.record(0.0, &v, &vh)?;

    let mut kv = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut kh = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut sv = vec![0.0; n];
    let mut sh = vec![0.0; n];
    let mut faces = Faces::new(n);
    let mut t = 0.0;
    let mut step = 0usize;
    while t < config.t_end {
        let mut dt = config.cfl * h * h / (2.0 * amax);
        let last = t + dt >= config.t_end * (1.0 - 1e-14);
        if last {
            dt = config.t_end - t;
        }
        let c = [0.0, 0.5 * dt, 0.5 * dt, dt];
        for s in 0..4 {
            if s == 0 {
                sv.copy_from_slice(&v);
                sh.copy_from_slice(&vh);
            } else {
                let cs = c[s];
                for ((o, a), k) in sv.iter_mut().zip(&v).zip(&kv[s - 1]) {
                    *o = a + cs * k;
                }
                for ((o, a), k) in sh.iter_mut().zip(&vh).zip(&kh[s - 1]) {
                    *o = a + cs * k;
                }
            }
            let a1 = divergence(&sv, model, 0.0, &mut kv[s], &mut faces);
            let a2 = observer_rhs_into(&sh, sv[n - 1], gains, model, &mut kh[s], &mut faces);
            amax = amax.max(a1).max(a2);
        }
        let w = dt / 6.0;
        for (x, k) in [(&mut v, &kv), (&mut vh, &kh)] {
            for i in 0..n {
                x[i] += w * (k[0][i] + 2.0 * (k[1][i] + k[2][i]) + k[3][i]);
            }
        }
        t = if last { config.t_end } else { t + dt };
        step += 1;
        // the shortened final step says nothing about the CFL step
        if !last || step == 1 {
            rec.traj.dt_min = rec.traj.dt_min.min(dt);
        }
        check_state(t, &v, &vh, limit, model)?;
        rec.traj.plant.update(&v);
        if last || step.is_multiple_of(config.record_stride) {
            rec.record(t, &v, &vh)?;
        }
    }
    let mut traj = rec.traj;
    traj.steps = step;
    if let Some(c) = cert {
        traj.attach_bound(c);
    }
    Ok(traj)
}

/// Steps the integrator will take for a state whose largest diffusivity is
/// `alpha_max` (exact when `α` stays below it).
pub fn estimated_steps(config: &SimConfig, alpha_max: f64) -> usize {
    let h = config.h();
    (config.t_end / (config.cfl * h * h / (2.0 * alpha_max))).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{compute_gains, KernelParams};
    use crate::nonlinearity::NonlinearityModel;
    use std::f64::consts::PI;

    fn axis(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn constant_state_has_zero_rhs() {
        let m = NonlinearityModel::affine(1.0, 0.5).unwrap();
        assert!(plant_rhs(&[0.3; 11], &m).unwrap().iter().all(|&r| r == 0.0));
        let g = compute_gains(KernelParams::new(1.0, 2.0).unwrap(), 11).unwrap();
        assert!(observer_rhs(&[0.3; 11], 0.3, &g, &m).unwrap().iter().all(|&r| r == 0.0));
    }

    #[test]
    fn flux_divergence_telescopes() {
        let m = NonlinearityModel::affine(1.0, 0.5).unwrap();
        let v: Vec<f64> = axis(51).iter().map(|x| (3.0 * x).sin() + x * x).collect();
        let r = plant_rhs(&v, &m).unwrap();
        let s = trapezoid(&r, 1.0 / 50.0);
        assert!(s.abs() < 1e-13, "{s}");
    }

    #[test]
    fn laplacian_is_second_order() {
        let m = NonlinearityModel::constant(1.0).unwrap();
        let err = |n: usize| {
            let x = axis(n);
            let v: Vec<f64> = x.iter().map(|x| (PI * x).cos()).collect();
            let r = plant_rhs(&v, &m).unwrap();
            x.iter().zip(&r).map(|(x, r)| (r + PI * PI * (PI * x).cos()).abs()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(51), err(101));
        assert!(e1 < 1e-2 && (3.5..4.5).contains(&(e1 / e2)), "{e1} {e2}");
    }

    #[test]
    fn injection_column_is_p1() {
        let m = NonlinearityModel::constant(1.0).unwrap();
        let g = compute_gains(KernelParams::new(1.0, 2.0).unwrap(), 21).unwrap();
        let r = observer_rhs(&[0.0; 21], 1.0, &g, &m).unwrap();
        for (i, ri) in r.iter().enumerate().take(20).skip(1) {
            assert_eq!(*ri, g.p1[i]);
        }
    }

    #[test]
    fn error_norm_examples() {
        assert_eq!(error_norms(&[0.0; 11]).unwrap(), ErrorNorms { l2: 0.0, x_l2: 0.0, h1: 0.0, max: 0.0 });
        let one = error_norms(&[1.0; 11]).unwrap();
        assert!((one.l2 - 1.0).abs() < 1e-15 && (one.h1 - 1.0).abs() < 1e-15 && one.max == 1.0);
        let e: Vec<f64> = axis(401).iter().map(|x| (2.0 * PI * x).sin()).collect();
        let nm = error_norms(&e).unwrap();
        assert!((nm.l2 - 0.5f64.sqrt()).abs() < 1e-4);
        assert!((nm.h1 - (0.5 + 2.0 * PI * PI).sqrt()).abs() < 1e-3);
    }

    fn linear_config(n: usize, t_end: f64) -> (SimConfig, ObserverGains) {
        let g = compute_gains(KernelParams::new(1.0, 2.0).unwrap(), n).unwrap();
        let v: Vec<f64> = axis(n).iter().map(|x| 0.5 + 0.2 * (PI * x).cos()).collect();
        let cfg = SimConfig { n, cfl: 0.4, t_end, record_stride: 50, plant_ic: v.clone(), observer_ic: v };
        (cfg, g)
    }

    #[test]
    fn identical_states_stay_identical() {
        let m = NonlinearityModel::affine(1.0, 0.3).unwrap();
        let (cfg, g) = linear_config(41, 0.2);
        let tr = simulate_pair(&cfg, &m, &g, None).unwrap();
        assert!(tr.err_h1.iter().all(|&e| e == 0.0));
        assert_eq!(*tr.times.last().unwrap(), 0.2);
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn incompatible_data_are_rejected() {
        let (mut cfg, g) = linear_config(41, 0.1);
        cfg.plant_ic = axis(41).iter().map(|x| x * 0.5).collect();
        let m = NonlinearityModel::constant(1.0).unwrap();
        assert!(matches!(simulate_pair(&cfg, &m, &g, None), Err(Error::Precondition(_))));
    }

    #[test]
    fn leaving_validity_is_domain_error() {
        // α = 1 + 2r is positive only for r > −0.5 (natural cut at 0.1 a0)
        let m = NonlinearityModel::affine(1.0, 2.0).unwrap();
        let (mut cfg, g) = linear_config(41, 0.1);
        cfg.plant_ic = vec![-0.46; 41];
        cfg.observer_ic = vec![-0.46; 41];
        assert!(matches!(simulate_pair(&cfg, &m, &g, None), Err(Error::Domain(_))));
    }

    #[test]
    fn stiff_boundary_gain_blows_up() {
        let m = NonlinearityModel::constant(1.0).unwrap();
        let (mut cfg, mut g) = linear_config(41, 0.1);
        g.p10 = 1e6;
        // zero innovation at t = 0 keeps the data compatible with any p10
        cfg.observer_ic = axis(41)
            .iter()
            .zip(&cfg.plant_ic)
            .map(|(x, v)| v - 1e-3 * (1.0 - (2.0 * PI * x).cos()))
            .collect();
        match simulate_pair(&cfg, &m, &g, None) {
            Err(Error::Instability { time }) => assert!(time > 0.0 && time < 0.1),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn plant_bounds_are_measured() {
        let m = NonlinearityModel::affine(1.0, 0.2).unwrap();
        let (cfg, g) = linear_config(41, 0.05);
        let tr = simulate_pair(&cfg, &m, &g, None).unwrap();
        let b = tr.plant.bounds(&m, 1.1, 1.0).unwrap();
        assert!((tr.plant.v_max - 0.7).abs() < 1e-12);
        assert!(b.delta2 <= b.delta1);
        assert!((b.delta1 - (1.1f64 - (1.0 + 0.2 * 0.3)).max(1.0 + 0.2 * 0.7 - 1.1)).abs() < 1e-3);
    }
}
