//! Lyapunov certificate for the observer error: the constants `γ1..γ15`,
//! the functions `ε1..ε8`, the small-gain conditions, the region of
//! attraction radius `ω*` and the certified decay rate `σ*`.
//!
//! Kernel norms enter through [`KernelNorms`]; entries stored squared are
//! square-rooted wherever a plain norm appears.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::kernel::{KernelNorms, KernelParams};
use crate::nonlinearity::{delta_bar, Diffusivity, LipschitzTable};

/// Radius beyond which `ω*` is reported as effectively unbounded.
pub const OMEGA_CAP: f64 = 1e6;
/// Slack every strict inequality must keep at an accepted `ω`.
pub const STRICT_MARGIN: f64 = 1e-9;
const BISECTION_REL_TOL: f64 = 1e-10;
const MAX_SEARCH_STEPS: usize = 200;

/// Where the trajectory bounds came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundsSource {
    User,
    Simulated,
    ConservativeDeltaBar,
}

/// Bounds on the plant trajectory that the constants depend on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryBounds {
    /// `‖v‖_∞`.
    pub m_v: f64,
    /// `‖v_x‖_∞`.
    pub vx_inf: f64,
    /// `‖v_xx‖_∞`.
    pub vxx_inf: f64,
    /// `δ1 = ‖α(v) − a‖_∞`.
    pub delta1: f64,
    /// `δ2 = ‖α(v(1,·)) − a‖_∞`.
    pub delta2: f64,
    pub source: BoundsSource,
}

impl TrajectoryBounds {
    pub fn validate(&self) -> Result<()> {
        let all = [self.m_v, self.vx_inf, self.vxx_inf, self.delta1, self.delta2];
        if all.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(argument(format!("trajectory bounds must be finite and >= 0: {self:?}")));
        }
        if self.delta2 > self.delta1 {
            return Err(argument(format!(
                "delta2 = {} exceeds delta1 = {}",
                self.delta2, self.delta1
            )));
        }
        Ok(())
    }

    /// Zero mismatch (the linear design case).
    pub fn linear(vx_inf: f64, vxx_inf: f64) -> Self {
        Self { m_v: 0.0, vx_inf, vxx_inf, delta1: 0.0, delta2: 0.0, source: BoundsSource::User }
    }

    /// `δ1 = δ2 = δ̄ = max_{|r|≤M_v} |α(r) − a|`.
    pub fn conservative(
        model: &dyn Diffusivity,
        a: f64,
        m_v: f64,
        vx_inf: f64,
        vxx_inf: f64,
    ) -> Result<Self> {
        let d = delta_bar(model, a, m_v)?;
        let b = Self {
            m_v,
            vx_inf,
            vxx_inf,
            delta1: d,
            delta2: d,
            source: BoundsSource::ConservativeDeltaBar,
        };
        b.validate()?;
        Ok(b)
    }
}

/// `γ1..γ15`, stored zero-based (`g[0]` is `γ1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GammaConstants(pub [f64; 15]);

impl GammaConstants {
    /// `γ_i` for `i` in `1..=15`.
    pub fn get(&self, i: usize) -> f64 {
        self.0[i - 1]
    }
}

pub fn gamma_constants(
    params: KernelParams,
    norms: &KernelNorms,
    bounds: &TrajectoryBounds,
) -> Result<GammaConstants> {
    bounds.validate()?;
    if norms.entries().iter().any(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
        return Err(argument("kernel norms must be finite and >= 0"));
    }
    let (a, s) = (params.a(), params.sigma());
    let k = s / (2.0 * a);
    let p2 = norms.p_l2sq;
    let px2 = norms.px_l2sq;
    let l2 = norms.l_l2sq;
    let vx = bounds.vx_inf;
    let vxx = bounds.vxx_inf;
    let one_p = 1.0 + p2;
    let one_l = 1.0 + l2;
    let ly1 = norms.ly_col1_l2sq.sqrt();
    let l1 = norms.l_col1_l2sq.sqrt();
    let lyy = norms.lyy_l2sq.sqrt();
    let diag = norms.pxx_l2sq + norms.sup_diag_px_shift;

    let g1 = 3.0 * (1.0 + k) * (k * k + px2)
        + k
        + norms.sup_diag_ly * (1.0 + 2.0 * one_p)
        + 2.0 * 2f64.sqrt() * lyy * one_p.sqrt();
    let g2 = (k + ((2.0 * a + s) / a) * one_p) * vx;
    let g3 = 2.0 * s / a + 3.0 * ly1 + (3.0 * s / (2.0 * a)) * l1;
    let g4 = (8.0 * a + 3.0 * s) / (4.0 * a);
    let g5 = 0.5 * vx;
    let g6 = k + ly1 + (9.0 * s / (2.0 * a)) * l1;
    let g7 = (8.0 / a) * one_l;
    let g8 = (2.0 * s * s / (a * a * a)) * one_l;
    let g9 = (1.0 / a) * (s * s / (a * a) + 24.0 * vx * vx) * one_l;
    let g10 = (2.0 / a) * (0.25 * (s / a).powi(4) + 4.0 * norms.px_l4_4) * one_l;
    let g11 = (32.0 / a) * one_l;
    let g12 = (16.0 / a) * one_p * one_l * vxx * vxx;
    let g13 = (32.0 / a) * one_p * one_l * vx.powi(4);
    let g14 = (8.0 / a) * (diag + 3.0 * (s * s / (2.0 * a * a) + 2.0 * px2) * vx * vx) * one_l;
    let g15 = (16.0 / a) * diag * one_l;
    Ok(GammaConstants([g1, g2, g3, g4, g5, g6, g7, g8, g9, g10, g11, g12, g13, g14, g15]))
}

/// Norm-equivalence constants `(M_p, M_l)`:
/// `|ṽ|_{H¹} ≤ √M_p |w̃|_{H¹}` and `|w̃|_{H¹} ≤ √M_l |ṽ|_{H¹}`.
pub fn mp_ml(params: KernelParams, norms: &KernelNorms) -> (f64, f64) {
    let k2 = params.half_ratio().powi(2);
    let m = |l2: f64, lx2: f64| 3f64.max(2.0 * (1.0 + l2)).max(3.0 * (k2 + lx2));
    (m(norms.p_l2sq, norms.px_l2sq), m(norms.l_l2sq, norms.lx_l2sq))
}

/// Everything `ε1..ε8` depend on besides `(E, δ1, δ2)`.
#[derive(Debug, Clone)]
pub struct EpsContext<'a> {
    pub gamma: GammaConstants,
    pub p_inf: f64,
    l_alpha: LipschitzTable<'a>,
    l_alpha_d1: LipschitzTable<'a>,
}

impl<'a> EpsContext<'a> {
    pub fn new(gamma: GammaConstants, p_inf: f64, model: &'a dyn Diffusivity) -> Result<Self> {
        if !(p_inf.is_finite() && p_inf >= 0.0) {
            return Err(argument(format!("|p|_inf must be finite and >= 0, got {p_inf}")));
        }
        Ok(Self {
            gamma,
            p_inf,
            l_alpha: LipschitzTable::new(model, 1)?,
            l_alpha_d1: LipschitzTable::new(model, 2)?,
        })
    }

    fn lip(table: &LipschitzTable, s: f64) -> f64 {
        // beyond the validity interval the conditions count as violated
        table.eval(s).unwrap_or(f64::INFINITY)
    }

    /// `ε_i(E)` for `i` in `1..=5`. Returns `+∞` when an argument of `L_α`
    /// or `L_α′` leaves the model's validity interval.
    pub fn eps_basic(&self, i: usize, e: f64) -> Result<f64> {
        if !(1..=5).contains(&i) {
            return Err(argument(format!("basic epsilon index must be 1..=5, got {i}")));
        }
        if !(e >= 0.0) {
            return Err(argument(format!("E must be >= 0, got {e}")));
        }
        let g = |k: usize| self.gamma.get(k);
        let pp = 1.0 + self.p_inf;
        let se = e.sqrt();
        let la_wide = Self::lip(&self.l_alpha, 2.0 * pp * se);
        let la_narrow = Self::lip(&self.l_alpha, 2.0 * se);
        let lap_wide = Self::lip(&self.l_alpha_d1, 2.0 * pp * se);
        if !(la_wide.is_finite() && la_narrow.is_finite() && lap_wide.is_finite()) {
            return Ok(f64::INFINITY);
        }
        let v = match i {
            1 => {
                (2.0 * g(1) * pp * se + g(2)) * la_wide
                    + 2.0 * g(3) * la_narrow * se
                    + g(13) * lap_wide * lap_wide
                    + (g(12) + 4.0 * g(15) * pp * pp * e) * la_wide * la_wide
            }
            2 => 16.0 * g(10) * lap_wide * lap_wide * pp * pp * e,
            3 => {
                (2.0 * g(4) * pp * se + g(5)) * la_wide
                    + 4.0 * g(8) * la_wide * la_wide * pp * pp * e
                    + 2.0 * g(6) * la_narrow * se
            }
            4 => 4.0 * g(11) * lap_wide * lap_wide * pp * pp * e,
            _ => 4.0 * g(7) * la_wide * la_wide * pp * pp * e,
        };
        Ok(v)
    }

    /// `ε_i(E, δ1, δ2)` for `i` in `6..=8` (`ε8` ignores `δ2`).
    pub fn eps_combined(&self, i: usize, e: f64, d1: f64, d2: f64) -> Result<f64> {
        if !(d1 >= 0.0 && d2 >= 0.0) {
            return Err(argument(format!("deltas must be >= 0, got ({d1}, {d2})")));
        }
        let g = |k: usize| self.gamma.get(k);
        let v = match i {
            6 => {
                self.eps_basic(1, e)? + g(3) * d2 + g(1) * d1 + g(14) * d1 * d1
                    + 8.0 * (self.eps_basic(2, e)? + g(10) * d1 * d1) * e
            }
            7 => {
                self.eps_basic(3, e)? + g(6) * d2 + g(4) * d1 + g(9) * d1 * d1
                    + 4.0 * (self.eps_basic(4, e)? + g(11) / 4.0 * d1 * d1) * e
            }
            8 => {
                self.eps_basic(5, e)? + g(7) / 2.0 * d1 * d1
                    + 2.0 * (self.eps_basic(4, e)? + g(11) / 4.0 * d1 * d1) * e
            }
            _ => return Err(argument(format!("combined epsilon index must be 6..=8, got {i}"))),
        };
        // 0 · ∞ cannot occur above, but ∞ − ∞ style NaNs must not pass as finite
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    }

    /// Slack of the three radius conditions at energy `E`:
    /// `(2σ − ε6, a + σ − ε7, a/2 − ε8)`.
    pub fn omega_slacks(&self, params: KernelParams, e: f64, d1: f64, d2: f64) -> Result<[f64; 3]> {
        let (a, s) = (params.a(), params.sigma());
        Ok([
            2.0 * s - self.eps_combined(6, e, d1, d2)?,
            a + s - self.eps_combined(7, e, d1, d2)?,
            a / 2.0 - self.eps_combined(8, e, d1, d2)?,
        ])
    }
}

/// Slack of the base small-gain conditions (right side minus left side).
pub fn check_small_gain(gamma: &GammaConstants, params: KernelParams, d1: f64, d2: f64) -> [f64; 3] {
    let g = |k: usize| gamma.get(k);
    let (a, s) = (params.a(), params.sigma());
    [
        2.0 * s - (g(3) * d2 + g(1) * d1 + g(14) * d1 * d1),
        a + s - (g(6) * d2 + g(4) * d1 + g(9) * d1 * d1),
        a / 2.0 - g(7) / 2.0 * d1 * d1,
    ]
}

/// Certified region-of-attraction radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaStar {
    pub value: f64,
    /// Set when every radius up to [`OMEGA_CAP`] is admissible.
    pub capped: bool,
}

/// `E = (M_l/2) ω²`.
pub fn energy_of(m_l: f64, omega: f64) -> f64 {
    0.5 * m_l * omega * omega
}

/// Largest `ω` at which all three radius conditions hold with slack at least
/// [`STRICT_MARGIN`]: a doubling (or halving) bracket, then bisection to
/// relative width `1e−10`.
pub fn solve_omega_star(
    ctx: &EpsContext,
    params: KernelParams,
    m_l: f64,
    d1: f64,
    d2: f64,
) -> Result<OmegaStar> {
    let base = check_small_gain(&ctx.gamma, params, d1, d2);
    if base.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Precondition(format!("small-gain conditions fail: margins {base:?}")));
    }
    let ok = |w: f64| -> Result<bool> {
        let sl = ctx.omega_slacks(params, energy_of(m_l, w), d1, d2)?;
        Ok(sl.iter().all(|m| *m >= STRICT_MARGIN))
    };

    let mut steps = 0;
    let (mut lo, mut hi);
    if ok(1.0)? {
        lo = 1.0;
        hi = 2.0;
        while ok(hi)? {
            lo = hi;
            if hi >= OMEGA_CAP {
                return Ok(OmegaStar { value: OMEGA_CAP, capped: true });
            }
            hi = (2.0 * hi).min(OMEGA_CAP);
            steps += 1;
        }
    } else {
        hi = 1.0;
        lo = 0.5;
        loop {
            if ok(lo)? {
                break;
            }
            hi = lo;
            lo *= 0.5;
            steps += 1;
            if steps >= MAX_SEARCH_STEPS {
                // no admissible radius above zero (the ε's jump at E = 0⁺)
                return Ok(OmegaStar { value: 0.0, capped: false });
            }
        }
    }
    while hi - lo > BISECTION_REL_TOL * hi && steps < MAX_SEARCH_STEPS {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        steps += 1;
    }
    Ok(OmegaStar { value: lo, capped: false })
}

/// `σ* = ½ min{2σ − ε6(E*), 2(a+σ) − 2ε7(E*)}`.
pub fn sigma_star(ctx: &EpsContext, params: KernelParams, e_star: f64, d1: f64, d2: f64) -> Result<f64> {
    let (a, s) = (params.a(), params.sigma());
    let b1 = 2.0 * s - ctx.eps_combined(6, e_star, d1, d2)?;
    let b2 = 2.0 * (a + s) - 2.0 * ctx.eps_combined(7, e_star, d1, d2)?;
    let v = 0.5 * b1.min(b2);
    if !(v > 0.0) {
        return Err(Error::Inconsistency(format!(
            "certified rate is not positive ({v}) at E* = {e_star}"
        )));
    }
    Ok(v)
}

/// Which radius `σ*` is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatingRadius {
    /// The largest admissible radius `ω*`.
    Max,
    /// `min(ω, ω*)`.
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Margins {
    /// Slack of the three base small-gain conditions.
    pub base: [f64; 3],
    /// Slack of the three radius conditions at the operating radius.
    pub omega: Option<[f64; 3]>,
}

/// The full certificate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub params: KernelParams,
    pub norms: KernelNorms,
    pub bounds: TrajectoryBounds,
    pub gamma: GammaConstants,
    pub conditions: Margins,
    pub feasible: bool,
    pub omega_star: Option<OmegaStar>,
    /// Radius at which `σ*` and `E*` are evaluated.
    pub omega_op: Option<f64>,
    pub sigma_star: Option<f64>,
    #[serde(rename = "E_star")]
    pub e_star: Option<f64>,
    #[serde(rename = "M_p")]
    pub m_p: f64,
    #[serde(rename = "M_l")]
    pub m_l: f64,
}

impl Certificate {
    /// `√(M_p M_l) |ṽ_o|_{H¹} e^{−σ* t}`.
    pub fn h1_bound(&self, h1_initial: f64, t: f64) -> Option<f64> {
        self.sigma_star
            .map(|s| (self.m_p * self.m_l).sqrt() * h1_initial * (-s * t).exp())
    }
}

/// Run the whole pipeline. Infeasibility is reported in the result, not as
/// an error.
pub fn certify(
    params: KernelParams,
    norms: &KernelNorms,
    bounds: &TrajectoryBounds,
    model: &dyn Diffusivity,
    radius: OperatingRadius,
) -> Result<Certificate> {
    let gamma = gamma_constants(params, norms, bounds)?;
    let (m_p, m_l) = mp_ml(params, norms);
    let (d1, d2) = (bounds.delta1, bounds.delta2);
    let base = check_small_gain(&gamma, params, d1, d2);
    let feasible = base.iter().all(|m| *m > 0.0);
    let mut cert = Certificate {
        params,
        norms: *norms,
        bounds: *bounds,
        gamma,
        conditions: Margins { base, omega: None },
        feasible,
        omega_star: None,
        omega_op: None,
        sigma_star: None,
        e_star: None,
        m_p,
        m_l,
    };
    if !feasible {
        return Ok(cert);
    }
    let ctx = EpsContext::new(gamma, norms.p_inf, model)?;
    let omega = solve_omega_star(&ctx, params, m_l, d1, d2)?;
    let op = match radius {
        OperatingRadius::Max => omega.value,
        OperatingRadius::Value(w) => {
            if !(w >= 0.0) {
                return Err(argument(format!("operating radius must be >= 0, got {w}")));
            }
            w.min(omega.value)
        }
    };
    let e_star = energy_of(m_l, op);
    cert.conditions.omega = Some(ctx.omega_slacks(params, e_star, d1, d2)?);
    cert.sigma_star = Some(sigma_star(&ctx, params, e_star, d1, d2)?);
    cert.omega_star = Some(omega);
    cert.omega_op = Some(op);
    cert.e_star = Some(e_star);
    Ok(cert)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelDesign;
    use crate::nonlinearity::NonlinearityModel;

    fn params(a: f64, s: f64) -> KernelParams {
        KernelParams::new(a, s).unwrap()
    }

    fn bounds(vx: f64, vxx: f64, d1: f64, d2: f64) -> TrajectoryBounds {
        TrajectoryBounds { m_v: 1.0, vx_inf: vx, vxx_inf: vxx, delta1: d1, delta2: d2, source: BoundsSource::User }
    }

    #[test]
    fn gamma4_and_gamma5_hand_values() {
        let g = gamma_constants(params(1.0, 4.0), &KernelNorms::zero(), &bounds(2.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(g.get(4), 5.0);
        assert_eq!(g.get(5), 1.0);
    }

    #[test]
    fn gamma7_with_zero_l_norms() {
        let g = gamma_constants(params(2.0, 1.0), &KernelNorms::zero(), &bounds(0.0, 0.0, 0.0, 0.0)).unwrap();
        assert_eq!(g.get(7), 4.0);
    }

    #[test]
    fn mp_ml_branches() {
        let z = KernelNorms::zero();
        assert_eq!(mp_ml(params(1.0, 2.0), &z), (3.0, 3.0));
        let mut n = z;
        n.p_l2sq = 4.0;
        assert_eq!(mp_ml(params(1.0, 2.0), &n).0, 10.0);
    }

    #[test]
    fn rejects_inconsistent_bounds() {
        assert!(gamma_constants(params(1.0, 1.0), &KernelNorms::zero(), &bounds(1.0, 1.0, 0.1, 0.2)).is_err());
        assert!(gamma_constants(params(1.0, 1.0), &KernelNorms::zero(), &bounds(-1.0, 1.0, 0.0, 0.0)).is_err());
    }

    fn affine_ctx(model: &NonlinearityModel, vx: f64) -> (EpsContext<'_>, KernelParams, f64) {
        let pr = params(1.0, 2.0);
        let d = KernelDesign::build(pr, 101).unwrap();
        let g = gamma_constants(pr, &d.norms, &bounds(vx, 2.0 * vx, 0.0, 0.0)).unwrap();
        let (_, ml) = mp_ml(pr, &d.norms);
        (EpsContext::new(g, d.norms.p_inf, model).unwrap(), pr, ml)
    }

    #[test]
    fn basic_eps_vanish_at_zero_energy() {
        let m = NonlinearityModel::affine(1.0, 0.3).unwrap();
        let (ctx, _, _) = affine_ctx(&m, 0.5);
        for i in 1..=5 {
            assert_eq!(ctx.eps_basic(i, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn eps2_vanishes_for_constant_alpha() {
        let m = NonlinearityModel::constant(1.0).unwrap();
        let (ctx, _, _) = affine_ctx(&m, 0.5);
        for e in [0.0, 0.1, 10.0, 1e6] {
            assert_eq!(ctx.eps_basic(2, e).unwrap(), 0.0);
        }
    }

    #[test]
    fn eps5_affine_by_hand() {
        // affine: L_α ≡ |b| for s > 0, so ε5 = 4 γ7 b² (1+|p|∞)² E
        let b = 0.3;
        let m = NonlinearityModel::affine(1.0, b).unwrap();
        let (ctx, _, _) = affine_ctx(&m, 0.5);
        let pp = 1.0 + ctx.p_inf;
        let e = 0.25;
        let hand = 4.0 * ctx.gamma.get(7) * b * b * pp * pp * e;
        assert!((ctx.eps_basic(5, e).unwrap() - hand).abs() <= 1e-14 * hand);
    }

    #[test]
    fn combined_eps_at_zero_energy() {
        let m = NonlinearityModel::affine(1.0, 0.3).unwrap();
        let (ctx, _, _) = affine_ctx(&m, 0.5);
        let g = |k| ctx.gamma.get(k);
        let (d1, d2) = (0.07, 0.03);
        assert_eq!(ctx.eps_combined(6, 0.0, d1, d2).unwrap(), g(3) * d2 + g(1) * d1 + g(14) * d1 * d1);
        assert_eq!(ctx.eps_combined(7, 0.0, d1, d2).unwrap(), g(6) * d2 + g(4) * d1 + g(9) * d1 * d1);
        assert_eq!(ctx.eps_combined(8, 0.0, d1, d2).unwrap(), g(7) / 2.0 * d1 * d1);
        for i in 6..=8 {
            assert_eq!(ctx.eps_combined(i, 0.0, 0.0, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn eps_beyond_validity_is_infinite() {
        let m = NonlinearityModel::affine(1.0, 0.3).unwrap();
        let (ctx, _, _) = affine_ctx(&m, 0.5);
        assert_eq!(ctx.eps_basic(1, 1e4).unwrap(), f64::INFINITY);
        assert!(ctx.eps_basic(9, 1.0).is_err());
    }

    #[test]
    fn small_gain_margins() {
        let pr = params(1.0, 2.0);
        let g = gamma_constants(pr, &KernelNorms::zero(), &bounds(0.5, 0.5, 0.0, 0.0)).unwrap();
        assert_eq!(check_small_gain(&g, pr, 0.0, 0.0), [4.0, 3.0, 0.5]);
        assert!(check_small_gain(&g, pr, 1e6, 0.0).iter().any(|m| *m < 0.0));
    }

    #[test]
    fn third_margin_vanishes_at_its_root() {
        let pr = params(2.0, 1.0);
        let g = gamma_constants(pr, &KernelNorms::zero(), &bounds(0.0, 0.0, 0.0, 0.0)).unwrap();
        // γ7 δ1²/2 = a/2 ⇒ δ1 = √(a/γ7) = √(2/4)
        let d1 = (pr.a() / g.get(7)).sqrt();
        let m = check_small_gain(&g, pr, d1, 0.0);
        assert!(m[2].abs() < 1e-15);
        assert!(!(m[2] > 1e-15));
    }

    #[test]
    fn linear_case_collapses() {
        let pr = params(1.3, 2.7);
        let d = KernelDesign::build(pr, 101).unwrap();
        let m = NonlinearityModel::constant(1.3).unwrap();
        let c = certify(pr, &d.norms, &bounds(0.4, 1.0, 0.0, 0.0), &m, OperatingRadius::Max).unwrap();
        assert!(c.feasible);
        assert_eq!(c.sigma_star, Some(2.7));
        assert_eq!(c.omega_star, Some(OmegaStar { value: OMEGA_CAP, capped: true }));
    }

    #[test]
    fn omega_star_is_tight() {
        let m = NonlinearityModel::affine(1.0, 0.05).unwrap();
        let (ctx, pr, ml) = affine_ctx(&m, 0.05);
        let (d1, d2) = (0.01, 0.005);
        let w = solve_omega_star(&ctx, pr, ml, d1, d2).unwrap();
        assert!(!w.capped && w.value > 0.0, "{w:?}");
        let slack = |w: f64| ctx.omega_slacks(pr, energy_of(ml, w), d1, d2).unwrap();
        assert!(slack(w.value).iter().all(|m| *m >= STRICT_MARGIN));
        assert!(slack(1.01 * w.value).iter().any(|m| *m < STRICT_MARGIN));
        let s = sigma_star(&ctx, pr, energy_of(ml, w.value), d1, d2).unwrap();
        assert!(s > 0.0 && s < pr.sigma());
    }

    #[test]
    fn omega_star_requires_feasibility() {
        let m = NonlinearityModel::affine(1.0, 0.05).unwrap();
        let (ctx, pr, ml) = affine_ctx(&m, 0.05);
        assert!(matches!(solve_omega_star(&ctx, pr, ml, 10.0, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn infeasible_certificate_is_data() {
        let pr = params(1.0, 2.0);
        let d = KernelDesign::build(pr, 101).unwrap();
        let m = NonlinearityModel::affine(1.0, 0.3).unwrap();
        let c = certify(pr, &d.norms, &bounds(0.5, 1.0, 5.0, 1.0), &m, OperatingRadius::Max).unwrap();
        assert!(!c.feasible);
        assert!(c.sigma_star.is_none() && c.omega_star.is_none());
    }

    #[test]
    fn zero_radius_rate_matches_closed_form() {
        let pr = params(1.0, 2.0);
        let d = KernelDesign::build(pr, 101).unwrap();
        let m = NonlinearityModel::affine(1.0, 0.05).unwrap();
        let b = bounds(0.05, 0.1, 0.01, 0.005);
        let c = certify(pr, &d.norms, &b, &m, OperatingRadius::Value(0.0)).unwrap();
        let g = |k| c.gamma.get(k);
        let (d1, d2) = (0.01, 0.005);
        let want = 0.5
            * (2.0 * 2.0 - (g(3) * d2 + g(1) * d1 + g(14) * d1 * d1))
                .min(2.0 * 3.0 - 2.0 * (g(6) * d2 + g(4) * d1 + g(9) * d1 * d1));
        assert_eq!(c.sigma_star, Some(want));
        assert_eq!(c.e_star, Some(0.0));
    }

    #[test]
    fn certificate_is_deterministic_and_round_trips() {
        let pr = params(1.0, 2.0);
        let d = KernelDesign::build(pr, 101).unwrap();
        let m = NonlinearityModel::affine(1.0, 0.05).unwrap();
        let b = bounds(0.05, 0.1, 0.01, 0.005);
        let c1 = certify(pr, &d.norms, &b, &m, OperatingRadius::Max).unwrap();
        let c2 = certify(pr, &d.norms, &b, &m, OperatingRadius::Max).unwrap();
        assert_eq!(c1, c2);
        let json = serde_json::to_string(&c1).unwrap();
        let back: Certificate = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c1);
        let g = gamma_constants(back.params, &back.norms, &back.bounds).unwrap();
        assert_eq!(check_small_gain(&g, back.params, b.delta1, b.delta2), c1.conditions.base);
    }
}
