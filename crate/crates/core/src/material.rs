//! Heat capacity `c(T)` and conductivity `κ(T)` reduced to a single
//! diffusivity through the enthalpy `v = ĉ(T) = ∫_0^T c`.
//!
//! In enthalpy variables `c(T) T_t = (κ(T) T_x)_x` becomes
//! `v_t = (α(v) v_x)_x` with `α = (κ/c) ∘ ĉ⁻¹`.

use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Result};
use crate::nonlinearity::{Diffusivity, Profile};
use crate::numeric::{adaptive_simpson, scan_max};

const QUAD_TOL: f64 = 1e-12;
const NEWTON_TOL: f64 = 1e-12;
const TABLE_NODES: usize = 4097;

/// The serialisable part of a material.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub c: Profile,
    pub kappa: Profile,
    /// Temperature interval on which `c, κ > 0` is guaranteed.
    pub t_range: (f64, f64),
}

/// `c`, `κ` and a cubic Hermite table of `α(v)` for fast evaluation.
#[derive(Debug, Clone)]
pub struct MaterialModel {
    spec: MaterialSpec,
    v_range: (f64, f64),
    table_h: f64,
    table_alpha: Vec<f64>,
    table_slope: Vec<f64>,
}

impl MaterialModel {
    pub fn new(spec: MaterialSpec) -> Result<Self> {
        let (lo, hi) = spec.t_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(argument(format!("temperature range must be finite and nonempty, got [{lo}, {hi}]")));
        }
        for (name, f) in [("c", spec.c), ("kappa", spec.kappa)] {
            let min = -scan_max(&|r| -f.value(r), lo, hi, 4096, 1e-12);
            if !(min > 0.0) {
                return Err(argument(format!("{name} is not positive on [{lo}, {hi}]")));
            }
        }
        let mut m = Self {
            spec,
            v_range: (0.0, 0.0),
            table_h: 0.0,
            table_alpha: Vec::new(),
            table_slope: Vec::new(),
        };
        m.v_range = (m.enthalpy_raw(lo), m.enthalpy_raw(hi));
        let (vlo, vhi) = m.v_range;
        m.table_h = (vhi - vlo) / (TABLE_NODES - 1) as f64;
        // march the inverse along the table so each Newton solve starts close
        let mut t = lo;
        for k in 0..TABLE_NODES {
            let v = if k == TABLE_NODES - 1 { vhi } else { vlo + m.table_h * k as f64 };
            t = m.invert_from(v, t, (lo, hi))?;
            m.table_alpha.push(m.q(t));
            m.table_slope.push(m.q_d1(t) / spec.c.value(t));
        }
        Ok(m)
    }

    pub fn spec(&self) -> &MaterialSpec {
        &self.spec
    }

    /// Enthalpy interval `[ĉ(T_lo), ĉ(T_hi)]`.
    pub fn v_range(&self) -> (f64, f64) {
        self.v_range
    }

    fn enthalpy_raw(&self, r: f64) -> f64 {
        let c = self.spec.c;
        adaptive_simpson(&|s| c.value(s), 0.0, r, QUAD_TOL)
    }

    /// `ĉ(r) = ∫_0^r c(ρ) dρ`.
    pub fn enthalpy(&self, r: f64) -> Result<f64> {
        let (lo, hi) = self.spec.t_range;
        if !(lo <= r && r <= hi) {
            return Err(domain(format!("temperature {r} outside [{lo}, {hi}]")));
        }
        Ok(self.enthalpy_raw(r))
    }

    /// `ĉ⁻¹(v)` by Newton's method safeguarded with bisection.
    pub fn enthalpy_inverse(&self, v: f64) -> Result<f64> {
        let (vlo, vhi) = self.v_range;
        if !(vlo <= v && v <= vhi) {
            return Err(domain(format!("enthalpy {v} outside [{vlo}, {vhi}]")));
        }
        let (lo, hi) = self.spec.t_range;
        let guess = lo + (hi - lo) * (v - vlo) / (vhi - vlo);
        self.invert_from(v, guess, (lo, hi))
    }

    fn invert_from(&self, v: f64, guess: f64, (mut lo, mut hi): (f64, f64)) -> Result<f64> {
        let mut t = guess.clamp(lo, hi);
        for _ in 0..200 {
            let f = self.enthalpy_raw(t) - v;
            if f == 0.0 {
                return Ok(t);
            }
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - f / self.spec.c.value(t);
            if !(lo < next && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= NEWTON_TOL * t.abs().max(1.0) || hi - lo <= NEWTON_TOL {
                return Ok(next);
            }
            t = next;
        }
        Err(crate::Error::NumericalFailure { iterations: 200, residual: hi - lo })
    }

    /// `q = κ/c` as a function of temperature.
    fn q(&self, t: f64) -> f64 {
        self.spec.kappa.value(t) / self.spec.c.value(t)
    }

    fn q_d1(&self, t: f64) -> f64 {
        let (c, k) = (self.spec.c, self.spec.kappa);
        let cv = c.value(t);
        (k.d1(t) * cv - k.value(t) * c.d1(t)) / (cv * cv)
    }

    fn q_d2(&self, t: f64) -> f64 {
        let (c, k) = (self.spec.c, self.spec.kappa);
        let (c0, c1, c2) = (c.value(t), c.d1(t), c.d2(t));
        let (k0, k1, k2) = (k.value(t), k.d1(t), k.d2(t));
        (k2 * c0 - k0 * c2) / (c0 * c0) - 2.0 * c1 * (k1 * c0 - k0 * c1) / (c0 * c0 * c0)
    }

    /// `α(v)` without the table, through an exact inversion.
    pub fn alpha_exact(&self, v: f64) -> Result<f64> {
        Ok(self.q(self.enthalpy_inverse(v)?))
    }

    fn temperature_unchecked(&self, v: f64) -> f64 {
        let (vlo, vhi) = self.v_range;
        let (lo, hi) = self.spec.t_range;
        if vlo <= v && v <= vhi {
            let guess = lo + (hi - lo) * (v - vlo) / (vhi - vlo);
            self.invert_from(v, guess, (lo, hi)).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        }
    }

    /// `max_{|r|≤s} 1/c(ĉ⁻¹(r))`, the Lipschitz constant of `ĉ⁻¹` on
    /// `[−s, s]`.
    pub fn inverse_lipschitz(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) {
            return Err(argument(format!("half-width must be >= 0, got {s}")));
        }
        let (tlo, thi) = (self.enthalpy_inverse(-s)?, self.enthalpy_inverse(s)?);
        let c = self.spec.c;
        if tlo == thi {
            return Ok(1.0 / c.value(tlo));
        }
        Ok(scan_max(&|t| 1.0 / c.value(t), tlo, thi, 4096, 1e-12))
    }

    /// `1 / min c` over the temperatures of the enthalpy interval `[v1, v2]`.
    pub fn inverse_lipschitz_on(&self, v1: f64, v2: f64) -> Result<f64> {
        let (tlo, thi) = (self.enthalpy_inverse(v1.min(v2))?, self.enthalpy_inverse(v1.max(v2))?);
        let c = self.spec.c;
        if tlo == thi {
            return Ok(1.0 / c.value(tlo));
        }
        Ok(scan_max(&|t| 1.0 / c.value(t), tlo, thi, 4096, 1e-12))
    }
}

impl Diffusivity for MaterialModel {
    /// Cubic Hermite interpolation of the tabulated `α` (exact slopes).
    fn alpha(&self, v: f64) -> f64 {
        let (vlo, vhi) = self.v_range;
        if !(vlo <= v && v <= vhi) {
            return self.q(self.temperature_unchecked(v));
        }
        let u = (v - vlo) / self.table_h;
        let k = (u.floor() as usize).min(TABLE_NODES - 2);
        let s = u - k as f64;
        let (y0, y1) = (self.table_alpha[k], self.table_alpha[k + 1]);
        let (m0, m1) = (self.table_slope[k] * self.table_h, self.table_slope[k + 1] * self.table_h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1
    }

    fn alpha_d1(&self, v: f64) -> f64 {
        let t = self.temperature_unchecked(v);
        self.q_d1(t) / self.spec.c.value(t)
    }

    /// `α″ = (q″ c − q′ c′) / c³` at `T = ĉ⁻¹(v)`.
    fn alpha_d2(&self, v: f64) -> f64 {
        let t = self.temperature_unchecked(v);
        let c = self.spec.c;
        let c0 = c.value(t);
        (self.q_d2(t) * c0 - self.q_d1(t) * c.d1(t)) / (c0 * c0 * c0)
    }

    fn validity(&self) -> (f64, f64) {
        self.v_range
    }

    fn feature_window(&self) -> Option<(f64, f64)> {
        Some(self.v_range)
    }
}
