//! State-dependent diffusivity `α(r)` and the scalar quantities derived from
//! it: Lipschitz constants of `α`, `α′` on `[−s, s]`, the mismatch bound `δ̄`
//! and the mismatch-minimising design diffusivity.

use serde::{Deserialize, Serialize};

use crate::error::{argument, domain, Result};
use crate::numeric::{golden_max, scan_max};

/// Lattice size for scanned maxima.
pub const SCAN_POINTS: usize = 4096;
const POLISH_TOL: f64 = 1e-12;

/// A positive `C²` scalar function from one of five families.
///
/// Used directly as a diffusivity and, in [`crate::material`], for the heat
/// capacity and the conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    /// `a0`.
    Constant { a0: f64 },
    /// `a0 + b r`.
    Affine { a0: f64, b: f64 },
    /// `a0 e^{b r}`.
    Exponential { a0: f64, b: f64 },
    /// `a0 (1 + b r²) / (1 + c r²)`, `b, c ≥ 0`.
    Rational { a0: f64, b: f64, c: f64 },
    /// `lo + (hi − lo) · ½(1 + tanh((r − r0)/width))`.
    SmoothedStep { lo: f64, hi: f64, r0: f64, width: f64 },
}

impl Profile {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Profile::Constant { a0 } => a0,
            Profile::Affine { a0, b } => a0 + b * r,
            Profile::Exponential { a0, b } => a0 * (b * r).exp(),
            Profile::Rational { a0, b, c } => a0 * (1.0 + b * r * r) / (1.0 + c * r * r),
            Profile::SmoothedStep { lo, hi, r0, width } => {
                lo + (hi - lo) * 0.5 * (1.0 + ((r - r0) / width).tanh())
            }
        }
    }

    pub fn d1(&self, r: f64) -> f64 {
        match *self {
            Profile::Constant { .. } => 0.0,
            Profile::Affine { b, .. } => b,
            Profile::Exponential { a0, b } => a0 * b * (b * r).exp(),
            Profile::Rational { a0, b, c } => {
                let d = 1.0 + c * r * r;
                a0 * 2.0 * r * (b - c) / (d * d)
            }
            Profile::SmoothedStep { lo, hi, r0, width } => {
                let s = sech2((r - r0) / width);
                (hi - lo) / (2.0 * width) * s
            }
        }
    }

    pub fn d2(&self, r: f64) -> f64 {
        match *self {
            Profile::Constant { .. } | Profile::Affine { .. } => 0.0,
            Profile::Exponential { a0, b } => a0 * b * b * (b * r).exp(),
            Profile::Rational { a0, b, c } => {
                let d = 1.0 + c * r * r;
                a0 * 2.0 * (b - c) * (1.0 - 3.0 * c * r * r) / (d * d * d)
            }
            Profile::SmoothedStep { lo, hi, r0, width } => {
                let z = (r - r0) / width;
                -(hi - lo) / (width * width) * sech2(z) * z.tanh()
            }
        }
    }

    fn check_params(&self) -> Result<()> {
        let bad = |m: &str| Err(argument(format!("{m} in {self:?}")));
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match *self {
            Profile::Constant { a0 } | Profile::Affine { a0, .. } | Profile::Exponential { a0, .. }
                if !(a0 > 0.0) =>
            {
                bad("a0 must be positive")
            }
            Profile::Affine { a0, b } | Profile::Exponential { a0, b } if !finite(&[a0, b]) => {
                bad("non-finite parameter")
            }
            Profile::Rational { a0, b, c } => {
                if !finite(&[a0, b, c]) || !(a0 > 0.0) || b < 0.0 || c < 0.0 {
                    bad("rational family needs a0 > 0, b >= 0, c >= 0")
                } else {
                    Ok(())
                }
            }
            Profile::SmoothedStep { lo, hi, r0, width } => {
                if !finite(&[lo, hi, r0, width]) || !(lo > 0.0 && hi > 0.0 && width > 0.0) {
                    bad("smoothed step needs lo, hi, width > 0")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Largest interval on which the family is positive by construction
    /// (affine: where it stays above a tenth of `a0`).
    fn natural_validity(&self) -> (f64, f64) {
        match *self {
            Profile::Affine { a0, b } if b > 0.0 => (-0.9 * a0 / b, f64::INFINITY),
            Profile::Affine { a0, b } if b < 0.0 => (f64::NEG_INFINITY, 0.9 * a0 / -b),
            _ => (f64::NEG_INFINITY, f64::INFINITY),
        }
    }

    /// Finite window holding every interior extremum of `|d1|`, `|d2|`;
    /// outside it both decay monotonically in `|r|`.
    fn feature_window(&self) -> Option<(f64, f64)> {
        match *self {
            Profile::Rational { c, .. } if c > 0.0 => {
                let w = 12.0 / c.sqrt();
                Some((-w, w))
            }
            Profile::SmoothedStep { r0, width, .. } => Some((r0 - 12.0 * width, r0 + 12.0 * width)),
            _ => None,
        }
    }

    /// `max_{|r| ≤ s} |g|` for derivative `order` when it has a closed form.
    fn closed_derivative_sup(&self, order: u8, s: f64) -> Option<f64> {
        match (*self, order) {
            (Profile::Constant { .. }, _) => Some(0.0),
            (Profile::Affine { b, .. }, 1) => Some(b.abs()),
            (Profile::Affine { .. }, _) => Some(0.0),
            // |α′|, |α″| grow with |r| on the side where b r > 0
            (Profile::Exponential { a0, b }, 1) => Some(a0 * b.abs() * (b.abs() * s).exp()),
            (Profile::Exponential { a0, b }, _) => Some(a0 * b * b * (b.abs() * s).exp()),
            (Profile::Rational { a0, b, c: 0.0 }, 1) => Some(2.0 * a0 * b * s),
            (Profile::Rational { a0, b, c: 0.0 }, _) => Some(2.0 * a0 * b),
            _ => None,
        }
    }
}

fn sech2(z: f64) -> f64 {
    if z.abs() > 350.0 {
        return 0.0;
    }
    let c = z.cosh();
    1.0 / (c * c)
}

/// A diffusivity with two derivatives and a validity interval.
pub trait Diffusivity: Send + Sync + std::fmt::Debug {
    fn alpha(&self, r: f64) -> f64;
    /// `out[i] = α(r[i])`; models may override with a vectorised loop.
    fn alpha_into(&self, r: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(r) {
            *o = self.alpha(x);
        }
    }
    fn alpha_d1(&self, r: f64) -> f64;
    fn alpha_d2(&self, r: f64) -> f64;
    /// Interval where `α > 0` is guaranteed.
    fn validity(&self) -> (f64, f64);
    /// Closed-form `max_{|r|≤s} |α⁽ᵒʳᵈᵉʳ⁾|`, if the model has one.
    fn closed_derivative_sup(&self, _order: u8, _s: f64) -> Option<f64> {
        None
    }
    /// Finite window containing every interior extremum of `|α′|`, `|α″|`;
    /// `None` when there are none.
    fn feature_window(&self) -> Option<(f64, f64)>;

    fn contains(&self, r: f64) -> bool {
        let (lo, hi) = self.validity();
        lo <= r && r <= hi
    }
}

/// A diffusivity given directly as a [`Profile`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearityModel {
    pub profile: Profile,
    validity: (f64, f64),
}

impl NonlinearityModel {
    /// Use the family's natural validity interval.
    pub fn new(profile: Profile) -> Result<Self> {
        profile.check_params()?;
        Ok(Self { profile, validity: profile.natural_validity() })
    }

    /// Restrict the validity interval; `α > 0` is verified on it by a scan.
    pub fn with_validity(profile: Profile, lo: f64, hi: f64) -> Result<Self> {
        profile.check_params()?;
        if !(lo < hi) || lo.is_nan() || hi.is_nan() {
            return Err(argument(format!("empty validity interval [{lo}, {hi}]")));
        }
        let (nlo, nhi) = profile.natural_validity();
        let (lo, hi) = (lo.max(nlo), hi.min(nhi));
        if lo.is_finite() && hi.is_finite() {
            let min = -scan_max(&|r| -profile.value(r), lo, hi, SCAN_POINTS, POLISH_TOL);
            if !(min > 0.0) {
                return Err(argument(format!("diffusivity is not positive on [{lo}, {hi}]")));
            }
        }
        Ok(Self { profile, validity: (lo, hi) })
    }

    pub fn constant(a0: f64) -> Result<Self> {
        Self::new(Profile::Constant { a0 })
    }

    pub fn affine(a0: f64, b: f64) -> Result<Self> {
        Self::new(Profile::Affine { a0, b })
    }
}

impl Diffusivity for NonlinearityModel {
    fn alpha(&self, r: f64) -> f64 {
        self.profile.value(r)
    }
    fn alpha_into(&self, r: &[f64], out: &mut [f64]) {
        match self.profile {
            Profile::Constant { a0 } => out.iter_mut().for_each(|o| *o = a0),
            Profile::Affine { a0, b } => {
                for (o, &x) in out.iter_mut().zip(r) {
                    *o = a0 + b * x;
                }
            }
            p => {
                for (o, &x) in out.iter_mut().zip(r) {
                    *o = p.value(x);
                }
            }
        }
    }
    fn alpha_d1(&self, r: f64) -> f64 {
        self.profile.d1(r)
    }
    fn alpha_d2(&self, r: f64) -> f64 {
        self.profile.d2(r)
    }
    fn validity(&self) -> (f64, f64) {
        self.validity
    }
    fn closed_derivative_sup(&self, order: u8, s: f64) -> Option<f64> {
        self.profile.closed_derivative_sup(order, s)
    }
    fn feature_window(&self) -> Option<(f64, f64)> {
        self.profile.feature_window()
    }
}

fn check_symmetric(model: &dyn Diffusivity, s: f64) -> Result<()> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(argument(format!("interval half-width must be finite and >= 0, got {s}")));
    }
    if !model.contains(-s) || !model.contains(s) {
        let (lo, hi) = model.validity();
        return Err(domain(format!("[-{s}, {s}] leaves the validity interval [{lo}, {hi}]")));
    }
    Ok(())
}

/// Precomputed scan of `|α⁽ᵒʳᵈᵉʳ⁾|` for repeated Lipschitz queries.
///
/// The lattice and its polished peaks depend only on the model, never on
/// `s`, so `L(s)` is nondecreasing in `s`.
#[derive(Debug, Clone)]
pub struct LipschitzTable<'a> {
    model: &'a dyn Diffusivity,
    order: u8,
    lattice: Vec<(f64, f64)>,
    peaks: Vec<(f64, f64)>,
}

impl<'a> LipschitzTable<'a> {
    pub fn new(model: &'a dyn Diffusivity, order: u8) -> Result<Self> {
        if order != 1 && order != 2 {
            return Err(argument(format!("Lipschitz order must be 1 or 2, got {order}")));
        }
        let g = move |r: f64| derivative(model, order, r).abs();
        let mut lattice = Vec::new();
        let mut peaks = Vec::new();
        let window = model.feature_window().map(|(wlo, whi)| {
            let (lo, hi) = model.validity();
            (wlo.max(lo), whi.min(hi))
        });
        if model.closed_derivative_sup(order, 0.0).is_none() {
            if let Some((lo, hi)) = window.filter(|(lo, hi)| lo < hi) {
                let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
                lattice = (0..SCAN_POINTS)
                    .map(|k| {
                        let r = if k == SCAN_POINTS - 1 { hi } else { lo + step * k as f64 };
                        (r, g(r))
                    })
                    .collect();
                for k in 1..SCAN_POINTS - 1 {
                    if lattice[k].1 >= lattice[k - 1].1 && lattice[k].1 >= lattice[k + 1].1 {
                        peaks.push(golden_max(&g, lattice[k - 1].0, lattice[k + 1].0, POLISH_TOL));
                    }
                }
            }
        }
        Ok(Self { model, order, lattice, peaks })
    }

    /// `L(s) = max_{|r|≤s} |α⁽ᵒʳᵈᵉʳ⁾(r)|`, with `L(0) = 0`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        check_symmetric(self.model, s)?;
        if s == 0.0 {
            return Ok(0.0);
        }
        if let Some(v) = self.model.closed_derivative_sup(self.order, s) {
            return Ok(v);
        }
        let g = |r: f64| derivative(self.model, self.order, r).abs();
        let inside = |r: f64| -s <= r && r <= s;
        let mut best = g(-s).max(g(s));
        for &(r, v) in self.lattice.iter().chain(&self.peaks) {
            if inside(r) {
                best = best.max(v);
            }
        }
        Ok(best)
    }
}

fn derivative(model: &dyn Diffusivity, order: u8, r: f64) -> f64 {
    if order == 1 {
        model.alpha_d1(r)
    } else {
        model.alpha_d2(r)
    }
}

/// Lipschitz constant of `α` (order 1) or `α′` (order 2) on `[−s, s]`.
pub fn lipschitz_const(model: &dyn Diffusivity, s: f64, order: u8) -> Result<f64> {
    LipschitzTable::new(model, order)?.eval(s)
}

/// `(min, max)` of `α` on `[−m_v, m_v]`.
pub fn alpha_range(model: &dyn Diffusivity, m_v: f64) -> Result<(f64, f64)> {
    check_symmetric(model, m_v)?;
    if m_v == 0.0 {
        let v = model.alpha(0.0);
        return Ok((v, v));
    }
    let max = scan_max(&|r| model.alpha(r), -m_v, m_v, SCAN_POINTS, POLISH_TOL);
    let min = -scan_max(&|r| -model.alpha(r), -m_v, m_v, SCAN_POINTS, POLISH_TOL);
    Ok((min, max))
}

/// `δ̄ = max_{|r|≤M_v} |α(r) − a|`.
pub fn delta_bar(model: &dyn Diffusivity, a: f64, m_v: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(argument(format!("design diffusivity must be positive, got {a}")));
    }
    let (min, max) = alpha_range(model, m_v)?;
    Ok((max - a).abs().max((a - min).abs()))
}

/// The design diffusivity minimising `δ̄`: the midrange of `α` on
/// `[−M_v, M_v]`.
pub fn a_opt(model: &dyn Diffusivity, m_v: f64) -> Result<f64> {
    let (min, max) = alpha_range(model, m_v)?;
    Ok(0.5 * (min + max))
}
