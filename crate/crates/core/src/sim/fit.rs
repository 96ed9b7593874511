use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};

/// Samples below this level are treated as round-off.
pub const NOISE_FLOOR: f64 = 1e-12;
const MIN_SAMPLES: usize = 10;

/// Least-squares exponential fit `values ≈ C e^{−rate·t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub rate: f64,
    pub window: (f64, f64),
    pub r2: f64,
    pub samples: usize,
}

/// Fit over `[0.1·t_end, first time the value drops below 1e−12]`, where
/// `t_end` is the last sample time.
pub fn fit_decay_rate(times: &[f64], values: &[f64]) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(argument("times and values differ in length"));
    }
    let Some(&t_end) = times.last() else {
        return Err(Error::InsufficientData { got: 0, need: MIN_SAMPLES });
    };
    let t_hi = times
        .iter()
        .zip(values)
        .find(|(_, v)| **v < NOISE_FLOOR)
        .map(|(t, _)| *t)
        .unwrap_or(t_end);
    fit_decay_rate_window(times, values, 0.1 * t_end, t_hi)
}

/// Fit over an explicit window; samples at or below the noise floor are
/// dropped.
pub fn fit_decay_rate_window(times: &[f64], values: &[f64], t_lo: f64, t_hi: f64) -> Result<RateFit> {
    if times.len() != values.len() {
        return Err(argument("times and values differ in length"));
    }
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(t, v)| **t >= t_lo && **t <= t_hi && **v >= NOISE_FLOOR && v.is_finite())
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData { got: pts.len(), need: MIN_SAMPLES });
    }
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let stt: f64 = pts.iter().map(|p| (p.0 - tm).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - tm) * (p.1 - ym)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ym).powi(2)).sum();
    if !(stt > 0.0) {
        return Err(argument("fit window contains a single time"));
    }
    let slope = sty / stt;
    let sse: f64 = pts.iter().map(|p| (p.1 - ym - slope * (p.0 - tm)).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(RateFit {
        rate: -slope,
        window: (pts[0].0, pts[pts.len() - 1].0),
        r2,
        samples: pts.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t_end: f64, m: usize) -> Vec<f64> {
        (0..=m).map(|k| t_end * k as f64 / m as f64).collect()
    }

    #[test]
    fn exact_exponential() {
        let t = grid(5.0, 200);
        let v: Vec<f64> = t.iter().map(|t| 3.0 * (-2.0 * t).exp()).collect();
        let f = fit_decay_rate(&t, &v).unwrap();
        assert!((f.rate - 2.0).abs() < 1e-6);
        assert!(f.r2 > 1.0 - 1e-12);
    }

    #[test]
    fn constant_has_zero_rate() {
        let t = grid(1.0, 50);
        let f = fit_decay_rate(&t, &vec![0.7; 51]).unwrap();
        assert!(f.rate.abs() < 1e-12);
    }

    #[test]
    fn window_skips_fast_transient() {
        let t = grid(10.0, 500);
        let v: Vec<f64> = t.iter().map(|t| (-t).exp() + 0.01 * (-10.0 * t).exp()).collect();
        let f = fit_decay_rate(&t, &v).unwrap();
        assert!((f.rate - 1.0).abs() < 0.02, "{}", f.rate);
    }

    #[test]
    fn stops_at_noise_floor() {
        let t = grid(40.0, 400);
        let v: Vec<f64> = t.iter().map(|t| (-t).exp()).collect();
        let f = fit_decay_rate(&t, &v).unwrap();
        assert!(f.window.1 < 27.7 && (f.rate - 1.0).abs() < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        let t = grid(1.0, 8);
        assert!(matches!(
            fit_decay_rate(&t, &[1.0; 9]),
            Err(Error::InsufficientData { need: 10, .. })
        ));
    }
}
