//! Browser demo: kernel surface, certified rate against the decay gain, and
//! an observer error decay. Each export wraps a plain function so the
//! numerics can be tested natively.

use heatobs::certificate::{certify, OperatingRadius, TrajectoryBounds};
use heatobs::kernel::{KernelDesign, KernelParams};
use heatobs::nonlinearity::NonlinearityModel;
use heatobs::sim::ic::{cosine_series, ErrorShape};
use heatobs::sim::{simulate_pair, SimConfig};
use wasm_bindgen::prelude::*;

/// Largest grid the page asks for; keeps the tab responsive.
pub const MAX_NODES: usize = 201;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn grid_nodes(n: usize) -> Result<usize, String> {
    if (5..=MAX_NODES).contains(&n) {
        Ok(n)
    } else {
        Err(format!("nodes must lie in 5..={MAX_NODES}, got {n}"))
    }
}

/// Row-major `n × n` table of `p(x_i, y_j)` for `j ≥ i`, NaN below the
/// diagonal, followed by `p1` on the grid and finally `p10`.
pub fn kernel_surface_native(a: f64, sigma: f64, n: usize) -> Result<Vec<f64>, String> {
    let n = grid_nodes(n)?;
    let params = KernelParams::new(a, sigma).map_err(err)?;
    let p = heatobs::kernel::Kernel2D::direct(params, n).map_err(err)?;
    let gains = heatobs::kernel::compute_gains(params, n).map_err(err)?;
    let mut out = vec![f64::NAN; n * n];
    for i in 0..n {
        for j in i..n {
            out[i * n + j] = p.at(i, j);
        }
    }
    out.extend(&gains.p1);
    out.push(gains.p10);
    Ok(out)
}

/// Certified rate `σ*` at zero radius for `α = 1 + b v`, `a = 1`, plant
/// bounded by `m_v`, over a geometric grid of `count` gains. Returns
/// `[σ_0, σ*_0, σ_1, σ*_1, …]`; infeasible gains give NaN.
pub fn rate_curve_native(
    b: f64,
    m_v: f64,
    vx_inf: f64,
    vxx_inf: f64,
    sigma_lo: f64,
    sigma_hi: f64,
    count: usize,
) -> Result<Vec<f64>, String> {
    if !(sigma_lo > 0.0 && sigma_hi > sigma_lo) || !(2..=64).contains(&count) {
        return Err("need 0 < sigma_lo < sigma_hi and 2 <= count <= 64".into());
    }
    let model = NonlinearityModel::affine(1.0, b).map_err(err)?;
    let bounds = TrajectoryBounds::conservative(&model, 1.0, m_v, vx_inf, vxx_inf).map_err(err)?;
    let mut out = Vec::with_capacity(2 * count);
    for k in 0..count {
        let s = sigma_lo * (sigma_hi / sigma_lo).powf(k as f64 / (count - 1) as f64);
        let params = KernelParams::new(1.0, s).map_err(err)?;
        let d = KernelDesign::build(params, 101).map_err(err)?;
        let c = certify(params, &d.norms, &bounds, &model, OperatingRadius::Value(0.0)).map_err(err)?;
        out.push(s);
        out.push(c.sigma_star.unwrap_or(f64::NAN));
    }
    Ok(out)
}

/// Co-simulate plant and observer for `α = 1 + b v` on 51 nodes. Returns
/// `[t_0, |e|_H1(t_0), t_1, …]`.
pub fn error_decay_native(a: f64, sigma: f64, b: f64, amplitude: f64, t_end: f64) -> Result<Vec<f64>, String> {
    if !(t_end > 0.0 && t_end <= 20.0) {
        return Err("t_end must lie in (0, 20]".into());
    }
    let n = 51;
    let model = NonlinearityModel::affine(1.0, b).map_err(err)?;
    let d = KernelDesign::build(KernelParams::new(a, sigma).map_err(err)?, n).map_err(err)?;
    let v0 = cosine_series(n, 0.5, &[(1, 0.05)]);
    let e = ErrorShape::Transformed { modes: vec![(0, amplitude), (1, 0.2 * amplitude)] }
        .build(&d.p, d.gains.p10)
        .map_err(err)?;
    let vh: Vec<f64> = v0.iter().zip(&e).map(|(x, y)| x - y).collect();
    let cfg = SimConfig { n, cfl: 0.4, t_end, record_stride: 50, plant_ic: v0, observer_ic: vh };
    let tr = simulate_pair(&cfg, &model, &d.gains, None).map_err(err)?;
    Ok(tr.times.iter().zip(&tr.err_h1).flat_map(|(t, e)| [*t, *e]).collect())
}

#[wasm_bindgen]
pub fn kernel_surface(a: f64, sigma: f64, n: usize) -> Result<Vec<f64>, JsError> {
    kernel_surface_native(a, sigma, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn rate_curve(
    b: f64,
    m_v: f64,
    vx_inf: f64,
    vxx_inf: f64,
    sigma_lo: f64,
    sigma_hi: f64,
    count: usize,
) -> Result<Vec<f64>, JsError> {
    rate_curve_native(b, m_v, vx_inf, vxx_inf, sigma_lo, sigma_hi, count).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn error_decay(a: f64, sigma: f64, b: f64, amplitude: f64, t_end: f64) -> Result<Vec<f64>, JsError> {
    error_decay_native(a, sigma, b, amplitude, t_end).map_err(|e| JsError::new(&e))
}
