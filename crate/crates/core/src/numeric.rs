//! Small quadrature, search and finite-difference helpers shared by the
//! kernel, certificate and simulation modules.

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Trapezoid weight of node `k` on a line of `len` nodes.
#[inline]
pub fn trapezoid_weight(k: usize, len: usize, h: f64) -> f64 {
    if len < 2 {
        0.0
    } else if k == 0 || k == len - 1 {
        0.5 * h
    } else {
        h
    }
}

/// Composite Simpson rule on uniformly spaced samples.
///
/// Works for any number of samples: an odd number of intervals closes with
/// Simpson's 3/8 rule on the last three, a single interval falls back to
/// the trapezoid rule.
pub fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let intervals = n - 1;
    if intervals == 1 {
        return trapezoid(values, h);
    }
    let (even_part, tail) = if intervals.is_multiple_of(2) {
        (intervals, 0)
    } else {
        (intervals - 3, 3)
    };
    let mut s = 0.0;
    if even_part > 0 {
        let v = &values[..=even_part];
        let mut acc = v[0] + v[even_part];
        for (k, x) in v.iter().enumerate().take(even_part).skip(1) {
            acc += if k % 2 == 1 { 4.0 * x } else { 2.0 * x };
        }
        s += acc * h / 3.0;
    }
    if tail == 3 {
        let v = &values[even_part..];
        s += 3.0 * h / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
    }
    s
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance
/// `tol`.
    #[allow(clippy::too_many_arguments)]
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 48)
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
/// Returns `(argmax, max)`; the endpoints are not inspected.
pub fn golden_max<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol * (1.0 + x1.abs().max(x2.abs())) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximum of `f` over `[lo, hi]`: uniform scan with `samples` points
/// (endpoints included), then golden-section polish around every sampled
/// local maximum.
pub fn scan_max<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64, samples: usize, tol: f64) -> f64 {
    if hi <= lo {
        return f(lo);
    }
    let samples = samples.max(3);
    let step = (hi - lo) / (samples - 1) as f64;
    let xs: Vec<f64> = (0..samples)
        .map(|k| if k == samples - 1 { hi } else { lo + step * k as f64 })
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut best = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    for k in 1..samples - 1 {
        if ys[k] >= ys[k - 1] && ys[k] >= ys[k + 1] {
            let (_, v) = golden_max(f, xs[k - 1], xs[k + 1], tol);
            best = best.max(v);
        }
    }
    best
}

/// Fornberg's finite-difference weights: derivatives `0..=order` at `x0`
/// from samples at `xs`. Returns `w[d][k]`.
pub fn fd_weights(x0: f64, xs: &[f64], order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] *= c4 / c3;
        }
        c1 = c2;
    }
    c
}

/// Derivative of order `order` at index `at` of a uniformly spaced line,
/// using the `width` nearest samples (shifted inward at the ends).
pub fn line_derivative(values: &[f64], h: f64, at: usize, order: usize, width: usize) -> f64 {
    let n = values.len();
    let width = width.min(n);
    let half = width / 2;
    let start = at.saturating_sub(half).min(n - width);
    let xs: Vec<f64> = (start..start + width).map(|k| k as f64).collect();
    let w = fd_weights(at as f64, &xs, order);
    let scale = h.powi(order as i32);
    (0..width).map(|k| w[order][k] * values[start + k]).sum::<f64>() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics_with_any_count() {
        for n in 3..12 {
            let h = 1.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|k| {
                let x = k as f64 * h;
                x * x * x - 2.0 * x + 1.0
            }).collect();
            assert!((simpson(&v, h) - 0.25).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn trapezoid_weights_sum_to_length() {
        let h = 0.1;
        let s: f64 = (0..11).map(|k| trapezoid_weight(k, 11, h)).sum();
        assert!((s - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_simpson_integrates_smooth_function() {
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-13);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn scan_max_finds_interior_peak() {
        let f = |x: f64| -(x - 0.3137).powi(2) + 2.0;
        let m = scan_max(&f, -1.0, 1.0, 17, 1e-12);
        assert!((m - 2.0).abs() < 1e-15);
    }

    #[test]
    fn fornberg_reproduces_central_stencils() {
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for k in 0..5 {
            assert!((w[1][k] - d1[k]).abs() < 1e-14);
            assert!((w[2][k] - d2[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn one_sided_derivative_is_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / (n - 1) as f64;
            let v: Vec<f64> = (0..n).map(|k| (k as f64 * h).sin()).collect();
            (line_derivative(&v, h, 0, 1, 5) - 1.0).abs()
        };
        let ratio = err(21) / err(41);
        assert!(ratio > 12.0, "ratio {ratio}");
    }
}
