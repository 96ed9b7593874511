use heatobs_web::{error_decay_native, kernel_surface_native, rate_curve_native};

#[test]
fn surface_layout_and_diagonal() {
    let n = 21;
    let v = kernel_surface_native(1.0, 2.0, n).unwrap();
    assert_eq!(v.len(), n * n + n + 1);
    assert!(v[n].is_nan());
    for i in 0..n {
        let x = i as f64 / (n - 1) as f64;
        assert!((v[i * n + i] + x).abs() < 1e-14);
    }
    assert_eq!(v[n * n + n], 1.0);
}

#[test]
fn rejects_bad_input() {
    assert!(kernel_surface_native(1.0, 2.0, 1000).is_err());
    assert!(kernel_surface_native(-1.0, 2.0, 21).is_err());
    assert!(rate_curve_native(0.2, 0.05, 0.5, 1.0, 2.0, 1.0, 5).is_err());
    assert!(error_decay_native(1.0, 2.0, 0.1, 0.1, 0.0).is_err());
}

#[test]
fn rate_curve_rises_then_falls() {
    let v = rate_curve_native(0.2, 0.05, 0.5, 1.0, 0.1, 10.0, 12).unwrap();
    let rates: Vec<f64> = v.chunks(2).map(|c| c[1]).collect();
    let best = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(best > rates[0] && best > rates[11], "{rates:?}");
}

#[test]
fn error_decays() {
    let v = error_decay_native(1.05, 2.0, 0.1, 0.05, 3.0).unwrap();
    let (first, last) = (v[1], v[v.len() - 1]);
    assert!(last < 1e-2 * first, "{first} -> {last}");
    assert_eq!(v[v.len() - 2], 3.0);
}
