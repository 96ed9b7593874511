use std::f64::consts::PI;

use heatobs::kernel::{forward_transform, inverse_transform, Kernel2D, KernelDesign, KernelParams};
use heatobs::nonlinearity::NonlinearityModel;
use heatobs::sim::ic::cosine_series;
use heatobs::sim::plant_rhs;
use proptest::prelude::*;

fn band_limited(n: usize, coef: &[(f64, f64)]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = i as f64 / (n - 1) as f64;
            coef.iter()
                .enumerate()
                .map(|(k, (c, d))| {
                    let w = k as f64 * PI * x;
                    c * w.cos() + d * w.sin()
                })
                .sum()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transforms_invert_each_other(
        a in 0.5f64..2.0,
        s in 0.5f64..4.0,
        coef in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6),
    ) {
        let d = KernelDesign::build(KernelParams::new(a, s).unwrap(), 101).unwrap();
        let f = band_limited(101, &coef);
        let scale = f.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let back = inverse_transform(&forward_transform(&f, &d.p).unwrap(), &d.l).unwrap();
        let err = back.iter().zip(&f).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-3 * scale, "error {err:e}");
    }

    #[test]
    fn forward_transform_is_linear(
        s in 0.5f64..4.0,
        c1 in -2.0f64..2.0,
        c2 in -2.0f64..2.0,
        k in 0u32..5,
    ) {
        let p = Kernel2D::direct(KernelParams::new(1.0, s).unwrap(), 65).unwrap();
        let f = cosine_series(65, 0.3, &[(k, 1.0)]);
        let g = band_limited(65, &[(0.1, 0.0), (0.0, 0.4)]);
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| c1 * x + c2 * y).collect();
        let (tf, tg) = (forward_transform(&f, &p).unwrap(), forward_transform(&g, &p).unwrap());
        let tm = forward_transform(&mix, &p).unwrap();
        for i in 0..65 {
            let want = c1 * tf[i] + c2 * tg[i];
            prop_assert!((tm[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn kernel_depends_only_on_the_ratio(a in 0.3f64..3.0, s in 0.3f64..6.0, k in 0.5f64..4.0) {
        let p = Kernel2D::direct(KernelParams::new(a, s).unwrap(), 41).unwrap();
        let q = Kernel2D::direct(KernelParams::new(k * a, k * s).unwrap(), 41).unwrap();
        for (x, y) in p.values.iter().zip(&q.values) {
            prop_assert!((x - y).abs() <= 1e-12 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn diagonal_is_linear_in_x(a in 0.3f64..3.0, s in 0.1f64..8.0) {
        let p = Kernel2D::direct(KernelParams::new(a, s).unwrap(), 51).unwrap();
        for i in 0..51 {
            let x = i as f64 / 50.0;
            prop_assert!((p.at(i, i) + s * x / (2.0 * a)).abs() <= 1e-14 * (1.0 + s / a));
        }
    }

    #[test]
    fn plant_flux_conserves_mass(
        b in -0.5f64..0.5,
        mean in 0.2f64..0.8,
        modes in prop::collection::vec((1u32..6, -0.1f64..0.1), 1..4),
    ) {
        let model = NonlinearityModel::affine(1.0, b).unwrap();
        let v = cosine_series(81, mean, &modes);
        let r = plant_rhs(&v, &model).unwrap();
        let h = 1.0 / 80.0;
        let total: f64 = r.iter().enumerate().map(|(i, x)| if i == 0 || i == 80 { 0.5 * h * x } else { h * x }).sum();
        let scale: f64 = r.iter().map(|x| x.abs()).sum::<f64>() * h;
        prop_assert!(total.abs() <= 1e-12 * (1.0 + scale), "{total:e}");
    }
}
