use heatobs::certificate::{gamma_constants, BoundsSource, EpsContext, GammaConstants, TrajectoryBounds};
use heatobs::kernel::{KernelDesign, KernelNorms, KernelParams};
use heatobs::nonlinearity::{NonlinearityModel, Profile};
use proptest::prelude::*;

fn norms_from(v: &[f64; 13]) -> KernelNorms {
    KernelNorms {
        p_l2sq: v[0],
        p_inf: v[1],
        px_l2sq: v[2],
        px_l4_4: v[3],
        pxx_l2sq: v[4],
        sup_diag_px_shift: v[5],
        l_l2sq: v[6],
        l_inf: v[7],
        lx_l2sq: v[8],
        ly_col1_l2sq: v[9],
        l_col1_l2sq: v[10],
        lyy_l2sq: v[11],
        sup_diag_ly: v[12],
    }
}

fn bounds(vx: f64, vxx: f64) -> TrajectoryBounds {
    TrajectoryBounds { m_v: 1.0, vx_inf: vx, vxx_inf: vxx, delta1: 0.0, delta2: 0.0, source: BoundsSource::User }
}

fn gammas(a: f64, s: f64, n: &[f64; 13], vx: f64, vxx: f64) -> GammaConstants {
    gamma_constants(KernelParams::new(a, s).unwrap(), &norms_from(n), &bounds(vx, vxx)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn gammas_nondecreasing_in_norms_and_bounds(
        a in 0.1f64..5.0,
        s in 0.1f64..10.0,
        base in prop::array::uniform13(0.0f64..5.0),
        bump in prop::array::uniform13(0.0f64..1.0),
        vx in 0.0f64..3.0,
        vxx in 0.0f64..3.0,
        dvx in 0.0f64..1.0,
        dvxx in 0.0f64..1.0,
    ) {
        let mut up = base;
        for k in 0..13 {
            up[k] += bump[k];
        }
        let g0 = gammas(a, s, &base, vx, vxx);
        let g1 = gammas(a, s, &up, vx + dvx, vxx + dvxx);
        for i in 1..=15 {
            prop_assert!(g1.get(i) >= g0.get(i), "gamma{i}: {} < {}", g1.get(i), g0.get(i));
            prop_assert!(g0.get(i) >= 0.0);
        }
    }

    #[test]
    fn gammas_nondecreasing_in_sigma(
        a in 0.1f64..5.0,
        s in 0.1f64..10.0,
        ds in 0.0f64..5.0,
        base in prop::array::uniform13(0.0f64..5.0),
        vx in 0.0f64..3.0,
    ) {
        let g0 = gammas(a, s, &base, vx, vx);
        let g1 = gammas(a, s + ds, &base, vx, vx);
        for i in 1..=15 {
            prop_assert!(g1.get(i) >= g0.get(i), "gamma{i}");
        }
    }
}

struct Fixture {
    models: Vec<NonlinearityModel>,
    gamma: GammaConstants,
    p_inf: f64,
}

fn fixture() -> &'static Fixture {
    static F: std::sync::OnceLock<Fixture> = std::sync::OnceLock::new();
    F.get_or_init(|| {
        let pr = KernelParams::new(1.0, 2.0).unwrap();
        let d = KernelDesign::build(pr, 101).unwrap();
        let gamma = gamma_constants(pr, &d.norms, &bounds(0.5, 1.0)).unwrap();
        let models = vec![
            NonlinearityModel::affine(1.0, 0.3).unwrap(),
            NonlinearityModel::new(Profile::Exponential { a0: 1.0, b: 0.4 }).unwrap(),
            NonlinearityModel::new(Profile::Rational { a0: 1.0, b: 2.0, c: 1.0 }).unwrap(),
            NonlinearityModel::new(Profile::SmoothedStep { lo: 0.5, hi: 1.5, r0: 0.3, width: 0.2 }).unwrap(),
        ];
        Fixture { models, gamma, p_inf: d.norms.p_inf }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn eps_nondecreasing_in_energy_and_deltas(
        which in 0usize..4,
        e in 0.0f64..4.0,
        de in 0.0f64..2.0,
        d1 in 0.0f64..1.0,
        d2 in 0.0f64..1.0,
        dd1 in 0.0f64..0.5,
        dd2 in 0.0f64..0.5,
    ) {
        let f = fixture();
        let ctx = EpsContext::new(f.gamma, f.p_inf, &f.models[which]).unwrap();
        for i in 1..=5 {
            let lo = ctx.eps_basic(i, e).unwrap();
            let hi = ctx.eps_basic(i, e + de).unwrap();
            prop_assert!(lo >= 0.0);
            prop_assert!(hi >= lo, "eps{i}: {hi} < {lo}");
        }
        for i in 6..=8 {
            let lo = ctx.eps_combined(i, e, d1, d2).unwrap();
            let hi = ctx.eps_combined(i, e + de, d1 + dd1, d2 + dd2).unwrap();
            prop_assert!(hi >= lo, "eps{i}: {hi} < {lo}");
            prop_assert!(ctx.eps_combined(i, e, d1 + dd1, d2).unwrap() >= lo);
            prop_assert!(ctx.eps_combined(i, e, d1, d2 + dd2).unwrap() >= lo);
        }
    }
}
