use std::sync::OnceLock;

use cuspgrowth::asymptotics::CuspModel;
use cuspgrowth::convolution::*;
use cuspgrowth::h2::*;
use cuspgrowth::series::GrowthSeries;
use proptest::prelude::*;

fn monotone_steps(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..3.0, 1..max_len).prop_map(|incs| {
        incs.iter()
            .scan(0.5, |acc, d| {
                *acc += d;
                Some(*acc)
            })
            .collect()
    })
}

fn gauge_series(delta: f64, vals: &[f64]) -> GrowthSeries {
    let grid = (1..=vals.len()).map(|k| k as f64 * delta).collect();
    GrowthSeries::new(grid, vals.to_vec(), "s").unwrap()
}

fn point() -> impl Strategy<Value = HPoint> {
    (-30.0f64..30.0, -4.0f64..4.0).prop_map(|(re, l)| HPoint::new(re, l.exp()).unwrap())
}

fn volume_model() -> &'static VolumeModel {
    static M: OnceLock<VolumeModel> = OnceLock::new();
    M.get_or_init(|| {
        let cusps = vec![CuspModel::hyperbolic(2).unwrap(); 2];
        let vg = VGammaModel::power_decay(1.0, 0.5).unwrap();
        VolumeModel::new(vg, &cusps, 80.0, BandParams::default()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn gauge_convolution_is_symmetric(
        f in prop::collection::vec(-5.0f64..5.0, 40),
        g in prop::collection::vec(-5.0f64..5.0, 40),
        delta in prop::sample::select(vec![0.25, 0.5, 1.0]),
        k in 0usize..40,
    ) {
        let (sf, sg) = (gauge_series(delta, &f), gauge_series(delta, &g));
        let r = k as f64 * delta;
        prop_assert_eq!(conv_gauge(&sf, &sg, delta, r).unwrap(), conv_gauge(&sg, &sf, delta, r).unwrap());
    }

    #[test]
    fn sandwich_holds_for_monotone_steps(
        fv in monotone_steps(30),
        gv in monotone_steps(30),
        step in 0.1f64..3.0,
        delta in prop::sample::select(vec![0.5, 1.0, 2.0]),
        r in 5.0f64..50.0,
    ) {
        let f = StepFn::new(step, fv).unwrap();
        let g = StepFn::new(step, gv).unwrap();
        let rep = sandwich_check(&f, &g, delta, r).unwrap();
        prop_assert!(rep.holds, "{:?}", rep);
    }

    #[test]
    fn decreasing_steps_are_rejected(mut v in monotone_steps(20), i in 0usize..20) {
        prop_assume!(v.len() >= 2);
        let i = 1 + i % (v.len() - 1);
        v[i] = v[i - 1] - 0.1;
        prop_assert!(StepFn::new(1.0, v.clone()).is_ok());
        let f = StepFn::new(1.0, v).unwrap();
        prop_assert!(sandwich_check(&f, &StepFn::constant(1.0).unwrap(), 1.0, 10.0).is_err());
    }

    #[test]
    fn classification_ignores_scale_and_tilt(
        c in -20.0f64..20.0,
        kappa in -0.5f64..0.5,
        amp in 0.0f64..8.0,
        drift in -0.05f64..0.05,
    ) {
        let grid: Vec<f64> = (0..400).map(|i| 1.0 + i as f64 * 0.5).collect();
        let base: Vec<f64> = grid.iter().map(|&r| r + drift * r + amp * (r.sqrt()).sin()).collect();
        let s = GrowthSeries::new(grid.clone(), base, "f").unwrap();
        let opts = ClassifyOptions::default();
        let k0 = classify_growth(&s, 1.0, &opts).unwrap().kind;
        let tilted: Vec<f64> = s.points().map(|(r, v)| v + c + kappa * r).collect();
        let t = GrowthSeries::new(grid, tilted, "g").unwrap();
        prop_assert_eq!(classify_growth(&t, 1.0 + kappa, &opts).unwrap().kind, k0);
    }

    #[test]
    fn volume_band_is_ordered(r in 4.0f64..70.0, c in 1.0f64..20.0, d0 in 0.0f64..4.0) {
        let m = volume_model();
        let params = BandParams { d0, c, ..BandParams::default() };
        let vg = m.vgamma.clone();
        let cusps = vec![CuspModel::hyperbolic(2).unwrap(); 2];
        let b = volume_band(&vg, &cusps, r, &params).unwrap();
        prop_assert!(b.log_lower <= b.log_mid && b.log_mid <= b.log_upper, "{:?}", b);
        let mid = m.band(r).unwrap().log_mid;
        prop_assert!((mid - b.log_mid).abs() <= 1e-3 * mid.abs().max(1.0));
    }

    #[test]
    fn distance_is_a_symmetric_metric(x in point(), y in point(), z in point()) {
        let (dxy, dyx) = (h2_distance(x, y), h2_distance(y, x));
        prop_assert_eq!(dxy, dyx);
        prop_assert!(dxy >= 0.0);
        prop_assert!(dxy <= h2_distance(x, z) + h2_distance(z, y) + 1e-9 * dxy.max(1.0));
    }

    #[test]
    fn group_elements_are_isometries(x in point(), y in point(), i in 0usize..1473) {
        let elems = enumerate_group(8.0).unwrap();
        let g = elems[i % elems.len()];
        let (d, dg) = (h2_distance(x, y), h2_distance(g.apply(x), g.apply(y)));
        prop_assert!((d - dg).abs() <= 1e-7 * d.max(1.0), "{} vs {}", d, dg);
    }

    #[test]
    fn horocyclic_quantities_are_equivariant(x in point(), y in point(), l in -3.0f64..3.0, s in -20.0f64..20.0) {
        // z ↦ e^l z + s fixes ∞ and shifts Busemann functions equally
        let m = |p: HPoint| HPoint::new(l.exp() * p.re + s, l.exp() * p.im).unwrap();
        prop_assert!((t_xi(m(x), m(y)) - t_xi(x, y)).abs() < 1e-9);
        prop_assert!((busemann_inf(m(x), m(y)) - busemann_inf(x, y)).abs() < 1e-9);
        prop_assert_eq!(busemann_inf(x, y), -busemann_inf(y, x));
    }

    #[test]
    fn approximation_defect_is_bounded(x in point(), y in point()) {
        // extremal case: equal heights, |re x − re y| = height
        let defect = (h2_distance(x, y) - 2.0 * t_xi(x, y) - busemann_inf(x, y).abs()).abs();
        prop_assert!(defect <= 1.5f64.acosh() + 1e-9, "{}", defect);
    }
}

#[test]
fn orbit_and_coset_counts_are_monotone() {
    let cn = CosetNorms::new(10.0).unwrap();
    let mut prev = [0usize; 4];
    for k in 0..=100 {
        let r = k as f64 * 0.1;
        let now = [cn.v_group(r), cn.v_right(r), cn.v_left(r), cn.v_double(r)];
        assert!(now.iter().zip(prev).all(|(a, b)| *a >= b), "R = {r}");
        prev = now;
    }
}
