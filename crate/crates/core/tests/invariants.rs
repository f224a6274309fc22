use homflow::analysis::{max_p_alpha, p_alpha};
use homflow::integrators::{integrate, uniform_grid, MethodSpec};
use homflow::kernels::{hat3, mat_exp, mat_log, so_basis, vee3, AlgebraElement};
use homflow::lie_butcher::{generate_forests, PlanarForest};
use homflow::space::{act, geodesic_distance, sample_field, sample_point, FieldParams, Space};
use proptest::prelude::*;

fn space() -> impl Strategy<Value = Space> {
    prop_oneof![Just(Space::Sphere(3)), Just(Space::Group(3)), Just(Space::Sphere(4))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forest_display_roundtrips(n in 0usize..=6, pick in any::<prop::sample::Index>()) {
        let all = generate_forests(n).unwrap();
        let w = &all[pick.index(all.len())];
        let back: PlanarForest = w.to_string().parse().unwrap();
        prop_assert_eq!(&back, w);
        prop_assert_eq!(back.order(), n);
    }

    #[test]
    fn action_is_an_isometry(s in space(), a in prop::array::uniform3(-2.0f64..2.0), i in 0u64..1000, j in 0u64..1000) {
        let n = match s { Space::Sphere(n) | Space::Group(n) => n };
        let basis = so_basis(n);
        let xi = AlgebraElement(&basis[0].0 * a[0] + &basis[1].0 * a[1] + &basis[2].0 * a[2]);
        let g = mat_exp(&xi).unwrap();
        let x = sample_point(s, i);
        let y = sample_point(s, j);
        let d = geodesic_distance(&x, &y).unwrap();
        let dg = geodesic_distance(&act(&g, &x).unwrap(), &act(&g, &y).unwrap()).unwrap();
        prop_assert!((d - dg).abs() < 1e-9);
    }

    #[test]
    fn max_sign_sum_is_l1_norm(y in prop::collection::vec(-10.0f64..10.0, 1..7)) {
        let l1: f64 = y.iter().map(|v| v.abs()).sum();
        prop_assert!((max_p_alpha(&y) - l1).abs() <= 1e-12 * l1.max(1.0));
        let best = y.iter().enumerate().fold(0usize, |a, (i, v)| if *v < 0.0 { a | 1 << i } else { a });
        prop_assert_eq!(p_alpha(best, &y), max_p_alpha(&y));
    }

    #[test]
    fn exp_log_roundtrip(a in prop::array::uniform3(-1.5f64..1.5)) {
        let back = vee3(&mat_log(&mat_exp(&hat3(a)).unwrap()).unwrap());
        for k in 0..3 {
            prop_assert!((back[k] - a[k]).abs() < 1e-10);
        }
    }

    #[test]
    fn integrators_stay_on_the_manifold(
        s in prop_oneof![Just(Space::Sphere(3)), Just(Space::Group(3))],
        method in prop_oneof![Just("lie-euler"), Just("rkmk4"), Just("cf4")],
        seed in 0u64..500,
        n in 1usize..24,
    ) {
        let family = if matches!(s, Space::Sphere(_)) { "sphere-nonlinear" } else { "group-nonlinear" };
        let v = sample_field(s, family, &FieldParams::default()).unwrap();
        let spec = MethodSpec::from_id(method).unwrap();
        let traj = integrate(&spec, &v, &sample_point(s, seed), &uniform_grid(0.0, 2.0, n)).unwrap();
        prop_assert!(traj.max_invariant_defect() < 1e-12);
    }
}
