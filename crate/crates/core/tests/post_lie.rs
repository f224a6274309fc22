use homflow::integrators::{reference_flow, REFERENCE_TOL};
use homflow::kernels::hat3;
use homflow::lie_butcher::{iterated_lie_derivative, lie_derivative, post_lie_product};
use homflow::space::{sample_field, sample_point, test_suite, CoefficientField, FieldParams, Point, Space};

fn fields(space: Space) -> Vec<CoefficientField> {
    let nl = if matches!(space, Space::Sphere(_)) { "sphere-nonlinear" } else { "group-nonlinear" };
    vec![
        sample_field(space, nl, &FieldParams::default()).unwrap(),
        sample_field(space, nl, &FieldParams { axis: [-0.3, 0.9, 0.2], epsilon: 0.5 }).unwrap(),
        sample_field(space, "sphere-c5", &FieldParams::default())
            .unwrap_or_else(|_| sample_field(space, nl, &FieldParams { axis: [0.7, 0.1, -0.8], epsilon: 1.2 }).unwrap()),
        CoefficientField::constant(space, &hat3([0.2, -0.4, 0.6])),
    ]
}

fn coeff_gap(a: &CoefficientField, b: &CoefficientField, x: &Point) -> f64 {
    (a.coeff(x).matrix() - b.coeff(x).matrix()).norm()
}

fn lin(terms: &[(f64, &CoefficientField)]) -> CoefficientField {
    CoefficientField::linear_combination(terms).unwrap()
}

// X▷(Y▷Z) − (X▷Y)▷Z − Y▷(X▷Z) + (Y▷X)▷Z equals the pointwise bracket of
// X and Y acting on Z.
#[test]
fn associator_antisymmetrizes_to_pointwise_bracket() {
    for space in [Space::Sphere(3), Space::Group(3)] {
        let fs = fields(space);
        let (x, y, z) = (&fs[0], &fs[1], &fs[2]);
        let p = |a: &CoefficientField, b: &CoefficientField| post_lie_product(a, b).unwrap();
        let lhs = lin(&[
            (1.0, &p(x, &p(y, z))),
            (-1.0, &p(&p(x, y), z)),
            (-1.0, &p(y, &p(x, z))),
            (1.0, &p(&p(y, x), z)),
        ]);
        let bracket = CoefficientField::pointwise_bracket(x, y);
        let rhs = lin(&[(-1.0, &p(&bracket, z))]);
        for seed in 0..5 {
            let pt = sample_point(space, seed);
            let scale = lhs.coeff(&pt).norm().max(1.0);
            assert!(coeff_gap(&lhs, &rhs, &pt) < 1e-10 * scale, "{} seed {seed}", space.name());
        }
    }
}

#[test]
fn post_lie_product_is_linear_in_the_left_argument() {
    let space = Space::Sphere(3);
    let fs = fields(space);
    let (x1, x2, z) = (&fs[0], &fs[1], &fs[2]);
    let combo = lin(&[(2.5, x1), (-0.75, x2)]);
    let lhs = post_lie_product(&combo, z).unwrap();
    let rhs = lin(&[(2.5, &post_lie_product(x1, z).unwrap()), (-0.75, &post_lie_product(x2, z).unwrap())]);
    for seed in 0..4 {
        assert!(coeff_gap(&lhs, &rhs, &sample_point(space, seed)) < 1e-12);
    }
}

#[test]
fn constant_fields_are_flat() {
    let space = Space::Group(3);
    let fs = fields(space);
    let prod = post_lie_product(&fs[0], &fs[3]).unwrap();
    let x = sample_point(space, 2);
    assert!(prod.coeff(&x).norm() < 1e-14);
}

// V f against a centred difference of f along the exact flow.
#[test]
fn lie_derivative_matches_flow_difference() {
    for space in [Space::Sphere(3), Space::Group(3)] {
        let v = &fields(space)[0];
        let x = sample_point(space, 8);
        for f in test_suite(space) {
            let d = lie_derivative(v, &f, &x).unwrap();
            let mut prev = f64::INFINITY;
            for h in [1e-2, 5e-3, 2.5e-3] {
                let fwd = f.value(&reference_flow(v, &x, h, REFERENCE_TOL).unwrap());
                let bwd = f.value(&reference_flow(v, &x, -h, REFERENCE_TOL).unwrap());
                let err = ((fwd - bwd) / (2.0 * h) - d).abs();
                assert!(err < prev.max(1e-9), "{} {}", space.name(), f.name());
                prev = err;
            }
            assert!(prev < 1e-4 * d.abs().max(1.0));
        }
    }
}

// V^k f(x) against Richardson-extrapolated Taylor coefficients of t ↦ f(φ_t x).
#[test]
fn iterated_derivatives_match_richardson_oracle() {
    let space = Space::Sphere(3);
    let v = &fields(space)[0];
    let x = sample_point(space, 3);
    let f = &test_suite(space)[1];
    let g = |t: f64| f.value(&reference_flow(v, &x, t, REFERENCE_TOL).unwrap());
    let h = 0.02;
    // Central differences of order 1..=3 with Richardson on h and h/2.
    let d1 = |h: f64| (g(h) - g(-h)) / (2.0 * h);
    let d2 = |h: f64| (g(h) - 2.0 * g(0.0) + g(-h)) / (h * h);
    let d3 = |h: f64| (g(2.0 * h) - 2.0 * g(h) + 2.0 * g(-h) - g(-2.0 * h)) / (2.0 * h * h * h);
    let rich = |d: &dyn Fn(f64) -> f64| (4.0 * d(h / 2.0) - d(h)) / 3.0;
    let oracle = [rich(&d1), rich(&d2), rich(&d3)];
    for (k, want) in (1..=3).zip(oracle) {
        let got = iterated_lie_derivative(v, f, &x, k).unwrap();
        assert!((got - want).abs() < 1e-5 * want.abs().max(1.0), "k={k}: {got} vs {want}");
    }
}
