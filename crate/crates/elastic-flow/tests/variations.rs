use elastic_flow::curve::{build_cache, DiscreteCurve, Vec2};
use elastic_flow::elastica::reference_arc;
use elastic_flow::generators::{admissible_field, arc_perturbed, dilation_field, translation_field};
use elastic_flow::variations::{
    first_variation, first_variation_boundary_form, gradient, second_variation, verify_variation,
};
use proptest::prelude::*;

const MU: f64 = 2.0;

fn test_curves() -> Vec<(&'static str, DiscreteCurve)> {
    vec![
        ("segment", DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], 128).unwrap()),
        ("semicircle", DiscreteCurve::semicircle(1.0, 128).unwrap()),
        ("perturbed arc", arc_perturbed(1.0, 128, 1e-2, 7).unwrap()),
    ]
}

fn scaled(x: &[Vec2], c: f64) -> Vec<Vec2> {
    x.iter().map(|v| [c * v[0], c * v[1]]).collect()
}

#[test]
fn analytic_variation_matches_central_differences() {
    for (name, c) in test_curves() {
        let n = c.segments();
        for seed in 0..3 {
            let x = admissible_field(n, 100 + seed);
            let r = verify_variation(&c, MU, &x, &[4e-4, 2e-4, 1e-4]).unwrap();
            // Tiny variations make the relative error meaningless. The order
            // comes from the two larger steps, clear of roundoff.
            if r.analytic.abs() < 0.1 {
                continue;
            }
            assert!(r.rel_err <= 1e-6, "{name} seed {seed}: {r:?}");
            assert!(r.observed_order >= 1.9, "{name} seed {seed}: {r:?}");
        }
    }
}

#[test]
fn both_forms_of_the_variation_agree() {
    for (name, c) in test_curves().into_iter().skip(1) {
        let x = admissible_field(c.segments(), 5);
        let a = first_variation(&c, MU, &x).unwrap();
        let b = first_variation_boundary_form(&c, MU, &x).unwrap();
        assert!((a - b).abs() < 1e-5 * (1.0 + a.abs()), "{name} {a} {b}");
    }
}

#[test]
fn translation_and_dilation_identities() {
    for (name, c) in test_curves() {
        let n = c.segments();
        assert!(first_variation(&c, MU, &translation_field(n)).unwrap().abs() <= 1e-10, "{name}");
        let cache = build_cache(&c).unwrap();
        let expected = MU * cache.total_len - cache.integrate_ds(|i| cache.k[i] * cache.k[i]);
        let d = first_variation(&c, MU, &dilation_field(&c)).unwrap();
        assert!((d - expected).abs() <= 1e-6 * expected.abs(), "{name} {d} {expected}");
    }
}

#[test]
fn second_variation_is_symmetric_at_the_elastica() {
    let arc = reference_arc(1.0).unwrap();
    let c = elastic_flow::curve::resample_uniform(&arc.curve, 200).unwrap();
    let x = admissible_field(200, 1);
    let y = admissible_field(200, 2);
    let xy = second_variation(&c, 1.0, &x, &y).unwrap();
    let yx = second_variation(&c, 1.0, &y, &x).unwrap();
    assert!((xy - yx).abs() <= 1e-6 * (1.0 + xy.abs()), "{xy} {yx}");
}

#[test]
fn gradient_vanishes_at_the_elastica_only() {
    let arc = reference_arc(1.0).unwrap();
    let c = elastic_flow::curve::resample_uniform(&arc.curve, 200).unwrap();
    assert!(gradient(&c, 1.0).unwrap().dual_norm <= 1e-6);
    let p = arc_perturbed(1.0, 200, 1e-2, 3).unwrap();
    assert!(gradient(&p, 1.0).unwrap().dual_norm > 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn variation_is_linear_in_the_field(seed_a in 0u64..1000, seed_b in 0u64..1000, s in -3.0f64..3.0) {
        let c = DiscreteCurve::semicircle(1.0, 64).unwrap();
        let (x, y) = (admissible_field(64, seed_a), admissible_field(64, seed_b));
        let combo: Vec<Vec2> = x.iter().zip(&y).map(|(p, q)| [p[0] + s * q[0], p[1] + s * q[1]]).collect();
        let lhs = first_variation(&c, MU, &combo).unwrap();
        let rhs = first_variation(&c, MU, &x).unwrap() + s * first_variation(&c, MU, &y).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + rhs.abs()));
    }

    #[test]
    fn small_fields_match_differences(seed in 0u64..1000) {
        // At a tenth of the field size the difference error drops by about 100.
        let c = arc_perturbed(1.0, 96, 5e-3, seed % 7).unwrap();
        let x = scaled(&admissible_field(96, seed), 0.1);
        let r = verify_variation(&c, MU, &x, &[2e-4, 1e-4]).unwrap();
        prop_assert!(r.abs_err <= 1e-7 * (1.0 + r.analytic.abs()), "{:?}", r);
    }
}
