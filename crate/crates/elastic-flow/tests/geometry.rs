use std::f64::consts::PI;

use elastic_flow::curve::{
    aligned_hausdorff, bounding_box, build_cache, discrete_ibp_defect, hausdorff_distance, resample_uniform, DiscreteCurve,
};
use elastic_flow::generators::admissible_field;
use elastic_flow::variations::energy;
use proptest::prelude::*;

#[test]
fn semicircle_energy_matches_closed_form() {
    for (r, mu) in [(1.0, 1.0), (0.5, 4.0)] {
        let c = DiscreteCurve::semicircle(r, 1000).unwrap();
        let exact = PI / r + PI * mu * r;
        assert!((energy(&c, mu).unwrap() - exact).abs() < 1e-6);
    }
}

#[test]
fn semicircle_energy_converges_at_high_order() {
    let err = |n| (energy(&DiscreteCurve::semicircle(1.0, n).unwrap(), 1.0).unwrap() - 2.0 * PI).abs();
    let (e32, e128) = (err(32), err(128));
    let order = (e32 / e128).ln() / 4f64.ln();
    assert!(order > 5.5, "{e32} {e128}");
}

#[test]
fn ellipse_arc_length_against_series() {
    // Quarter ellipse a = 2, b = 1; perimeter from the Gauss-Kummer series.
    let (a, b) = (2.0f64, 1.0f64);
    let c = DiscreteCurve::from_fn(400, false, |s| {
        let t = 0.5 * PI * s;
        [a * t.cos(), b * t.sin()]
    })
    .unwrap();
    let h = ((a - b) / (a + b)).powi(2);
    let mut series = 0.0;
    let mut coef = 1.0f64;
    for n in 0..30 {
        // binomial(1/2, n)^2 h^n
        if n > 0 {
            coef *= (0.5 - (n - 1) as f64) / n as f64;
        }
        series += coef * coef * h.powi(n as i32);
    }
    let quarter = 0.25 * PI * (a + b) * series;
    let len = build_cache(&c).unwrap().total_len;
    assert!((len - quarter).abs() < 1e-10, "{len} {quarter}");
}

#[test]
fn ibp_defect_converges_under_refinement() {
    let mut defects = Vec::new();
    for n in [64, 128, 256] {
        let c = DiscreteCurve::semicircle(1.0, n).unwrap();
        let cache = build_cache(&c).unwrap();
        let x = admissible_field(n, 11);
        let y = admissible_field(n, 12);
        defects.push(discrete_ibp_defect(&x, &y, &cache).unwrap());
    }
    let order = (defects[0] / defects[2]).ln() / 4f64.ln();
    assert!(defects[2] < 1e-8, "{defects:?}");
    assert!(order >= 1.0 || defects[2] < 1e-12, "{defects:?}");
}

#[test]
fn hausdorff_is_symmetric_and_sees_offsets() {
    let a = DiscreteCurve::semicircle(1.0, 64).unwrap();
    let b = DiscreteCurve::semicircle(1.1, 80).unwrap();
    let d = hausdorff_distance(&a, &b);
    assert!((d - hausdorff_distance(&b, &a)).abs() < 1e-12);
    // Polyline sampling of the arcs costs a few 1e-6.
    assert!((d - 0.1).abs() < 1e-5, "{d}");
    let (aligned, shift) = aligned_hausdorff(&a.translated(0.05), &a);
    assert!(aligned < 1e-6 && (shift + 0.05).abs() < 1e-6, "{aligned} {shift}");
}

fn wavy(n: usize, amp: f64, freq: f64) -> DiscreteCurve {
    DiscreteCurve::from_fn(n, true, |s| [s + 0.1 * (PI * s).sin() * amp, amp * (PI * s).sin() * (1.0 + 0.3 * (freq * s).cos())]).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn energy_is_translation_invariant(amp in 0.05f64..0.5, freq in 0.0f64..6.0, shift in -10.0f64..10.0) {
        let c = wavy(96, amp, freq);
        let e0 = energy(&c, 1.5).unwrap();
        let e1 = energy(&c.translated(shift), 1.5).unwrap();
        prop_assert!((e0 - e1).abs() <= 1e-9 * e0);
    }

    #[test]
    fn energy_scales_like_its_two_parts(amp in 0.05f64..0.5, freq in 0.0f64..6.0, lambda in 0.3f64..3.0) {
        // E_mu(λγ) = B/λ + μλℓ with B = ∫k² ds.
        let c = wavy(96, amp, freq);
        let scaled = DiscreteCurve::new(c.nodes().iter().map(|p| [lambda * p[0], lambda * p[1]]).collect(), true).unwrap();
        let len = build_cache(&c).unwrap().total_len;
        let bending = energy(&c, 1.0).unwrap() - len;
        let expected = bending / lambda + 2.0 * lambda * len;
        prop_assert!((energy(&scaled, 2.0).unwrap() - expected).abs() <= 1e-9 * expected);
    }

    #[test]
    fn resampling_keeps_length_and_box(amp in 0.05f64..0.5, freq in 0.0f64..6.0, m in 120usize..300) {
        let c = wavy(160, amp, freq);
        let r = resample_uniform(&c, m).unwrap();
        let (l0, l1) = (build_cache(&c).unwrap().total_len, build_cache(&r).unwrap().total_len);
        prop_assert!((l0 - l1).abs() < 1e-7 * l0);
        let (b0, b1) = (bounding_box(&c), bounding_box(&r));
        prop_assert!((b0.diameter() - b1.diameter()).abs() < 1e-3 * b0.diameter());
        prop_assert_eq!(r.nodes()[0][1], 0.0);
        prop_assert_eq!(r.nodes()[m][1], 0.0);
        let h = build_cache(&r).unwrap().seg_len;
        let (lo, hi) = h.iter().fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
        prop_assert!(hi / lo < 1.01);
    }
}
