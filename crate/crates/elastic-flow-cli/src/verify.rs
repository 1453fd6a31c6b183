//! Invariant suites behind `verify`.

use elastic_flow::curve::{build_cache, discrete_ibp_defect, DiscreteCurve};
use elastic_flow::diagnostics::dissipation_identity_fraction;
use elastic_flow::elastica::reference_arc;
use elastic_flow::flow::{run, FlowConfig, StopReason};
use elastic_flow::generators::{admissible_field, arc_perturbed, dilation_field, translation_field};
use elastic_flow::variations::{first_variation, verify_variation};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Variations,
    Ibp,
    Dissipation,
    Scaling,
}

pub struct Outcome {
    pub passed: bool,
    pub detail: String,
}

const MU: f64 = 2.0;

fn curves() -> Vec<DiscreteCurve> {
    vec![
        DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], 128).unwrap(),
        DiscreteCurve::semicircle(1.0, 128).unwrap(),
        arc_perturbed(1.0, 128, 1e-2, 7).unwrap(),
    ]
}

pub fn run_suite(suite: Suite) -> Outcome {
    match suite {
        Suite::Variations => variations(),
        Suite::Ibp => ibp(),
        Suite::Dissipation => dissipation(),
        Suite::Scaling => scaling(),
    }
}

fn variations() -> Outcome {
    let (mut worst_rel, mut worst_order, mut count) = (0.0f64, f64::INFINITY, 0);
    for c in curves() {
        // Skip fields whose variation is too small for a relative error.
        let fields = (100..).map(|s| admissible_field(c.segments(), s));
        for x in fields.filter(|x| first_variation(&c, MU, x).unwrap().abs() >= 0.1).take(3) {
            let r = verify_variation(&c, MU, &x, &[4e-4, 2e-4, 1e-4]).unwrap();
            worst_rel = worst_rel.max(r.rel_err);
            worst_order = worst_order.min(r.observed_order);
            count += 1;
        }
    }
    Outcome {
        passed: worst_rel <= 1e-6 && worst_order >= 1.9,
        detail: format!("{count} fields, worst rel_err {worst_rel:.2e}, worst order {worst_order:.3}"),
    }
}

fn ibp() -> Outcome {
    let d: Vec<f64> = [64, 128, 256]
        .into_iter()
        .map(|n| {
            let c = DiscreteCurve::semicircle(1.0, n).unwrap();
            discrete_ibp_defect(&admissible_field(n, 11), &admissible_field(n, 12), &build_cache(&c).unwrap()).unwrap()
        })
        .collect();
    let orders = [(d[0] / d[1]).log2(), (d[1] / d[2]).log2()];
    Outcome {
        passed: (d[0] / d[2]).ln() / 4f64.ln() >= 1.0,
        detail: format!("defects {:.2e} {:.2e} {:.2e}, orders {:.2} {:.2}", d[0], d[1], d[2], orders[0], orders[1]),
    }
}

fn dissipation() -> Outcome {
    let c = arc_perturbed(1.0, 200, 1e-2, 7).unwrap();
    let config = FlowConfig::for_curve(&c, 1.0).unwrap();
    match run(&c, &config) {
        Ok(out) => {
            let fraction = dissipation_identity_fraction(&out.trace, 0.05).unwrap_or(0.0);
            Outcome {
                passed: out.reason == StopReason::Converged && fraction >= 0.95,
                detail: format!("{:?} at t = {:.3}, identity holds on {:.1}% of samples", out.reason, out.state.time, 100.0 * fraction),
            }
        }
        Err(e) => Outcome { passed: false, detail: e.to_string() },
    }
}

fn scaling() -> Outcome {
    let (mut t, mut d) = (0.0f64, 0.0f64);
    for c in curves() {
        t = t.max(first_variation(&c, MU, &translation_field(c.segments())).unwrap().abs());
        let cache = build_cache(&c).unwrap();
        let expected = MU * cache.total_len - cache.integrate_ds(|i| cache.k[i] * cache.k[i]);
        d = d.max((first_variation(&c, MU, &dilation_field(&c)).unwrap() - expected).abs() / expected.abs());
    }
    let base = reference_arc(1.0).unwrap().params;
    let mut family = 0.0f64;
    for mu in [0.25, 4.0] {
        let p = reference_arc(mu).unwrap().params;
        family = family.max((p.a - base.a * mu).abs()).max((p.length - base.length / mu.sqrt()).abs());
    }
    Outcome {
        passed: t <= 1e-10 && d <= 1e-6 && family <= 1e-8,
        detail: format!("translation {t:.1e}, dilation rel {d:.1e}, elastica family {family:.1e}"),
    }
}
