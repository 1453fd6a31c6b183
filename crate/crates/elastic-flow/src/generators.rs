//! Named initial curves and seeded test fields.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::{resample_uniform, DiscreteCurve, Vec2};
use crate::elastica::reference_arc;
use crate::error::{Error, Result};

/// Sine modes used by the seeded perturbations.
pub const MODES: usize = 5;

fn coefficients(seed: u64) -> [f64; MODES] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    std::array::from_fn(|_| rng.random_range(-1.0..1.0))
}

/// Smooth step, 0 for `t <= 0` and 1 for `t >= 1`, flat to all orders.
fn smooth_step(t: f64) -> f64 {
    let f = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    f(t) / (f(t) + f(1.0 - t))
}

/// Fraction of the curve near each end left untouched by perturbations.
pub const MARGIN: f64 = 0.1;
/// Width of the window's rise from 0 to 1 after the margin. A gentle rise
/// keeps the initial transient slow enough for the time step to resolve.
pub const RAMP: f64 = 0.25;

/// `w(s) Σ a_m sin(mπs)` normalized to unit max over the nodes. The window
/// `w` vanishes identically within `MARGIN` of either end, so the nodes the
/// boundary stencils see are exactly those of the base curve.
fn windowed_bump(n: usize, seed: u64) -> Vec<f64> {
    let a = coefficients(seed);
    let raw: Vec<f64> = (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let w = smooth_step((s - MARGIN) / RAMP) * smooth_step((1.0 - s - MARGIN) / RAMP);
            w * a.iter().enumerate().map(|(m, c)| c * ((m + 1) as f64 * PI * s).sin()).sum::<f64>()
        })
        .collect();
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    raw.into_iter().map(|v| v / peak).collect()
}

/// The reference elastica at `mu`, resampled to `n` segments, with its
/// height perturbed by a seeded bump of the given amplitude.
///
/// The reference arc is symmetric under the half turn about its midpoint,
/// and it is a saddle of the energy: its one unstable direction breaks that
/// symmetry. The bump is therefore projected onto point-symmetric profiles
/// (`b(1−s) = −b(s)`), which keeps the flow in the arc's basin. See
/// [`arc_perturbed_asymmetric`] for the raw bump.
pub fn arc_perturbed(mu: f64, n: usize, amplitude: f64, seed: u64) -> Result<DiscreteCurve> {
    perturbed(mu, n, amplitude, seed, true)
}

/// As [`arc_perturbed`] without the symmetric projection. The flow from
/// this datum leaves the arc along its unstable direction.
pub fn arc_perturbed_asymmetric(mu: f64, n: usize, amplitude: f64, seed: u64) -> Result<DiscreteCurve> {
    perturbed(mu, n, amplitude, seed, false)
}

fn perturbed(mu: f64, n: usize, amplitude: f64, seed: u64, symmetric: bool) -> Result<DiscreteCurve> {
    if !(amplitude.is_finite() && amplitude.abs() < 0.1) {
        return Err(Error::InvalidParameter(format!("amplitude must lie in (-0.1, 0.1), got {amplitude}")));
    }
    let arc = resample_uniform(&reference_arc(mu)?.curve, n)?;
    let mut bump = windowed_bump(n, seed);
    if symmetric {
        let raw = bump.clone();
        for i in 0..=n {
            bump[i] = 0.5 * (raw[i] - raw[n - i]);
        }
        let peak = bump.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        bump.iter_mut().for_each(|v| *v /= peak);
    }
    let nodes = arc.nodes().iter().zip(bump).map(|(p, b)| [p[0], p[1] + amplitude * b]).collect();
    DiscreteCurve::new(nodes, true)
}

/// A smooth field on `n + 1` nodes with `X₂ = 0` at both ends, suitable as
/// an admissible variation of a constrained curve. Mode `m` has amplitude
/// at most `1/m³`; the linear and quadratic terms give the field generic
/// slopes at the ends.
pub fn admissible_field(n: usize, seed: u64) -> Vec<Vec2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ax: [f64; MODES] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let ay: [f64; MODES] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let [x0, x1, y2]: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    (0..=n)
        .map(|i| {
            let s = i as f64 / n as f64;
            let mut p = [x0 + x1 * s, y2 * s * (1.0 - s)];
            for m in 0..MODES {
                let f = (m + 1) as f64 * PI * s;
                let w = 1.0 / ((m + 1) as f64).powi(3);
                p[0] += ax[m] * w * f.cos();
                p[1] += ay[m] * w * f.sin();
            }
            if i == 0 || i == n {
                p[1] = 0.0;
            }
            p
        })
        .collect()
}

/// Constant horizontal translation field.
pub fn translation_field(n: usize) -> Vec<Vec2> {
    vec![[1.0, 0.0]; n + 1]
}

/// The dilation field `X = γ`.
pub fn dilation_field(curve: &DiscreteCurve) -> Vec<Vec2> {
    curve.nodes().to_vec()
}

/// The reference elastica at `mu` with a tiny loop of radius `radius`
/// (relative to the arc length) tied in around its midpoint, where the arc
/// crosses the axis. The loop is confined to the middle 30% of the curve,
/// so the ends are those of the arc. Large `mu` makes the arc small and the
/// loop tight, a datum that drives the flow toward a singularity.
pub fn pinched_loop(mu: f64, n: usize, radius: f64) -> Result<DiscreteCurve> {
    if !(radius > 0.0 && radius < 0.1) {
        return Err(Error::InvalidParameter(format!("loop radius must lie in (0, 0.1), got {radius}")));
    }
    let arc = reference_arc(mu)?;
    let fine = resample_uniform(&arc.curve, 8 * n)?;
    let r = radius * arc.params.length;
    let m = fine.segments();
    let nodes = fine
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = i as f64 / m as f64;
            let phase = 2.0 * PI * smooth_step((s - 0.35) / 0.3);
            [p[0] + r * phase.sin(), p[1] + r * (1.0 - phase.cos())]
        })
        .collect();
    resample_uniform(&DiscreteCurve::new(nodes, true)?, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::hausdorff_distance;
    use crate::flow::check_admissible;

    #[test]
    fn perturbation_is_reproducible_and_admissible() {
        let a = arc_perturbed(1.0, 200, 1e-2, 7).unwrap();
        let b = arc_perturbed(1.0, 200, 1e-2, 7).unwrap();
        assert_eq!(a, b);
        let arc = arc_perturbed(1.0, 200, 0.0, 7).unwrap();
        let d = hausdorff_distance(&a, &arc);
        assert!(d > 1e-3 && d <= 1e-2 + 1e-12, "{d}");
        let r = check_admissible(&a, 1.0, 1e-3, 1e-6).unwrap();
        assert!(r.passed, "{:?}", r.residuals);
    }

    #[test]
    fn seeds_differ() {
        assert_ne!(arc_perturbed(1.0, 64, 1e-2, 1).unwrap(), arc_perturbed(1.0, 64, 1e-2, 2).unwrap());
    }

    #[test]
    fn symmetric_bump_is_odd_about_the_midpoint() {
        let n = 100;
        let base = arc_perturbed(1.0, n, 0.0, 5).unwrap();
        let c = arc_perturbed(1.0, n, 1e-2, 5).unwrap();
        for i in 0..=n {
            let b = c.nodes()[i][1] - base.nodes()[i][1];
            let b_mirror = c.nodes()[n - i][1] - base.nodes()[n - i][1];
            assert!((b + b_mirror).abs() < 1e-15);
        }
        assert_ne!(c, arc_perturbed_asymmetric(1.0, n, 1e-2, 5).unwrap());
    }

    #[test]
    fn fields_vanish_vertically_at_ends() {
        let f = admissible_field(40, 3);
        assert_eq!(f[0][1], 0.0);
        assert_eq!(f[40][1], 0.0);
        assert!(f.iter().any(|p| p[1].abs() > 0.1));
    }

    #[test]
    fn pinched_loop_is_a_valid_curve() {
        let c = pinched_loop(25.0, 200, 0.05).unwrap();
        let r = check_admissible(&c, 25.0, 1e-3, 1e-6).unwrap();
        assert!(r.passed);
        for end in 0..2 {
            for name in ["attachment", "second_order", "third_order"] {
                assert!(r.get(name, end).unwrap().abs() < 1e-6, "{name}");
            }
            assert!(r.get("nondegeneracy", end).unwrap() > 0.6);
        }
        assert!(crate::elastica::self_intersects(&c));
    }
}
