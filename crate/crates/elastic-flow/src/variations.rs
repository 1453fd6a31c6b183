//! The penalized elastic energy `E(γ) = ∫ k² + μ ds`, its first variation,
//! the gradient field and a semi-analytic second variation.
//!
//! The first variation is available in two algebraically equivalent forms.
//! [`first_variation`] differentiates the discrete energy directly,
//!
//! ```text
//! δE[X] = ∫ 2k⟨∂ₛ²X, ν⟩ − 3k²⟨τ, ∂ₛX⟩ + μ⟨τ, ∂ₛX⟩ ds,
//! ```
//!
//! while [`first_variation_boundary_form`] evaluates the integrated-by-parts
//! expression with explicit boundary terms,
//!
//! ```text
//! δE[X] = ∫ ⟨(2∂ₛ²k + k³ − μk)ν, X⟩ ds
//!         + [ 2k⟨ν, ∂ₛX⟩ + ⟨−2∂ₛk ν − k²τ + μτ, X⟩ ]₀¹ .
//! ```
//!
//! The first form is the exact derivative of the discrete energy and only
//! involves `∂ₛX`, so horizontal translations give exactly zero. The second
//! form needs `∂ₛ²k`, whose one-sided stencils at the ends amplify rounding
//! of the nodes by `N⁴`; it agrees with the first to discretization
//! accuracy.

use serde::{Deserialize, Serialize};

use crate::curve::{build_cache, dot, field_derivative, Derivatives, DiscreteCurve, GeometryCache, Vec2};
use crate::error::{Error, Result};

/// Analytic-versus-finite-difference comparison of a variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationReport {
    pub analytic: f64,
    #[serde(rename = "fd")]
    pub finite_difference: f64,
    pub eps: f64,
    pub abs_err: f64,
    pub rel_err: f64,
    /// NaN when either error vanishes.
    pub observed_order: f64,
}

/// Gradient of `E` in the product space `ℝ² × L²(ds)`.
#[derive(Debug, Clone)]
pub struct GradientData {
    /// `(2∂ₛ²k + k³ − μk)ν` at each node.
    pub interior: Vec<Vec2>,
    /// `(−2∂ₛk ν + μτ)₁` at the two ends.
    pub boundary_coeff: [f64; 2],
    pub dual_norm: f64,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveMu(mu))
    }
}

fn check_field(curve_nodes: usize, x: &[Vec2], constrained: bool) -> Result<()> {
    if x.len() != curve_nodes {
        return Err(Error::DimensionMismatch { got: x.len(), expected: curve_nodes });
    }
    if constrained {
        let scale = x.iter().fold(0.0f64, |m, v| m.max(v[0].abs()).max(v[1].abs()));
        for (end, v) in [(0, x[0]), (1, x[curve_nodes - 1])] {
            if v[1].abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::ConstraintViolation { end, value: v[1] });
            }
        }
    }
    Ok(())
}

pub fn energy_of(cache: &GeometryCache, mu: f64) -> f64 {
    cache.integrate_ds(|i| cache.k[i] * cache.k[i] + mu)
}

pub fn energy(curve: &DiscreteCurve, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    Ok(energy_of(&build_cache(curve)?, mu))
}

/// Normal speed `V = −2∂ₛ²k − k³ + μk` of the flow at node `i`.
pub fn normal_velocity(cache: &GeometryCache, mu: f64, i: usize) -> f64 {
    let k = cache.k[i];
    -2.0 * cache.ds2_k[i] - k * k * k + mu * k
}

/// `(−2∂ₛk ν + μτ)₁ = 2∂ₛk τ₂ + μτ₁` at node `i`.
pub fn third_order_residual(cache: &GeometryCache, mu: f64, i: usize) -> f64 {
    2.0 * cache.ds_k[i] * cache.tau[i][1] + mu * cache.tau[i][0]
}

pub fn gradient_of(cache: &GeometryCache, mu: f64) -> GradientData {
    let n = cache.segments();
    let interior: Vec<Vec2> = (0..=n)
        .map(|i| {
            let g = -normal_velocity(cache, mu, i);
            [g * cache.nu[i][0], g * cache.nu[i][1]]
        })
        .collect();
    let boundary_coeff = [third_order_residual(cache, mu, 0), third_order_residual(cache, mu, n)];
    let l2 = cache.integrate_ds(|i| dot(interior[i], interior[i]));
    let dual_norm = (boundary_coeff[0].powi(2) + boundary_coeff[1].powi(2) + l2).sqrt();
    GradientData { interior, boundary_coeff, dual_norm }
}

pub fn gradient(curve: &DiscreteCurve, mu: f64) -> Result<GradientData> {
    check_mu(mu)?;
    Ok(gradient_of(&build_cache(curve)?, mu))
}

fn boundary_term(cache: &GeometryCache, mu: f64, x: &[Vec2], dx: &[Vec2], i: usize) -> f64 {
    let (k, t, nu) = (cache.k[i], cache.tau[i], cache.nu[i]);
    let s = cache.speed[i];
    let dsx = [dx[i][0] / s, dx[i][1] / s];
    let a = -2.0 * cache.ds_k[i];
    let b = mu - k * k;
    let v = [a * nu[0] + b * t[0], a * nu[1] + b * t[1]];
    2.0 * k * dot(nu, dsx) + dot(v, x[i])
}

fn boundary_form_of(cache: &GeometryCache, mu: f64, x: &[Vec2]) -> f64 {
    let n = cache.segments();
    let dx = field_derivative(x);
    let interior = cache.integrate_ds(|i| -normal_velocity(cache, mu, i) * dot(cache.nu[i], x[i]));
    interior + boundary_term(cache, mu, x, &dx, n) - boundary_term(cache, mu, x, &dx, 0)
}

/// Derivative of the discrete energy in direction `X`, given the first two
/// parameter derivatives of `X`.
fn first_variation_of(cache: &GeometryCache, mu: f64, dir: &Derivatives) -> f64 {
    cache.integrate_dx(|i| {
        let g1 = cache.derivs.at(1, i);
        let g2 = cache.derivs.at(2, i);
        let x1 = dir.at(1, i);
        let x2 = dir.at(2, i);
        let (s, k) = (cache.speed[i], cache.k[i]);
        let ds = dot(cache.tau[i], x1);
        let dcross = x1[0] * g2[1] - x1[1] * g2[0] + g1[0] * x2[1] - g1[1] * x2[0];
        let dk = dcross / (s * s * s) - 3.0 * k * ds / s;
        2.0 * k * dk * s + (k * k + mu) * ds
    })
}

/// `δE_γ[X]`, the exact derivative of [`energy`] in direction `X`.
pub fn first_variation(curve: &DiscreteCurve, mu: f64, x: &[Vec2]) -> Result<f64> {
    check_mu(mu)?;
    check_field(curve.nodes().len(), x, curve.is_constrained())?;
    Ok(first_variation_of(&build_cache(curve)?, mu, &Derivatives::of_nodes(x)))
}

/// `δE_γ[X]` from the gradient field plus the boundary terms.
pub fn first_variation_boundary_form(curve: &DiscreteCurve, mu: f64, x: &[Vec2]) -> Result<f64> {
    check_mu(mu)?;
    check_field(curve.nodes().len(), x, curve.is_constrained())?;
    Ok(boundary_form_of(&build_cache(curve)?, mu, x))
}

fn field_derivs(x: &[Vec2]) -> Derivatives {
    Derivatives::of_nodes(x)
}

/// `E(γ + εX)`, evaluated from the derivative arrays of `γ` and `X`.
pub fn energy_along(base: &Derivatives, dir: &Derivatives, eps: f64, mu: f64) -> Result<f64> {
    Ok(energy_of(&GeometryCache::from_derivatives(base.combine(eps, dir))?, mu))
}

/// Default difference step `1e−4·(1 + ‖γ‖∞)`.
pub fn default_eps(curve: &DiscreteCurve) -> f64 {
    1e-4 * (1.0 + curve.max_abs())
}

/// `δ²E(X, Y)` as the centered difference in `η` of `δE_{γ+ηY}[X]`.
pub fn second_variation(curve: &DiscreteCurve, mu: f64, x: &[Vec2], y: &[Vec2]) -> Result<f64> {
    second_variation_with(curve, mu, x, y, default_eps(curve))
}

pub fn second_variation_with(curve: &DiscreteCurve, mu: f64, x: &[Vec2], y: &[Vec2], eta: f64) -> Result<f64> {
    check_mu(mu)?;
    let n1 = curve.nodes().len();
    check_field(n1, x, curve.is_constrained())?;
    check_field(n1, y, curve.is_constrained())?;
    let base = Derivatives::of_nodes(curve.nodes());
    let dir = field_derivs(y);
    let dx = field_derivs(x);
    let plus = GeometryCache::from_derivatives(base.combine(eta, &dir))?;
    let minus = GeometryCache::from_derivatives(base.combine(-eta, &dir))?;
    Ok((first_variation_of(&plus, mu, &dx) - first_variation_of(&minus, mu, &dx)) / (2.0 * eta))
}

/// Which evaluation of `δE` a check compares against finite differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationForm {
    Direct,
    BoundaryTerms,
}

/// Compares [`first_variation`] with centered differences of the energy.
///
/// The reported difference, errors and `eps` refer to the last entry of
/// `eps_list`; the observed order uses the first two.
pub fn verify_variation(curve: &DiscreteCurve, mu: f64, x: &[Vec2], eps_list: &[f64]) -> Result<VariationReport> {
    verify_variation_form(curve, mu, x, eps_list, VariationForm::Direct)
}

pub fn verify_variation_form(
    curve: &DiscreteCurve,
    mu: f64,
    x: &[Vec2],
    eps_list: &[f64],
    form: VariationForm,
) -> Result<VariationReport> {
    if eps_list.len() < 2 {
        return Err(Error::InvalidParameter("verify_variation needs at least two step sizes".into()));
    }
    let analytic = match form {
        VariationForm::Direct => first_variation(curve, mu, x)?,
        VariationForm::BoundaryTerms => first_variation_boundary_form(curve, mu, x)?,
    };
    let base = Derivatives::of_nodes(curve.nodes());
    let dir = field_derivs(x);
    let fd = |eps: f64| -> Result<f64> {
        Ok((energy_along(&base, &dir, eps, mu)? - energy_along(&base, &dir, -eps, mu)?) / (2.0 * eps))
    };
    let e0 = (fd(eps_list[0])? - analytic).abs();
    let e1 = (fd(eps_list[1])? - analytic).abs();
    let observed_order = if e0 > 0.0 && e1 > 0.0 {
        (e0 / e1).ln() / (eps_list[0] / eps_list[1]).ln()
    } else {
        f64::NAN
    };
    let eps = *eps_list.last().unwrap();
    let finite_difference = fd(eps)?;
    let abs_err = (analytic - finite_difference).abs();
    Ok(VariationReport {
        analytic,
        finite_difference,
        eps,
        abs_err,
        rel_err: abs_err / analytic.abs(),
        observed_order,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn segment_energy_and_gradient() {
        let c = DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], 64).unwrap();
        assert!((energy(&c, 1.0).unwrap() - 1.0).abs() < 1e-14);
        let g = gradient(&c, 1.0).unwrap();
        assert!(g.interior.iter().all(|v| v == &[0.0, 0.0]));
        assert_eq!(g.boundary_coeff, [1.0, 1.0]);
        assert!((g.dual_norm - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn semicircle_energy_matches_closed_form() {
        for (r, mu) in [(1.0, 1.0), (0.5, 4.0), (2.0, 0.3)] {
            let c = DiscreteCurve::semicircle(r, 1000).unwrap();
            let e = energy(&c, mu).unwrap();
            assert!((e - (PI / r + PI * mu * r)).abs() < 1e-6, "{e}");
        }
    }

    #[test]
    fn rejects_bad_mu_and_fields() {
        let c = DiscreteCurve::semicircle(1.0, 32).unwrap();
        assert!(matches!(energy(&c, 0.0), Err(Error::NonPositiveMu(_))));
        let mut x = vec![[0.0, 0.0]; 33];
        x[32] = [0.0, 1.0];
        assert!(matches!(first_variation(&c, 1.0, &x), Err(Error::ConstraintViolation { end: 1, .. })));
        assert!(matches!(first_variation(&c, 1.0, &x[..3]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(verify_variation(&c, 1.0, &x, &[1e-4]), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn zero_fields_give_zero_variations() {
        let c = DiscreteCurve::semicircle(1.0, 64).unwrap();
        let z = vec![[0.0, 0.0]; 65];
        assert_eq!(first_variation(&c, 1.0, &z).unwrap(), 0.0);
        assert_eq!(second_variation(&c, 1.0, &z, &z).unwrap(), 0.0);
    }

    #[test]
    fn translation_is_a_null_direction() {
        let c = DiscreteCurve::semicircle(1.0, 128).unwrap();
        let x = vec![[1.0, 0.0]; 129];
        assert_eq!(first_variation(&c, 2.0, &x).unwrap(), 0.0);
        assert!(first_variation_boundary_form(&c, 2.0, &x).unwrap().abs() < 1e-9);
    }

    #[test]
    fn dilation_identity() {
        let c = DiscreteCurve::semicircle(1.5, 128).unwrap();
        let mu = 0.7;
        let g = build_cache(&c).unwrap();
        let want = mu * g.total_len - g.integrate_ds(|i| g.k[i] * g.k[i]);
        let got = first_variation(&c, mu, c.nodes()).unwrap();
        assert!((got - want).abs() < 1e-12 * want.abs(), "{got} vs {want}");
        let strong = first_variation_boundary_form(&c, mu, c.nodes()).unwrap();
        assert!((strong - want).abs() < 1e-8 * want.abs(), "{strong} vs {want}");
    }
}
