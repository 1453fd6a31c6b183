//! Discrete planar curves and their arclength geometry.
//!
//! A curve is sampled at `N + 1` nodes `γ(i/N)`. Parameter derivatives up
//! to fifth order come from the exact-weight stencils in
//! [`numerics::stencil`](crate::numerics::stencil); curvature and its
//! arclength derivatives are then obtained by Taylor-jet arithmetic at each
//! node. With `ν = (−τ₂, τ₁)` the counterclockwise unit circle has `k = +1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::jet::Jet;
use crate::numerics::{interp, quadrature, stencil};

pub type Vec2 = [f64; 2];

#[inline]
pub(crate) fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Polyline sample of a regular curve `γ: [0, 1] → ℝ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCurve {
    nodes: Vec<Vec2>,
    constrained: bool,
}

impl DiscreteCurve {
    pub const MIN_SEGMENTS: usize = 16;

    /// Validates node count, finiteness, nonzero segments and, for
    /// constrained curves, `y = 0` exactly at both ends.
    pub fn new(nodes: Vec<Vec2>, constrained: bool) -> Result<Self> {
        let n = nodes.len().saturating_sub(1);
        if n < Self::MIN_SEGMENTS {
            return Err(Error::TooFewNodes { got: n, min: Self::MIN_SEGMENTS });
        }
        if let Some(index) = nodes.iter().position(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::NonFiniteNode { index });
        }
        if let Some(index) = nodes.windows(2).position(|w| w[0] == w[1]) {
            return Err(Error::ZeroSegment { index });
        }
        if constrained {
            for (end, p) in [(0, nodes[0]), (1, nodes[n])] {
                if p[1] != 0.0 {
                    return Err(Error::OffAxis { end, y: p[1] });
                }
            }
        }
        Ok(DiscreteCurve { nodes, constrained })
    }

    /// Samples `f` at `x_i = i/n`.
    pub fn from_fn(n: usize, constrained: bool, f: impl Fn(f64) -> Vec2) -> Result<Self> {
        let mut nodes: Vec<Vec2> = (0..=n).map(|i| f(i as f64 / n as f64)).collect();
        if constrained && n > 0 {
            nodes[0][1] = 0.0;
            nodes[n][1] = 0.0;
        }
        Self::new(nodes, constrained)
    }

    /// Straight segment from `a` to `b`; constrained when both ends lie on the axis.
    pub fn segment(a: Vec2, b: Vec2, n: usize) -> Result<Self> {
        let constrained = a[1] == 0.0 && b[1] == 0.0;
        Self::from_fn(n, constrained, |x| [a[0] + x * (b[0] - a[0]), a[1] + x * (b[1] - a[1])])
    }

    /// Upper semicircle of radius `r` about the origin, traversed
    /// counterclockwise from `(r, 0)` to `(−r, 0)`.
    pub fn semicircle(r: f64, n: usize) -> Result<Self> {
        let pi = std::f64::consts::PI;
        Self::from_fn(n, true, |x| [r * (pi * x).cos(), r * (pi * x).sin()])
    }

    pub fn nodes(&self) -> &[Vec2] {
        &self.nodes
    }

    pub fn into_nodes(self) -> Vec<Vec2> {
        self.nodes
    }

    /// Number of segments `N`.
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_constrained(&self) -> bool {
        self.constrained
    }

    pub fn translated(&self, dx: f64) -> Self {
        let nodes = self.nodes.iter().map(|p| [p[0] + dx, p[1]]).collect();
        DiscreteCurve { nodes, constrained: self.constrained }
    }

    /// `max_i max(|x_i|, |y_i|)`.
    pub fn max_abs(&self) -> f64 {
        self.nodes.iter().fold(0.0, |m, p| m.max(p[0].abs()).max(p[1].abs()))
    }

    /// Same nodes with the constraint flag replaced (validated again).
    pub fn with_constraint(self, constrained: bool) -> Result<Self> {
        Self::new(self.nodes, constrained)
    }
}

/// Parameter derivatives `∂ₓ^d γ`, `d = 0..=5`, at every node.
#[derive(Debug, Clone)]
pub struct Derivatives {
    x: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

impl Derivatives {
    pub fn of_nodes(nodes: &[Vec2]) -> Self {
        let n = nodes.len();
        let xs: Vec<f64> = nodes.iter().map(|p| p[0]).collect();
        let ys: Vec<f64> = nodes.iter().map(|p| p[1]).collect();
        let mut x = vec![xs];
        let mut y = vec![ys];
        for d in 1..=stencil::MAX_ORDER {
            let op = stencil::operator(d);
            let mut dx = vec![0.0; n];
            let mut dy = vec![0.0; n];
            op.apply(&x[0], &mut dx);
            op.apply(&y[0], &mut dy);
            x.push(dx);
            y.push(dy);
        }
        Derivatives { x, y }
    }

    /// `self + eps · other`, evaluated per derivative array. Because the
    /// stencils are linear this equals the derivatives of the perturbed
    /// nodes, without rounding the perturbed nodes first.
    pub fn combine(&self, eps: f64, other: &Derivatives) -> Derivatives {
        let mix = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| {
            a.iter()
                .zip(b)
                .map(|(u, v)| u.iter().zip(v).map(|(p, q)| p + eps * q).collect())
                .collect()
        };
        Derivatives { x: mix(&self.x, &other.x), y: mix(&self.y, &other.y) }
    }

    pub fn nodes(&self) -> usize {
        self.x[0].len()
    }

    /// `∂ₓ^d γ` at node `i`.
    pub fn at(&self, d: usize, i: usize) -> Vec2 {
        [self.x[d][i], self.y[d][i]]
    }
}

/// Arclength geometry of a curve, per node unless stated otherwise.
#[derive(Debug, Clone)]
pub struct GeometryCache {
    /// Chord lengths `h_i = |γ_{i+1} − γ_i|`.
    pub seg_len: Vec<f64>,
    /// `Σ h_i`.
    pub polyline_len: f64,
    /// `ℓ = ∫₀¹ |∂ₓγ| dx` by the module quadrature.
    pub total_len: f64,
    /// Parameter speed `|∂ₓγ|`.
    pub speed: Vec<f64>,
    pub tau: Vec<Vec2>,
    pub nu: Vec<Vec2>,
    pub k: Vec<f64>,
    pub ds_k: Vec<f64>,
    pub ds2_k: Vec<f64>,
    pub ds3_k: Vec<f64>,
    /// Quadrature weights in the parameter: `∫ f dx ≈ Σ w_i f_i`.
    pub weights: Vec<f64>,
    pub derivs: Derivatives,
}

impl GeometryCache {
    pub fn from_derivatives(derivs: Derivatives) -> Result<Self> {
        let n1 = derivs.nodes();
        let mut seg_len = Vec::with_capacity(n1 - 1);
        for i in 0..n1 - 1 {
            let a = derivs.at(0, i);
            let b = derivs.at(0, i + 1);
            let h = (b[0] - a[0]).hypot(b[1] - a[1]);
            if h == 0.0 || !h.is_finite() {
                return Err(Error::ZeroSegment { index: i });
            }
            seg_len.push(h);
        }
        let mut speed = vec![0.0; n1];
        let mut tau = vec![[0.0; 2]; n1];
        let mut nu = vec![[0.0; 2]; n1];
        let mut k = vec![0.0; n1];
        let mut ds_k = vec![0.0; n1];
        let mut ds2_k = vec![0.0; n1];
        let mut ds3_k = vec![0.0; n1];
        for i in 0..n1 {
            let xd: Vec<f64> = (1..=5).map(|d| derivs.x[d][i]).collect();
            let yd: Vec<f64> = (1..=5).map(|d| derivs.y[d][i]).collect();
            let xj = Jet::from_derivatives(&xd);
            let yj = Jet::from_derivatives(&yd);
            let s = (xj * xj + yj * yj).sqrt();
            let sigma = s.value();
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::ZeroSegment { index: i.min(n1 - 2) });
            }
            let cross = xj * yj.deriv() - yj * xj.deriv();
            let kj = cross.div(&(s * s * s));
            let ks = kj.deriv().div(&s);
            let kss = ks.deriv().div(&s);
            let ksss = kss.deriv().div(&s);
            speed[i] = sigma;
            let t = [xd[0] / sigma, yd[0] / sigma];
            tau[i] = t;
            nu[i] = [-t[1], t[0]];
            k[i] = kj.value();
            ds_k[i] = ks.value();
            ds2_k[i] = kss.value();
            ds3_k[i] = ksss.value();
        }
        let weights = quadrature::weights(n1 - 1);
        let total_len = weights.iter().zip(&speed).map(|(w, s)| w * s).sum();
        let polyline_len = seg_len.iter().sum();
        Ok(GeometryCache { seg_len, polyline_len, total_len, speed, tau, nu, k, ds_k, ds2_k, ds3_k, weights, derivs })
    }

    pub fn segments(&self) -> usize {
        self.seg_len.len()
    }

    /// `∫ f ds`.
    pub fn integrate_ds(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().zip(&self.speed).enumerate().map(|(i, (w, s))| w * s * f(i)).sum()
    }

    /// `∫ f dx`.
    pub fn integrate_dx(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights.iter().enumerate().map(|(i, w)| w * f(i)).sum()
    }
}

/// Geometry of `curve`; see [`GeometryCache`].
pub fn build_cache(curve: &DiscreteCurve) -> Result<GeometryCache> {
    GeometryCache::from_derivatives(Derivatives::of_nodes(curve.nodes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl BoundingBox {
    pub fn diameter(&self) -> f64 {
        (self.xmax - self.xmin).hypot(self.ymax - self.ymin)
    }
}

pub fn bounding_box(curve: &DiscreteCurve) -> BoundingBox {
    let mut b = BoundingBox { xmin: f64::INFINITY, xmax: f64::NEG_INFINITY, ymin: f64::INFINITY, ymax: f64::NEG_INFINITY };
    for p in curve.nodes() {
        b.xmin = b.xmin.min(p[0]);
        b.xmax = b.xmax.max(p[0]);
        b.ymin = b.ymin.min(p[1]);
        b.ymax = b.ymax.max(p[1]);
    }
    b
}

/// Resamples to `m` segments of equal arclength.
///
/// The curve is interpolated by local degree-7 Lagrange polynomials in the
/// parameter and its speed is integrated with the same interpolant. End
/// nodes are copied exactly.
pub fn resample_uniform(curve: &DiscreteCurve, m: usize) -> Result<DiscreteCurve> {
    let cache = build_cache(curve)?;
    resample_with(curve, &cache.speed, m)
}

pub(crate) fn resample_with(curve: &DiscreteCurve, speed: &[f64], m: usize) -> Result<DiscreteCurve> {
    let nodes = curve.nodes();
    let n = curve.segments();
    let xs: Vec<f64> = nodes.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = nodes.iter().map(|p| p[1]).collect();
    let cum = interp::cumulative(speed);
    let total = cum[n];
    let mut out = Vec::with_capacity(m + 1);
    out.push(nodes[0]);
    for j in 1..m {
        let t = interp::invert_cumulative(speed, &cum, total * j as f64 / m as f64);
        out.push([interp::eval(&xs, t), interp::eval(&ys, t)]);
    }
    out.push(nodes[n]);
    DiscreteCurve::new(out, curve.is_constrained())
}

/// Evaluates the interpolant of `curve` at `count + 1` equispaced parameters.
pub fn refine(curve: &DiscreteCurve, count: usize) -> Vec<Vec2> {
    let nodes = curve.nodes();
    let n = curve.segments();
    let xs: Vec<f64> = nodes.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = nodes.iter().map(|p| p[1]).collect();
    (0..=count)
        .map(|j| {
            let t = n as f64 * j as f64 / count as f64;
            [interp::eval(&xs, t), interp::eval(&ys, t)]
        })
        .collect()
}

fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let l2 = dot(ab, ab);
    let t = if l2 > 0.0 { (dot(ap, ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

fn directed(a: &[Vec2], b: &[Vec2], shift: f64) -> f64 {
    a.iter()
        .map(|p| {
            let q = [p[0] + shift, p[1]];
            b.windows(2).map(|w| point_segment_distance(q, w[0], w[1])).fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

const REFINE: usize = 8;

/// Symmetric Hausdorff distance between the interpolated curves.
pub fn hausdorff_distance(a: &DiscreteCurve, b: &DiscreteCurve) -> f64 {
    let ra = refine(a, REFINE * a.segments());
    let rb = refine(b, REFINE * b.segments());
    directed(&ra, &rb, 0.0).max(directed(&rb, &ra, 0.0))
}

/// Hausdorff distance minimized over horizontal shifts of `a`.
/// Returns `(distance, shift)`.
pub fn aligned_hausdorff(a: &DiscreteCurve, b: &DiscreteCurve) -> (f64, f64) {
    let ra = refine(a, REFINE * a.segments());
    let rb = refine(b, REFINE * b.segments());
    let mean_x = |c: &DiscreteCurve| -> f64 {
        match build_cache(c) {
            Ok(g) => g.integrate_ds(|i| c.nodes()[i][0]) / g.total_len,
            Err(_) => c.nodes().iter().map(|p| p[0]).sum::<f64>() / c.nodes().len() as f64,
        }
    };
    let guess = mean_x(b) - mean_x(a);
    let f = |s: f64| directed(&ra, &rb, s).max(directed(&rb, &ra, -s));
    let diam = bounding_box(b).diameter().max(bounding_box(a).diameter());
    let (mut lo, mut hi) = (guess - 0.05 * diam, guess + 0.05 * diam);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > 1e-9 * (1.0 + diam) {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    let s = 0.5 * (lo + hi);
    [(f(guess), guess), (f(s), s)].into_iter().min_by(|p, q| p.0.total_cmp(&q.0)).unwrap()
}

/// Defect of the integration-by-parts identity for the normal derivative
/// `∂ₓ^⊥X = ∂ₓX − ⟨∂ₓX, τ⟩τ`:
///
/// `∫⟨∂ₓ^⊥X, Y⟩ + ∫⟨X, ∂ₓ^⊥Y⟩ − ∫(⟨X,τ⟩⟨Y,∂ₓτ⟩ + ⟨X,∂ₓτ⟩⟨Y,τ⟩) − ⟨X^⊥, Y⟩|₀¹`,
///
/// all integrals in `dx`, returned in absolute value.
pub fn discrete_ibp_defect(x: &[Vec2], y: &[Vec2], cache: &GeometryCache) -> Result<f64> {
    let n1 = cache.speed.len();
    for f in [x, y] {
        if f.len() != n1 {
            return Err(Error::DimensionMismatch { got: f.len(), expected: n1 });
        }
    }
    let dx = field_derivative(x);
    let dy = field_derivative(y);
    let perp = |v: Vec2, t: Vec2| {
        let c = dot(v, t);
        [v[0] - c * t[0], v[1] - c * t[1]]
    };
    let lhs = cache.integrate_dx(|i| dot(perp(dx[i], cache.tau[i]), y[i]));
    let first = -cache.integrate_dx(|i| dot(x[i], perp(dy[i], cache.tau[i])));
    let second = cache.integrate_dx(|i| {
        let t = cache.tau[i];
        let c = cache.k[i] * cache.speed[i];
        let dtau = [c * cache.nu[i][0], c * cache.nu[i][1]];
        dot(x[i], t) * dot(y[i], dtau) + dot(x[i], dtau) * dot(y[i], t)
    });
    let n = n1 - 1;
    let boundary = dot(perp(x[n], cache.tau[n]), y[n]) - dot(perp(x[0], cache.tau[0]), y[0]);
    Ok((lhs - (first + second + boundary)).abs())
}

/// `∂ₓX` of a nodal field with the curve stencils.
pub(crate) fn field_derivative(f: &[Vec2]) -> Vec<Vec2> {
    let op = stencil::operator(1);
    let xs: Vec<f64> = f.iter().map(|p| p[0]).collect();
    let ys: Vec<f64> = f.iter().map(|p| p[1]).collect();
    let mut dx = vec![0.0; f.len()];
    let mut dy = vec![0.0; f.len()];
    op.apply(&xs, &mut dx);
    op.apply(&ys, &mut dy);
    dx.into_iter().zip(dy).map(|(a, b)| [a, b]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], 8), Err(Error::TooFewNodes { .. })));
        let mut nodes: Vec<Vec2> = (0..=20).map(|i| [i as f64, 0.0]).collect();
        nodes[5] = nodes[4];
        assert!(matches!(DiscreteCurve::new(nodes.clone(), false), Err(Error::ZeroSegment { index: 4 })));
        nodes[5] = [5.0, 0.0];
        nodes[20][1] = 1e-3;
        assert!(matches!(DiscreteCurve::new(nodes, true), Err(Error::OffAxis { end: 1, .. })));
    }

    #[test]
    fn line_has_zero_curvature() {
        let c = DiscreteCurve::segment([0.0, 0.0], [1.0, 0.0], 64).unwrap();
        let g = build_cache(&c).unwrap();
        assert!(g.k.iter().chain(&g.ds_k).chain(&g.ds2_k).all(|v| *v == 0.0));
        assert!((g.total_len - 1.0).abs() < 1e-14);
    }

    #[test]
    fn semicircle_curvature_is_inverse_radius() {
        let c = DiscreteCurve::semicircle(2.0, 256).unwrap();
        let g = build_cache(&c).unwrap();
        for i in 0..=256 {
            assert!((g.k[i] - 0.5).abs() < 1e-9, "k[{i}] = {}", g.k[i]);
            assert!(g.ds_k[i].abs() < 1e-6);
            assert!((dot(g.tau[i], g.tau[i]) - 1.0).abs() < 1e-12);
            assert!(dot(g.tau[i], g.nu[i]).abs() < 1e-12);
        }
        assert!((g.total_len - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn parabola_vertex_curvature() {
        let c = DiscreteCurve::from_fn(64, false, |x| {
            let t = 2.0 * x - 1.0;
            [t, t * t]
        })
        .unwrap();
        let g = build_cache(&c).unwrap();
        assert!((g.k[32] - 2.0).abs() < 1e-10);
        assert_eq!(g.ds_k[32].abs() < 1e-8, true);
    }

    #[test]
    fn resample_segment_gives_uniform_partition() {
        let c = DiscreteCurve::from_fn(20, true, |x| [2.0 * (x + 0.3 * x * x) / 1.3, 0.0]).unwrap();
        let r = resample_uniform(&c, 16).unwrap();
        for (i, p) in r.nodes().iter().enumerate() {
            assert!((p[0] - 2.0 * i as f64 / 16.0).abs() < 1e-12, "{i}: {}", p[0]);
            assert_eq!(p[1], 0.0);
        }
    }

    #[test]
    fn resample_is_idempotent_on_uniform_curves() {
        let c = DiscreteCurve::semicircle(1.0, 128).unwrap();
        let r = resample_uniform(&c, 128).unwrap();
        for (p, q) in c.nodes().iter().zip(r.nodes()) {
            assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12, "{:e} {:e}", p[0] - q[0], p[1] - q[1]);
        }
    }

    #[test]
    fn clustered_semicircle_resamples_to_equal_chords() {
        let c = DiscreteCurve::from_fn(100, true, |x| {
            let a = PI * (x - 0.08 * (2.0 * PI * x).sin());
            [a.cos(), a.sin()]
        })
        .unwrap();
        let r = resample_uniform(&c, 128).unwrap();
        let g = build_cache(&r).unwrap();
        let h0 = g.seg_len[0];
        assert!(g.seg_len.iter().all(|h| (h - h0).abs() < 1e-8));
        assert!((g.total_len - PI).abs() < 1e-9);
    }

    #[test]
    fn bounding_box_of_semicircle_and_translation() {
        let c = DiscreteCurve::semicircle(1.0, 64).unwrap();
        let b = bounding_box(&c);
        assert_eq!((b.xmin, b.xmax, b.ymin), (-1.0, 1.0, 0.0));
        assert!((b.ymax - 1.0).abs() < 1e-12);
        let t = bounding_box(&c.translated(3.0));
        assert_eq!((t.xmin, t.xmax, t.ymin, t.ymax), (b.xmin + 3.0, b.xmax + 3.0, b.ymin, b.ymax));
    }

    #[test]
    fn ibp_defect_vanishes_for_zero_fields() {
        let c = DiscreteCurve::semicircle(1.0, 64).unwrap();
        let g = build_cache(&c).unwrap();
        let z = vec![[0.0; 2]; 65];
        assert_eq!(discrete_ibp_defect(&z, &z, &g).unwrap(), 0.0);
        assert!(matches!(discrete_ibp_defect(&z[..10], &z, &g), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn aligned_hausdorff_recovers_shift() {
        let c = DiscreteCurve::semicircle(1.0, 64).unwrap();
        let (d, s) = aligned_hausdorff(&c.translated(0.3), &c);
        assert!(d < 1e-8, "{d}");
        assert!((s + 0.3).abs() < 1e-7);
        assert_eq!(hausdorff_distance(&c, &c), 0.0);
        let h = hausdorff_distance(&c.translated(0.3), &c);
        assert!(h > 0.1 && h <= 0.3 + 1e-12, "{h}");
    }
}
