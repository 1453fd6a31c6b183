//! Finite-difference stencils on the uniform parameter grid `x_i = i/N`.
//!
//! Weights are generated with Fornberg's recursion in exact rational
//! arithmetic and stored as integer numerators over one common
//! denominator. Applying a stencil is then a dot product of small integers
//! with node values, which [`dot2`] evaluates in doubled precision. This
//! keeps the `N^d` amplification of rounding errors in high derivatives
//! down to the level of the input data itself.

use std::sync::OnceLock;

use num_rational::Ratio;

type Q = Ratio<i128>;

/// Formal accuracy order of every stencil.
pub const ACCURACY: usize = 6;
/// Highest derivative order with precomputed stencils.
pub const MAX_ORDER: usize = 5;

/// One row of a difference operator, for unit grid spacing.
#[derive(Debug, Clone)]
pub struct Pattern {
    /// First node used, relative to the row node.
    pub rel_start: isize,
    /// Integer numerators, exactly representable as `f64`.
    pub numerators: Vec<f64>,
    pub denominator: f64,
}

impl Pattern {
    pub fn width(&self) -> usize {
        self.numerators.len()
    }

    /// Weight `j` as a float, for matrix assembly.
    pub fn weight(&self, j: usize) -> f64 {
        self.numerators[j] / self.denominator
    }
}

/// All rows of the `d`-th derivative operator, independent of `N`.
#[derive(Debug)]
pub struct Operator {
    pub order: usize,
    left: Vec<Pattern>,
    right: Vec<Pattern>,
    center: Pattern,
}

impl Operator {
    fn build(order: usize) -> Self {
        let width = 2 * order.div_ceil(2) - 1 + ACCURACY;
        let half = width / 2;
        let one_sided = width + 1;
        let left = (0..half)
            .map(|i| {
                let nodes: Vec<i128> = (0..one_sided as i128).collect();
                pattern(i as i128, &nodes, order, -(i as isize))
            })
            .collect();
        let right = (0..half)
            .map(|r| {
                let nodes: Vec<i128> = (0..one_sided as i128).map(|j| j - one_sided as i128 + 1).collect();
                pattern(-(r as i128), &nodes, order, r as isize + 1 - one_sided as isize)
            })
            .collect();
        let nodes: Vec<i128> = (-(half as i128)..=half as i128).collect();
        let center = pattern(0, &nodes, order, -(half as isize));
        Operator { order, left, right, center }
    }

    /// Smallest `N` for which every row fits on the grid.
    pub fn min_segments(&self) -> usize {
        self.center.width()
    }

    /// Stencil used at row `i` of a grid with `n` segments.
    pub fn row(&self, n: usize, i: usize) -> &Pattern {
        let half = self.left.len();
        if i < half {
            &self.left[i]
        } else if n - i < half {
            &self.right[n - i]
        } else {
            &self.center
        }
    }

    /// Derivative of `values` (length `n + 1`) with respect to `x = i/n`.
    pub fn apply(&self, values: &[f64], out: &mut [f64]) {
        let n = values.len() - 1;
        let scale = (n as f64).powi(self.order as i32);
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.apply_row(values, i) * scale;
        }
    }

    /// Row `i` of the unit-spacing derivative, without the `N^d` factor.
    pub fn apply_row(&self, values: &[f64], i: usize) -> f64 {
        let n = values.len() - 1;
        let p = self.row(n, i);
        let start = (i as isize + p.rel_start) as usize;
        dot2(&p.numerators, &values[start..start + p.width()]) / p.denominator
    }
}

/// The derivative operators of orders `1..=MAX_ORDER`, built once.
pub fn operator(order: usize) -> &'static Operator {
    static OPS: OnceLock<Vec<Operator>> = OnceLock::new();
    assert!((1..=MAX_ORDER).contains(&order), "no stencil of order {order}");
    &OPS.get_or_init(|| (1..=MAX_ORDER).map(Operator::build).collect())[order - 1]
}

fn pattern(z: i128, nodes: &[i128], order: usize, rel_start: isize) -> Pattern {
    let w = fornberg(z, nodes, order);
    let den = w.iter().fold(1i128, |acc, q| lcm(acc, *q.denom()));
    let numerators: Vec<f64> = w
        .iter()
        .map(|q| {
            let v = q.numer() * (den / q.denom());
            assert!(v.abs() < (1i128 << 53), "stencil numerator not representable");
            v as f64
        })
        .collect();
    assert!(den < (1i128 << 53));
    Pattern { rel_start, numerators, denominator: den as f64 }
}

/// Weights of the `m`-th derivative at `z` on the given nodes.
fn fornberg(z: i128, nodes: &[i128], m: usize) -> Vec<Q> {
    let n = nodes.len();
    let zero = Q::from_integer(0);
    let mut c = vec![vec![zero; m + 1]; n];
    let mut c1 = Q::from_integer(1);
    let mut c4 = Q::from_integer(nodes[0] - z);
    c[0][0] = Q::from_integer(1);
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = Q::from_integer(1);
        let c5 = c4;
        c4 = Q::from_integer(nodes[i] - z);
        for j in 0..i {
            let c3 = Q::from_integer(nodes[i] - nodes[j]);
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (Q::from_integer(k as i128) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - Q::from_integer(k as i128) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: i128, b: i128) -> i128 {
    a / gcd(a, b) * b
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// Dot product evaluated as if in twice the working precision (Ogita,
/// Rump and Oishi's `Dot2`).
pub fn dot2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut c = 0.0;
    for (x, y) in a.iter().zip(b) {
        let p = x * y;
        let ep = x.mul_add(*y, -p);
        let (t, es) = two_sum(s, p);
        s = t;
        c += ep + es;
    }
    s + c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(n: usize, deg: i32) -> Vec<f64> {
        (0..=n).map(|i| (i as f64 / n as f64).powi(deg)).collect()
    }

    #[test]
    fn weights_sum_to_zero() {
        for d in 1..=MAX_ORDER {
            let op = operator(d);
            for i in 0..=40 {
                let p = op.row(40, i);
                assert_eq!(p.numerators.iter().sum::<f64>(), 0.0, "order {d} row {i}");
            }
        }
    }

    #[test]
    fn exact_on_low_degree_polynomials() {
        let n = 32;
        for d in 1..=MAX_ORDER {
            let op = operator(d);
            let deg = (d + ACCURACY - 1) as i32;
            let v = poly(n, deg);
            let mut out = vec![0.0; n + 1];
            op.apply(&v, &mut out);
            let falling: f64 = (0..d as i32).map(|j| (deg - j) as f64).product();
            for (i, o) in out.iter().enumerate() {
                let x = i as f64 / n as f64;
                let exact = falling * x.powi(deg - d as i32);
                assert!((o - exact).abs() < 1e-8 * (1.0 + exact.abs()), "d={d} i={i} {o} vs {exact}");
            }
        }
    }

    #[test]
    fn mirrored_rows_are_antisymmetric_for_odd_orders() {
        let op = operator(3);
        let l = op.row(50, 1);
        let r = op.row(50, 49);
        let lw: Vec<f64> = l.numerators.iter().map(|v| v / l.denominator).collect();
        let rw: Vec<f64> = r.numerators.iter().rev().map(|v| -v / r.denominator).collect();
        assert_eq!(lw, rw);
    }

    #[test]
    fn dot2_recovers_cancellation() {
        let a = [1e16, 1.0, -1e16];
        let b = [1.0, 1.0, 1.0];
        assert_eq!(dot2(&a, &b), 1.0);
    }
}
