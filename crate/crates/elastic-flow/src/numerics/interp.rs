//! Local Lagrange interpolation on an equispaced grid.

/// Number of nodes in each local interpolant (degree 7).
pub const POINTS: usize = 8;

/// Interpolant of samples at `t = 0, 1, ..., n`, evaluated at fractional
/// index `t`. Uses the 8 nodes around `t`, shifted inward near the ends.
pub fn eval(values: &[f64], t: f64) -> f64 {
    let n = values.len() - 1;
    assert!(n + 1 >= POINTS);
    let start = window_start(n, t);
    let mut sum = 0.0;
    for j in 0..POINTS {
        let xj = (start + j) as f64;
        let mut l = 1.0;
        for m in 0..POINTS {
            if m != j {
                let xm = (start + m) as f64;
                l *= (t - xm) / (xj - xm);
            }
        }
        sum += l * values[start + j];
    }
    sum
}

fn window_start(n: usize, t: f64) -> usize {
    let base = t.floor() as isize - (POINTS as isize / 2 - 1);
    base.clamp(0, (n + 1 - POINTS) as isize) as usize
}

const GAUSS_X: [f64; 5] = [
    0.046_910_077_030_668_004,
    0.230_765_344_947_158_45,
    0.5,
    0.769_234_655_052_841_6,
    0.953_089_922_969_332,
];
const GAUSS_W: [f64; 5] = [
    0.118_463_442_528_094_54,
    0.239_314_335_249_683_23,
    0.284_444_444_444_444_45,
    0.239_314_335_249_683_23,
    0.118_463_442_528_094_54,
];

/// `∫_a^b` of the interpolant of `values`, with `a, b` in one cell.
fn cell_integral(values: &[f64], a: f64, b: f64) -> f64 {
    let h = b - a;
    GAUSS_X.iter().zip(GAUSS_W).map(|(x, w)| w * eval(values, a + h * x)).sum::<f64>() * h
}

/// Cumulative integrals of the interpolant from 0 to each node.
pub fn cumulative(values: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    let mut out = vec![0.0; n + 1];
    for i in 0..n {
        out[i + 1] = out[i] + cell_integral(values, i as f64, (i + 1) as f64);
    }
    out
}

/// Fractional index `t` where the running integral of a positive
/// `density` reaches `target`; `cum` is [`cumulative`] of `density`.
pub fn invert_cumulative(density: &[f64], cum: &[f64], target: f64) -> f64 {
    let n = density.len() - 1;
    if target <= 0.0 {
        return 0.0;
    }
    if target >= cum[n] {
        return n as f64;
    }
    let cell = match cum.binary_search_by(|v| v.total_cmp(&target)) {
        Ok(i) => return i as f64,
        Err(i) => i - 1,
    };
    let a = cell as f64;
    let mut t = a + (target - cum[cell]) / (cum[cell + 1] - cum[cell]);
    for _ in 0..50 {
        let f = cum[cell] + cell_integral(density, a, t) - target;
        let dt = f / eval(density, t);
        t = (t - dt).clamp(a, a + 1.0);
        if dt.abs() < 1e-15 * (1.0 + t) {
            break;
        }
    }
    t
}
