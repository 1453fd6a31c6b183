//! Gregory's end-corrected trapezoidal rule on `[0, 1]`.

use std::sync::OnceLock;

use num_rational::Ratio;

type Q = Ratio<i128>;

/// Number of corrected nodes at each end.
pub const CORRECTIONS: usize = 7;

fn corrections() -> &'static [f64; CORRECTIONS] {
    static C: OnceLock<[f64; CORRECTIONS]> = OnceLock::new();
    C.get_or_init(|| {
        // Even Bernoulli numbers B_2, B_4, ...
        let bernoulli = [
            Q::new(1, 6),
            Q::new(-1, 30),
            Q::new(1, 42),
            Q::new(-1, 30),
            Q::new(5, 66),
        ];
        let m = CORRECTIONS;
        let mut a: Vec<Vec<Q>> = (0..m)
            .map(|q| (0..m).map(|j| Q::from_integer((j as i128).pow(q as u32))).collect())
            .collect();
        let mut rhs: Vec<Q> = (0..m)
            .map(|q| {
                if q % 2 == 1 {
                    bernoulli[(q - 1) / 2] / Q::from_integer(q as i128 + 1)
                } else {
                    Q::from_integer(0)
                }
            })
            .collect();
        // Gaussian elimination; the Vandermonde matrix on 0..m has no zero pivots.
        for col in 0..m {
            let p = (col..m).find(|&r| a[r][col] != Q::from_integer(0)).expect("singular");
            a.swap(col, p);
            rhs.swap(col, p);
            for r in 0..m {
                if r != col {
                    let f = a[r][col] / a[col][col];
                    for c in col..m {
                        let v = a[col][c];
                        a[r][c] -= f * v;
                    }
                    let v = rhs[col];
                    rhs[r] -= f * v;
                }
            }
        }
        let mut out = [0.0; CORRECTIONS];
        for j in 0..m {
            let q = rhs[j] / a[j][j];
            out[j] = *q.numer() as f64 / *q.denom() as f64;
        }
        out
    })
}

/// Weights `w_i` with `Σ w_i f(i/n) ≈ ∫₀¹ f`, for `n + 1` nodes.
pub fn weights(n: usize) -> Vec<f64> {
    assert!(n + 1 >= 2 * CORRECTIONS, "grid too small for end corrections");
    let h = 1.0 / n as f64;
    let mut w = vec![h; n + 1];
    w[0] = 0.5 * h;
    w[n] = 0.5 * h;
    for (j, c) in corrections().iter().enumerate() {
        w[j] += c * h;
        w[n - j] += c * h;
    }
    w
}
