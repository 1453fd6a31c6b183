//! Banded LU factorization with partial pivoting.

use crate::error::{Error, Result};

/// Square matrix with `kl` sub- and `ku` super-diagonals.
///
/// Row `i` keeps columns `i - kl ..= i + ku + kl`; the extra `kl` columns
/// hold the fill-in created by row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandMatrix { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn index(&self, row: usize, col: usize) -> Option<usize> {
        let off = col as isize - row as isize + self.kl as isize;
        (off >= 0 && (off as usize) < self.width && col < self.n).then(|| row * self.width + off as usize)
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.index(row, col).map_or(0.0, |k| self.data[k])
    }

    /// Panics if `(row, col)` lies outside the declared band.
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        assert!(
            col + self.kl >= row && col <= row + self.ku,
            "entry ({row}, {col}) outside band kl={} ku={}",
            self.kl,
            self.ku
        );
        let k = self.index(row, col).expect("column out of range");
        self.data[k] = v;
    }

    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let cur = self.get(row, col);
        self.set(row, col, cur + v);
    }

    /// Factorizes in place and solves `A x = b`, overwriting `b`.
    pub fn solve(mut self, b: &mut [f64]) -> Result<()> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let upper = self.ku + self.kl;
        for c in 0..n {
            let last = (c + self.kl).min(n - 1);
            let (mut p, mut best) = (c, 0.0f64);
            for r in c..=last {
                let v = self.get(r, c).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularMatrix(c));
            }
            let cend = (c + upper).min(n - 1);
            if p != c {
                for col in c..=cend {
                    let a = self.get(c, col);
                    let bb = self.get(p, col);
                    self.put(c, col, bb);
                    self.put(p, col, a);
                }
                b.swap(c, p);
            }
            let piv = self.get(c, c);
            for r in c + 1..=last {
                let f = self.get(r, c) / piv;
                if f == 0.0 {
                    continue;
                }
                self.put(r, c, 0.0);
                for col in c + 1..=cend {
                    let v = self.get(r, col) - f * self.get(c, col);
                    self.put(r, col, v);
                }
                b[r] -= f * b[c];
            }
        }
        for r in (0..n).rev() {
            let cend = (r + upper).min(n - 1);
            let mut s = b[r];
            for col in r + 1..=cend {
                s -= self.get(r, col) * b[col];
            }
            b[r] = s / self.get(r, r);
        }
        Ok(())
    }

    fn put(&mut self, row: usize, col: usize, v: f64) {
        let k = self.index(row, col).expect("fill outside storage");
        self.data[k] = v;
    }
}
