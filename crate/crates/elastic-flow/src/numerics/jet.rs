//! Truncated Taylor series, used to push parameter derivatives through
//! the curvature formula without nested differencing.

use std::ops::{Add, Mul, Sub};

const CAP: usize = 6;

/// Taylor coefficients `c_j` of `f(t + h) = Σ c_j h^j`, truncated after
/// `len` terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; CAP],
    len: usize,
}

impl Jet {
    /// Jet from derivative values `f, f', f'', ...`.
    pub fn from_derivatives(d: &[f64]) -> Self {
        assert!(!d.is_empty() && d.len() <= CAP);
        let mut c = [0.0; CAP];
        let mut fact = 1.0;
        for (j, v) in d.iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            c[j] = v / fact;
        }
        Jet { c, len: d.len() }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// The `j`-th derivative at the expansion point.
    pub fn derivative_value(&self, j: usize) -> f64 {
        assert!(j < self.len);
        self.c[j] * (1..=j).map(|v| v as f64).product::<f64>()
    }

    /// Jet of `f'`; one term shorter.
    pub fn deriv(&self) -> Self {
        assert!(self.len > 1);
        let mut c = [0.0; CAP];
        for j in 0..self.len - 1 {
            c[j] = (j + 1) as f64 * self.c[j + 1];
        }
        Jet { c, len: self.len - 1 }
    }

    pub fn div(&self, b: &Jet) -> Jet {
        let len = self.len.min(b.len);
        let mut q = [0.0; CAP];
        for j in 0..len {
            let mut s = self.c[j];
            for i in 1..=j {
                s -= b.c[i] * q[j - i];
            }
            q[j] = s / b.c[0];
        }
        Jet { c: q, len }
    }

    pub fn sqrt(&self) -> Jet {
        let mut r = [0.0; CAP];
        r[0] = self.c[0].sqrt();
        for j in 1..self.len {
            let mut s = self.c[j];
            for i in 1..j {
                s -= r[i] * r[j - i];
            }
            r[j] = s / (2.0 * r[0]);
        }
        Jet { c: r, len: self.len }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, b: Jet) -> Jet {
        let len = self.len.min(b.len);
        let mut c = [0.0; CAP];
        for j in 0..len {
            c[j] = self.c[j] + b.c[j];
        }
        Jet { c, len }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, b: Jet) -> Jet {
        let len = self.len.min(b.len);
        let mut c = [0.0; CAP];
        for j in 0..len {
            c[j] = self.c[j] - b.c[j];
        }
        Jet { c, len }
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, b: Jet) -> Jet {
        let len = self.len.min(b.len);
        let mut c = [0.0; CAP];
        for j in 0..len {
            for i in 0..=j {
                c[j] += self.c[i] * b.c[j - i];
            }
        }
        Jet { c, len }
    }
}
