//! Banded symmetric positive-definite Cholesky factorization, sized for the
//! 5-point Laplacian systems of the downstream elliptic solves. The factor is
//! built once per geometry and reused across iteration sweeps.

use crate::{Error, Result};

/// Assembly buffer for a banded SPD matrix in lower-band layout:
/// entry `(j, d)` holds `A[j+d][j]` for `0 <= d <= bw`.
pub struct BandedBuilder {
    n: usize,
    bw: usize,
    a: Vec<f64>,
}

impl BandedBuilder {
    pub fn new(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            a: vec![0.0; n * (bw + 1)],
        }
    }

    /// Add `v` at `(row, col)`; only the lower triangle is stored, so callers
    /// pass each symmetric pair once with `row >= col`.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        debug_assert!(row >= col && row - col <= self.bw);
        self.a[col * (self.bw + 1) + (row - col)] += v;
    }

    pub fn factor(self) -> Result<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        let mut l = self.a;
        for j in 0..n {
            let mut s = l[j * (bw + 1)];
            for k in j.saturating_sub(bw)..j {
                let v = l[k * (bw + 1) + (j - k)];
                s -= v * v;
            }
            if !(s > 0.0) {
                return Err(Error::Numeric(format!(
                    "banded Cholesky failed: non-positive pivot {s:.3e} at row {j}"
                )));
            }
            let diag = s.sqrt();
            l[j * (bw + 1)] = diag;
            let dmax = bw.min(n - 1 - j);
            for d in 1..=dmax {
                let i = j + d;
                let mut s = l[j * (bw + 1) + d];
                for k in i.saturating_sub(bw)..j {
                    s -= l[k * (bw + 1) + (i - k)] * l[k * (bw + 1) + (j - k)];
                }
                l[j * (bw + 1) + d] = s / diag;
            }
        }
        Ok(BandedCholesky { n, bw, l })
    }
}

/// Cholesky factor of a banded SPD matrix.
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    /// Solve `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (n, bw) = (self.n, self.bw);
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let mut s = b[i];
            for k in i.saturating_sub(bw)..i {
                s -= self.l[k * (bw + 1) + (i - k)] * b[k];
            }
            b[i] = s / self.l[i * (bw + 1)];
        }
        for j in (0..n).rev() {
            let mut s = b[j];
            let dmax = bw.min(n - 1 - j);
            for d in 1..=dmax {
                s -= self.l[j * (bw + 1) + d] * b[j + d];
            }
            b[j] = s / self.l[j * (bw + 1)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_poisson() {
        // -u'' = f on (0,1), u(0)=u(1)=0, manufactured u = x(1-x).
        let m = 63;
        let h = 1.0 / (m + 1) as f64;
        let mut b = BandedBuilder::new(m, 1);
        for i in 0..m {
            b.add(i, i, 2.0 / (h * h));
            if i > 0 {
                b.add(i, i - 1, -1.0 / (h * h));
            }
        }
        let chol = b.factor().unwrap();
        let mut rhs = vec![2.0; m]; // -u'' = 2
        chol.solve(&mut rhs);
        for i in 0..m {
            let x = (i + 1) as f64 * h;
            assert!((rhs[i] - x * (1.0 - x)).abs() < 1e-12);
        }
    }

    #[test]
    fn solves_2d_laplacian_exactly_for_its_own_product() {
        // A x = b with b built from a known x; 5-point Laplacian pattern.
        let (nx, ny) = (9usize, 7usize);
        let n = nx * ny;
        let bw = ny;
        let idx = |i: usize, j: usize| i * ny + j;
        let mut builder = BandedBuilder::new(n, bw);
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..nx {
            for j in 0..ny {
                let r = idx(i, j);
                let mut add = |c: usize, v: f64| {
                    dense[r][c] += v;
                    if r != c {
                        dense[c][r] += v;
                    }
                    if r >= c {
                        builder.add(r, c, v);
                    }
                };
                add(r, 4.0);
                if i > 0 {
                    add(idx(i - 1, j), -1.0);
                }
                if j > 0 {
                    add(idx(i, j - 1), -1.0);
                }
            }
        }
        let x_true: Vec<f64> = (0..n)
            .map(|k| ((k * 37 + 11) % 17) as f64 / 17.0 - 0.3)
            .collect();
        let mut b = vec![0.0; n];
        for (r, row) in dense.iter().enumerate() {
            b[r] = row.iter().zip(&x_true).map(|(a, x)| a * x).sum();
        }
        let chol = builder.factor().unwrap();
        chol.solve(&mut b);
        for k in 0..n {
            assert!((b[k] - x_true[k]).abs() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn rejects_indefinite_matrix() {
        let mut b = BandedBuilder::new(2, 1);
        b.add(0, 0, 1.0);
        b.add(1, 0, 5.0);
        b.add(1, 1, 1.0);
        assert!(b.factor().is_err());
    }
}
