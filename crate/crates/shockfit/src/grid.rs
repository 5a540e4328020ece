//! Rectangular Lagrangian grids: node-centered scalar fields on a
//! sub-rectangle `[x0, x1] x [0, 1]` of the stream-coordinate domain.

use crate::{Error, Result};

/// Node-centered rectangular grid with `nx * ny` cells, i.e.
/// `(nx+1) * (ny+1)` nodes. The second coordinate always spans `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldGrid {
    pub nx: usize,
    pub ny: usize,
    pub x0: f64,
    pub x1: f64,
}

impl FieldGrid {
    pub fn new(nx: usize, ny: usize, x0: f64, x1: f64) -> Result<Self> {
        if nx < 8 || ny < 8 {
            return Err(Error::Invalid(format!(
                "grid needs nx, ny >= 8, got nx={nx}, ny={ny}"
            )));
        }
        if !(x1 > x0) || !x0.is_finite() || !x1.is_finite() {
            return Err(Error::Invalid(format!(
                "grid needs x1 > x0, got [{x0}, {x1}]"
            )));
        }
        Ok(Self { nx, ny, x0, x1 })
    }

    pub fn hx(&self) -> f64 {
        (self.x1 - self.x0) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.hy()
    }
}

/// A scalar field stored at the nodes of a [`FieldGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: FieldGrid,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: FieldGrid) -> Self {
        Self {
            grid,
            data: vec![0.0; (grid.nx + 1) * (grid.ny + 1)],
        }
    }

    pub fn from_fn(grid: FieldGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(grid);
        for i in 0..=grid.nx {
            for j in 0..=grid.ny {
                field[(i, j)] = f(grid.x(i), grid.y(j));
            }
        }
        field
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn assert_finite(&self, name: &str) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "field {name} contains non-finite values"
            )));
        }
        Ok(())
    }

    /// Centered x-derivative, second-order one-sided at the ends.
    pub fn ddx(&self) -> Field {
        let g = self.grid;
        let h = g.hx();
        let mut out = Field::zeros(g);
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                out[(i, j)] = if i == 0 {
                    (-3.0 * self[(0, j)] + 4.0 * self[(1, j)] - self[(2, j)]) / (2.0 * h)
                } else if i == g.nx {
                    (3.0 * self[(g.nx, j)] - 4.0 * self[(g.nx - 1, j)] + self[(g.nx - 2, j)])
                        / (2.0 * h)
                } else {
                    (self[(i + 1, j)] - self[(i - 1, j)]) / (2.0 * h)
                };
            }
        }
        out
    }

    /// Row `j` as a contiguous copy (values along x).
    pub fn row(&self, j: usize) -> Vec<f64> {
        (0..=self.grid.nx).map(|i| self[(i, j)]).collect()
    }

    /// Column `i` as a contiguous copy (values along y).
    pub fn col(&self, i: usize) -> Vec<f64> {
        (0..=self.grid.ny).map(|j| self[(i, j)]).collect()
    }

    fn lagrange_weights(&self, x: f64) -> (usize, [f64; 4]) {
        let g = self.grid;
        let t = ((x - g.x0) / g.hx()).clamp(0.0, g.nx as f64);
        // Stencil start: nodes i0..i0+3 around x.
        let i0 = (t.floor() as usize)
            .saturating_sub(1)
            .min(g.nx.saturating_sub(3));
        let mut w = [0.0; 4];
        for (a, wa) in w.iter_mut().enumerate() {
            let xa = (i0 + a) as f64;
            let mut prod = 1.0;
            for b in 0..4 {
                if a != b {
                    let xb = (i0 + b) as f64;
                    prod *= (t - xb) / (xa - xb);
                }
            }
            *wa = prod;
        }
        (i0, w)
    }

    /// Value at `(x, y_j)` by 4-point Lagrange interpolation along x
    /// (O(h^4) for smooth fields).
    pub fn sample_at(&self, x: f64, j: usize) -> f64 {
        let (i0, w) = self.lagrange_weights(x);
        (0..4).map(|a| w[a] * self[(i0 + a, j)]).sum()
    }

    /// Value at `(x, y_j)` for every row `j`.
    pub fn sample_column_at(&self, x: f64) -> Vec<f64> {
        let (i0, w) = self.lagrange_weights(x);
        (0..=self.grid.ny)
            .map(|j| (0..4).map(|a| w[a] * self[(i0 + a, j)]).sum())
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for Field {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * (self.grid.ny + 1) + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Field {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * (self.grid.ny + 1) + j]
    }
}
