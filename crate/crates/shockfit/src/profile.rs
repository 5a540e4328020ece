//! Boundary-data profiles (wall angle and exit-pressure shapes) given either
//! as polynomial coefficients or as uniform samples interpolated by a natural
//! cubic spline, plus the fixed-rule quadrature used everywhere.

use crate::{Error, Result};

/// Composite Simpson panels used for profile integrals.
pub const SIMPSON_PANELS: usize = 2048;

/// Composite Simpson quadrature with `n` panels (`n` rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = if n.is_multiple_of(2) { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Trapezoid rule over uniformly spaced samples.
pub fn trapz(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * (values[0] + values[values.len() - 1]) + inner)
}

/// Cumulative trapezoid over uniformly spaced samples; the first entry is 0.
pub fn cumtrapz(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for i in 1..values.len() {
        out[i] = out[i - 1] + 0.5 * h * (values[i - 1] + values[i]);
    }
    out
}

/// Natural cubic spline over uniform samples on `[x0, x1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    x0: f64,
    x1: f64,
    values: Vec<f64>,
    // Second derivatives at the nodes (natural end conditions).
    d2: Vec<f64>,
}

impl CubicSpline {
    pub fn new(x0: f64, x1: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 4 {
            return Err(Error::Invalid(format!(
                "sampled profile needs at least 4 points, got {}",
                values.len()
            )));
        }
        if !(x1 > x0) {
            return Err(Error::Invalid(format!(
                "sample range must have x1 > x0, got [{x0}, {x1}]"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid(
                "sampled profile contains non-finite values".into(),
            ));
        }
        let n = values.len();
        let h = (x1 - x0) / (n - 1) as f64;
        // Tridiagonal system for natural-spline second derivatives.
        let mut d2 = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            rhs[i] = 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (h * h);
        }
        diag[1] = 4.0;
        for i in 2..n - 1 {
            let w = 1.0 / diag[i - 1];
            diag[i] = 4.0 - w;
            rhs[i] -= w * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            d2[i] = (rhs[i] - if i + 1 < n - 1 { d2[i + 1] } else { 0.0 }) / diag[i];
        }
        Ok(Self { x0, x1, values, d2 })
    }

    fn h(&self) -> f64 {
        (self.x1 - self.x0) / (self.values.len() - 1) as f64
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let h = self.h();
        // Linear extrapolation beyond the sampled range using end slopes.
        if x <= self.x0 {
            return self.values[0] + self.deriv_at_node(0) * (x - self.x0);
        }
        if x >= self.x1 {
            return self.values[n - 1] + self.deriv_at_node(n - 1) * (x - self.x1);
        }
        let k = (((x - self.x0) / h) as usize).min(n - 2);
        let xa = self.x0 + k as f64 * h;
        let t = (x - xa) / h;
        let (ya, yb) = (self.values[k], self.values[k + 1]);
        let (ma, mb) = (self.d2[k], self.d2[k + 1]);
        ya * (1.0 - t)
            + yb * t
            + h * h / 6.0
                * ((1.0 - t) * ((1.0 - t) * (1.0 - t) - 1.0) * ma + t * (t * t - 1.0) * mb)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let n = self.values.len();
        let h = self.h();
        if x <= self.x0 {
            return self.deriv_at_node(0);
        }
        if x >= self.x1 {
            return self.deriv_at_node(n - 1);
        }
        let k = (((x - self.x0) / h) as usize).min(n - 2);
        let xa = self.x0 + k as f64 * h;
        let t = (x - xa) / h;
        let (ya, yb) = (self.values[k], self.values[k + 1]);
        let (ma, mb) = (self.d2[k], self.d2[k + 1]);
        (yb - ya) / h
            + h / 6.0 * ((3.0 * t * t - 1.0) * mb - (3.0 * (1.0 - t) * (1.0 - t) - 1.0) * ma)
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        let n = self.values.len();
        let h = self.h();
        let xc = x.clamp(self.x0, self.x1);
        let k = (((xc - self.x0) / h) as usize).min(n - 2);
        let xa = self.x0 + k as f64 * h;
        let t = ((xc - xa) / h).clamp(0.0, 1.0);
        (1.0 - t) * self.d2[k] + t * self.d2[k + 1]
    }

    fn deriv_at_node(&self, i: usize) -> f64 {
        let n = self.values.len();
        let h = self.h();
        if i == 0 {
            (self.values[1] - self.values[0]) / h - h / 6.0 * (2.0 * self.d2[0] + self.d2[1])
        } else if i == n - 1 {
            (self.values[n - 1] - self.values[n - 2]) / h
                + h / 6.0 * (2.0 * self.d2[n - 1] + self.d2[n - 2])
        } else {
            0.5 * (self.deriv(self.x0 + i as f64 * h - 1e-12) + self.deriv(self.x0 + i as f64 * h))
        }
    }
}

/// A scalar profile on an interval: polynomial coefficients (constant term
/// first) or spline-interpolated uniform samples.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Poly(Vec<f64>),
    Samples(CubicSpline),
}

impl Profile {
    pub fn poly(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Invalid(
                "polynomial profile needs at least one coefficient".into(),
            ));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Invalid(
                "polynomial profile has non-finite coefficients".into(),
            ));
        }
        Ok(Profile::Poly(coeffs))
    }

    pub fn samples(x0: f64, x1: f64, values: Vec<f64>) -> Result<Self> {
        Ok(Profile::Samples(CubicSpline::new(x0, x1, values)?))
    }

    /// Constant-zero profile.
    pub fn zero() -> Self {
        Profile::Poly(vec![0.0])
    }

    /// Constant profile.
    pub fn constant(v: f64) -> Self {
        Profile::Poly(vec![v])
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            Profile::Samples(sp) => sp.eval(x),
        }
    }

    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            Profile::Poly(c) => {
                let mut acc = 0.0;
                for k in (1..c.len()).rev() {
                    acc = acc * x + k as f64 * c[k];
                }
                acc
            }
            Profile::Samples(sp) => sp.deriv(x),
        }
    }

    pub fn deriv2(&self, x: f64) -> f64 {
        match self {
            Profile::Poly(c) => {
                let mut acc = 0.0;
                for k in (2..c.len()).rev() {
                    acc = acc * x + (k * (k - 1)) as f64 * c[k];
                }
                acc
            }
            Profile::Samples(sp) => sp.deriv2(x),
        }
    }

    /// `∫_a^b` of the profile, composite Simpson on [`SIMPSON_PANELS`] panels.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        simpson(|x| self.eval(x), a, b, SIMPSON_PANELS)
    }

    /// Reject profiles with non-finite values or unbounded second
    /// differences anywhere on `[a, b]` (sampled).
    pub fn check_finite(&self, a: f64, b: f64) -> Result<()> {
        for i in 0..=512 {
            let x = a + (b - a) * i as f64 / 512.0;
            if !self.eval(x).is_finite() {
                return Err(Error::Invalid(format!("profile is non-finite at x = {x}")));
            }
            if !self.deriv2(x).is_finite() {
                return Err(Error::Invalid(format!(
                    "profile second derivative is non-finite at x = {x}"
                )));
            }
        }
        Ok(())
    }
}
